#include <cmath>

#include "doctest.h"
#include "rkm/error.hpp"
#include "rkm/solver.hpp"
#include "support.hpp"

using namespace rkm;

namespace {

RowMatrix orthonormal(int n) {
  RowMatrix X = RowMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) X(i, i) = 1.0;
  return X;
}

TrainConfig config(double B, int depth = 1, LossKind loss = LossKind::hinge) {
  TrainConfig cfg;
  cfg.B = B;
  cfg.depth = depth;
  cfg.loss = loss;
  return cfg;
}

// Dense search over the ellipse alpha^T G alpha <= B^2 for n = 2.
double grid_oracle(const GramMatrix& G, std::span<const int> y, double B, const Loss& loss) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.entries());
  const Eigen::MatrixXd R = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Eigen::MatrixXd Rinv = R.completeOrthogonalDecomposition().pseudoInverse();
  double best = 1e300;
  constexpr int kR = 200, kA = 720;
  for (int r = 0; r <= kR; ++r) {
    for (int a = 0; a < kA; ++a) {
      const double rad = B * r / kR, th = 2.0 * 3.141592653589793 * a / kA;
      Eigen::Vector2d z(rad * std::cos(th), rad * std::sin(th));
      const Eigen::VectorXd alpha = Rinv.transpose() * z;
      best = std::min(best, objective(G, y, alpha, loss));
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("loss values and constants") {
    const Loss h(LossKind::hinge), l(LossKind::logistic), s(LossKind::squared);
    CHECK(h.value(0.0, 1) == 1.0);
    CHECK(h.value(2.0, 1) == 0.0);
    CHECK(h.value(0.5, -1) == 1.5);
    CHECK(h.subgradient(1.0, 1) == 0.0);  // kink
    CHECK(h.subgradient(0.0, 1) == -1.0);
    CHECK(l.value(0.0, 1) == doctest::Approx(std::log(2.0)));
    CHECK(l.value(800.0, -1) == doctest::Approx(800.0));
    CHECK(std::isfinite(l.subgradient(-800.0, 1)));
    CHECK(s.value(0.5, 1) == 0.25);
    CHECK(h.lipschitz(5) == 1.0);
    CHECK(h.range_bound(5) == 6.0);
    CHECK(l.range_bound(5) == doctest::Approx(std::log1p(std::exp(5.0))).epsilon(1e-15));
    CHECK(s.lipschitz(5) == 12.0);
    CHECK(s.range_bound(5) == 36.0);
    CHECK(parse_loss("logistic") == LossKind::logistic);
    CHECK_THROWS_AS(parse_loss("huber"), UsageError);
  }

  TEST_CASE("subgradients satisfy the secant inequality") {
    Rng rng(4);
    for (auto kind : {LossKind::hinge, LossKind::logistic, LossKind::squared}) {
      const Loss loss(kind);
      for (int t = 0; t < 2000; ++t) {
        const double a = uniform(rng, -5, 5), b = uniform(rng, -5, 5);
        const int y = uniform01(rng) < 0.5 ? -1 : 1;
        CHECK(loss.value(b, y) >= loss.value(a, y) + loss.subgradient(a, y) * (b - a) - 1e-12);
      }
    }
  }

  TEST_CASE("projection") {
    const GramMatrix I(Eigen::MatrixXd::Identity(2, 2), 0);
    Eigen::VectorXd a(2);
    a << 3, 4;
    const auto p = project(a, I, 1.0);
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.8));
    Eigen::VectorXd inner(2);
    inner << 0.3, 0.4;  // quadratic form B^2 / 4
    CHECK(project(inner, I, 1.0) == inner);

    Rng rng(8);
    const RowMatrix X = test::unit_rows(rng, 6, 4);
    const auto G = gram(KernelStack(2), X);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd v(6);
      for (auto& x : v) x = uniform(rng, -10, 10);
      const auto p1 = project(v, G, 1.5);
      CHECK(test::rel_err(G.quadratic_form(p1), 2.25) <= 1e-12);
      const auto p2 = project(p1, G, 1.5);
      CHECK((p2 - p1).cwiseAbs().maxCoeff() <= 1e-12);
    }
    Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(project(a, GramMatrix(neg, 0), 1.0), NumericError);
  }

  TEST_CASE("two orthonormal points separate") {
    const RowMatrix X = orthonormal(2);
    const std::vector<int> y{1, -1};
    const auto p = train(X, y, config(10.0));
    CHECK(p.train_objective < 0.01);
    const auto G = gram(KernelStack(1), X);
    CHECK(p.train_objective <= grid_oracle(G, y, 10.0, Loss(LossKind::hinge)) + 1e-3);
  }

  TEST_CASE("zero radius") {
    const RowMatrix X = orthonormal(3);
    const std::vector<int> y{1, -1, 1};
    const auto p = train(X, y, config(0.0));
    CHECK(p.alpha.isZero(0.0));
    CHECK(p.train_objective == 1.0);
  }

  TEST_CASE("constant labels are fit by a constant predictor") {
    Rng rng(21);
    const RowMatrix X = test::unit_rows(rng, 10, 3);
    const std::vector<int> y(10, 1);
    TrainConfig cfg = config(2.0);
    cfg.record_history = true;
    const auto p = train(X, y, cfg);
    CHECK(p.train_objective < 0.01);
    for (std::size_t t = 1; t < p.best_history.size(); ++t) CHECK(p.best_history[t] <= p.best_history[t - 1]);
    // The explicit witness: alpha = c 1 with (G alpha)_j >= 1 is feasible.
    const auto G = gram(KernelStack(1), X);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(10);
    const double c = 1.0 / (G.entries() * ones).minCoeff();
    CHECK(G.quadratic_form(c * ones) <= 4.0);
  }

  TEST_CASE("frozen small instances reach the convex optimum") {
    const auto cases = test::load_fixture("solver_small.json");
    for (const auto& c : cases) {
      const auto rows = c["X"].get<std::vector<std::vector<double>>>();
      RowMatrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) X(i, j) = rows[i][j];
      }
      const auto y = c["y"].get<std::vector<int>>();
      const TrainConfig cfg = config(c["B"].get<double>(), c["k"].get<int>(), parse_loss(c["loss"].get<std::string>()));
      const auto p = train(X, y, cfg);
      const auto G = gram(KernelStack(cfg.depth), X);
      CAPTURE(c.dump());
      CHECK(p.train_objective <= c["optimum"].get<double>() + 1e-3);
      CHECK(G.quadratic_form(p.alpha) <= cfg.B * cfg.B * (1.0 + 1e-9));
    }
  }

  TEST_CASE("feasibility, determinism and incumbent tracking") {
    Rng rng(31);
    const RowMatrix X = test::unit_rows(rng, 30, 5);
    std::vector<int> y(30);
    for (auto& v : y) v = uniform01(rng) < 0.5 ? -1 : 1;
    for (auto kind : {LossKind::hinge, LossKind::logistic, LossKind::squared}) {
      const TrainConfig cfg = config(3.0, 2, kind);
      const auto G = gram(KernelStack(2), X);
      const auto a = solve(G, y, cfg), b = solve(G, y, cfg);
      CHECK(a.alpha == b.alpha);
      CHECK(G.quadratic_form(a.alpha) <= 9.0 * (1.0 + 1e-9));
      double prev = 1e300;
      for (int iters : {10, 50, 200, 1000}) {
        TrainConfig c2 = cfg;
        c2.max_iters = iters;
        c2.tolerance = 1e-300;  // run every iteration
        const double obj = solve(G, y, c2).objective;
        CHECK(obj <= prev + 1e-15);
        prev = obj;
      }
    }
  }

  TEST_CASE("prediction") {
    Rng rng(41);
    const RowMatrix X = test::unit_rows(rng, 12, 4);
    std::vector<int> y(12);
    for (auto& v : y) v = uniform01(rng) < 0.5 ? -1 : 1;
    const auto p = train(X, y, config(2.0, 3));
    for (int t = 0; t < 100; ++t) {
      const auto x = test::unit_vector(rng, 4);
      CHECK(std::abs(p.predict(x)) <= 2.0 * (1.0 + 1e-9));
    }
    const Eigen::VectorXd batch = p.predict(X);
    for (Eigen::Index i = 0; i < 12; ++i) CHECK(batch[i] == doctest::Approx(p.predict(row_span(X, i))).epsilon(1e-12));

    KernelPredictor one;
    one.support = std::make_shared<const RowMatrix>(X.topRows(1));
    one.alpha = Eigen::VectorXd::Constant(1, 0.7);
    one.depth = 2;
    CHECK(one.predict(row_span(X, 0)) == doctest::Approx(0.7).epsilon(1e-15));
    one.alpha.setZero();
    CHECK(one.predict(row_span(X, 3)) == 0.0);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(one.predict(wrong), StructuralError);
  }

  TEST_CASE("input validation") {
    const RowMatrix X = orthonormal(2);
    CHECK_THROWS_AS(train(X, std::vector<int>{1, 0}, config(1.0)), InputError);
    CHECK_THROWS_AS(train(X, std::vector<int>{1}, config(1.0)), StructuralError);
    RowMatrix big = X * 2.0;
    CHECK_THROWS_AS(train(big, std::vector<int>{1, -1}, config(1.0)), InputError);
    TrainConfig bad = config(1.0);
    bad.max_iters = 0;
    CHECK_THROWS_AS(train(X, std::vector<int>{1, -1}, bad), UsageError);
  }

  TEST_CASE("one-vs-all") {
    const RowMatrix X = orthonormal(3);
    const std::vector<int> labels{0, 1, 2};
    const auto p = train_multiclass(X, labels, 3, config(10.0));
    CHECK(p.classify(X) == labels);
    CHECK(argmax_first(std::vector<double>{1.0, 1.0, 1.0}) == 0);
    CHECK(argmax_first(std::vector<double>{0.0, 2.0, 2.0}) == 1);
    CHECK_THROWS_AS(train_multiclass(X, std::vector<int>{0, 0, 2}, 3, config(1.0)), InputError);
    CHECK_THROWS_AS(train_multiclass(X, labels, 1, config(1.0)), UsageError);

    // Two classes: the second predictor is trained on flipped labels.
    Rng rng(51);
    const RowMatrix Y = test::unit_rows(rng, 8, 3);
    const std::vector<int> l2{0, 1, 0, 1, 1, 0, 0, 1};
    const auto two = train_multiclass(Y, l2, 2, config(3.0));
    std::vector<int> flipped(8);
    for (std::size_t i = 0; i < 8; ++i) flipped[i] = l2[i] == 1 ? 1 : -1;
    const auto direct = train(Y, flipped, config(3.0));
    CHECK(two.per_class[1].alpha == direct.alpha);
    const auto S = two.scores(Y);
    const auto cls = two.classify(Y);
    for (Eigen::Index i = 0; i < 8; ++i) CHECK(cls[i] == (S(i, 1) > S(i, 0) ? 1 : 0));
  }

  TEST_CASE("sample size") {
    const Loss h(LossKind::hinge);
    for (double B : {1.0, 10.0, 100.0}) {
      for (double eps : {0.3, 0.1, 0.05}) {
        for (double delta : {0.1, 0.01}) {
          const auto n = sample_size(B, eps, delta, h);
          const auto n2 = sample_size(B, eps / 2, delta, h);
          CHECK(n2 <= 4 * n);
          CHECK(n2 + 3 >= 4 * n);
          CHECK(static_cast<double>(n) >= sample_size_bound(B, eps, delta, 1.0, 1.0 + B) - 1e-6 * n);
          CHECK(sample_size(B, eps, delta / 10, h) >= n);
        }
      }
    }
    // Doubling B with M held fixed.
    const auto a = sample_size(5.0, 0.1, 0.05, 1.0, 4.0), b = sample_size(10.0, 0.1, 0.05, 1.0, 4.0);
    CHECK(b >= a);
    CHECK(b <= 4 * a);
    CHECK_THROWS_AS(sample_size(1.0, 0.0, 0.1, h), InputError);
    CHECK_THROWS_AS(sample_size(1.0, 0.1, 1.0, h), InputError);
  }
}
