#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "rkm/error.hpp"
#include "rkm/kernel.hpp"
#include "support.hpp"

using namespace rkm;

TEST_SUITE("kernel") {
  TEST_CASE("recursion on fixed inner products") {
    const std::vector<double> e1{1, 0}, e2{0, 1}, m1{-1, 0};
    CHECK(kernel_eval(KernelStack(0), e1, e2) == 0.0);
    CHECK(kernel_eval(KernelStack(1), e1, e2) == 0.5);
    CHECK(kernel_eval(KernelStack(2), e1, e2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kernel_eval(KernelStack(3), e1, e2) == doctest::Approx(3.0 / 4.0).epsilon(1e-15));
    CHECK(kernel_eval(KernelStack(1), e1, m1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    for (int k = 0; k <= 10; ++k) CHECK(kernel_eval(KernelStack(k), e1, e1) == 1.0);
  }

  TEST_CASE("depth 0 is the inner product") {
    Rng rng(3);
    const auto x = test::unit_vector(rng, 6), y = test::unit_vector(rng, 6);
    CHECK(kernel_eval(KernelStack(0), x, y) == doctest::Approx(test::dot(x, y)).epsilon(1e-15));
  }

  TEST_CASE("norm precondition") {
    const std::vector<double> ok{1.0 + 5e-10, 0.0}, bad{1.0 + 1e-8, 0.0}, e{0, 1};
    CHECK_NOTHROW(kernel_eval(KernelStack(1), ok, e));
    try {
      kernel_eval(KernelStack(1), e, bad);
      FAIL("expected InputError");
    } catch (const InputError& err) {
      const std::string msg = err.what();
      CHECK(msg.find("y") != std::string::npos);
      CHECK(msg.find("1.00000001") != std::string::npos);
    }
    const std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(kernel_eval(KernelStack(1), e, shorter), StructuralError);
    CHECK_THROWS(KernelStack(-1));
  }

  TEST_CASE("clamping keeps 1+ulp inputs in range") {
    const double s = 1.0 + 1e-12;
    const std::vector<double> x{s, 0.0};
    for (int k = 1; k <= 6; ++k) CHECK(kernel_eval(KernelStack(k), x, x) == 1.0);
  }

  TEST_CASE("values lie in [1/3, 1] for unit inputs and grow with the inner product") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      const auto x = test::unit_vector(rng, 4), y = test::unit_vector(rng, 4);
      for (int k = 1; k <= 5; ++k) {
        const double v = kernel_eval(KernelStack(k), x, y);
        CHECK(v >= 1.0 / 3.0 - 1e-15);
        CHECK(v <= 1.0);
      }
    }
    for (int k = 0; k <= 6; ++k) {
      const KernelStack s(k);
      double prev = -2.0;
      for (int i = 0; i <= 200; ++i) {
        const double v = s.from_inner(-1.0 + 0.01 * i);
        CHECK(v >= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("self-kernel never exceeds one inside the ball") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      auto x = test::unit_vector(rng, 3);
      const double r = uniform01(rng);
      for (auto& v : x) v *= r;
      for (int k = 0; k <= 10; ++k) CHECK(kernel_eval(KernelStack(k), x, x) <= 1.0);
    }
  }

  TEST_CASE("gram examples") {
    RowMatrix X(2, 2);
    X << 1, 0, 0, 1;
    const auto G = gram(KernelStack(1), X);
    CHECK(G(0, 0) == 1.0);
    CHECK(G(1, 1) == 1.0);
    CHECK(G(0, 1) == 0.5);
    CHECK(G(1, 0) == 0.5);
    RowMatrix one(1, 3);
    one << 0, 0.6, 0.8;
    for (int k = 0; k < 5; ++k) CHECK(gram(KernelStack(k), one)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("gram equals pairwise evaluation, is exactly symmetric and PSD") {
    Rng rng(7);
    const RowMatrix X = test::unit_rows(rng, 20, 5);
    for (int k = 1; k <= 4; ++k) {
      const KernelStack s(k);
      const auto G = gram(s, X);
      for (Eigen::Index i = 0; i < 20; ++i) {
        for (Eigen::Index j = 0; j < 20; ++j) {
          CHECK(G(i, j) == G(j, i));
          CHECK(G(i, j) == doctest::Approx(s(row_span(X, i), row_span(X, j))).epsilon(1e-14));
        }
        CHECK(G(i, i) <= 1.0 + 1e-15);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G.entries());
      CHECK(es.eigenvalues().minCoeff() >= -1e-8 * 20);
    }
  }

  TEST_CASE("gram reports the offending row") {
    RowMatrix X(3, 2);
    X << 1, 0, 0, 1, 1, 1;
    try {
      gram(KernelStack(1), X);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }

  TEST_CASE("cross_gram orientation") {
    Rng rng(2);
    const RowMatrix S = test::unit_rows(rng, 4, 3), Q = test::unit_rows(rng, 6, 3);
    const KernelStack s(2);
    const auto C = cross_gram(s, S, Q);
    REQUIRE(C.rows() == 6);
    REQUIRE(C.cols() == 4);
    CHECK(C(5, 3) == doctest::Approx(s(row_span(Q, 5), row_span(S, 3))).epsilon(1e-14));
  }

  TEST_CASE("quadratic form") {
    Eigen::MatrixXd E(2, 2);
    E << 2, 1, 1, 3;
    const GramMatrix G(E, 1);
    Eigen::VectorXd a(2);
    a << 1, -1;
    CHECK(G.quadratic_form(a) == doctest::Approx(3.0));
  }

  TEST_CASE("feature map layout") {
    const TruncatedFeatureMap fm(1, 2);
    CHECK(fm.size() == 3);
    const std::vector<double> x{0.5};
    const auto psi = fm(x);
    CHECK(psi[0] == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));
    CHECK(psi[1] == doctest::Approx(0.5 * 0.5).epsilon(1e-15));
    CHECK(psi[2] == doctest::Approx(std::pow(2.0, -1.5) * 0.25).epsilon(1e-15));

    const TruncatedFeatureMap f3(3, 3);
    CHECK(f3.size() == 1 + 3 + 9 + 27);
    CHECK(TruncatedFeatureMap::coordinate_count(10, 8) == 111111111);
    const std::vector<std::size_t> empty, t1{2}, t2{1, 0}, t3{2, 2, 2};
    CHECK(f3.index_of(empty) == 0);
    CHECK(f3.index_of(t1) == 3);
    CHECK(f3.index_of(t2) == 4 + 3);
    CHECK(f3.index_of(t3) == f3.size() - 1);
    Rng rng(1);
    const auto y = test::unit_vector(rng, 3);
    const auto p = f3(y);
    CHECK(p[f3.index_of(t2)] == doctest::Approx(std::pow(2.0, -1.5) * y[1] * y[0]).epsilon(1e-15));
    CHECK(p[f3.index_of(t3)] == doctest::Approx(std::pow(2.0, -2.0) * y[2] * y[2] * y[2]).epsilon(1e-15));
    for (double v : {p[0]}) CHECK(v == doctest::Approx(std::pow(2.0, -0.5)));
  }

  TEST_CASE("feature map capacity cap") {
    CHECK_THROWS_AS(TruncatedFeatureMap(10, 8), InputError);
    CHECK_NOTHROW(TruncatedFeatureMap(10, 5));
    CHECK_THROWS_AS(TruncatedFeatureMap(4, 4, 100), InputError);
  }

  TEST_CASE("truncation tail bound") {
    Rng rng(13);
    for (std::size_t J = 3; J <= 12; ++J) {
      const std::size_t d = J <= 8 ? 2 : 1;
      const TruncatedFeatureMap fm(d, J);
      for (int t = 0; t < 20; ++t) {
        const auto x = test::unit_vector(rng, d), y = test::unit_vector(rng, d);
        const double ip = test::dot(fm(x), fm(y));
        CHECK(std::abs(ip - kernel_eval(KernelStack(1), x, y)) <= std::pow(2.0, -static_cast<double>(J + 1)));
      }
    }
  }

  TEST_CASE("feature maps nest as prefixes") {
    Rng rng(17);
    const auto x = test::unit_vector(rng, 3);
    const auto big = TruncatedFeatureMap(3, 5)(x);
    for (std::size_t J = 0; J < 5; ++J) {
      const auto small = TruncatedFeatureMap(3, J)(x);
      for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i] == big[i]);
    }
  }
}
