#include "rkm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "rkm/error.hpp"

namespace rkm {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::hinge: return "hinge";
    case LossKind::logistic: return "logistic";
    case LossKind::squared: return "squared";
  }
  return "?";
}

LossKind parse_loss(std::string_view name) {
  if (name == "hinge") return LossKind::hinge;
  if (name == "logistic") return LossKind::logistic;
  if (name == "squared") return LossKind::squared;
  throw UsageError("unknown loss '" + std::string(name) + "'; supported: hinge logistic squared");
}

double Loss::value(double f, double y) const {
  switch (kind_) {
    case LossKind::hinge: return std::max(0.0, 1.0 - y * f);
    case LossKind::logistic: {
      const double z = -y * f;
      return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    }
    case LossKind::squared: return (f - y) * (f - y);
  }
  return 0.0;
}

double Loss::subgradient(double f, double y) const {
  switch (kind_) {
    case LossKind::hinge: return y * f < 1.0 ? -y : 0.0;
    case LossKind::logistic: {
      const double z = y * f;
      // -y * sigmoid(-z), written to avoid overflow for large |z|.
      return z > 0 ? -y * std::exp(-z) / (1.0 + std::exp(-z)) : -y / (1.0 + std::exp(z));
    }
    case LossKind::squared: return 2.0 * (f - y);
  }
  return 0.0;
}

double Loss::lipschitz(double B) const {
  switch (kind_) {
    case LossKind::hinge:
    case LossKind::logistic: return 1.0;
    case LossKind::squared: return 2.0 * (B + 1.0);
  }
  return 1.0;
}

double Loss::range_bound(double B) const {
  switch (kind_) {
    case LossKind::hinge: return 1.0 + B;
    case LossKind::logistic: return B + std::log1p(std::exp(-B));
    case LossKind::squared: return (B + 1.0) * (B + 1.0);
  }
  return 0.0;
}

void check_config(const TrainConfig& cfg) {
  if (cfg.depth < 0) throw UsageError("depth must be nonnegative");
  if (!(cfg.B >= 0.0) || !std::isfinite(cfg.B)) throw UsageError("B must be finite and >= 0");
  if (cfg.max_iters < 1) throw UsageError("max_iters must be at least 1");
  if (!(cfg.tolerance > 0.0)) throw UsageError("tolerance must be positive");
  if (cfg.window < 1) throw UsageError("window must be at least 1");
  if (cfg.eta0 && !(*cfg.eta0 > 0.0)) throw UsageError("eta0 must be positive");
}

Eigen::VectorXd project(const Eigen::VectorXd& alpha, const GramMatrix& G, double B) {
  const double q = G.quadratic_form(alpha);
  if (q < -1e-8) {
    std::ostringstream msg;
    msg << "quadratic form alpha^T G alpha = " << q << " < 0; Gram matrix is not PSD";
    throw NumericError(msg.str());
  }
  if (q <= B * B) return alpha;
  return alpha * (B / std::sqrt(q));
}

namespace {

double mean_loss(const Eigen::VectorXd& f, std::span<const int> y, const Loss& loss, double B) {
  double s = 0.0;
  const bool clip = loss.kind() == LossKind::squared;
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    const double fj = clip ? std::clamp(f[j], -B, B) : f[j];
    s += loss.value(fj, y[j]);
  }
  return s / static_cast<double>(f.size());
}

void check_labels(std::span<const int> y, Eigen::Index n) {
  if (static_cast<Eigen::Index>(y.size()) != n) {
    throw StructuralError("got " + std::to_string(y.size()) + " labels for " + std::to_string(n) +
                          " points");
  }
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] != 1 && y[j] != -1) {
      throw InputError("label " + std::to_string(j) + " is " + std::to_string(y[j]) +
                       ", expected +-1");
    }
  }
}

}  // namespace

double objective(const GramMatrix& G, std::span<const int> y, const Eigen::VectorXd& alpha,
                 const Loss& loss) {
  check_labels(y, G.n());
  const Eigen::VectorXd f = G.entries() * alpha;
  return mean_loss(f, y, loss, std::numeric_limits<double>::infinity());
}

SolveResult solve(const GramMatrix& G, std::span<const int> y, const TrainConfig& cfg) {
  check_config(cfg);
  const Eigen::Index n = G.n();
  if (n == 0) throw InputError("cannot train on an empty dataset");
  check_labels(y, n);
  const Loss loss(cfg.loss);
  const double B = cfg.B;

  SolveResult res;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // G alpha, updated incrementally
  double best = mean_loss(f, y, loss, B);
  Eigen::VectorXd best_alpha = alpha;
  std::vector<double> incumbent{best};
  if (cfg.record_history) {
    res.history.push_back(best);
    res.best_history.push_back(best);
  }

  if (B > 0.0) {
    const double eta0 = cfg.eta0.value_or(B / loss.lipschitz(B));
    const auto& K = G.entries();
    std::vector<std::pair<Eigen::Index, double>> active;
    int t = 1;
    for (; t <= cfg.max_iters; ++t) {
      // Functional subgradient (1/n) sum_j g_j K(x_j, .) in alpha coordinates is g / n.
      active.clear();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double g = loss.subgradient(f[j], y[j]);
        if (g != 0.0) active.emplace_back(j, g);
      }
      if (active.empty()) break;  // 0 is a subgradient: optimal
      const double step = eta0 / std::sqrt(static_cast<double>(t)) / static_cast<double>(n);
      for (const auto& [j, g] : active) {
        alpha[j] -= step * g;
        f.noalias() -= (step * g) * K.col(j);
      }
      const double q = alpha.dot(f);
      if (q < -1e-8) throw NumericError("negative RKHS norm during descent; Gram matrix not PSD");
      if (q > B * B) {
        const double s = B / std::sqrt(q);
        alpha *= s;
        f *= s;
      }
      const double obj = mean_loss(f, y, loss, B);
      if (!std::isfinite(obj)) {
        std::ostringstream msg;
        msg << "objective became non-finite at iteration " << t << " (step " << step * n
            << ", |alpha| = " << alpha.norm() << ")";
        throw NumericError(msg.str());
      }
      if (obj < best) {
        best = obj;
        best_alpha = alpha;
        res.best_iteration = t;
      }
      incumbent.push_back(best);
      if (cfg.record_history) {
        res.history.push_back(obj);
        res.best_history.push_back(best);
      }
      if (t >= cfg.window) {
        const double before = incumbent[t - cfg.window];
        if (before - best <= cfg.tolerance * std::abs(before)) break;
      }
    }
    res.iterations = std::min(t, cfg.max_iters);
  }

  res.alpha = project(best_alpha, G, B);
  res.objective = mean_loss(G.entries() * res.alpha, y, loss, B);
  return res;
}

// ---------------------------------------------------------------------------

double KernelPredictor::predict(std::span<const double> x) const {
  if (!support) throw StructuralError("predictor has no support points");
  if (static_cast<Eigen::Index>(x.size()) != support->cols()) {
    throw StructuralError("input has dimension " + std::to_string(x.size()) +
                          ", predictor expects " + std::to_string(support->cols()));
  }
  const KernelStack stack(depth);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < support->rows(); ++i) {
    if (alpha[i] != 0.0) acc += alpha[i] * stack(row_span(*support, i), x);
  }
  return acc;
}

Eigen::VectorXd KernelPredictor::predict(const RowMatrix& queries) const {
  if (!support) throw StructuralError("predictor has no support points");
  return cross_gram(KernelStack(depth), *support, queries) * alpha;
}

KernelPredictor train(std::shared_ptr<const RowMatrix> X, const GramMatrix& G,
                      std::span<const int> y, const TrainConfig& cfg) {
  SolveResult r = solve(G, y, cfg);
  KernelPredictor p;
  p.support = std::move(X);
  p.alpha = std::move(r.alpha);
  p.depth = cfg.depth;
  p.B = cfg.B;
  p.loss = cfg.loss;
  p.train_objective = r.objective;
  p.iterations = r.iterations;
  p.history = std::move(r.history);
  p.best_history = std::move(r.best_history);
  return p;
}

KernelPredictor train(const RowMatrix& X, std::span<const int> y, const TrainConfig& cfg) {
  check_config(cfg);
  auto support = std::make_shared<const RowMatrix>(X);
  const GramMatrix G = gram(KernelStack(cfg.depth), *support);
  return train(std::move(support), G, y, cfg);
}

int argmax_first(std::span<const double> scores) {
  if (scores.empty()) throw InputError("argmax of an empty score vector");
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  }
  return best;
}

std::shared_ptr<const RowMatrix> OneVsAllPredictor::support() const {
  return per_class.empty() ? nullptr : per_class.front().support;
}

int OneVsAllPredictor::depth() const { return per_class.empty() ? 0 : per_class.front().depth; }

Eigen::MatrixXd OneVsAllPredictor::scores(const RowMatrix& queries) const {
  if (per_class.empty()) throw StructuralError("empty one-vs-all predictor");
  const auto sup = support();
  Eigen::MatrixXd A(sup->rows(), static_cast<Eigen::Index>(per_class.size()));
  for (std::size_t c = 0; c < per_class.size(); ++c) A.col(c) = per_class[c].alpha;
  return cross_gram(KernelStack(depth()), *sup, queries) * A;
}

std::vector<int> OneVsAllPredictor::classify(const RowMatrix& queries) const {
  const Eigen::MatrixXd S = scores(queries);
  std::vector<int> out(S.rows());
  std::vector<double> row(S.cols());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    for (Eigen::Index c = 0; c < S.cols(); ++c) row[c] = S(i, c);
    out[i] = classes[argmax_first(row)];
  }
  return out;
}

OneVsAllPredictor train_multiclass(const RowMatrix& X, std::span<const int> labels,
                                   int num_classes, const TrainConfig& cfg) {
  check_config(cfg);
  if (num_classes < 2) throw UsageError("multiclass training needs at least 2 classes");
  if (static_cast<Eigen::Index>(labels.size()) != X.rows()) {
    throw StructuralError("label count does not match the number of points");
  }
  std::vector<std::size_t> counts(num_classes, 0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) {
      throw InputError("label " + std::to_string(l) + " outside 0.." +
                       std::to_string(num_classes - 1));
    }
    ++counts[l];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw InputError("class " + std::to_string(c) + " has no training points");
  }

  auto support = std::make_shared<const RowMatrix>(X);
  const GramMatrix G = gram(KernelStack(cfg.depth), *support);

  OneVsAllPredictor out;
  out.per_class.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) out.classes.push_back(c);

  // Classes are independent problems; each result depends only on its own
  // inputs, so the schedule does not affect the output.
  auto work = [&](int c) {
    std::vector<int> y(labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) y[j] = labels[j] == c ? 1 : -1;
    out.per_class[c] = train(support, G, y, cfg);
  };
  const unsigned threads =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), num_classes);
  if (threads <= 1) {
    for (int c = 0; c < num_classes; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int c = static_cast<int>(w); c < num_classes; c += static_cast<int>(threads)) work(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_pac_args(double B, double eps, double delta) {
  if (!(B > 0.0)) throw InputError("sample_size: B must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw InputError("sample_size: eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("sample_size: delta must lie in (0, 1)");
}

double generalization_gap(double n, double B, double delta, double rho, double M) {
  return 2.0 * rho * B * std::sqrt(2.0 / n) + M * std::sqrt(std::log(1.0 / delta) / (2.0 * n));
}

}  // namespace

double sample_size_bound(double B, double eps, double delta, double rho, double M) {
  check_pac_args(B, eps, delta);
  const double root = 2.0 * rho * B * std::sqrt(2.0) + M * std::sqrt(std::log(1.0 / delta) / 2.0);
  const double r = root / eps;
  return r * r;
}

std::uint64_t sample_size(double B, double eps, double delta, double rho, double M) {
  const double bound = sample_size_bound(B, eps, delta, rho, M);
  if (!(bound < 1.8e19)) throw NumericError("sample size exceeds the 64-bit range");
  auto n = static_cast<std::uint64_t>(std::max(1.0, std::ceil(bound)));
  // Settle rounding at the boundary so n is the smallest passing integer.
  while (generalization_gap(static_cast<double>(n), B, delta, rho, M) > eps) ++n;
  while (n > 1 && generalization_gap(static_cast<double>(n - 1), B, delta, rho, M) <= eps) --n;
  return n;
}

std::uint64_t sample_size(double B, double eps, double delta, const Loss& loss) {
  return sample_size(B, eps, delta, loss.lipschitz(B), loss.range_bound(B));
}

}  // namespace rkm
