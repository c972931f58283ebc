#include "rkm/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rkm/error.hpp"
#include "rkm/random.hpp"

namespace rkm {

void check_family(const HalfspaceFamily& hs) {
  if (hs.d < 1) throw InputError("halfspace family needs d >= 1");
  if (hs.w.size() != hs.b.size()) throw InputError("halfspace family: |w| != |b|");
  if (hs.w.empty()) throw InputError("halfspace family needs T >= 1");
  for (int t = 0; t < hs.T(); ++t) {
    if (static_cast<int>(hs.w[t].size()) != hs.d) {
      throw InputError("halfspace " + std::to_string(t) + " has the wrong dimension");
    }
    std::int64_t mass = std::abs(hs.b[t]);
    for (auto v : hs.w[t]) mass += std::abs(v);
    if (mass > hs.budget) {
      throw InputError("halfspace " + std::to_string(t) + " has |b| + ||w||_1 = " +
                       std::to_string(mass) + " above the budget " + std::to_string(hs.budget));
    }
  }
}

HalfspaceFamily random_halfspaces(int d, int T, std::int64_t budget, std::uint64_t seed) {
  if (d < 1 || T < 1 || budget < 0) throw InputError("random_halfspaces: need d, T >= 1, budget >= 0");
  Rng rng(seed);
  const std::int64_t c = budget == 0 ? 0 : std::max<std::int64_t>(1, budget / (d + 1));
  HalfspaceFamily hs;
  hs.d = d;
  hs.budget = budget;
  for (int t = 0; t < T; ++t) {
    std::vector<std::int64_t> w(d);
    std::int64_t b = 0;
    for (;;) {
      std::int64_t mass = 0;
      for (auto& v : w) {
        v = uniform_int(rng, -c, c);
        mass += std::abs(v);
      }
      b = uniform_int(rng, -c, c);
      mass += std::abs(b);
      if (mass <= budget) break;
    }
    hs.w.push_back(std::move(w));
    hs.b.push_back(b);
  }
  return hs;
}

int eval_halfspaces(const HalfspaceFamily& hs, std::span<const int> x) {
  if (static_cast<int>(x.size()) != hs.d) throw InputError("eval_halfspaces: wrong input dimension");
  for (int v : x) {
    if (v != 1 && v != -1) throw InputError("eval_halfspaces: input must be a +-1 vector");
  }
  for (int t = 0; t < hs.T(); ++t) {
    // w.x - b - 1/2 > 0 exactly when w.x - b >= 1 over the integers.
    std::int64_t s = -hs.b[t];
    for (int i = 0; i < hs.d; ++i) s += hs.w[t][i] * x[i];
    if (s < 1) return -1;
  }
  return 1;
}

std::vector<double> extend_input(std::span<const int> x) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size() + 1));
  std::vector<double> out;
  out.reserve(x.size() + 1);
  for (int v : x) out.push_back(v * scale);
  out.push_back(scale);
  return out;
}

double saturating_unit(const Activation& act, double z) {
  if (act.kind() == ActivationKind::relu_like) return act(z) - act(z - 1.0);
  return act(z);
}

bool margin_saturates(const Activation& act, int T, double lambda, double slack) {
  const double q = slack / (4.0 * T);
  return saturating_unit(act, lambda) >= 1.0 - q && saturating_unit(act, -lambda) <= q;
}

double select_margin(const Activation& act, int T) {
  if (T < 1) throw InputError("select_margin: T must be positive");
  constexpr double kSlack = 1.0 - 1e-6;
  double hi = 1.0;
  while (!margin_saturates(act, T, hi, kSlack)) {
    hi *= 2.0;
    if (hi > 1e6) {
      throw NumericError("activation " + act.name() + " does not saturate; no margin found");
    }
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (margin_saturates(act, T, mid, kSlack) ? hi : lo) = mid;
  }
  return hi;
}

HardnessNet build_hardness_net(const HalfspaceFamily& hs, const Activation& act, double lambda) {
  check_family(hs);
  if (act.kind() == ActivationKind::polynomial) {
    throw UsageError("hardness construction needs a sigmoid-like or ReLU-like activation");
  }
  const int T = hs.T();
  HardnessNet out;
  out.lambda = lambda;
  out.unit_at_lambda = saturating_unit(act, lambda);
  out.unit_at_minus_lambda = saturating_unit(act, -lambda);
  if (!margin_saturates(act, T, lambda)) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " does not saturate " << act.name() << ": unit(lambda) = "
        << out.unit_at_lambda << ", unit(-lambda) = " << out.unit_at_minus_lambda
        << ", need >= " << 1.0 - 1.0 / (4.0 * T) << " and <= " << 1.0 / (4.0 * T);
    throw NumericError(msg.str());
  }

  const int D = hs.d + 1;
  const double s = std::sqrt(static_cast<double>(D));
  const bool paired = act.kind() == ActivationKind::relu_like;
  const int units = T + 1;
  const int hidden = paired ? 2 * units : units;

  RowMatrix W0 = RowMatrix::Zero(hidden, D);
  RowMatrix W1 = RowMatrix::Zero(1, hidden);
  // g~_t(x~) = 2 lambda (w_t . x - b_t - 1/2); the last column meets x~_D = 1/sqrt(D).
  auto place = [&](int unit, const Eigen::RowVectorXd& row, double out_weight) {
    if (paired) {
      W0.row(2 * unit) = row;
      W0.row(2 * unit + 1) = row;
      W0(2 * unit + 1, D - 1) -= s;  // shifts the pre-activation by -1
      W1(0, 2 * unit) = out_weight;
      W1(0, 2 * unit + 1) = -out_weight;
    } else {
      W0.row(unit) = row;
      W1(0, unit) = out_weight;
    }
  };
  for (int t = 0; t < T; ++t) {
    Eigen::RowVectorXd row(D);
    for (int i = 0; i < hs.d; ++i) row[i] = 2.0 * lambda * s * static_cast<double>(hs.w[t][i]);
    row[D - 1] = 2.0 * lambda * s * (-static_cast<double>(hs.b[t]) - 0.5);
    place(t, row, 4.0);
  }
  // Constant term -(4T - 2) from a unit whose input is fixed at lambda.
  Eigen::RowVectorXd bias_row = Eigen::RowVectorXd::Zero(D);
  bias_row[D - 1] = lambda * s;
  place(T, bias_row, -(4.0 * T - 2.0) / out.unit_at_lambda);

  out.net.widths = {D, hidden};
  out.net.weights = {std::move(W0), std::move(W1)};
  out.net.activation = act;
  const ValidationReport rep = validate(out.net, std::numeric_limits<double>::infinity());
  out.budget = std::max(rep.max_first_layer_l2, rep.max_deeper_l1);
  return out;
}

HypercubeSummary enumerate_hypercube(const HalfspaceFamily& hs, const NeuralNet& net) {
  check_family(hs);
  if (hs.d > 24) throw InputError("hypercube enumeration limited to d <= 24");
  HypercubeSummary sum;
  sum.min_margin = std::numeric_limits<double>::infinity();
  std::vector<int> x(hs.d);
  const std::uint64_t count = std::uint64_t{1} << hs.d;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < hs.d; ++i) x[i] = (mask >> i) & 1 ? 1 : -1;
    const int h = eval_halfspaces(hs, x);
    const double nn = forward(net, extend_input(x));
    const double margin = h * nn;
    sum.min_margin = std::min(sum.min_margin, margin);
    sum.max_hinge = std::max(sum.max_hinge, std::max(0.0, 1.0 - margin));
    if (h == 1) ++sum.positives;
  }
  sum.inputs = count;
  return sum;
}

}  // namespace rkm
