#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rkm/activation.hpp"
#include "rkm/network.hpp"

namespace rkm {

/// T integer halfspaces h_t(x) = sign(w_t . x - b_t - 1/2) over {-1, 1}^d.
struct HalfspaceFamily {
  int d = 0;
  std::vector<std::vector<std::int64_t>> w;
  std::vector<std::int64_t> b;
  std::int64_t budget = 0;  // bound on |b_t| + ||w_t||_1

  int T() const noexcept { return static_cast<int>(w.size()); }
};

/// Throws InputError for ragged weights or a family exceeding its budget.
void check_family(const HalfspaceFamily& hs);

/// Integer weights and offsets drawn uniformly subject to |b| + ||w||_1 <= budget.
HalfspaceFamily random_halfspaces(int d, int T, std::int64_t budget, std::uint64_t seed);

/// +1 when every halfspace accepts x, -1 otherwise. x must be a +-1 vector.
int eval_halfspaces(const HalfspaceFamily& hs, std::span<const int> x);

/// x~ = (x, 1) / sqrt(d + 1).
std::vector<double> extend_input(std::span<const int> x);

/// The activation the construction saturates: sigma itself for sigmoid-like
/// activations, sigma(z) - sigma(z - 1) for ReLU-like ones.
double saturating_unit(const Activation& act, double z);

/// Whether unit(lambda) >= 1 - q and unit(-lambda) <= q for q = slack / (4T).
bool margin_saturates(const Activation& act, int T, double lambda, double slack = 1.0);

/// Smallest lambda (to bisection precision) passing margin_saturates with a
/// slack of 1 - 1e-6, which keeps a headroom above rounding in the net.
double select_margin(const Activation& act, int T);

struct HardnessNet {
  NeuralNet net;
  double lambda = 0.0;
  double budget = 0.0;  // smallest L with net in N_{1,L,sigma}
  double unit_at_lambda = 0.0;
  double unit_at_minus_lambda = 0.0;
};

/// One-hidden-layer network over x~ with NN(x) = sum_t 4 unit(g~_t) - (4T - 2).
/// Throws NumericError when lambda does not saturate the activation and
/// UsageError for polynomial activations.
HardnessNet build_hardness_net(const HalfspaceFamily& hs, const Activation& act, double lambda);

struct HypercubeSummary {
  double min_margin = 0.0;  // min over x of h*(x) NN(x)
  double max_hinge = 0.0;   // max over x of max(0, 1 - h*(x) NN(x))
  std::size_t positives = 0;
  std::size_t inputs = 0;
};

/// Brute force over all 2^d inputs.
HypercubeSummary enumerate_hypercube(const HalfspaceFamily& hs, const NeuralNet& net);

}  // namespace rkm
