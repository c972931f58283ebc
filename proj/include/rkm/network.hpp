#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "rkm/activation.hpp"
#include "rkm/kernel.hpp"

namespace rkm {

/// A fully connected network without biases.
///
/// widths holds d^(0) .. d^(k); weights[p] has shape d^(p+1) x d^(p), with
/// the final layer producing the single output (d^(k+1) = 1).
struct NeuralNet {
  std::vector<int> widths;
  std::vector<RowMatrix> weights;
  Activation activation = builtin_activation("quadratic");

  int hidden_layers() const noexcept { return static_cast<int>(widths.size()) - 1; }
  int input_dim() const noexcept { return widths.empty() ? 0 : widths.front(); }
};

/// Throws StructuralError for k = 0 or mismatched weight shapes.
void check_structure(const NeuralNet& net);

/// Layer-by-layer propagation with the activation's closed form.
double forward(const NeuralNet& net, std::span<const double> x);

enum class NormKind { l2, l1 };

struct NormViolation {
  int layer = 0;
  int row = 0;
  NormKind norm = NormKind::l2;
  double measured = 0.0;
};

struct ValidationReport {
  double budget = 0.0;
  std::vector<NormViolation> violations;
  double max_first_layer_l2 = 0.0;
  double max_deeper_l1 = 0.0;

  bool ok() const noexcept { return violations.empty(); }
};

/// Checks l2 row norms of the first layer and l1 row norms of later layers
/// against L. A relative slack of 1e-12 absorbs rounding in the norms.
ValidationReport validate(const NeuralNet& net, double L);

/// Rows drawn uniformly on [-1, 1] and rescaled to factor * L in their norm,
/// factor ~ U[0.5, 1]. `widths` gives d^(0) .. d^(k).
NeuralNet random_net(int k, std::span<const int> widths, double L, const Activation& activation,
                     std::uint64_t seed);

/// A finitely supported vector in the feature space of psi, keyed by index
/// tuples (0-based).
struct EmbeddedFunction {
  std::map<std::vector<std::size_t>, double> coords;
  int depth = 1;

  double norm() const;
  /// <u, psi(x)> against a materialized truncated feature vector.
  double apply(const TruncatedFeatureMap& map, std::span<const double> features) const;
};

/// Explicit RKHS element computing a one-hidden-layer quadratic network.
/// Throws UsageError for other depths or activations.
EmbeddedFunction embed_quadratic(const NeuralNet& net);

}  // namespace rkm
