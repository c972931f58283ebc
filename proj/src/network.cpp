#include "rkm/network.hpp"

#include <cmath>
#include <sstream>

#include "rkm/error.hpp"
#include "rkm/random.hpp"

namespace rkm {

void check_structure(const NeuralNet& net) {
  const int k = net.hidden_layers();
  if (k < 1) throw StructuralError("network needs at least one hidden layer");
  if (static_cast<int>(net.weights.size()) != k + 1) {
    throw StructuralError("network with " + std::to_string(k) + " hidden layers needs " +
                          std::to_string(k + 1) + " weight matrices, got " +
                          std::to_string(net.weights.size()));
  }
  for (int p = 0; p <= k; ++p) {
    if (net.widths[p] < 1) throw StructuralError("layer widths must be positive");
    const int rows_expected = p == k ? 1 : net.widths[p + 1];
    const auto& W = net.weights[p];
    if (W.rows() != rows_expected || W.cols() != net.widths[p]) {
      std::ostringstream msg;
      msg << "weight matrix " << p << " has shape " << W.rows() << "x" << W.cols() << ", expected "
          << rows_expected << "x" << net.widths[p];
      throw StructuralError(msg.str());
    }
  }
}

double forward(const NeuralNet& net, std::span<const double> x) {
  check_structure(net);
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw StructuralError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim()));
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const int k = net.hidden_layers();
  for (int p = 0; p < k; ++p) {
    Eigen::VectorXd z = net.weights[p] * y;
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = net.activation(z[i]);
    y = std::move(z);
  }
  return (net.weights[k] * y)(0);
}

ValidationReport validate(const NeuralNet& net, double L) {
  check_structure(net);
  ValidationReport rep;
  rep.budget = L;
  const double limit = L * (1.0 + 1e-12);
  for (int p = 0; p <= net.hidden_layers(); ++p) {
    const auto& W = net.weights[p];
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      const bool first = p == 0;
      const double measured = first ? W.row(i).norm() : W.row(i).lpNorm<1>();
      if (first) {
        rep.max_first_layer_l2 = std::max(rep.max_first_layer_l2, measured);
      } else {
        rep.max_deeper_l1 = std::max(rep.max_deeper_l1, measured);
      }
      if (!(measured <= limit)) {
        rep.violations.push_back(
            {p, static_cast<int>(i), first ? NormKind::l2 : NormKind::l1, measured});
      }
    }
  }
  return rep;
}

NeuralNet random_net(int k, std::span<const int> widths, double L, const Activation& activation,
                     std::uint64_t seed) {
  if (k < 1) throw StructuralError("network needs at least one hidden layer");
  if (static_cast<int>(widths.size()) != k + 1) {
    throw StructuralError("random_net needs k + 1 widths (input and hidden layers)");
  }
  if (!(L > 0.0)) throw InputError("random_net: L must be positive");
  Rng rng(seed);
  NeuralNet net;
  net.widths.assign(widths.begin(), widths.end());
  net.activation = activation;
  for (int p = 0; p <= k; ++p) {
    if (widths[p] < 1) throw StructuralError("layer widths must be positive");
    const int rows = p == k ? 1 : widths[p + 1];
    RowMatrix W(rows, widths[p]);
    for (int i = 0; i < rows; ++i) {
      double norm = 0.0;
      do {
        for (int j = 0; j < widths[p]; ++j) W(i, j) = uniform(rng, -1.0, 1.0);
        norm = p == 0 ? W.row(i).norm() : W.row(i).lpNorm<1>();
      } while (norm == 0.0);
      const double factor = uniform(rng, 0.5, 1.0);
      W.row(i) *= factor * L / norm;
    }
    net.weights.push_back(std::move(W));
  }
  return net;
}

// ---------------------------------------------------------------------------

double EmbeddedFunction::norm() const {
  double s = 0.0;
  for (const auto& [_, v] : coords) s += v * v;
  return std::sqrt(s);
}

double EmbeddedFunction::apply(const TruncatedFeatureMap& map,
                               std::span<const double> features) const {
  if (features.size() != map.size()) throw StructuralError("feature vector has the wrong length");
  double acc = 0.0;
  for (const auto& [tuple, v] : coords) acc += v * features[map.index_of(tuple)];
  return acc;
}

EmbeddedFunction embed_quadratic(const NeuralNet& net) {
  check_structure(net);
  if (net.hidden_layers() != 1) {
    throw UsageError("embed_quadratic supports exactly one hidden layer, got " +
                     std::to_string(net.hidden_layers()));
  }
  const Activation& a = net.activation;
  if (a.max_degree() != 2 || a.coeff(0) != 0.0 || a.coeff(1) != 0.0 || a.coeff(2) != 1.0) {
    throw UsageError("embed_quadratic requires the quadratic activation, got " + a.name());
  }
  // u = sum_j w_j u_j with u_j(k1, k2) = 2^{3/2} v_{j,k1} v_{j,k2}.
  const double c = std::pow(2.0, 1.5);
  const RowMatrix& V = net.weights[0];
  const RowMatrix& w = net.weights[1];
  const std::size_t d = static_cast<std::size_t>(V.cols());
  EmbeddedFunction u;
  u.depth = 1;
  for (Eigen::Index j = 0; j < V.rows(); ++j) {
    const double wj = w(0, j);
    if (wj == 0.0) continue;
    for (std::size_t k1 = 0; k1 < d; ++k1) {
      for (std::size_t k2 = 0; k2 < d; ++k2) {
        const double v = wj * c * V(j, k1) * V(j, k2);
        if (v != 0.0) u.coords[{k1, k2}] += v;
      }
    }
  }
  std::erase_if(u.coords, [](const auto& kv) { return kv.second == 0.0; });
  return u;
}

}  // namespace rkm
