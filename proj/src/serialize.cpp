#include "rkm/serialize.hpp"

#include <cstdio>
#include <fstream>

#include "binary_io.hpp"
#include "rkm/data.hpp"
#include "rkm/error.hpp"

namespace rkm {

using nlohmann::json;

void write_gram(const GramMatrix& G, const std::filesystem::path& path) {
  detail::ByteWriter w;
  const auto n = static_cast<std::size_t>(G.n());
  w.reserve(20 + n * n * 8);
  w.bytes("RKGM");
  w.u64_le(n);
  w.u64_le(static_cast<std::uint64_t>(G.depth()));
  for (Eigen::Index i = 0; i < G.n(); ++i) {
    for (Eigen::Index j = 0; j < G.n(); ++j) w.f64_le(G(i, j));
  }
  detail::write_file(path, w.data());
}

GramMatrix read_gram(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes, path.string());
  if (r.str(4, "magic") != "RKGM") throw FormatError(path.string() + ": bad magic at byte offset 0");
  const std::uint64_t n = r.u64_le("size");
  const std::uint64_t depth = r.u64_le("depth");
  if (n > 0 && n > r.remaining() / 8 / n) {
    throw FormatError(path.string() + ": header declares n = " + std::to_string(n) + " but only " +
                      std::to_string(r.remaining()) + " bytes follow byte offset " +
                      std::to_string(r.offset()));
  }
  Eigen::MatrixXd E(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < E.rows(); ++i) {
    for (Eigen::Index j = 0; j < E.cols(); ++j) E(i, j) = r.f64_le("entries");
  }
  if (r.remaining() != 0) {
    throw FormatError(path.string() + ": trailing bytes after byte offset " + std::to_string(r.offset()));
  }
  return GramMatrix(std::move(E), static_cast<int>(depth));
}

// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const RowMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

RowMatrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw FormatError(what + " must be a nonempty array of rows");
  const std::size_t cols = j.front().size();
  RowMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw FormatError(what + " is ragged at row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

bool is_builtin(const std::string& name) {
  for (const auto& s : supported_activations()) {
    if (s == name) return true;
  }
  return false;
}

template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

}  // namespace

json to_json(const NeuralNet& net) {
  json j;
  j["k"] = net.hidden_layers();
  j["widths"] = net.widths;
  if (is_builtin(net.activation.name())) {
    j["activation"] = net.activation.name();
  } else {
    const auto deg = net.activation.max_degree();
    if (!deg) throw UsageError("only builtin activations and polynomials can be serialized");
    std::vector<double> c;
    for (std::size_t i = 0; i <= *deg; ++i) c.push_back(net.activation.coeff(i));
    j["activation"] = {{"name", net.activation.name()}, {"coefficients", c}};
  }
  j["weights"] = json::array();
  for (const auto& W : net.weights) j["weights"].push_back(matrix_to_json(W));
  return j;
}

NeuralNet net_from_json(const json& j) {
  return guarded("network JSON", [&] {
    NeuralNet net;
    net.widths = j.at("widths").get<std::vector<int>>();
    const json& a = j.at("activation");
    if (a.is_string()) {
      net.activation = builtin_activation(a.get<std::string>());
    } else {
      net.activation = Activation::polynomial(a.at("name").get<std::string>(),
                                              a.at("coefficients").get<std::vector<double>>());
    }
    std::size_t p = 0;
    for (const auto& W : j.at("weights")) {
      net.weights.push_back(matrix_from_json(W, "weights[" + std::to_string(p++) + "]"));
    }
    if (j.contains("k") && j.at("k").get<int>() != net.hidden_layers()) {
      throw StructuralError("k does not match the number of widths");
    }
    check_structure(net);
    return net;
  });
}

// ---------------------------------------------------------------------------

json config_to_json(const TrainConfig& cfg) {
  json j;
  j["depth"] = cfg.depth;
  j["B"] = cfg.B;
  j["loss"] = std::string(to_string(cfg.loss));
  j["max_iters"] = cfg.max_iters;
  j["eta0"] = cfg.eta0 ? json(*cfg.eta0) : json(nullptr);
  j["tolerance"] = cfg.tolerance;
  j["window"] = cfg.window;
  return j;
}

TrainConfig config_from_json(const json& j) {
  return guarded("training config", [&] {
    TrainConfig cfg;
    cfg.depth = j.at("depth").get<int>();
    cfg.B = j.at("B").get<double>();
    cfg.loss = parse_loss(j.at("loss").get<std::string>());
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    if (j.contains("eta0") && !j.at("eta0").is_null()) cfg.eta0 = j.at("eta0").get<double>();
    cfg.tolerance = j.value("tolerance", cfg.tolerance);
    cfg.window = j.value("window", cfg.window);
    check_config(cfg);
    return cfg;
  });
}

void write_model(const ModelFile& model, const std::filesystem::path& path) {
  const auto& p = model.predictor;
  if (p.per_class.empty()) throw StructuralError("model has no classes");
  json j;
  j["format"] = "rkm-model";
  j["version"] = 1;
  j["depth"] = p.depth();
  j["B"] = model.config.B;
  j["loss"] = std::string(to_string(model.config.loss));
  j["classes"] = p.classes;
  json alpha = json::array();
  for (const auto& c : p.per_class) {
    alpha.push_back(std::vector<double>(c.alpha.data(), c.alpha.data() + c.alpha.size()));
  }
  j["alpha"] = std::move(alpha);
  j["train_objective"] = json::array();
  for (const auto& c : p.per_class) j["train_objective"].push_back(c.train_objective);
  j["support"] = {{"path", model.support.path},
                  {"rows", model.support.rows},
                  {"fingerprint", model.support.file_fingerprint}};
  j["preprocessing"] = model.preprocessing;
  j["config"] = config_to_json(model.config);
  write_json(j, path);
}

ModelFile read_model(const std::filesystem::path& path) {
  const json j = read_json(path);
  return guarded(path.string(), [&] {
    if (j.value("format", "") != "rkm-model") throw FormatError(path.string() + ": not a model file");
    ModelFile m;
    m.config = config_from_json(j.at("config"));
    m.preprocessing = j.at("preprocessing").get<std::vector<std::string>>();
    const json& s = j.at("support");
    m.support.path = s.at("path").get<std::string>();
    m.support.rows = s.at("rows").get<std::vector<std::size_t>>();
    m.support.file_fingerprint = s.value("fingerprint", "");

    std::filesystem::path sp = m.support.path;
    if (sp.is_relative()) sp = path.parent_path() / sp;
    if (!m.support.file_fingerprint.empty()) {
      const std::string now = file_fingerprint(sp);
      if (now != m.support.file_fingerprint) {
        throw FormatError("support file " + sp.string() + " changed since training (" + now +
                          " != " + m.support.file_fingerprint + ")");
      }
    }
    const FeatureDataset fd = read_features(sp);
    if (fd.fingerprint != m.preprocessing) {
      throw FormatError("support file " + sp.string() + " preprocessing does not match the model");
    }
    const FeatureDataset rows = select_rows(fd, m.support.rows);
    auto support = std::make_shared<const RowMatrix>(rows.X);

    m.predictor.classes = j.at("classes").get<std::vector<int>>();
    const json& alpha = j.at("alpha");
    if (alpha.size() != m.predictor.classes.size()) throw FormatError("alpha count does not match classes");
    const json obj = j.value("train_objective", json::array());
    for (std::size_t c = 0; c < alpha.size(); ++c) {
      const auto a = alpha[c].get<std::vector<double>>();
      if (a.size() != m.support.rows.size()) {
        throw FormatError("alpha for class " + std::to_string(c) + " has " + std::to_string(a.size()) +
                          " entries for " + std::to_string(m.support.rows.size()) + " support rows");
      }
      KernelPredictor kp;
      kp.support = support;
      kp.alpha = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
      kp.depth = j.at("depth").get<int>();
      kp.B = j.at("B").get<double>();
      kp.loss = parse_loss(j.at("loss").get<std::string>());
      if (c < obj.size()) kp.train_objective = obj[c].get<double>();
      m.predictor.per_class.push_back(std::move(kp));
    }
    return m;
  });
}

std::string file_fingerprint(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace rkm
