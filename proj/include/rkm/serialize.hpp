#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "rkm/kernel.hpp"
#include "rkm/network.hpp"
#include "rkm/solver.hpp"

namespace rkm {

/// Gram matrix on disk, little-endian: "RKGM", u64 n, u64 depth, n*n f64 row-major.
void write_gram(const GramMatrix& G, const std::filesystem::path& path);
GramMatrix read_gram(const std::filesystem::path& path);

/// {"k", "widths", "activation", "weights"}; activation is a builtin name or
/// {"name", "coefficients"} for a custom polynomial.
nlohmann::json to_json(const NeuralNet& net);
NeuralNet net_from_json(const nlohmann::json& j);

/// Where a model's support points live: rows of a feature file.
struct SupportReference {
  std::string path;
  std::vector<std::size_t> rows;
  /// Content fingerprint of the file when the model was written.
  std::string file_fingerprint;
};

struct ModelFile {
  OneVsAllPredictor predictor;
  SupportReference support;
  std::vector<std::string> preprocessing;
  TrainConfig config;
};

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

/// Writes the model JSON. Output depends only on the arguments.
void write_model(const ModelFile& model, const std::filesystem::path& path);

/// Reads the model and reloads its support rows from the referenced feature
/// file. Relative support paths resolve against the model's directory.
/// Throws FormatError when the file changed or its preprocessing differs.
ModelFile read_model(const std::filesystem::path& path);

/// FNV-1a 64 of a file's bytes as "fnv1a64:<16 hex digits>".
std::string file_fingerprint(const std::filesystem::path& path);

/// Pretty JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace rkm
