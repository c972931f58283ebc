#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rkm/kernel.hpp"
#include "rkm/random.hpp"

namespace rkm::test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(RKM_FIXTURE_DIR) / name;
}

inline nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(fixture(name));
  return nlohmann::json::parse(in);
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(RKM_TEST_DATA_DIR) / name;
}

/// Standard normal via Box-Muller on the portable uniform.
inline double normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::vector<double> unit_vector(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double s = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    s += x * x;
  }
  s = std::sqrt(s);
  for (auto& x : v) x /= s;
  return v;
}

inline RowMatrix unit_rows(Rng& rng, Eigen::Index n, Eigen::Index d) {
  RowMatrix X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = unit_vector(rng, static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = v[static_cast<std::size_t>(j)];
  }
  return X;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("rkm-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace rkm::test
