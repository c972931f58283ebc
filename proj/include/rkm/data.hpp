#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rkm/image.hpp"
#include "rkm/kernel.hpp"
#include "rkm/random.hpp"

namespace rkm {

enum class Provenance { basic, rotation, background, background_rotation };

std::string_view to_string(Provenance p);

/// Grayscale digits with pixel values in [0, 1] and labels in 0..9.
struct ImageDataset {
  int rows = 28;
  int cols = 28;
  std::vector<Image> images;
  std::vector<int> labels;
  Provenance provenance = Provenance::basic;

  std::size_t size() const noexcept { return images.size(); }
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Bytes are scaled to [0, 1] by 1/255. Throws FormatError on bad magic,
/// truncation or a count mismatch.
ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes the IDX pair, quantizing pixels to round(255 p).
void write_idx(const ImageDataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels);

ImageDataset subset(const ImageDataset& ds, std::span<const std::size_t> rows);

// ---------------------------------------------------------------------------

enum class VariantKind { rotation, background, background_rotation };

/// Throws UsageError for unknown names.
VariantKind parse_variant(std::string_view name);
std::string_view to_string(VariantKind kind);

struct VariantOptions {
  /// Test hook: use this angle for every image instead of U[0, 2 pi).
  std::optional<double> forced_angle;
  /// Background patches to draw from; procedural noise when empty.
  std::vector<Image> backgrounds;
};

/// Smooth value noise in [0, 1]: two octaves of bilinearly upsampled random grids.
Image procedural_background(int rows, int cols, Rng& rng);

/// rotation: angle ~ U[0, 2 pi) about the center, bilinear, fill 0.
/// background: per-pixel max with a background patch.
/// background_rotation: rotation first, then background.
/// Image i draws from its own stream seeded by (seed, i), so output is
/// reproducible and independent of processing order.
ImageDataset make_variant(const ImageDataset& ds, VariantKind kind, std::uint64_t seed,
                          const VariantOptions& opts = {});

// ---------------------------------------------------------------------------

enum class PreprocessStep { deskew, center, normalize };

/// Parses a comma-separated list such as "deskew,center,normalize".
std::vector<PreprocessStep> parse_steps(std::string_view text);
std::string to_string(std::span<const PreprocessStep> steps);

/// Flattened feature vectors plus a record of how they were produced.
struct FeatureDataset {
  RowMatrix X;
  std::vector<int> labels;
  /// Applied steps with their parameters, in order.
  std::vector<std::string> fingerprint;
  /// Rows that were all-zero when normalization was requested (left as zero).
  std::vector<std::size_t> zero_rows;

  std::size_t size() const noexcept { return labels.size(); }
};

/// Recovers the step list from a fingerprint written by preprocess().
/// Throws FormatError for unrecognized entries.
std::vector<PreprocessStep> steps_from_fingerprint(std::span<const std::string> fingerprint);

FeatureDataset preprocess(const ImageDataset& ds, std::span<const PreprocessStep> steps);

/// Rows selected by index; keeps the fingerprint.
FeatureDataset select_rows(const FeatureDataset& fd, std::span<const std::size_t> rows);

/// CSV: optional "# fingerprint: a;b;c" comment, then "label,v1,...,vd" per row.
void write_features_csv(const FeatureDataset& fd, const std::filesystem::path& path);
FeatureDataset read_features_csv(const std::filesystem::path& path);

/// Binary, all little-endian: "RKFD", u32 version (1), u64 n, u64 d,
/// u32 fingerprint length + UTF-8 bytes ("a;b;c"), n x i64 labels,
/// n x d f64 row-major values.
void write_features_binary(const FeatureDataset& fd, const std::filesystem::path& path);
FeatureDataset read_features_binary(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" or ".rkfd".
FeatureDataset read_features(const std::filesystem::path& path);
void write_features(const FeatureDataset& fd, const std::filesystem::path& path);

}  // namespace rkm
