#include "rkm/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "binary_io.hpp"
#include "rkm/error.hpp"

namespace rkm {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> parse_fingerprint(std::string_view text) {
  text = trim(text);
  if (text.empty()) return {};
  auto parts = split(text, ';');
  for (auto& p : parts) p = std::string(trim(p));
  return parts;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::basic: return "basic";
    case Provenance::rotation: return "rotation";
    case Provenance::background: return "background";
    case Provenance::background_rotation: return "background_rotation";
  }
  return "?";
}

ImageDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto ib = detail::read_file(images);
  const auto lb = detail::read_file(labels);
  detail::ByteReader ir(ib, images.string());
  detail::ByteReader lr(lb, labels.string());

  const std::uint32_t im = ir.u32_be("magic");
  if (im != kImageMagic) {
    throw FormatError(images.string() + ": bad IDX image magic " + hex(im) + " at byte offset 0 (expected 0x803)");
  }
  const std::uint32_t n = ir.u32_be("image count");
  const std::uint32_t rows = ir.u32_be("row count");
  const std::uint32_t cols = ir.u32_be("column count");
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
    throw FormatError(images.string() + ": implausible image shape " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " at byte offset 8");
  }

  const std::uint32_t lm = lr.u32_be("magic");
  if (lm != kLabelMagic) {
    throw FormatError(labels.string() + ": bad IDX label magic " + hex(lm) + " at byte offset 0 (expected 0x801)");
  }
  const std::uint32_t nl = lr.u32_be("label count");
  if (nl != n) {
    throw FormatError("label count " + std::to_string(nl) + " does not match image count " +
                      std::to_string(n));
  }

  const std::size_t per = std::size_t{rows} * cols;
  ImageDataset ds;
  ds.rows = static_cast<int>(rows);
  ds.cols = static_cast<int>(cols);
  ds.images.reserve(n);
  ds.labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint8_t* p = ir.raw(per, "pixel data");
    Image img(ds.rows, ds.cols);
    for (std::size_t j = 0; j < per; ++j) img.pixels[j] = p[j] / 255.0;
    ds.images.push_back(std::move(img));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t off = lr.offset();
    const std::uint8_t y = *lr.raw(1, "label data");
    if (y > 9) {
      throw FormatError(labels.string() + ": label " + std::to_string(y) + " out of range at byte offset " +
                        std::to_string(off));
    }
    ds.labels.push_back(y);
  }
  if (ir.remaining() != 0) {
    throw FormatError(images.string() + ": trailing bytes after byte offset " + std::to_string(ir.offset()));
  }
  if (lr.remaining() != 0) {
    throw FormatError(labels.string() + ": trailing bytes after byte offset " + std::to_string(lr.offset()));
  }
  return ds;
}

void write_idx(const ImageDataset& ds, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  if (ds.labels.size() != ds.images.size()) throw StructuralError("image and label counts differ");
  detail::ByteWriter iw;
  iw.reserve(16 + ds.size() * static_cast<std::size_t>(ds.rows) * ds.cols);
  iw.u32_be(kImageMagic);
  iw.u32_be(static_cast<std::uint32_t>(ds.size()));
  iw.u32_be(static_cast<std::uint32_t>(ds.rows));
  iw.u32_be(static_cast<std::uint32_t>(ds.cols));
  for (const auto& img : ds.images) {
    if (img.rows != ds.rows || img.cols != ds.cols) throw StructuralError("image shape mismatch");
    for (double v : img.pixels) {
      iw.u8(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
  }
  detail::ByteWriter lw;
  lw.u32_be(kLabelMagic);
  lw.u32_be(static_cast<std::uint32_t>(ds.size()));
  for (int y : ds.labels) {
    if (y < 0 || y > 255) throw InputError("label " + std::to_string(y) + " does not fit in a byte");
    lw.u8(static_cast<std::uint8_t>(y));
  }
  detail::write_file(images, iw.data());
  detail::write_file(labels, lw.data());
}

ImageDataset subset(const ImageDataset& ds, std::span<const std::size_t> rows) {
  ImageDataset out;
  out.rows = ds.rows;
  out.cols = ds.cols;
  out.provenance = ds.provenance;
  out.images.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= ds.size()) throw InputError("row index " + std::to_string(r) + " out of range");
    out.images.push_back(ds.images[r]);
    out.labels.push_back(ds.labels[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------

VariantKind parse_variant(std::string_view name) {
  if (name == "rotation") return VariantKind::rotation;
  if (name == "background") return VariantKind::background;
  if (name == "background_rotation") return VariantKind::background_rotation;
  throw UsageError("unknown variant '" + std::string(name) +
                   "' (expected rotation, background or background_rotation)");
}

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::rotation: return "rotation";
    case VariantKind::background: return "background";
    case VariantKind::background_rotation: return "background_rotation";
  }
  return "?";
}

Image procedural_background(int rows, int cols, Rng& rng) {
  Image out(rows, cols);
  // Coarse and fine lattices; weights sum to one so values stay in [0, 1].
  const int cells[2] = {4, 9};
  const double weight[2] = {0.7, 0.3};
  for (int o = 0; o < 2; ++o) {
    const int g = cells[o];
    Image grid(g + 1, g + 1);
    for (double& v : grid.pixels) v = uniform01(rng);
    const double sr = rows > 1 ? static_cast<double>(g) / (rows - 1) : 0.0;
    const double sc = cols > 1 ? static_cast<double>(g) / (cols - 1) : 0.0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        out.at(r, c) += weight[o] * grid.sample(std::min(r * sr, double(g)), std::min(c * sc, double(g)));
      }
    }
  }
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

ImageDataset make_variant(const ImageDataset& ds, VariantKind kind, std::uint64_t seed,
                          const VariantOptions& opts) {
  const bool rot = kind != VariantKind::background;
  const bool bg = kind != VariantKind::rotation;
  for (const auto& b : opts.backgrounds) {
    if (b.rows != ds.rows || b.cols != ds.cols) throw StructuralError("background patch shape mismatch");
  }

  ImageDataset out;
  out.rows = ds.rows;
  out.cols = ds.cols;
  out.labels = ds.labels;
  out.provenance = kind == VariantKind::rotation     ? Provenance::rotation
                   : kind == VariantKind::background ? Provenance::background
                                                     : Provenance::background_rotation;
  out.images.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Rng rng(splitmix64(seed ^ splitmix64(i)));
    Image img = ds.images[i];
    if (rot) {
      const double u = uniform01(rng);
      img = rotate(img, opts.forced_angle ? *opts.forced_angle : u * 2.0 * std::numbers::pi);
    }
    if (bg) {
      if (opts.backgrounds.empty()) {
        img = overlay_max(img, procedural_background(ds.rows, ds.cols, rng));
      } else {
        const auto pick = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(opts.backgrounds.size()) - 1));
        img = overlay_max(img, opts.backgrounds[pick]);
      }
    }
    out.images.push_back(std::move(img));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<PreprocessStep> parse_steps(std::string_view text) {
  std::vector<PreprocessStep> steps;
  if (trim(text).empty()) return steps;
  for (const auto& raw : split(text, ',')) {
    const std::string_view s = trim(raw);
    if (s == "deskew") steps.push_back(PreprocessStep::deskew);
    else if (s == "center") steps.push_back(PreprocessStep::center);
    else if (s == "normalize") steps.push_back(PreprocessStep::normalize);
    else throw UsageError("unknown preprocessing step '" + std::string(s) +
                          "' (expected deskew, center or normalize)");
  }
  return steps;
}

std::string to_string(std::span<const PreprocessStep> steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i) out += ',';
    switch (steps[i]) {
      case PreprocessStep::deskew: out += "deskew"; break;
      case PreprocessStep::center: out += "center"; break;
      case PreprocessStep::normalize: out += "normalize"; break;
    }
  }
  return out;
}

std::vector<PreprocessStep> steps_from_fingerprint(std::span<const std::string> fingerprint) {
  std::vector<PreprocessStep> steps;
  for (const auto& f : fingerprint) {
    const std::string_view name = std::string_view(f).substr(0, f.find('('));
    if (name == "deskew") steps.push_back(PreprocessStep::deskew);
    else if (name == "center") steps.push_back(PreprocessStep::center);
    else if (name == "normalize") steps.push_back(PreprocessStep::normalize);
    else throw FormatError("unrecognized preprocessing entry '" + f + "'");
  }
  return steps;
}

FeatureDataset preprocess(const ImageDataset& ds, std::span<const PreprocessStep> steps) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index d = static_cast<Eigen::Index>(ds.rows) * ds.cols;
  FeatureDataset fd;
  fd.labels = ds.labels;
  fd.X.resize(n, d);

  const bool want_deskew = std::ranges::find(steps, PreprocessStep::deskew) != steps.end();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Image& src = ds.images[static_cast<std::size_t>(i)];
    if (src.rows != ds.rows || src.cols != ds.cols) throw StructuralError("image shape mismatch");
    // Deskew works on the image grid, so it runs before flattening; other
    // steps run in the listed order on the vector.
    const Image img = want_deskew && steps.front() == PreprocessStep::deskew ? deskew(src) : src;
    for (Eigen::Index j = 0; j < d; ++j) fd.X(i, j) = img.pixels[static_cast<std::size_t>(j)];
  }

  for (std::size_t s = 0; s < steps.size(); ++s) {
    switch (steps[s]) {
      case PreprocessStep::deskew:
        if (s != 0) throw UsageError("deskew must be the first preprocessing step");
        fd.fingerprint.emplace_back("deskew(moments-shear,bilinear,center=geometric)");
        break;
      case PreprocessStep::center:
        for (Eigen::Index i = 0; i < n; ++i) {
          auto row = fd.X.row(i);
          // A constant row must come out exactly zero, not as mean rounding residue.
          if (row.maxCoeff() == row.minCoeff()) row.setZero();
          else row.array() -= row.mean();
        }
        fd.fingerprint.emplace_back("center(mean)");
        break;
      case PreprocessStep::normalize:
        fd.zero_rows.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
          const double norm = fd.X.row(i).norm();
          if (norm > 0.0) {
            fd.X.row(i) /= norm;
          } else {
            fd.X.row(i).setZero();
            fd.zero_rows.push_back(static_cast<std::size_t>(i));
          }
        }
        fd.fingerprint.emplace_back("normalize(l2)");
        break;
    }
  }
  return fd;
}

FeatureDataset select_rows(const FeatureDataset& fd, std::span<const std::size_t> rows) {
  FeatureDataset out;
  out.fingerprint = fd.fingerprint;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), fd.X.cols());
  out.labels.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    if (r >= fd.size()) throw InputError("row index " + std::to_string(r) + " out of range");
    out.X.row(static_cast<Eigen::Index>(k)) = fd.X.row(static_cast<Eigen::Index>(r));
    out.labels.push_back(fd.labels[r]);
    if (std::ranges::binary_search(fd.zero_rows, r)) out.zero_rows.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_features_csv(const FeatureDataset& fd, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  if (!fd.fingerprint.empty()) out << "# fingerprint: " << join(fd.fingerprint, ';') << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < fd.X.rows(); ++i) {
    out << fd.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < fd.X.cols(); ++j) {
      // Shortest round-trip representation.
      auto res = std::to_chars(buf, buf + sizeof buf, fd.X(i, j));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

FeatureDataset read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  FeatureDataset fd;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      constexpr std::string_view key = "# fingerprint:";
      if (sv.starts_with(key)) fd.fingerprint = parse_fingerprint(sv.substr(key.size()));
      continue;
    }
    const auto fields = split(sv, ',');
    if (fields.size() < 2) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected label and values");
    }
    if (rows.empty()) d = fields.size() - 1;
    if (fields.size() - 1 != d) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                        " values, found " + std::to_string(fields.size() - 1));
    }
    auto field = [&](std::size_t k, auto& value) {
      const std::string_view f = trim(fields[k]);
      auto res = std::from_chars(f.data(), f.data() + f.size(), value);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad field " +
                          std::to_string(k + 1) + " '" + std::string(f) + "'");
      }
    };
    int label = 0;
    field(0, label);
    std::vector<double> vals(d);
    for (std::size_t k = 0; k < d; ++k) field(k + 1, vals[k]);
    fd.labels.push_back(label);
    rows.push_back(std::move(vals));
  }
  fd.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) fd.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return fd;
}

void write_features_binary(const FeatureDataset& fd, const std::filesystem::path& path) {
  detail::ByteWriter w;
  const std::string fp = join(fd.fingerprint, ';');
  w.reserve(32 + fp.size() + fd.size() * 8 + static_cast<std::size_t>(fd.X.size()) * 8);
  w.bytes("RKFD");
  w.u32_le(1);
  w.u64_le(static_cast<std::uint64_t>(fd.X.rows()));
  w.u64_le(static_cast<std::uint64_t>(fd.X.cols()));
  w.u32_le(static_cast<std::uint32_t>(fp.size()));
  w.bytes(fp);
  for (int y : fd.labels) w.i64_le(y);
  for (Eigen::Index i = 0; i < fd.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < fd.X.cols(); ++j) w.f64_le(fd.X(i, j));
  }
  detail::write_file(path, w.data());
}

FeatureDataset read_features_binary(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes, path.string());
  if (r.str(4, "magic") != "RKFD") throw FormatError(path.string() + ": bad magic at byte offset 0");
  const std::uint32_t version = r.u32_le("version");
  if (version != 1) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version) + " at byte offset 4");
  }
  const std::uint64_t n = r.u64_le("row count");
  const std::uint64_t d = r.u64_le("column count");
  const std::uint32_t fl = r.u32_le("fingerprint length");
  FeatureDataset fd;
  fd.fingerprint = parse_fingerprint(r.str(fl, "fingerprint"));
  if (n > r.remaining() / 8 || (n > 0 && d > r.remaining() / 8 / n)) {
    throw FormatError(path.string() + ": header declares " + std::to_string(n) + "x" + std::to_string(d) +
                      " but only " + std::to_string(r.remaining()) + " bytes follow byte offset " +
                      std::to_string(r.offset()));
  }
  fd.labels.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) fd.labels.push_back(static_cast<int>(r.i64_le("labels")));
  fd.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < d; ++j) {
      fd.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.f64_le("values");
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(path.string() + ": trailing bytes after byte offset " + std::to_string(r.offset()));
  }
  return fd;
}

FeatureDataset read_features(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".csv") return read_features_csv(path);
  if (ext == ".rkfd") return read_features_binary(path);
  throw UsageError("feature file must end in .csv or .rkfd: " + path.string());
}

void write_features(const FeatureDataset& fd, const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".csv") return write_features_csv(fd, path);
  if (ext == ".rkfd") return write_features_binary(fd, path);
  throw UsageError("feature file must end in .csv or .rkfd: " + path.string());
}

}  // namespace rkm
