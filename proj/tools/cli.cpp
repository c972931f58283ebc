#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rkm/activation.hpp"
#include "rkm/baseline.hpp"
#include "rkm/data.hpp"
#include "rkm/error.hpp"
#include "rkm/hardness.hpp"
#include "rkm/kernel.hpp"
#include "rkm/random.hpp"
#include "rkm/serialize.hpp"
#include "rkm/solver.hpp"
#include "rkm/version.hpp"

#ifndef RKM_DEFAULT_DATA_DIR
#define RKM_DEFAULT_DATA_DIR "data"
#endif

namespace rkm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kImagesFile = "mnist5k-images.idx3-ubyte";
constexpr const char* kLabelsFile = "mnist5k-labels.idx1-ubyte";
constexpr const char* kDeskLabel = "desk scale — not paper scale";

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path data_dir() {
  if (const char* env = std::getenv("RKM_DATA_DIR"); env && *env) return env;
  return RKM_DEFAULT_DATA_DIR;
}

std::string absolute_string(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

/// An IDX pair, defaulting to the bundled subset in the data directory.
struct ImageSource {
  std::string images;
  std::string labels;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--images", images, "IDX image file (default: $RKM_DATA_DIR/" + std::string(kImagesFile) + ")");
    cmd->add_option("--labels", labels, "IDX label file (default: $RKM_DATA_DIR/" + std::string(kLabelsFile) + ")");
  }
  void resolve() {
    if (images.empty() != labels.empty()) throw UsageError("--images and --labels go together");
    if (images.empty()) {
      images = (data_dir() / kImagesFile).string();
      labels = (data_dir() / kLabelsFile).string();
    }
    images = absolute_string(images);
    labels = absolute_string(labels);
  }
  ImageDataset load() const { return read_idx(images, labels); }
};

ImageDataset apply_variant(ImageDataset ds, const std::string& variant, std::uint64_t seed) {
  if (variant.empty() || variant == "basic") return ds;
  return make_variant(ds, parse_variant(variant), seed);
}

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

int num_classes_of(std::span<const int> labels) {
  if (labels.empty()) throw InputError("dataset is empty");
  const int hi = *std::max_element(labels.begin(), labels.end());
  return std::max(2, hi + 1);
}

/// Option values after parsing, defaults included; used in manifests.
json options_json(const CLI::App* cmd) {
  json j = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "from-manifest") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) j[name] = r;
      else j[name] = r.empty() ? "" : r.back();
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

json input_record(const std::string& path) {
  return {{"path", path}, {"fingerprint", file_fingerprint(path)}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string percent(double e) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * e << "%";
  return os.str();
}

// ---------------------------------------------------------------------------
// bound

struct BoundOptions {
  std::string activation = "quadratic";
  int k = 1;
  double L = 1.0;
  double tol = 1e-12;
  std::size_t max_terms = 10'000;
};

json report_json(const CapacityReport& r) {
  json levels = json::array();
  for (const auto& v : r.levels) levels.push_back({{"log10", v.log10()}, {"value", v.value()}});
  return {{"activation", r.activation}, {"k", r.k},           {"L", r.L},
          {"converged", r.converged},   {"terms_used", r.terms_used},
          {"non_decreasing", r.non_decreasing},
          {"F_log10", r.levels.empty() ? 0.0 : r.F().log10()},
          {"F", r.levels.empty() ? 0.0 : r.F().value()},
          {"levels", levels}};
}

int cmd_bound(const BoundOptions& o, std::ostream& out) {
  const Activation act = builtin_activation(o.activation);
  if (o.k < 1) throw UsageError("--k must be at least 1");
  SeriesOptions so;
  so.tol = o.tol;
  so.max_terms = o.max_terms;
  CapacityReport r;
  try {
    r = compute_F(act, o.k, o.L, so);
  } catch (const CapacityDivergence& e) {
    throw NumericError(std::string(e.what()) + " (level " + std::to_string(e.level) + " of " +
                       std::to_string(o.k) + ")");
  }
  out << "activation: " << r.activation << "\n";
  out << "k: " << r.k << "\nL: " << r.L << "\n";
  for (std::size_t p = 0; p < r.levels.size(); ++p) {
    out << "H^(" << p + 1 << ")(L): log10 = " << std::setprecision(10) << r.levels[p].log10();
    const double v = r.levels[p].value();
    if (std::isfinite(v)) out << ", value = " << std::setprecision(12) << v;
    out << "\n";
  }
  out << "F(k, L) = " << r.F().to_string() << " (log10 = " << std::setprecision(10) << r.F().log10()
      << ")\n";
  out << "terms used: " << r.terms_used << "\n";
  out << report_json(r).dump() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// gram

struct GramOptions {
  std::string data;
  int k = 1;
  std::string out;
};

int cmd_gram(const GramOptions& o, std::ostream& out) {
  const FeatureDataset fd = read_features(o.data);
  if (o.k < 0) throw UsageError("--k must be nonnegative");
  check_rows_in_unit_ball(fd.X, "feature row");
  const GramMatrix G = gram(KernelStack(o.k), fd.X);
  write_gram(G, o.out);
  out << "wrote " << G.n() << "x" << G.n() << " Gram matrix (k = " << o.k << ") to " << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// variants

struct VariantsOptions {
  ImageSource source;
  std::string kind;
  std::uint64_t seed = 1;
  std::size_t limit = 0;
  std::string out_images;
  std::string out_labels;
};

int cmd_variants(VariantsOptions o, std::ostream& out) {
  o.source.resolve();
  const VariantKind kind = parse_variant(o.kind);
  ImageDataset ds = o.source.load();
  if (o.limit > 0 && o.limit < ds.size()) {
    std::vector<std::size_t> rows(o.limit);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    ds = subset(ds, rows);
  }
  const ImageDataset v = make_variant(ds, kind, o.seed);
  write_idx(v, o.out_images, o.out_labels);
  out << "wrote " << v.size() << " " << to_string(kind) << " images to " << o.out_images << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// hardness-demo

struct HardnessOptions {
  int d = 6;
  int T = 2;
  std::uint64_t seed = 1;
  std::int64_t budget = 0;  // 0: 2 (d + 1)
  std::string activation = "shifted_erf";
};

int cmd_hardness(const HardnessOptions& o, std::ostream& out) {
  if (o.d < 1 || o.d > 24) throw UsageError("--d must lie in 1..24 for brute force");
  if (o.T < 1) throw UsageError("--T must be at least 1");
  const Activation act = builtin_activation(o.activation);
  if (act.kind() == ActivationKind::polynomial) {
    throw UsageError("hardness-demo needs a sigmoid-like or relu-like activation");
  }
  const std::int64_t budget = o.budget > 0 ? o.budget : 2 * (o.d + 1);
  const HalfspaceFamily hs = random_halfspaces(o.d, o.T, budget, o.seed);
  const double lambda = select_margin(act, o.T);
  const HardnessNet hn = build_hardness_net(hs, act, lambda);
  const HypercubeSummary s = enumerate_hypercube(hs, hn.net);

  out << "halfspaces: d = " << o.d << ", T = " << o.T << ", budget = " << budget << ", seed = " << o.seed
      << "\n";
  for (int t = 0; t < hs.T(); ++t) {
    out << "  h" << t + 1 << ": w = (";
    for (int i = 0; i < hs.d; ++i) out << (i ? ", " : "") << hs.w[t][i];
    out << "), b = " << hs.b[t] << "\n";
  }
  out << std::setprecision(10);
  out << "activation: " << act.name() << ", lambda = " << hn.lambda << ", network L = " << hn.budget << "\n";
  out << "inputs: " << s.inputs << ", positives: " << s.positives << "\n";
  out << "min margin: " << s.min_margin << "\n";
  out << "max hinge loss: " << s.max_hinge << "\n";
  if (s.min_margin >= 1.0 && s.max_hinge == 0.0) {
    out << "min margin >= 1.0, hinge loss = 0\n";
    return kOk;
  }
  out << "margin condition violated\n";
  return kNumeric;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string data;
  ImageSource source;
  bool from_images = false;
  std::string preprocess = "deskew,center,normalize";
  std::string variant;
  std::string test;
  int k = 1;
  double B = 100.0;
  std::string loss = "hinge";
  int classes = 0;
  int max_iters = 5000;
  double eta0 = 0.0;
  double tol = 1e-6;
  int window = 100;
  std::uint64_t seed = 1;
  std::size_t subsample = 0;
  std::string out_model;
  std::string metrics;
  std::string manifest;
  std::string from_manifest;
};

TrainConfig train_config(const TrainOptions& o) {
  TrainConfig cfg;
  cfg.depth = o.k;
  cfg.B = o.B;
  cfg.loss = parse_loss(o.loss);
  cfg.max_iters = o.max_iters;
  if (o.eta0 > 0.0) cfg.eta0 = o.eta0;
  cfg.tolerance = o.tol;
  cfg.window = o.window;
  cfg.record_history = true;
  check_config(cfg);
  return cfg;
}

/// A fully explicit argument list that reproduces this run.
std::vector<std::string> canonical_train_args(const TrainOptions& o) {
  auto d2s = [](double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  };
  std::vector<std::string> a{"train"};
  auto add = [&](const std::string& flag, const std::string& value) {
    a.push_back(flag);
    a.push_back(value);
  };
  if (!o.data.empty()) {
    add("--data", o.data);
  } else {
    add("--images", o.source.images);
    add("--labels", o.source.labels);
    add("--preprocess", o.preprocess);
    if (!o.variant.empty()) add("--variant", o.variant);
  }
  if (!o.test.empty()) add("--test", o.test);
  add("--k", std::to_string(o.k));
  add("--B", d2s(o.B));
  add("--loss", o.loss);
  if (o.classes > 0) add("--classes", std::to_string(o.classes));
  add("--max-iters", std::to_string(o.max_iters));
  if (o.eta0 > 0.0) add("--eta0", d2s(o.eta0));
  add("--tol", d2s(o.tol));
  add("--window", std::to_string(o.window));
  add("--seed", std::to_string(o.seed));
  if (o.subsample > 0) add("--subsample", std::to_string(o.subsample));
  add("--out-model", o.out_model);
  add("--metrics", o.metrics);
  add("--manifest", o.manifest);
  return a;
}

int cmd_train(TrainOptions o, const json& options, std::ostream& out) {
  const auto t_start = Clock::now();
  if (o.out_model.empty()) throw UsageError("--out-model is required");
  if (o.data.empty() != o.from_images) {
    throw UsageError("give either --data (features) or --images/--labels");
  }
  const fs::path model_path = fs::absolute(o.out_model).lexically_normal();
  o.out_model = model_path.string();
  if (o.metrics.empty()) o.metrics = model_path.string() + ".metrics.csv";
  if (o.manifest.empty()) o.manifest = model_path.string() + ".manifest.json";
  o.metrics = absolute_string(o.metrics);
  o.manifest = absolute_string(o.manifest);
  o.test = absolute_string(o.test);
  const TrainConfig cfg = train_config(o);

  json inputs = json::array();
  fs::path support_file;
  FeatureDataset fd;
  const auto t_load = Clock::now();
  if (!o.data.empty()) {
    o.data = absolute_string(o.data);
    fd = read_features(o.data);
    support_file = o.data;
    inputs.push_back(input_record(o.data));
  } else {
    o.source.resolve();
    const auto steps = parse_steps(o.preprocess);
    if (steps.empty() || steps.back() != PreprocessStep::normalize) {
      throw UsageError("--preprocess must end with normalize for training");
    }
    inputs.push_back(input_record(o.source.images));
    inputs.push_back(input_record(o.source.labels));
    fd = preprocess(apply_variant(o.source.load(), o.variant, o.seed), steps);
    // Named by content so replays into other model paths write identical models.
    const fs::path staging = model_path.string() + ".features.tmp.rkfd";
    write_features(fd, staging);
    const std::string fp = file_fingerprint(staging);
    support_file = model_path.parent_path() / ("features-" + fp.substr(fp.find(':') + 1) + ".rkfd");
    fs::rename(staging, support_file);
  }
  if (fd.size() == 0) throw InputError("training set is empty");
  const double load_s = seconds_since(t_load);

  std::vector<std::size_t> rows;
  if (o.subsample > 0 && o.subsample < fd.size()) {
    rows = shuffled(fd.size(), o.seed);
    rows.resize(o.subsample);
    std::sort(rows.begin(), rows.end());
  } else {
    rows.resize(fd.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  const FeatureDataset tr = select_rows(fd, rows);
  const int C = o.classes > 0 ? o.classes : num_classes_of(fd.labels);

  const auto t_train = Clock::now();
  const OneVsAllPredictor p = train_multiclass(tr.X, tr.labels, C, cfg);
  const double train_s = seconds_since(t_train);

  ModelFile m;
  m.predictor = p;
  m.support.path = fs::proximate(support_file, model_path.parent_path()).string();
  m.support.rows = rows;
  m.support.file_fingerprint = file_fingerprint(support_file);
  m.preprocessing = fd.fingerprint;
  m.config = cfg;
  write_model(m, model_path);

  const double train_err = error_rate(p.classify(tr.X), tr.labels);
  std::optional<double> test_err;
  if (!o.test.empty()) {
    const FeatureDataset te = read_features(o.test);
    if (te.fingerprint != fd.fingerprint) throw FormatError("--test preprocessing differs from the training data");
    test_err = error_rate(p.classify(te.X), te.labels);
    inputs.push_back(input_record(o.test));
  }

  std::ostringstream csv;
  csv << std::setprecision(17) << "metric,class,iteration,value\n";
  for (std::size_t c = 0; c < p.per_class.size(); ++c) {
    const auto& kp = p.per_class[c];
    for (std::size_t t = 0; t < kp.history.size(); ++t) {
      csv << "objective," << p.classes[c] << "," << t << "," << kp.history[t] << "\n";
      csv << "best_objective," << p.classes[c] << "," << t << "," << kp.best_history[t] << "\n";
    }
  }
  csv << "train_error,all,," << train_err << "\n";
  if (test_err) csv << "test_error,all,," << *test_err << "\n";
  write_text(o.metrics, csv.str());

  json manifest;
  manifest["command"] = "train";
  manifest["argv"] = canonical_train_args(o);
  manifest["config"] = options;
  manifest["train_config"] = config_to_json(cfg);
  manifest["seed"] = o.seed;
  manifest["version"] = kVersion;
  manifest["inputs"] = inputs;
  manifest["outputs"] = {{"model", o.out_model}, {"metrics", o.metrics}, {"support", support_file.string()}};
  manifest["timings_seconds"] = {{"load", load_s}, {"train", train_s}, {"total", seconds_since(t_start)}};
  write_json(manifest, o.manifest);

  out << "trained " << C << " one-vs-all classifiers on " << tr.size() << " points (k = " << cfg.depth
      << ", B = " << cfg.B << ", loss = " << to_string(cfg.loss) << ") in " << std::setprecision(4)
      << train_s << " s\n";
  out << "train error: " << percent(train_err) << "\n";
  if (test_err) out << "test error: " << percent(*test_err) << "\n";
  out << "model: " << o.out_model << "\nmetrics: " << o.metrics << "\nmanifest: " << o.manifest << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string model;
  std::string data;
  ImageSource source;
  bool from_images = false;
  std::string variant;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_eval(EvalOptions o, std::ostream& out) {
  const ModelFile m = read_model(o.model);
  if (o.data.empty() != o.from_images) throw UsageError("give either --data (features) or --images/--labels");
  FeatureDataset fd;
  if (!o.data.empty()) {
    fd = read_features(o.data);
    if (fd.fingerprint != m.preprocessing) {
      throw FormatError("data preprocessing does not match the model's");
    }
  } else {
    o.source.resolve();
    fd = preprocess(apply_variant(o.source.load(), o.variant, o.seed), steps_from_fingerprint(m.preprocessing));
  }
  if (fd.size() == 0) throw InputError("evaluation set is empty");

  const auto& classes = m.predictor.classes;
  const std::size_t C = classes.size();
  auto class_index = [&](int label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw InputError("label " + std::to_string(label) + " is not a model class");
    return static_cast<std::size_t>(it - classes.begin());
  };
  const std::vector<int> pred = m.predictor.classify(fd.X);
  std::vector<std::vector<std::size_t>> confusion(C, std::vector<std::size_t>(C, 0));
  for (std::size_t i = 0; i < fd.size(); ++i) ++confusion[class_index(fd.labels[i])][class_index(pred[i])];
  const double err = error_rate(pred, fd.labels);

  out << "n: " << fd.size() << "\n";
  out << "error: " << std::setprecision(6) << err << " (" << percent(err) << ")\n";
  out << "accuracy: " << 1.0 - err << "\n";
  out << "confusion (rows = true, columns = predicted):\n";
  for (std::size_t a = 0; a < C; ++a) {
    out << std::setw(4) << classes[a] << ":";
    for (std::size_t b = 0; b < C; ++b) out << " " << std::setw(5) << confusion[a][b];
    out << "\n";
  }

  if (!o.out.empty()) {
    std::ostringstream csv;
    csv << "true_label,count,correct";
    for (int c : classes) csv << ",pred_" << c;
    csv << "\n";
    std::size_t correct_all = 0;
    for (std::size_t a = 0; a < C; ++a) {
      const std::size_t count = std::accumulate(confusion[a].begin(), confusion[a].end(), std::size_t{0});
      correct_all += confusion[a][a];
      csv << classes[a] << "," << count << "," << confusion[a][a];
      for (std::size_t b = 0; b < C; ++b) csv << "," << confusion[a][b];
      csv << "\n";
    }
    csv << "all," << fd.size() << "," << correct_all;
    for (std::size_t b = 0; b < C; ++b) {
      std::size_t col = 0;
      for (std::size_t a = 0; a < C; ++a) col += confusion[a][b];
      csv << "," << col;
    }
    csv << "\n";
    write_text(o.out, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  ImageSource source;
  std::vector<std::string> variants{"basic", "rotation"};
  std::size_t n_train = 2000;
  std::size_t n_validation = 500;
  std::size_t n_test = 2000;
  std::vector<int> ks{1, 4};
  double B = 100.0;
  int max_iters = 5000;
  int lr_iters = 500;
  bool no_baseline = false;
  std::string preprocess = "deskew,center,normalize";
  std::uint64_t seed = 1;
  std::string out_md;
  std::string out_csv;
  std::string manifest;
};

struct BenchRow {
  std::string method;
  std::string variant;
  double test_error = 0.0;
  double validation_error = 0.0;
  double seconds = 0.0;
};

std::string method_name(int k) { return "Recursive Kernel (k = " + std::to_string(k) + ")"; }

int cmd_bench(BenchOptions o, const json& options, std::ostream& out) {
  const auto t_start = Clock::now();
  o.source.resolve();
  const auto steps = parse_steps(o.preprocess);
  if (steps.empty() || steps.back() != PreprocessStep::normalize) {
    throw UsageError("--preprocess must end with normalize");
  }
  for (int k : o.ks) {
    if (k < 0) throw UsageError("--k values must be nonnegative");
  }
  const ImageDataset pool = o.source.load();
  const std::size_t need = o.n_train + o.n_validation + o.n_test;
  if (need > pool.size()) {
    throw InputError("requested " + std::to_string(need) + " images but the pool has " +
                     std::to_string(pool.size()));
  }
  if (o.n_train == 0 || o.n_test == 0) throw UsageError("--train and --test must be positive");
  const auto perm = shuffled(pool.size(), o.seed);
  const std::vector<std::size_t> tr_rows(perm.begin(), perm.begin() + o.n_train);
  const std::vector<std::size_t> va_rows(perm.begin() + o.n_train, perm.begin() + o.n_train + o.n_validation);
  const std::vector<std::size_t> te_rows(perm.begin() + o.n_train + o.n_validation, perm.begin() + need);
  // Variants only need the selected images.
  const std::vector<std::size_t> used(perm.begin(), perm.begin() + need);
  const ImageDataset base = subset(pool, used);
  std::vector<std::size_t> tr_local(o.n_train), va_local(o.n_validation), te_local(o.n_test);
  std::iota(tr_local.begin(), tr_local.end(), std::size_t{0});
  std::iota(va_local.begin(), va_local.end(), o.n_train);
  std::iota(te_local.begin(), te_local.end(), o.n_train + o.n_validation);

  std::vector<BenchRow> rows;
  for (const auto& variant : o.variants) {
    if (variant != "basic") parse_variant(variant);
    const FeatureDataset fd = preprocess(apply_variant(base, variant, o.seed), steps);
    const FeatureDataset tr = select_rows(fd, tr_local);
    const FeatureDataset va = select_rows(fd, va_local);
    const FeatureDataset te = select_rows(fd, te_local);
    const int C = 10;
    for (int k : o.ks) {
      TrainConfig cfg;
      cfg.depth = k;
      cfg.B = o.B;
      cfg.max_iters = o.max_iters;
      const auto t0 = Clock::now();
      const OneVsAllPredictor p = train_multiclass(tr.X, tr.labels, C, cfg);
      BenchRow r{method_name(k), variant, error_rate(p.classify(te.X), te.labels),
                 va.size() ? error_rate(p.classify(va.X), va.labels) : 0.0, 0.0};
      r.seconds = seconds_since(t0);
      out << "  " << variant << " / " << r.method << ": " << percent(r.test_error) << " in "
          << std::setprecision(3) << r.seconds << " s\n" << std::flush;
      rows.push_back(r);
    }
    if (!o.no_baseline) {
      LogisticConfig lc;
      lc.max_iters = o.lr_iters;
      const auto t0 = Clock::now();
      const LogisticModel lm = train_logistic(tr.X, tr.labels, C, lc);
      BenchRow r{"Logistic Regression", variant, error_rate(lm.classify(te.X), te.labels),
                 va.size() ? error_rate(lm.classify(va.X), va.labels) : 0.0, 0.0};
      r.seconds = seconds_since(t0);
      out << "  " << variant << " / " << r.method << ": " << percent(r.test_error) << " in "
          << std::setprecision(3) << r.seconds << " s\n" << std::flush;
      rows.push_back(r);
    }
  }

  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::ostringstream md;
  md << "## Classification error rates (" << kDeskLabel << ")\n\n";
  md << "n_train = " << o.n_train << ", n_validation = " << o.n_validation << ", n_test = " << o.n_test
     << ", B = " << o.B << ", preprocessing = " << o.preprocess << ", seed = " << o.seed << "\n\n";
  md << "| Method | n_train |";
  for (const auto& v : o.variants) md << " " << v << " |";
  md << " runtime (s) |\n|---|---|";
  for (std::size_t i = 0; i < o.variants.size(); ++i) md << "---|";
  md << "---|\n";
  for (const auto& m : methods) {
    md << "| " << m << " | " << o.n_train << " |";
    double total = 0.0;
    for (const auto& v : o.variants) {
      for (const auto& r : rows) {
        if (r.method == m && r.variant == v) {
          md << " " << percent(r.test_error) << " |";
          total += r.seconds;
        }
      }
    }
    md << " " << std::fixed << std::setprecision(1) << total << std::defaultfloat << " |\n";
  }

  std::ostringstream csv;
  csv << "method,variant,n_train,n_validation,n_test,test_error,validation_error,runtime_s,scale\n";
  for (const auto& r : rows) {
    csv << '"' << r.method << "\"," << r.variant << "," << o.n_train << "," << o.n_validation << ","
        << o.n_test << "," << std::setprecision(6) << r.test_error << "," << r.validation_error << ","
        << std::setprecision(4) << r.seconds << ",desk\n";
  }

  out << "\n" << md.str();
  if (!o.out_md.empty()) write_text(o.out_md, md.str());
  if (!o.out_csv.empty()) write_text(o.out_csv, csv.str());
  if (!o.manifest.empty()) {
    json manifest;
    manifest["command"] = "bench";
    manifest["config"] = options;
    manifest["seed"] = o.seed;
    manifest["version"] = kVersion;
    manifest["inputs"] = json::array({input_record(o.source.images), input_record(o.source.labels)});
    json timings = json::object();
    for (const auto& r : rows) timings[r.variant + " / " + r.method] = r.seconds;
    timings["total"] = seconds_since(t_start);
    manifest["timings_seconds"] = timings;
    write_json(manifest, o.manifest);
  }
  return kOk;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::usage: return kUsage;
    case ErrorCategory::input:
    case ErrorCategory::format: return kData;
    case ErrorCategory::numeric: return kNumeric;
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recursive kernel learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Read options from a key = value file (flags override it)");

  BoundOptions bo;
  auto* bound = app.add_subcommand("bound", "Capacity bound F(k, L) for an activation");
  bound->add_option("--activation", bo.activation, "quadratic, shifted_erf or smoothed_hinge")->capture_default_str();
  bound->add_option("--k", bo.k, "Number of hidden layers")->capture_default_str();
  bound->add_option("--L", bo.L, "Weight-norm budget")->capture_default_str();
  bound->add_option("--tol", bo.tol, "Relative series tolerance")->capture_default_str();
  bound->add_option("--max-terms", bo.max_terms, "Series term cap")->capture_default_str();

  GramOptions go;
  auto* gramc = app.add_subcommand("gram", "Export the Gram matrix of a feature file");
  gramc->add_option("--data", go.data, "Feature file (.csv or .rkfd)")->required();
  gramc->add_option("--k", go.k, "Kernel depth")->capture_default_str();
  gramc->add_option("--out", go.out, "Output .rkgm file")->required();

  VariantsOptions vo;
  auto* variants = app.add_subcommand("variants", "Write a rotated or background variant as IDX");
  vo.source.add_to(variants);
  variants->add_option("--kind", vo.kind, "rotation, background or background_rotation")->required();
  variants->add_option("--seed", vo.seed, "Random seed")->capture_default_str();
  variants->add_option("--limit", vo.limit, "Use only the first N images (0 = all)")->capture_default_str();
  variants->add_option("--out-images", vo.out_images, "Output IDX image file")->required();
  variants->add_option("--out-labels", vo.out_labels, "Output IDX label file")->required();

  HardnessOptions ho;
  auto* hard = app.add_subcommand("hardness-demo", "Build the halfspace-intersection net and check its margins");
  hard->add_option("--d", ho.d, "Input dimension")->capture_default_str();
  hard->add_option("--T", ho.T, "Number of halfspaces")->capture_default_str();
  hard->add_option("--seed", ho.seed, "Random seed")->capture_default_str();
  hard->add_option("--budget", ho.budget, "Bound on |b| + ||w||_1 (default 2(d + 1))");
  hard->add_option("--activation", ho.activation, "shifted_erf or smoothed_hinge")->capture_default_str();

  TrainOptions to;
  auto* trainc = app.add_subcommand("train", "Train a one-vs-all kernel classifier");
  trainc->add_option("--data", to.data, "Preprocessed feature file (.csv or .rkfd)");
  to.source.add_to(trainc);
  trainc->add_option("--preprocess", to.preprocess, "Steps applied to --images input")->capture_default_str();
  trainc->add_option("--variant", to.variant, "Variant applied to --images input");
  trainc->add_option("--test", to.test, "Feature file for a test error in the metrics");
  trainc->add_option("--k", to.k, "Kernel depth")->capture_default_str();
  trainc->add_option("--B", to.B, "RKHS norm bound")->capture_default_str();
  trainc->add_option("--loss", to.loss, "hinge, logistic or squared")->capture_default_str();
  trainc->add_option("--classes", to.classes, "Number of classes (default: max label + 1)");
  trainc->add_option("--max-iters", to.max_iters, "Iteration cap")->capture_default_str();
  trainc->add_option("--eta0", to.eta0, "Initial step size (default B / rho)");
  trainc->add_option("--tol", to.tol, "Relative improvement tolerance")->capture_default_str();
  trainc->add_option("--window", to.window, "Improvement window in iterations")->capture_default_str();
  trainc->add_option("--seed", to.seed, "Seed for --subsample and --variant")->capture_default_str();
  trainc->add_option("--subsample", to.subsample, "Train on N seeded random rows (0 = all)")->capture_default_str();
  trainc->add_option("--out-model", to.out_model, "Model JSON path");
  trainc->add_option("--metrics", to.metrics, "Metrics CSV path (default <model>.metrics.csv)");
  trainc->add_option("--manifest", to.manifest, "Manifest JSON path (default <model>.manifest.json)");
  trainc->add_option("--from-manifest", to.from_manifest,
                     "Repeat the run recorded in a manifest; --out-model, --metrics and --manifest override it");

  EvalOptions eo;
  auto* evalc = app.add_subcommand("eval", "Evaluate a model");
  evalc->add_option("--model", eo.model, "Model JSON")->required();
  evalc->add_option("--data", eo.data, "Feature file with the model's preprocessing");
  eo.source.add_to(evalc);
  evalc->add_option("--variant", eo.variant, "Variant applied to --images input");
  evalc->add_option("--seed", eo.seed, "Seed for --variant")->capture_default_str();
  evalc->add_option("--out", eo.out, "Per-class report CSV");

  BenchOptions beo;
  auto* bench = app.add_subcommand("bench", "Desk-scale benchmark table");
  beo.source.add_to(bench);
  bench->add_option("--variant", beo.variants, "basic, rotation, background, background_rotation")
      ->capture_default_str();
  bench->add_option("--train", beo.n_train, "Training images")->capture_default_str();
  bench->add_option("--validation", beo.n_validation, "Validation images")->capture_default_str();
  bench->add_option("--test", beo.n_test, "Test images")->capture_default_str();
  bench->add_option("--k", beo.ks, "Kernel depths")->capture_default_str();
  bench->add_option("--B", beo.B, "RKHS norm bound")->capture_default_str();
  bench->add_option("--max-iters", beo.max_iters, "Solver iteration cap")->capture_default_str();
  bench->add_option("--lr-iters", beo.lr_iters, "Logistic regression iterations")->capture_default_str();
  bench->add_flag("--no-baseline", beo.no_baseline, "Skip logistic regression");
  bench->add_option("--preprocess", beo.preprocess, "Preprocessing steps")->capture_default_str();
  bench->add_option("--seed", beo.seed, "Seed for the split and the variants")->capture_default_str();
  bench->add_option("--out-md", beo.out_md, "Markdown table path");
  bench->add_option("--out-csv", beo.out_csv, "CSV table path");
  bench->add_option("--manifest", beo.manifest, "Manifest JSON path");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (bound->parsed()) return cmd_bound(bo, out);
    if (gramc->parsed()) return cmd_gram(go, out);
    if (variants->parsed()) return cmd_variants(vo, out);
    if (hard->parsed()) return cmd_hardness(ho, out);
    if (trainc->parsed()) {
      if (!to.from_manifest.empty()) {
        const json m = read_json(to.from_manifest);
        if (m.value("command", "") != "train" || !m.contains("argv")) {
          throw FormatError(to.from_manifest + " is not a train manifest");
        }
        auto replay = m.at("argv").get<std::vector<std::string>>();
        auto override_opt = [&](const std::string& flag, const std::string& value) {
          if (value.empty()) return;
          const auto it = std::find(replay.begin(), replay.end(), flag);
          if (it != replay.end() && it + 1 != replay.end()) *(it + 1) = value;
          else {
            replay.push_back(flag);
            replay.push_back(value);
          }
        };
        override_opt("--out-model", to.out_model);
        override_opt("--metrics", to.metrics);
        override_opt("--manifest", to.manifest);
        // Derived defaults must follow an overridden model path.
        if (!to.out_model.empty()) {
          if (to.metrics.empty()) override_opt("--metrics", to.out_model + ".metrics.csv");
          if (to.manifest.empty()) override_opt("--manifest", to.out_model + ".manifest.json");
        }
        return run(replay, out, err);
      }
      to.from_images = !to.source.images.empty() || !to.source.labels.empty();
      return cmd_train(to, options_json(trainc), out);
    }
    if (evalc->parsed()) {
      eo.from_images = !eo.source.images.empty() || !eo.source.labels.empty();
      return cmd_eval(eo, out);
    }
    if (bench->parsed()) return cmd_bench(beo, options_json(bench), out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}

}  // namespace rkm::cli
