#include "auq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>

#include "auq/csv.hpp"
#include "auq/datagen.hpp"
#include "auq/dataset.hpp"
#include "auq/encoding.hpp"
#include "auq/functions.hpp"
#include "auq/mbo.hpp"
#include "auq/metrics.hpp"
#include "auq/model.hpp"
#include "auq/smo.hpp"
#include "auq/version.hpp"

namespace auq {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path.empty() ? what : path + ": " + what);
}

// Read-only accessor over one JSON object that prefixes every error with the
// dotted field path and remembers which keys were touched, so a final done()
// can reject typos.
class View {
 public:
  View(const Json& node, std::string path)
      : node_(&node), path_(std::move(path)) {
    if (!node_->is_object()) fail(path_, "expected a JSON object");
  }

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return node_->contains(key); }
  void mark(const std::string& key) const { used_.insert(key); }

  const Json& raw(const std::string& key) const {
    mark(key);
    if (!has(key)) fail(key_path(key), "missing required field");
    return (*node_)[key];
  }

  View object(const std::string& key) const {
    const Json& child = raw(key);
    if (!child.is_object()) fail(key_path(key), "expected an object");
    return View(child, key_path(key));
  }
  View object_or_default(const std::string& key) const {
    mark(key);
    static const Json empty = Json::object();
    if (!has(key)) return View(empty, key_path(key));
    return object(key);
  }

  std::string string_req(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_string()) fail(key_path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, std::string def) const {
    mark(key);
    if (!has(key)) return def;
    return string_req(key);
  }

  bool boolean_or(const std::string& key, bool def) const {
    mark(key);
    if (!has(key)) return def;
    const Json& v = (*node_)[key];
    if (!v.is_boolean()) fail(key_path(key), "expected true or false");
    return v.get<bool>();
  }

  int int_req(const std::string& key, int min) const {
    const Json& v = raw(key);
    return to_int(v, key_path(key), min);
  }
  int int_or(const std::string& key, int def, int min) const {
    mark(key);
    if (!has(key)) return def;
    return to_int((*node_)[key], key_path(key), min);
  }

  double number_or(const std::string& key, double def, double min,
                   bool exclusive) const {
    mark(key);
    if (!has(key)) return def;
    const Json& v = (*node_)[key];
    if (!v.is_number()) fail(key_path(key), "expected a number");
    const double x = v.get<double>();
    if (exclusive ? !(x > min) : !(x >= min)) {
      std::ostringstream os;
      os << "must be " << (exclusive ? "> " : ">= ") << min;
      fail(key_path(key), os.str());
    }
    return x;
  }

  std::vector<int> int_list_req(const std::string& key, int min) const {
    const Json& v = raw(key);
    return to_int_list(v, key_path(key), min);
  }
  std::vector<int> int_list_or(const std::string& key, std::vector<int> def,
                               int min) const {
    mark(key);
    if (!has(key)) return def;
    return to_int_list((*node_)[key], key_path(key), min);
  }

  std::vector<double> number_list_req(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key_path(key), "expected a nonempty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(key_path(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  // rejects keys no parser asked about
  void done() const {
    for (const auto& item : node_->items()) {
      if (!used_.count(item.key())) fail(key_path(item.key()), "unknown field");
    }
  }

 private:
  static int to_int(const Json& v, const std::string& path, int min) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < min) fail(path, "must be >= " + std::to_string(min));
    if (x > std::numeric_limits<int>::max()) fail(path, "value too large");
    return static_cast<int>(x);
  }
  static std::vector<int> to_int_list(const Json& v, const std::string& path,
                                      int min) {
    if (!v.is_array() || v.empty()) fail(path, "expected a nonempty array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(to_int(v[i], path + "[" + std::to_string(i) + "]", min));
    }
    return out;
  }

  const Json* node_;
  std::string path_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------- shared
// sub-schemas

struct DataSpec {
  bool from_csv = false;
  fs::path csv;
  bool target_by_name = false;
  std::string target_name;
  int target_index = 0;
  Benchmark fn;
  int samples = 500;
  double noise = 0.05;  // fraction of the target's sd
};

DataSpec parse_data(const View& v) {
  DataSpec d;
  if (v.has("csv")) {
    d.from_csv = true;
    d.csv = v.string_req("csv");
    if (!fs::exists(d.csv)) {
      fail(v.key_path("csv"), "file not found: '" + d.csv.string() + "'");
    }
    v.mark("target");
    if (!v.has("target")) fail(v.key_path("target"), "missing required field");
    const Json& t = v.raw("target");
    if (t.is_string()) {
      d.target_by_name = true;
      d.target_name = t.get<std::string>();
    } else if (t.is_number_integer()) {
      d.target_index = t.get<int>();
      if (d.target_index < 0) fail(v.key_path("target"), "must be >= 0");
    } else {
      fail(v.key_path("target"), "expected a column name or index");
    }
  } else {
    const std::string name = v.string_req("function");
    const int dim = v.int_or("dim", 0, 1);
    try {
      d.fn = make_benchmark(benchmark_from_name(name).id, dim);
    } catch (const std::exception& e) {
      fail(v.key_path(dim > 0 ? "dim" : "function"), e.what());
    }
    d.samples = v.int_or("samples", 500, 10);
    d.noise = v.number_or("noise", 0.05, 0.0, false);
  }
  v.done();
  return d;
}

Dataset make_data(const DataSpec& spec, std::uint64_t seed) {
  if (spec.from_csv) {
    return spec.target_by_name ? load_csv(spec.csv, spec.target_name)
                               : load_csv(spec.csv, spec.target_index);
  }
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd xs =
      sample_uniform_box(spec.fn.lower, spec.fn.upper, spec.samples, rng);
  Eigen::VectorXd y = eval_benchmark_rows(spec.fn, xs);
  if (spec.noise > 0.0) {
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() /
                                static_cast<double>(y.size() - 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      y[i] += spec.noise * sd * gauss(rng);
    }
  }
  return Dataset::regression(std::move(xs), std::move(y));
}

MlpConfig parse_mlp(const View& v, MlpConfig def) {
  MlpConfig cfg = def;
  const std::vector<int> hidden =
      v.int_list_or("hidden", {def.hidden.begin(), def.hidden.end()}, 1);
  cfg.hidden.assign(hidden.begin(), hidden.end());
  cfg.epochs = v.int_or("epochs", def.epochs, 1);
  cfg.learning_rate = v.number_or("learning_rate", def.learning_rate, 0.0, true);
  cfg.batch_size = v.int_or("batch_size", def.batch_size, 1);
  cfg.standardize_targets =
      v.boolean_or("standardize_targets", def.standardize_targets);
  v.done();
  return cfg;
}

ForestConfig parse_forest(const View& v, ForestConfig def) {
  ForestConfig cfg = def;
  cfg.n_trees = v.int_or("trees", def.n_trees, 1);
  cfg.max_depth = v.int_or("max_depth", def.max_depth, -1);
  cfg.min_samples_split = v.int_or("min_samples_split", def.min_samples_split, 2);
  cfg.anchor_replication =
      v.int_or("anchor_replication", def.anchor_replication, 1);
  v.done();
  return cfg;
}

struct MoonsSpec {
  int samples = 500;
  double noise = 0.1;
};

MoonsSpec parse_moons(const View& v) {
  MoonsSpec m;
  m.samples = v.int_or("samples", 500, 4);
  m.noise = v.number_or("noise", 0.1, 0.0, false);
  v.done();
  return m;
}

CorruptionKind parse_corruption_kind(const View& v, const std::string& key) {
  const std::string name = v.string_or(key, "gaussian-noise");
  if (name == "gaussian-noise") return CorruptionKind::GaussianNoise;
  if (name == "uniform-noise") return CorruptionKind::UniformNoise;
  if (name == "feature-shift") return CorruptionKind::FeatureShift;
  fail(v.key_path(key), "unknown corruption kind '" + name + "'");
}

// defaults shared by the classification studies
MlpConfig classifier_mlp_defaults() {
  MlpConfig cfg;
  cfg.hidden = {64, 64};
  cfg.epochs = 200;
  return cfg;
}

// ---------------------------------------------------------------- plans

struct RegressionPlan {
  DataSpec data;
  int n_train = 200;
  ForestConfig forest;
  int ensemble_members = 3;
};

RegressionPlan parse_regression(const View& root) {
  const View v = root.object("regression-calibration");
  RegressionPlan p;
  p.data = parse_data(v.object("data"));
  p.n_train = v.int_or("n_train", 200, 2);
  p.forest = parse_forest(v.object_or_default("forest"), ForestConfig{});
  p.ensemble_members = v.int_or("ensemble_members", 3, 2);
  v.done();
  return p;
}

struct AblationPlan {
  DataSpec data;
  int n_train = 200;
  ForestConfig forest;
  std::vector<EncodingScheme> schemes;
};

AblationPlan parse_ablation(const View& root) {
  const View v = root.object("encoding-ablation");
  AblationPlan p;
  p.data = parse_data(v.object("data"));
  p.n_train = v.int_or("n_train", 200, 2);
  p.forest = parse_forest(v.object_or_default("forest"), ForestConfig{});
  v.mark("schemes");
  if (v.has("schemes")) {
    const Json& list = v.raw("schemes");
    if (!list.is_array() || list.empty()) {
      fail(v.key_path("schemes"), "expected a nonempty array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where =
          v.key_path("schemes") + "[" + std::to_string(i) + "]";
      if (!list[i].is_string()) fail(where, "expected a scheme name");
      try {
        p.schemes.push_back(scheme_from_name(list[i].get<std::string>()));
      } catch (const std::exception& e) {
        fail(where, e.what());
      }
    }
  } else {
    p.schemes = {EncodingScheme::Identity, EncodingScheme::SingleAnchor,
                 EncodingScheme::DoubleAnchor};
  }
  v.done();
  return p;
}

struct SmoPlan {
  SmoConfig base;  // seed filled per run
};

SmoPlan parse_smo(const View& root) {
  const View v = root.object("smo");
  const View obj = v.object("objective");
  const std::string name = obj.string_req("function");
  const int dim = obj.int_or("dim", 0, 1);
  const bool negated = obj.boolean_or("negated", false);
  SmoPlan p;
  try {
    p.base.objective = make_benchmark(benchmark_from_name(name).id, dim, negated);
  } catch (const std::exception& e) {
    fail(obj.key_path(dim > 0 ? "dim" : "function"), e.what());
  }
  obj.done();
  p.base.n_init = v.int_or("n_init", 6, 2);
  p.base.n_iterations = v.int_or("iterations", 50, 0);
  p.base.pool_size = v.int_or("pool_size", 2048, 1);
  p.base.anchors_k = v.int_or("anchors_k", 10, 1);
  p.base.refit_epochs = v.int_or("refit_epochs", 200, 1);
  p.base.learning_rate = v.number_or("learning_rate", 1e-3, 0.0, true);
  p.base.batch_size = v.int_or("batch_size", 16, 1);
  p.base.warm_start = v.boolean_or("warm_start", false);
  p.base.warm_start_after = v.int_or("warm_start_after", 0, 0);
  v.done();
  return p;
}

struct MboPlan {
  MboTask task;
  int train_samples = 1000;
  std::vector<double> targets;
  MlpConfig forward;
  MlpConfig inverse;
  LatentSearchConfig search;
};

MboPlan parse_mbo(const View& root) {
  const View v = root.object("mbo");
  MboPlan p;
  p.task.input_dim = v.int_or("input_dim", 16, 2);
  p.task.latent_dim = v.int_or("latent_dim", 8, 1);
  p.task.cap_fraction = v.number_or("cap_fraction", 0.6, 0.0, true);
  if (p.task.cap_fraction >= 1.0) fail(v.key_path("cap_fraction"), "must be < 1");
  p.train_samples = v.int_or("train_samples", 1000, 10);
  p.targets = v.number_list_req("targets");
  for (std::size_t i = 0; i < p.targets.size(); ++i) {
    if (!(p.targets[i] > 0.0) ||
        !(p.targets[i] < static_cast<double>(p.task.input_dim))) {
      fail(v.key_path("targets") + "[" + std::to_string(i) + "]",
           "must lie strictly between 0 and input_dim");
    }
  }
  MlpConfig fwd_def;
  fwd_def.hidden = {64, 64};
  fwd_def.epochs = 300;
  p.forward = parse_mlp(v.object_or_default("forward"), fwd_def);
  MlpConfig inv_def;
  inv_def.hidden = {16, 16};
  inv_def.epochs = 30;
  p.inverse = parse_mlp(v.object_or_default("inverse"), inv_def);
  const View s = v.object_or_default("search");
  p.search.restarts = s.int_or("restarts", 50, 1);
  p.search.iterations = s.int_or("iterations", 1000, 1);
  p.search.step = s.number_or("step", 0.02, 0.0, true);
  p.search.anchors_k = s.int_or("anchors_k", 10, 1);
  s.done();
  v.done();
  return p;
}

struct OodPlan {
  MoonsSpec moons;
  int n_train = 250;
  MlpConfig mlp;
  int anchors_k = 10;
  double inflate = 1.5;
  int ood_samples = 0;  // 0 = match the test split
  bool compare_identity = true;
};

OodPlan parse_ood(const View& root) {
  const View v = root.object_or_default("ood");
  OodPlan p;
  p.moons = parse_moons(v.object_or_default("moons"));
  p.n_train = v.int_or("n_train", 250, 2);
  if (p.n_train >= p.moons.samples) {
    fail(v.key_path("n_train"), "must leave at least one test row");
  }
  p.mlp = parse_mlp(v.object_or_default("mlp"), classifier_mlp_defaults());
  p.anchors_k = v.int_or("anchors_k", 10, 2);
  p.inflate = v.number_or("inflate", 1.5, 0.0, true);
  p.ood_samples = v.int_or("ood_samples", 0, 1);
  p.compare_identity = v.boolean_or("compare_identity", true);
  v.done();
  return p;
}

struct ShiftPlan {
  MoonsSpec moons;
  int n_train = 250;
  MlpConfig mlp;
  int anchors_k = 10;
  CorruptionKind kind = CorruptionKind::GaussianNoise;
  std::vector<int> intensities;
  int bins = 15;
};

ShiftPlan parse_shift(const View& root) {
  const View v = root.object_or_default("calibration-shift");
  ShiftPlan p;
  p.moons = parse_moons(v.object_or_default("moons"));
  p.n_train = v.int_or("n_train", 250, 2);
  if (p.n_train >= p.moons.samples) {
    fail(v.key_path("n_train"), "must leave at least one test row");
  }
  p.mlp = parse_mlp(v.object_or_default("mlp"), classifier_mlp_defaults());
  p.anchors_k = v.int_or("anchors_k", 10, 2);
  const View c = v.object_or_default("corruption");
  p.kind = parse_corruption_kind(c, "kind");
  p.intensities = c.int_list_or("intensities", {1, 2, 3, 4, 5}, 1);
  std::set<int> seen;
  for (std::size_t i = 0; i < p.intensities.size(); ++i) {
    const std::string where =
        c.key_path("intensities") + "[" + std::to_string(i) + "]";
    if (p.intensities[i] > 5) fail(where, "must be <= 5");
    if (!seen.insert(p.intensities[i]).second) {
      fail(where, "duplicate intensity " + std::to_string(p.intensities[i]));
    }
  }
  c.done();
  p.bins = v.int_or("bins", 15, 1);
  v.done();
  return p;
}

struct AnchorSweepPlan {
  MoonsSpec moons;
  int n_train = 250;
  MlpConfig mlp;
  std::vector<int> k_sweep;
  CorruptionKind kind = CorruptionKind::GaussianNoise;
  int intensity = 3;
};

AnchorSweepPlan parse_anchor_sweep(const View& root,
                                   std::vector<std::string>* warnings) {
  const View v = root.object_or_default("anchor-ablation");
  AnchorSweepPlan p;
  p.moons = parse_moons(v.object_or_default("moons"));
  p.n_train = v.int_or("n_train", 250, 2);
  if (p.n_train >= p.moons.samples) {
    fail(v.key_path("n_train"), "must leave at least one test row");
  }
  p.mlp = parse_mlp(v.object_or_default("mlp"), classifier_mlp_defaults());
  const std::vector<int> sweep =
      v.int_list_or("k_sweep", {2, 5, 10, 25, 50}, 1);
  std::set<int> seen;
  for (int k : sweep) {
    if (seen.insert(k).second) {
      p.k_sweep.push_back(k);
    } else if (warnings) {
      warnings->push_back(v.key_path("k_sweep") + ": duplicate K=" +
                          std::to_string(k) + " ignored");
    }
  }
  const View c = v.object_or_default("corruption");
  p.kind = parse_corruption_kind(c, "kind");
  p.intensity = c.int_or("intensity", 3, 1);
  if (p.intensity > 5) fail(c.key_path("intensity"), "must be <= 5");
  c.done();
  v.done();
  return p;
}

// ---------------------------------------------------------------- shared
// prediction helpers

void summaries_to_mean_unc(const std::vector<PredictionSummary>& summaries,
                           Eigen::VectorXd& mean, Eigen::VectorXd& unc) {
  const Eigen::Index n = static_cast<Eigen::Index>(summaries.size());
  mean.resize(n);
  unc.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mean[i] = summaries[i].mean[0];
    unc[i] = summaries[i].total_variance;
  }
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    probs.row(i) = softmax(logits.row(i).transpose()).transpose();
  }
  return probs;
}

double classification_accuracy(const Eigen::MatrixXd& probs,
                               const std::vector<int>& labels) {
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    hits += (static_cast<int>(arg) == labels[static_cast<std::size_t>(i)]);
  }
  return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

// entropy of the variance-tempered softmax, one score per row
Eigen::VectorXd tempered_entropy_scores(
    const std::vector<PredictionSummary>& summaries) {
  Eigen::VectorXd scores(static_cast<Eigen::Index>(summaries.size()));
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const Eigen::VectorXd scaled =
        scale_logits_scalar(summaries[i].mean, summaries[i].total_variance);
    scores[static_cast<Eigen::Index>(i)] = predictive_entropy(softmax(scaled));
  }
  return scores;
}

// ---------------------------------------------------------------- runners

struct SeedOutput {
  Json metrics;
  std::vector<Eigen::VectorXd> rows;
};

Eigen::VectorXd make_row(std::initializer_list<double> values) {
  Eigen::VectorXd row(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) row[i++] = v;
  return row;
}

Json regression_block(const Eigen::VectorXd& truth,
                      const Eigen::VectorXd& predicted) {
  return Json{{"mae", mean_absolute_error(truth, predicted)},
              {"r2", r2_score(truth, predicted)}};
}

SeedOutput run_regression_seed(const RegressionPlan& plan, std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_split = srng(), s_prior = srng(),
                      s_model = srng(), s_plain = srng(), s_ens = srng();
  const Dataset ds = make_data(plan.data, s_data);
  auto [train, test] = split(ds, plan.n_train, s_split);
  const Eigen::VectorXd truth = test.targets.col(0);

  const AnchorPrior prior = AnchorPrior::train_distribution(train.inputs, s_prior);
  ForestConfig fc = plan.forest;
  fc.seed = s_model;
  const DeltaModel model =
      train_anchored_forest(train, fc, EncodingScheme::SingleAnchor, prior);
  Eigen::VectorXd mean, unc;
  summaries_to_mean_unc(
      predict_batch_with_anchors(model, test.inputs, model.training_anchors),
      mean, unc);
  Json anchored = regression_block(truth, mean);
  anchored["spearman"] =
      spearman_correlation(unc, (truth - mean).cwiseAbs());

  ForestConfig pc = plan.forest;
  pc.seed = s_plain;
  const Eigen::VectorXd plain_pred =
      train_plain_forest(train, pc).predict_rows(test.inputs).col(0);

  ForestConfig ec = plan.forest;
  ec.seed = s_ens;
  const EnsembleModel ensemble =
      train_forest_ensemble(train, ec, plan.ensemble_members);
  Eigen::VectorXd ens_mean, ens_unc;
  summaries_to_mean_unc(ensemble.predict_summaries(test.inputs), ens_mean,
                        ens_unc);
  Json ens = regression_block(truth, ens_mean);
  ens["spearman"] =
      spearman_correlation(ens_unc, (truth - ens_mean).cwiseAbs());

  SeedOutput out;
  out.metrics = Json{{"anchored", anchored},
                     {"plain", regression_block(truth, plain_pred)},
                     {"ensemble", ens}};
  out.rows.push_back(make_row(
      {static_cast<double>(seed), anchored["mae"].get<double>(),
       anchored["r2"].get<double>(), anchored["spearman"].get<double>(),
       out.metrics["plain"]["mae"].get<double>(),
       out.metrics["plain"]["r2"].get<double>(), ens["mae"].get<double>(),
       ens["r2"].get<double>(), ens["spearman"].get<double>()}));
  return out;
}

SeedOutput run_ablation_seed(const AblationPlan& plan, std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_split = srng();
  const Dataset ds = make_data(plan.data, s_data);
  auto [train, test] = split(ds, plan.n_train, s_split);
  const Eigen::VectorXd truth = test.targets.col(0);

  SeedOutput out;
  out.metrics["schemes"] = Json::array();
  for (EncodingScheme scheme : plan.schemes) {
    const std::uint64_t s_prior = srng(), s_model = srng();
    const AnchorPrior prior =
        AnchorPrior::train_distribution(train.inputs, s_prior);
    ForestConfig fc = plan.forest;
    fc.seed = s_model;
    const DeltaModel model = train_anchored_forest(train, fc, scheme, prior);
    Eigen::VectorXd mean, unc;
    summaries_to_mean_unc(
        predict_batch_with_anchors(model, test.inputs, model.training_anchors),
        mean, unc);
    const double r2 = r2_score(truth, mean);
    const double mae = mean_absolute_error(truth, mean);
    const double rho = spearman_correlation(unc, (truth - mean).cwiseAbs());
    out.metrics["schemes"].push_back(Json{{"name", scheme_name(scheme)},
                                          {"r2", r2},
                                          {"mae", mae},
                                          {"spearman", rho}});
    out.rows.push_back(make_row({static_cast<double>(seed),
                                 static_cast<double>(static_cast<int>(scheme)),
                                 r2, rho, mae}));
  }
  return out;
}

SeedOutput run_smo_seed(const SmoPlan& plan, const fs::path& out_dir,
                        std::uint64_t seed) {
  SmoConfig cfg = plan.base;
  cfg.seed = seed;
  const SmoTrace trace = run_smo(cfg);
  trace.save_csv(out_dir / ("trace_seed" + std::to_string(seed) + ".csv"));
  const double init_best =
      trace.records[static_cast<std::size_t>(cfg.n_init - 1)].best;
  SeedOutput out;
  out.metrics = Json{{"best", trace.best()},
                     {"init_best", init_best},
                     {"evaluations", static_cast<double>(trace.records.size())}};
  out.rows.push_back(make_row({static_cast<double>(seed), trace.best(),
                               init_best,
                               static_cast<double>(trace.records.size())}));
  return out;
}

SeedOutput run_mbo_seed(const MboPlan& plan, std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_prior = srng(), s_fwd = srng(),
                      s_inv = srng();
  const Dataset data = plan.task.sample_training(plan.train_samples, s_data);
  const AnchorPrior prior =
      AnchorPrior::train_distribution(data.inputs, s_prior);
  MlpConfig fwd_cfg = plan.forward;
  fwd_cfg.seed = s_fwd;
  const DeltaModel fwd =
      train_anchored_mlp(data, fwd_cfg, EncodingScheme::SingleAnchor, prior);
  MlpConfig inv_cfg = plan.inverse;
  inv_cfg.seed = s_inv;
  const InverseModel inv = train_inverse(data, plan.task.latent_dim, inv_cfg);

  SeedOutput out;
  out.metrics["targets"] = Json::array();
  for (double y_star : plan.targets) {
    LatentSearchConfig sc = plan.search;
    sc.seed = srng();
    const MboOutcome outcome = optimize_latent(fwd, inv, y_star, sc);
    const double w_ach = plan.task.thickness(outcome.weighted.x);
    const double v_ach = plan.task.thickness(outcome.vanilla.x);
    out.metrics["targets"].push_back(
        Json{{"y_star", y_star},
             {"weighted", Json{{"achieved", w_ach},
                               {"abs_error", std::abs(w_ach - y_star)},
                               {"mu", outcome.weighted.mu},
                               {"b", outcome.weighted.b},
                               {"objective", outcome.weighted.objective}}},
             {"vanilla", Json{{"achieved", v_ach},
                              {"abs_error", std::abs(v_ach - y_star)},
                              {"mu", outcome.vanilla.mu}}}});
    out.rows.push_back(make_row({static_cast<double>(seed), y_star, w_ach,
                                 std::abs(w_ach - y_star), v_ach,
                                 std::abs(v_ach - y_star)}));
  }
  return out;
}

SeedOutput run_ood_seed(const OodPlan& plan, std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_split = srng(), s_ood = srng();
  const Dataset ds = make_two_moons(plan.moons.samples, plan.moons.noise, s_data);
  auto [train, test] = split(ds, plan.n_train, s_split);

  const Eigen::VectorXd lo = ds.inputs.colwise().minCoeff();
  const Eigen::VectorXd hi = ds.inputs.colwise().maxCoeff();
  const Eigen::VectorXd center = 0.5 * (lo + hi);
  const Eigen::VectorXd half = 0.5 * plan.inflate * (hi - lo);
  const int n_ood = plan.ood_samples > 0 ? plan.ood_samples
                                         : static_cast<int>(test.inputs.rows());
  std::mt19937_64 orng(s_ood);
  const Eigen::MatrixXd ood_x =
      sample_uniform_box(center - half, center + half, n_ood, orng);

  auto score_scheme = [&](EncodingScheme scheme) {
    const std::uint64_t s_prior = srng(), s_model = srng(), s_anchors = srng();
    const AnchorPrior prior =
        AnchorPrior::train_distribution(train.inputs, s_prior);
    MlpConfig mc = plan.mlp;
    mc.seed = s_model;
    const DeltaModel model = train_anchored_mlp(train, mc, scheme, prior);
    std::mt19937_64 arng(s_anchors);
    const Eigen::MatrixXd block =
        sample_anchor_block(prior, plan.anchors_k, scheme, arng);
    const auto id_sum = predict_batch_with_anchors(model, test.inputs, block);
    const auto ood_sum = predict_batch_with_anchors(model, ood_x, block);
    Eigen::MatrixXd mean_logits(test.inputs.rows(), model.output_dim);
    for (std::size_t i = 0; i < id_sum.size(); ++i) {
      mean_logits.row(static_cast<Eigen::Index>(i)) = id_sum[i].mean.transpose();
    }
    const double acc =
        classification_accuracy(softmax_rows(mean_logits), test.labels);
    const double roc = auroc(tempered_entropy_scores(id_sum),
                             tempered_entropy_scores(ood_sum));
    return std::pair<double, double>(roc, acc);
  };

  const auto [roc, acc] = score_scheme(EncodingScheme::SingleAnchor);
  SeedOutput out;
  out.metrics = Json{{"auroc", roc}, {"test_accuracy", acc}};
  if (plan.compare_identity) {
    const auto [roc_id, acc_id] = score_scheme(EncodingScheme::Identity);
    out.metrics["identity_auroc"] = roc_id;
    out.metrics["identity_test_accuracy"] = acc_id;
    out.rows.push_back(make_row({static_cast<double>(seed), roc, roc_id}));
  } else {
    out.rows.push_back(make_row({static_cast<double>(seed), roc}));
  }
  return out;
}

Json calibration_block(const Eigen::MatrixXd& probs,
                       const std::vector<int>& labels, int bins) {
  const CalibrationReport rep = calibration_report(probs, labels, bins);
  return Json{{"ece", rep.ece},
              {"nll", rep.nll},
              {"brier", rep.brier},
              {"accuracy", rep.accuracy}};
}

SeedOutput run_shift_seed(const ShiftPlan& plan, std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_split = srng(), s_prior = srng(),
                      s_model = srng(), s_plain = srng(), s_anchors = srng();
  const Dataset ds = make_two_moons(plan.moons.samples, plan.moons.noise, s_data);
  auto [train, test] = split(ds, plan.n_train, s_split);

  const AnchorPrior prior =
      AnchorPrior::train_distribution(train.inputs, s_prior);
  MlpConfig mc = plan.mlp;
  mc.seed = s_model;
  const DeltaModel model =
      train_anchored_mlp(train, mc, EncodingScheme::SingleAnchor, prior);
  MlpConfig pc = plan.mlp;
  pc.seed = s_plain;
  const PlainModel plain = train_plain_mlp(train, pc);
  std::mt19937_64 arng(s_anchors);
  const Eigen::MatrixXd block = sample_anchor_block(
      prior, plan.anchors_k, EncodingScheme::SingleAnchor, arng);

  SeedOutput out;
  out.metrics["per_intensity"] = Json::array();
  for (int intensity : plan.intensities) {
    CorruptionSpec spec;
    spec.kind = plan.kind;
    spec.intensity = intensity;
    spec.seed = srng();
    const Dataset shifted = corrupt(test, spec);

    const auto summaries =
        predict_batch_with_anchors(model, shifted.inputs, block);
    const Eigen::Index n = shifted.inputs.rows();
    Eigen::MatrixXd scaled_probs(n, model.output_dim);
    Eigen::MatrixXd raw_probs(n, model.output_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = summaries[static_cast<std::size_t>(i)];
      scaled_probs.row(i) =
          softmax(scale_logits(s.mean, s.variance)).transpose();
      raw_probs.row(i) = softmax(s.mean).transpose();
    }
    const Eigen::MatrixXd plain_probs =
        softmax_rows(plain.predict_rows(shifted.inputs));

    const Json scaled = calibration_block(scaled_probs, shifted.labels, plan.bins);
    const Json raw = calibration_block(raw_probs, shifted.labels, plan.bins);
    const Json pl = calibration_block(plain_probs, shifted.labels, plan.bins);
    out.metrics["per_intensity"].push_back(
        Json{{"intensity", intensity},
             {"scaled", scaled},
             {"raw", raw},
             {"plain", pl}});
    out.rows.push_back(make_row(
        {static_cast<double>(seed), static_cast<double>(intensity),
         scaled["ece"].get<double>(), raw["ece"].get<double>(),
         pl["ece"].get<double>(), scaled["nll"].get<double>(),
         pl["nll"].get<double>(), scaled["brier"].get<double>(),
         pl["brier"].get<double>(), scaled["accuracy"].get<double>(),
         pl["accuracy"].get<double>()}));
  }
  return out;
}

SeedOutput run_anchor_sweep_seed(const AnchorSweepPlan& plan,
                                 std::uint64_t seed) {
  std::mt19937_64 srng(seed);
  const std::uint64_t s_data = srng(), s_split = srng(), s_prior = srng(),
                      s_model = srng(), s_corr = srng();
  const Dataset ds = make_two_moons(plan.moons.samples, plan.moons.noise, s_data);
  auto [train, test] = split(ds, plan.n_train, s_split);

  const AnchorPrior prior =
      AnchorPrior::train_distribution(train.inputs, s_prior);
  MlpConfig mc = plan.mlp;
  mc.seed = s_model;
  const DeltaModel model =
      train_anchored_mlp(train, mc, EncodingScheme::SingleAnchor, prior);
  CorruptionSpec spec;
  spec.kind = plan.kind;
  spec.intensity = plan.intensity;
  spec.seed = s_corr;
  const Dataset shifted = corrupt(test, spec);

  SeedOutput out;
  out.metrics["per_k"] = Json::array();
  Json errors = Json::array();
  std::optional<double> first_rho;
  std::optional<double> last_rho;
  for (int k : plan.k_sweep) {
    const std::uint64_t s_anchors = srng();
    try {
      std::mt19937_64 arng(s_anchors);
      const Eigen::MatrixXd block =
          sample_anchor_block(prior, k, EncodingScheme::SingleAnchor, arng);
      const auto summaries =
          predict_batch_with_anchors(model, shifted.inputs, block);
      const Eigen::Index n = shifted.inputs.rows();
      Eigen::VectorXd unc(n), err(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = summaries[static_cast<std::size_t>(i)];
        // probability-space summary of the per-anchor logit rows
        Eigen::MatrixXd probs(s.per_anchor.rows(), s.per_anchor.cols());
        for (Eigen::Index a = 0; a < s.per_anchor.rows(); ++a) {
          probs.row(a) = softmax(s.per_anchor.row(a).transpose()).transpose();
        }
        const PredictionSummary ps = summarize(probs);
        unc[i] = ps.total_variance;
        err[i] = 1.0 - ps.mean[shifted.labels[static_cast<std::size_t>(i)]];
      }
      const double rho = spearman_correlation(unc, err);
      out.metrics["per_k"].push_back(Json{{"k", k}, {"spearman", rho}});
      out.rows.push_back(
          make_row({static_cast<double>(seed), static_cast<double>(k), rho}));
      if (!first_rho) first_rho = rho;
      last_rho = rho;
    } catch (const std::exception& e) {
      errors.push_back(Json{{"k", k}, {"error", e.what()}});
    }
  }
  if (!errors.empty()) out.metrics["errors"] = errors;
  if (first_rho && last_rho && plan.k_sweep.size() > 1) {
    out.metrics["spearman_gain"] = *last_rho - *first_rho;
  }
  return out;
}

// ---------------------------------------------------------------- report
// assembly

double sample_sd(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// mean/sd over every numeric leaf shared by all per-seed metric objects;
// subtrees that disagree in shape are skipped
Json aggregate_metrics(const std::vector<const Json*>& vs) {
  const Json& first = *vs.front();
  if (first.is_number()) {
    std::vector<double> xs;
    for (const Json* v : vs) {
      if (!v->is_number()) return Json();
      xs.push_back(v->get<double>());
    }
    const double mean =
        std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    return Json{{"mean", mean}, {"sd", sample_sd(xs, mean)}};
  }
  if (first.is_object()) {
    Json out = Json::object();
    for (const auto& item : first.items()) {
      std::vector<const Json*> children;
      bool everywhere = true;
      for (const Json* v : vs) {
        if (!v->is_object() || !v->contains(item.key())) {
          everywhere = false;
          break;
        }
        children.push_back(&(*v)[item.key()]);
      }
      if (!everywhere) continue;
      Json sub = aggregate_metrics(children);
      if (!sub.is_null()) out[item.key()] = std::move(sub);
    }
    return out.empty() ? Json() : out;
  }
  if (first.is_array()) {
    const std::size_t n = first.size();
    for (const Json* v : vs) {
      if (!v->is_array() || v->size() != n) return Json();
    }
    Json out = Json::array();
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<const Json*> children;
      for (const Json* v : vs) children.push_back(&(*v)[i]);
      Json sub = aggregate_metrics(children);
      any = any || !sub.is_null();
      out.push_back(std::move(sub));
    }
    return any ? out : Json();
  }
  return Json();
}

struct ParsedTop {
  std::string experiment;
  std::vector<std::uint64_t> seeds;
};

ParsedTop parse_top(const View& root) {
  ParsedTop top;
  top.experiment = root.string_req("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), top.experiment) == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    fail("experiment", "unknown experiment '" + top.experiment +
                           "' (known: " + known + ")");
  }
  const std::vector<int> seeds = root.int_list_req("seeds", 0);
  std::set<int> seen;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!seen.insert(seeds[i]).second) {
      fail("seeds[" + std::to_string(i) + "]",
           "duplicate seed " + std::to_string(seeds[i]));
    }
    top.seeds.push_back(static_cast<std::uint64_t>(seeds[i]));
  }
  root.string_or("output", "");
  root.mark("notes");
  return top;
}

struct RunnerBundle {
  std::vector<std::string> columns;
  std::function<SeedOutput(std::uint64_t)> run;
};

RunnerBundle make_runner(const std::string& name, const View& root,
                         const fs::path& out_dir,
                         std::vector<std::string>* warnings) {
  RunnerBundle b;
  if (name == "regression-calibration") {
    auto plan = parse_regression(root);
    b.columns = {"seed",      "anchored_mae", "anchored_r2",
                 "anchored_spearman", "plain_mae", "plain_r2",
                 "ensemble_mae", "ensemble_r2", "ensemble_spearman"};
    b.run = [plan](std::uint64_t s) { return run_regression_seed(plan, s); };
  } else if (name == "encoding-ablation") {
    auto plan = parse_ablation(root);
    b.columns = {"seed", "scheme", "r2", "spearman", "mae"};
    b.run = [plan](std::uint64_t s) { return run_ablation_seed(plan, s); };
  } else if (name == "smo") {
    auto plan = parse_smo(root);
    b.columns = {"seed", "best", "init_best", "evaluations"};
    b.run = [plan, out_dir](std::uint64_t s) {
      return run_smo_seed(plan, out_dir, s);
    };
  } else if (name == "mbo") {
    auto plan = parse_mbo(root);
    b.columns = {"seed",           "y_star",
                 "weighted_achieved", "weighted_abs_error",
                 "vanilla_achieved",  "vanilla_abs_error"};
    b.run = [plan](std::uint64_t s) { return run_mbo_seed(plan, s); };
  } else if (name == "ood") {
    auto plan = parse_ood(root);
    b.columns = plan.compare_identity
                    ? std::vector<std::string>{"seed", "auroc", "identity_auroc"}
                    : std::vector<std::string>{"seed", "auroc"};
    b.run = [plan](std::uint64_t s) { return run_ood_seed(plan, s); };
  } else if (name == "calibration-shift") {
    auto plan = parse_shift(root);
    b.columns = {"seed",        "intensity",   "scaled_ece",
                 "raw_ece",     "plain_ece",   "scaled_nll",
                 "plain_nll",   "scaled_brier", "plain_brier",
                 "scaled_accuracy", "plain_accuracy"};
    b.run = [plan](std::uint64_t s) { return run_shift_seed(plan, s); };
  } else if (name == "anchor-ablation") {
    auto plan = parse_anchor_sweep(root, warnings);
    b.columns = {"seed", "k", "spearman"};
    b.run = [plan](std::uint64_t s) { return run_anchor_sweep_seed(plan, s); };
  } else {
    fail("experiment", "unknown experiment '" + name + "'");
  }
  return b;
}

void validate_only(const Json& config) {
  const View root(config, "");
  const ParsedTop top = parse_top(root);
  std::vector<std::string> warnings;
  if (top.experiment == "regression-calibration") {
    parse_regression(root);
  } else if (top.experiment == "encoding-ablation") {
    parse_ablation(root);
  } else if (top.experiment == "smo") {
    parse_smo(root);
  } else if (top.experiment == "mbo") {
    parse_mbo(root);
  } else if (top.experiment == "ood") {
    parse_ood(root);
  } else if (top.experiment == "calibration-shift") {
    parse_shift(root);
  } else if (top.experiment == "anchor-ablation") {
    parse_anchor_sweep(root, &warnings);
  }
  root.done();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "regression-calibration", "encoding-ablation", "smo",
      "mbo",                    "ood",               "calibration-shift",
      "anchor-ablation"};
  return names;
}

void validate_experiment_config(const Json& config) { validate_only(config); }

Json load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read config file '" + path.string() + "'");
  }
  Json config;
  try {
    in >> config;
  } catch (const std::exception& e) {
    throw std::runtime_error("config file '" + path.string() +
                             "' is not valid JSON: " + e.what());
  }
  return config;
}

ExperimentResult run_experiment(const Json& config, const fs::path& out_dir,
                                int parallel, bool quiet) {
  validate_experiment_config(config);
  const View root(config, "");
  const ParsedTop top = parse_top(root);
  fs::create_directories(out_dir);

  std::vector<std::string> warnings;
  const RunnerBundle bundle =
      make_runner(top.experiment, root, out_dir, &warnings);
  std::mutex io;
  if (!quiet) {
    for (const auto& w : warnings) {
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_seeds = top.seeds.size();
  std::vector<std::optional<SeedOutput>> outputs(n_seeds);
  std::vector<std::string> errors(n_seeds);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_seeds) break;
      const auto seed_t0 = std::chrono::steady_clock::now();
      try {
        outputs[i] = bundle.run(top.seeds[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
      if (!quiet) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          seed_t0)
                .count();
        std::lock_guard<std::mutex> lock(io);
        std::fprintf(stderr, "[%s] seed %llu %s (%.1fs)\n",
                     top.experiment.c_str(),
                     static_cast<unsigned long long>(top.seeds[i]),
                     outputs[i] ? "done" : "FAILED", secs);
      }
    }
  };

  const int n_workers =
      std::max(1, std::min(parallel, static_cast<int>(n_seeds)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  Json per_seed = Json::array();
  std::vector<const Json*> succeeded;
  int failed = 0;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    Json entry{{"seed", top.seeds[i]}};
    if (outputs[i]) {
      entry["metrics"] = outputs[i]->metrics;
    } else {
      entry["error"] = errors[i];
      ++failed;
    }
    per_seed.push_back(std::move(entry));
  }
  for (auto& entry : per_seed) {
    if (entry.contains("metrics")) succeeded.push_back(&entry["metrics"]);
  }

  Json artifacts = Json::array();
  std::size_t n_rows = 0;
  for (const auto& out : outputs) {
    if (out) n_rows += out->rows.size();
  }
  if (n_rows > 0) {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(n_rows),
                          static_cast<Eigen::Index>(bundle.columns.size()));
    Eigen::Index r = 0;
    for (const auto& out : outputs) {
      if (!out) continue;
      for (const auto& row : out->rows) table.row(r++) = row.transpose();
    }
    save_table(out_dir / "metrics.csv", bundle.columns, table);
    artifacts.push_back("metrics.csv");
  }
  if (top.experiment == "smo") {
    for (std::size_t i = 0; i < n_seeds; ++i) {
      if (outputs[i]) {
        artifacts.push_back("trace_seed" + std::to_string(top.seeds[i]) +
                            ".csv");
      }
    }
  }

  ExperimentResult result;
  result.failed_seeds = failed;
  Json& report = result.report;
  report["library_version"] = kVersion;
  report["experiment"] = top.experiment;
  report["config"] = config;
  report["rng"] = Json{
      {"engine", "mt19937_64"},
      {"note", "per-seed substreams drawn in fixed order from mt19937_64(seed)"},
      {"seeds", top.seeds}};
  report["per_seed"] = std::move(per_seed);
  report["failed_seeds"] = failed;
  report["aggregate"] =
      succeeded.empty() ? Json() : aggregate_metrics(succeeded);
  if (!warnings.empty()) report["warnings"] = warnings;
  report["artifacts"] = std::move(artifacts);
  report["wall_clock_seconds"] = wall;

  result.report_path = out_dir / "report.json";
  std::ofstream out(result.report_path);
  if (!out) {
    throw std::runtime_error("cannot write report to '" +
                             result.report_path.string() + "'");
  }
  out << report.dump(2) << "\n";
  return result;
}

}  // namespace auq
