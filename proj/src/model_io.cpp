#include "auq/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace auq {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::runtime_error("model file: malformed matrix");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::runtime_error("model file: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  }
  return v;
}

json prior_to_json(const AnchorPrior& prior) {
  json j;
  switch (prior.kind()) {
    case AnchorPrior::Kind::TrainDistribution:
      j["kind"] = "train_distribution";
      break;
    case AnchorPrior::Kind::StandardNormal:
      j["kind"] = "standard_normal";
      break;
    case AnchorPrior::Kind::External:
      j["kind"] = "external";
      break;
  }
  j["dim"] = prior.dim();
  j["seed"] = prior.seed();
  if (prior.samples().size() > 0) {
    j["samples"] = matrix_to_json(prior.samples());
  }
  j["fingerprint"] = prior.fingerprint();
  return j;
}

AnchorPrior prior_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  AnchorPrior prior;
  if (kind == "standard_normal") {
    prior = AnchorPrior::standard_normal(j.at("dim").get<int>(), seed);
  } else if (kind == "train_distribution") {
    prior = AnchorPrior::train_distribution(matrix_from_json(j.at("samples")),
                                            seed);
  } else if (kind == "external") {
    prior = AnchorPrior::external(matrix_from_json(j.at("samples")), seed);
  } else {
    throw std::runtime_error("model file: unknown prior kind '" + kind + "'");
  }
  if (j.contains("fingerprint") &&
      j.at("fingerprint").get<std::uint64_t>() != prior.fingerprint()) {
    throw std::runtime_error(
        "model file: prior fingerprint mismatch, file is corrupt or edited");
  }
  return prior;
}

json mlp_to_json(const MlpLearner& l) {
  json j;
  j["type"] = "mlp";
  j["config"] = {{"hidden", l.config.hidden},
                 {"learning_rate", l.config.learning_rate},
                 {"epochs", l.config.epochs},
                 {"batch_size", l.config.batch_size},
                 {"seed", l.config.seed},
                 {"standardize_targets", l.config.standardize_targets}};
  json weights = json::array();
  json biases = json::array();
  for (std::size_t i = 0; i < l.net.weights.size(); ++i) {
    weights.push_back(matrix_to_json(l.net.weights[i]));
    biases.push_back(vector_to_json(l.net.biases[i]));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["scaler"] = {{"shift", vector_to_json(l.scaler.shift)},
                 {"scale", vector_to_json(l.scaler.scale)}};
  return j;
}

MlpLearner mlp_from_json(const json& j) {
  MlpLearner l;
  const auto& cfg = j.at("config");
  l.config.hidden = cfg.at("hidden").get<std::vector<int>>();
  l.config.learning_rate = cfg.at("learning_rate").get<double>();
  l.config.epochs = cfg.at("epochs").get<int>();
  l.config.batch_size = cfg.at("batch_size").get<int>();
  l.config.seed = cfg.at("seed").get<std::uint64_t>();
  l.config.standardize_targets = cfg.at("standardize_targets").get<bool>();
  for (const auto& w : j.at("weights")) {
    l.net.weights.push_back(matrix_from_json(w));
  }
  for (const auto& b : j.at("biases")) {
    l.net.biases.push_back(vector_from_json(b));
  }
  l.scaler.shift = vector_from_json(j.at("scaler").at("shift"));
  l.scaler.scale = vector_from_json(j.at("scaler").at("scale"));
  return l;
}

json forest_to_json(const ForestLearner& l) {
  json j;
  j["type"] = "forest";
  j["config"] = {{"n_trees", l.config.n_trees},
                 {"max_depth", l.config.max_depth},
                 {"min_samples_split", l.config.min_samples_split},
                 {"anchor_replication", l.config.anchor_replication},
                 {"seed", l.config.seed}};
  json trees = json::array();
  for (const auto& tree : l.trees) {
    json nodes = json::array();
    for (const auto& node : tree.nodes) {
      nodes.push_back({{"feature", node.feature},
                       {"threshold", node.threshold},
                       {"left", node.left},
                       {"right", node.right},
                       {"value", vector_to_json(node.value)}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

ForestLearner forest_from_json(const json& j) {
  ForestLearner l;
  const auto& cfg = j.at("config");
  l.config.n_trees = cfg.at("n_trees").get<int>();
  l.config.max_depth = cfg.at("max_depth").get<int>();
  l.config.min_samples_split = cfg.at("min_samples_split").get<int>();
  l.config.anchor_replication = cfg.at("anchor_replication").get<int>();
  l.config.seed = cfg.at("seed").get<std::uint64_t>();
  for (const auto& tree_json : j.at("trees")) {
    CartTree tree;
    for (const auto& node_json : tree_json.at("nodes")) {
      TreeNode node;
      node.feature = node_json.at("feature").get<int>();
      node.threshold = node_json.at("threshold").get<double>();
      node.left = node_json.at("left").get<int>();
      node.right = node_json.at("right").get<int>();
      node.value = vector_from_json(node_json.at("value"));
      tree.nodes.push_back(std::move(node));
    }
    l.trees.push_back(std::move(tree));
  }
  return l;
}

json ksvm_to_json(const KsvmLearner& l) {
  json j;
  j["type"] = "ksvm";
  j["config"] = {{"gamma", l.config.gamma},
                 {"c", l.config.c},
                 {"max_iterations", l.config.max_iterations},
                 {"anchor_passes", l.config.anchor_passes},
                 {"seed", l.config.seed}};
  j["support"] = matrix_to_json(l.support);
  j["coef"] = matrix_to_json(l.coef);
  return j;
}

KsvmLearner ksvm_from_json(const json& j) {
  KsvmLearner l;
  const auto& cfg = j.at("config");
  l.config.gamma = cfg.at("gamma").get<double>();
  l.config.c = cfg.at("c").get<double>();
  l.config.max_iterations = cfg.at("max_iterations").get<int>();
  l.config.anchor_passes = cfg.at("anchor_passes").get<int>();
  l.config.seed = cfg.at("seed").get<std::uint64_t>();
  l.support = matrix_from_json(j.at("support"));
  l.coef = matrix_from_json(j.at("coef"));
  return l;
}

}  // namespace

void save_model(const std::filesystem::path& path, const DeltaModel& model) {
  if (!model.trained) {
    throw std::invalid_argument("refusing to save an untrained model");
  }
  json j;
  j["format_version"] = 1;
  j["scheme"] = scheme_name(model.scheme);
  j["task"] = model.task == Task::Regression ? "regression" : "classification";
  j["input_dim"] = model.input_dim;
  j["output_dim"] = model.output_dim;
  j["prior"] = prior_to_json(model.prior);
  if (model.training_anchors.size() > 0) {
    j["training_anchors"] = matrix_to_json(model.training_anchors);
  }
  j["learner"] = std::visit(
      [](const auto& l) -> json {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, MlpLearner>) return mlp_to_json(l);
        else if constexpr (std::is_same_v<L, ForestLearner>) return forest_to_json(l);
        else return ksvm_to_json(l);
      },
      model.learner);

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write model file '" + path.string() + "'");
  }
  out << j.dump(2) << '\n';
}

DeltaModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open model file '" + path.string() + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("model file '" + path.string() +
                             "' is not valid JSON: " + e.what());
  }
  const int version = j.at("format_version").get<int>();
  if (version != 1) {
    throw std::runtime_error("model file format version " +
                             std::to_string(version) + " is not supported");
  }
  DeltaModel model;
  model.scheme = scheme_from_name(j.at("scheme").get<std::string>());
  model.task = j.at("task").get<std::string>() == "regression"
                   ? Task::Regression
                   : Task::Classification;
  model.input_dim = j.at("input_dim").get<int>();
  model.output_dim = j.at("output_dim").get<int>();
  model.prior = prior_from_json(j.at("prior"));
  if (j.contains("training_anchors")) {
    model.training_anchors = matrix_from_json(j.at("training_anchors"));
  }

  const auto& learner = j.at("learner");
  const std::string type = learner.at("type").get<std::string>();
  if (type == "mlp") {
    model.learner = mlp_from_json(learner);
  } else if (type == "forest") {
    model.learner = forest_from_json(learner);
  } else if (type == "ksvm") {
    model.learner = ksvm_from_json(learner);
  } else {
    throw std::runtime_error("model file: unknown learner type '" + type + "'");
  }
  model.trained = true;
  return model;
}

}  // namespace auq
