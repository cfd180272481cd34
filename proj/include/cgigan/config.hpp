#pragma once

// One configuration file for every command: a section per command plus a
// profile that supplies defaults ("paper" for full runs, "smoke" for CI).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cgigan/datasets.hpp"
#include "cgigan/error.hpp"
#include "cgigan/json_util.hpp"
#include "cgigan/training.hpp"

namespace cgigan::config {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr std::int64_t kImagePixels = 28 * 28;

struct DataSection {
  std::string mnist_dir = "data/mnist";
  std::uint64_t split_seed = 0;
  std::int64_t train_limit = 0;  // 0 keeps every image
  std::int64_t test_limit = 0;
};

struct SimulateSection {
  std::vector<std::int64_t> patterns{196, 392, 784};
  std::uint64_t bank_seed = 0;
};

struct TrainSection {
  training::TrainingConfig training;
  std::string run_name;  // empty: derived from beta and lambdas
  bool score_with_classifier = true;
};

struct EvalSection {
  std::string classifier;  // empty: <workspace>/classifier.pt
  std::uint64_t classifier_seed = 0;
  std::int64_t classifier_epochs = 5;
  std::int64_t classifier_train_limit = 0;
  double min_inception_score = 9.5;
  double min_accuracy = 0.98;
  std::map<std::string, std::string> checkpoints;  // train beta -> checkpoint path
  std::vector<double> test_betas{0.25, 0.5, 1.0};
  std::int64_t n_splits = 10;
  std::vector<std::pair<double, double>> lambda_pairs{{10, 10}, {20, 0}, {0, 20}, {0, 0}};
  double ablate_beta = 0.5;
};

struct PlotSection {
  std::string run_dir;  // empty: the train section's run
  std::string out_dir;  // empty: <run_dir>/plots
};

struct RunConfig {
  std::string profile = "paper";
  std::string workspace = "work";
  DataSection data;
  SimulateSection simulate;
  TrainSection train;
  EvalSection eval;
  PlotSection plot;
};

inline std::int64_t patterns_for_beta(double beta) {
  const auto m = static_cast<std::int64_t>(std::llround(beta * static_cast<double>(kImagePixels)));
  if (m < 1 || m > kImagePixels || std::abs(static_cast<double>(m) / kImagePixels - beta) > 1e-9) {
    throw ConfigurationError("beta " + std::to_string(beta) + " does not correspond to a whole pattern count in [1, " +
                             std::to_string(kImagePixels) + "]");
  }
  return m;
}

/// Applies profile defaults onto `c`; unknown names are a configuration error.
inline void apply_profile(RunConfig& c, const std::string& name) {
  if (name == "paper") {
    c = RunConfig{};
  } else if (name == "smoke") {
    c = RunConfig{};
    c.data.train_limit = 512;  // 256 per unpaired subset
    c.data.test_limit = 256;
    auto& t = c.train.training;
    t.epochs = 2;
    t.batch_size = 32;
    t.eval_images = 256;
    t.sample_images = 16;
    c.eval.classifier_epochs = 1;
    c.eval.classifier_train_limit = 2048;
    c.eval.min_inception_score = 0.0;
    c.eval.min_accuracy = 0.0;
  } else {
    throw ConfigurationError("unknown profile '" + name + "' (expected smoke or paper)");
  }
  c.profile = name;
}

inline RunConfig profile(const std::string& name) {
  RunConfig c;
  apply_profile(c, name);
  return c;
}

inline json to_json(const RunConfig& c) {
  json pairs = json::array();
  for (const auto& [l1, l2] : c.eval.lambda_pairs) pairs.push_back({l1, l2});
  auto train_json = training::to_json(c.train.training);
  train_json["run_name"] = c.train.run_name;
  train_json["score_with_classifier"] = c.train.score_with_classifier;
  return {{"profile", c.profile},
          {"workspace", c.workspace},
          {"data",
           {{"mnist_dir", c.data.mnist_dir},
            {"split_seed", c.data.split_seed},
            {"train_limit", c.data.train_limit},
            {"test_limit", c.data.test_limit}}},
          {"simulate", {{"patterns", c.simulate.patterns}, {"bank_seed", c.simulate.bank_seed}}},
          {"train", train_json},
          {"eval",
           {{"classifier", c.eval.classifier},
            {"classifier_seed", c.eval.classifier_seed},
            {"classifier_epochs", c.eval.classifier_epochs},
            {"classifier_train_limit", c.eval.classifier_train_limit},
            {"min_inception_score", c.eval.min_inception_score},
            {"min_accuracy", c.eval.min_accuracy},
            {"checkpoints", c.eval.checkpoints},
            {"test_betas", c.eval.test_betas},
            {"n_splits", c.eval.n_splits},
            {"lambda_pairs", pairs},
            {"ablate_beta", c.eval.ablate_beta}}},
          {"plot", {{"run_dir", c.plot.run_dir}, {"out_dir", c.plot.out_dir}}}};
}

inline void validate(const RunConfig& c) {
  c.train.training.validate();
  patterns_for_beta(c.train.training.beta_train);
  patterns_for_beta(c.eval.ablate_beta);
  for (const auto b : c.eval.test_betas) patterns_for_beta(b);
  for (const auto m : c.simulate.patterns) {
    if (m < 1 || m > kImagePixels) {
      throw ConfigurationError("simulate.patterns: " + std::to_string(m) + " outside [1, " +
                               std::to_string(kImagePixels) + "]");
    }
  }
  if (c.data.train_limit < 0 || c.data.test_limit < 0) throw ConfigurationError("data: limits must be >= 0");
  if (c.data.train_limit % 2 != 0) throw ConfigurationError("data.train_limit must be even");
  if (c.eval.n_splits < 1) throw ConfigurationError("eval.n_splits must be >= 1");
  if (c.eval.classifier_epochs < 1) throw ConfigurationError("eval.classifier_epochs must be >= 1");
  for (const auto& [l1, l2] : c.eval.lambda_pairs) {
    if (l1 < 0 || l2 < 0) throw ConfigurationError("eval.lambda_pairs: entries must be >= 0");
  }
  if (c.workspace.empty()) throw ConfigurationError("workspace must not be empty");
}

/// Overlays `j` onto `base`. A "profile" key resets `base` to that profile
/// first, so the remaining keys override the profile's values.
inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
  json_util::reject_unknown(j, {"profile", "workspace", "data", "simulate", "train", "eval", "plot"}, "root");
  if (j.contains("profile")) {
    std::string name;
    json_util::read(j, "profile", name, "root");
    apply_profile(base, name);
  }
  auto& c = base;
  json_util::read(j, "workspace", c.workspace, "root");
  if (j.contains("data")) {
    const auto& s = j.at("data");
    json_util::reject_unknown(s, {"mnist_dir", "split_seed", "train_limit", "test_limit"}, "data");
    json_util::read(s, "mnist_dir", c.data.mnist_dir, "data");
    json_util::read(s, "split_seed", c.data.split_seed, "data");
    json_util::read(s, "train_limit", c.data.train_limit, "data");
    json_util::read(s, "test_limit", c.data.test_limit, "data");
  }
  if (j.contains("simulate")) {
    const auto& s = j.at("simulate");
    json_util::reject_unknown(s, {"patterns", "bank_seed"}, "simulate");
    json_util::read(s, "patterns", c.simulate.patterns, "simulate");
    json_util::read(s, "bank_seed", c.simulate.bank_seed, "simulate");
  }
  if (j.contains("train")) {
    // TrainingConfig fields sit directly in the section beside the run options.
    auto s = j.at("train");
    if (!s.is_object()) throw ConfigurationError("section 'train' must be an object");
    json_util::read(s, "run_name", c.train.run_name, "train");
    json_util::read(s, "score_with_classifier", c.train.score_with_classifier, "train");
    s.erase("run_name");
    s.erase("score_with_classifier");
    c.train.training = training::training_config_from_json(s, c.train.training);
  }
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    json_util::reject_unknown(s,
                              {"classifier", "classifier_seed", "classifier_epochs", "classifier_train_limit",
                               "min_inception_score", "min_accuracy", "checkpoints", "test_betas", "n_splits",
                               "lambda_pairs", "ablate_beta"},
                              "eval");
    json_util::read(s, "classifier", c.eval.classifier, "eval");
    json_util::read(s, "classifier_seed", c.eval.classifier_seed, "eval");
    json_util::read(s, "classifier_epochs", c.eval.classifier_epochs, "eval");
    json_util::read(s, "classifier_train_limit", c.eval.classifier_train_limit, "eval");
    json_util::read(s, "min_inception_score", c.eval.min_inception_score, "eval");
    json_util::read(s, "min_accuracy", c.eval.min_accuracy, "eval");
    json_util::read(s, "checkpoints", c.eval.checkpoints, "eval");
    json_util::read(s, "test_betas", c.eval.test_betas, "eval");
    json_util::read(s, "n_splits", c.eval.n_splits, "eval");
    json_util::read(s, "ablate_beta", c.eval.ablate_beta, "eval");
    if (s.contains("lambda_pairs")) {
      std::vector<std::vector<double>> pairs;
      json_util::read(s, "lambda_pairs", pairs, "eval");
      c.eval.lambda_pairs.clear();
      for (const auto& p : pairs) {
        if (p.size() != 2) throw ConfigurationError("eval.lambda_pairs: each entry must be [lambda1, lambda2]");
        c.eval.lambda_pairs.emplace_back(p[0], p[1]);
      }
    }
  }
  if (j.contains("plot")) {
    const auto& s = j.at("plot");
    json_util::reject_unknown(s, {"run_dir", "out_dir"}, "plot");
    json_util::read(s, "run_dir", c.plot.run_dir, "plot");
    json_util::read(s, "out_dir", c.plot.out_dir, "plot");
  }
  validate(c);
  return c;
}

inline RunConfig load_run_config(const fs::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

inline void save_run_config(const RunConfig& c, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << to_json(c).dump(2) << '\n';
}

inline bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

/// Where each command reads and writes inside the workspace.
struct Layout {
  fs::path root;

  fs::path data_dir() const { return root / "data"; }
  fs::path train_set() const { return data_dir() / "train.h5"; }
  fs::path test_set() const { return data_dir() / "test.h5"; }
  fs::path split() const { return data_dir() / "split.json"; }
  fs::path subset(data::SplitTag tag) const { return data_dir() / (data::to_string(tag) + ".h5"); }
  fs::path data_stamp() const { return data_dir() / "prepared.json"; }
  fs::path ghosts_dir() const { return root / "ghosts"; }
  fs::path ghosts(const std::string& split, std::int64_t patterns) const {
    return ghosts_dir() / (split + "_M" + std::to_string(patterns) + ".h5");
  }
  fs::path runs_dir() const { return root / "runs"; }
  fs::path reports_dir() const { return root / "reports"; }
  fs::path classifier() const { return root / "classifier.pt"; }
};

inline std::string default_run_name(const training::TrainingConfig& t) {
  std::ostringstream s;
  s << "beta" << t.beta_train << "_lambda" << t.lambda1 << "_" << t.lambda2;
  return s.str();
}

}  // namespace cgigan::config
