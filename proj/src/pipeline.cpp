#include "cgigan/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cgigan/cgigan.hpp"

namespace cgigan::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

static json data_stamp(const config::RunConfig& c) {
  return {{"mnist_dir", fs::absolute(c.data.mnist_dir).lexically_normal().string()},
          {"split_seed", c.data.split_seed},
          {"train_limit", c.data.train_limit},
          {"test_limit", c.data.test_limit}};
}

static void require_prepared(const config::Layout& L) {
  for (const auto& p : {L.data_stamp(), L.train_set(), L.test_set(), L.subset(data::SplitTag::subset_a),
                        L.subset(data::SplitTag::subset_b)}) {
    if (!fs::exists(p)) throw DependencyError("prepare-data", "missing prepared data " + p.string());
  }
}

static cgi::GhostDataset require_ghosts(const config::Layout& L, const std::string& split, std::int64_t m) {
  const auto p = L.ghosts(split, m);
  if (!fs::exists(p)) throw DependencyError("simulate", "missing ghost cache " + p.string());
  return storage::load_ghost_dataset(p);
}

int prepare_data(const config::RunConfig& c) {
  const config::Layout L{c.workspace};
  const auto stamp = data_stamp(c);
  if (fs::exists(L.data_stamp())) {
    std::ifstream in(L.data_stamp());
    if (json::parse(in, nullptr, false) == stamp) {
      std::cout << "prepare-data: up to date (" << L.data_dir().string() << ")\n";
      return 0;
    }
  }
  auto mnist = data::load_mnist(c.data.mnist_dir);
  auto train = c.data.train_limit > 0 ? mnist.train.head(c.data.train_limit) : mnist.train;
  auto test = c.data.test_limit > 0 ? mnist.test.head(c.data.test_limit) : mnist.test;
  test.split_tag = data::SplitTag::test;
  auto split = data::unpaired_split(train, c.data.split_seed);
  auto a = train.select_sources(split.ghost_source_indices, data::SplitTag::subset_a);
  auto b = train.select_sources(split.ground_truth_indices, data::SplitTag::subset_b);
  storage::save(train, L.train_set());
  storage::save(test, L.test_set());
  storage::save(split, L.split());
  storage::save(a, L.subset(data::SplitTag::subset_a));
  storage::save(b, L.subset(data::SplitTag::subset_b));
  std::ofstream(L.data_stamp()) << stamp.dump(2) << '\n';
  std::cout << "prepare-data: train " << train.size() << ", test " << test.size() << ", subset_A " << a.size()
            << ", subset_B " << b.size() << " -> " << L.data_dir().string() << '\n';
  return 0;
}

static bool ghost_cache_current(const fs::path& path, std::int64_t m, std::uint64_t seed, std::int64_t count) {
  if (!fs::exists(path) || !fs::exists(storage::sidecar_path(path))) return false;
  std::ifstream in(storage::sidecar_path(path));
  auto meta = json::parse(in, nullptr, false);
  return !meta.is_discarded() && meta.value("M", -1) == m && meta.value("seed", std::uint64_t{0}) == seed &&
         meta.value("count", std::int64_t{-1}) == count &&
         meta.value("format_version", -1) == storage::kFormatVersion;
}

int simulate(const config::RunConfig& c) {
  const config::Layout L{c.workspace};
  if (c.simulate.patterns.empty()) {
    std::cout << "simulate: no pattern counts requested\n";
    return 0;
  }
  require_prepared(L);
  const std::vector<std::pair<std::string, data::LabeledImageSet>> sets{
      {"subset_A", storage::load_image_set(L.subset(data::SplitTag::subset_a))},
      {"test", storage::load_image_set(L.test_set())}};
  std::optional<cgi::SpeckleBank> master;
  for (const auto m : c.simulate.patterns) {
    for (const auto& [name, set] : sets) {
      const auto path = L.ghosts(name, m);
      if (ghost_cache_current(path, m, c.simulate.bank_seed, set.size())) {
        std::cout << "simulate: " << path.string() << " up to date\n";
        continue;
      }
      if (!master) master = cgi::generate_speckle_bank(config::kImagePixels, 28, 28, c.simulate.bank_seed);
      auto ghosts = data::build_ghost_dataset(set, master->head(m));
      storage::save(ghosts, path);
      std::cout << "simulate: " << name << " M=" << m << " beta=" << ghosts.beta << " count=" << ghosts.size()
                << " -> " << path.string() << '\n';
    }
  }
  return 0;
}

static fs::path classifier_path(const config::RunConfig& c) {
  return c.eval.classifier.empty() ? config::Layout{c.workspace}.classifier() : fs::path(c.eval.classifier);
}

/// Loads the configured classifier, training and saving it first if absent.
eval::Classifier ensure_classifier(const config::RunConfig& c) {
  const auto path = classifier_path(c);
  if (fs::exists(path)) return eval::load_classifier(path);
  // Trained on the full MNIST files, independent of the GAN subset limits.
  auto mnist = data::load_mnist(c.data.mnist_dir);
  auto train = c.eval.classifier_train_limit > 0 ? mnist.train.head(c.eval.classifier_train_limit) : mnist.train;
  const auto& test = mnist.test;
  eval::ClassifierTraining opt;
  opt.epochs = c.eval.classifier_epochs;
  opt.min_inception_score = c.eval.min_inception_score;
  opt.min_accuracy = c.eval.min_accuracy;
  opt.on_epoch = [](std::int64_t e, double loss) {
    std::cout << "classifier: epoch " << e << " loss " << loss << '\n';
  };
  std::cout << "classifier: training on " << train.size() << " images\n";
  auto net = eval::train_classifier(train, test, c.eval.classifier_seed, opt);
  auto q = eval::assess_classifier(net, test);
  std::cout << "classifier: held-out inception score " << q.inception_score << ", accuracy " << q.accuracy << '\n';
  eval::save_classifier(net, path);
  return net;
}

static void print_record(const training::MetricsRecord& r) {
  std::printf("epoch %4lld  G %9.4f  D %9.4f  mse1 %.4f  mse2 %.5f", static_cast<long long>(r.epoch),
              r.generator_loss, r.critic_loss, r.mse1, r.mse2);
  if (r.inception_score) std::printf("  IS %.3f  regIS %.3f", *r.inception_score, *r.regularized_inception_score);
  if (r.macro_f1) std::printf("  F1 %.3f", *r.macro_f1);
  std::printf("  (%.1fs)\n", r.wall_time);
  std::fflush(stdout);
}

/// Trains one run into `run_dir`; returns the final checkpoint.
static fs::path run_training(const config::RunConfig& c, const training::TrainingConfig& t, const fs::path& run_dir,
                      bool resume) {
  const config::Layout L{c.workspace};
  require_prepared(L);
  const auto m = config::patterns_for_beta(t.beta_train);
  auto ghosts = require_ghosts(L, "subset_A", m);
  auto test_ghosts = require_ghosts(L, "test", m);
  auto reals = storage::load_image_set(L.subset(data::SplitTag::subset_b));

  if (!resume && training::latest_checkpoint(run_dir)) {
    throw InvalidArgument("run directory " + run_dir.string() +
                          " already holds checkpoints; pass --resume to continue it");
  }
  if (!resume) fs::remove(run_dir / "metrics.jsonl");
  training::TrainerOptions opt;
  opt.run_dir = run_dir;
  opt.eval_ghosts = test_ghosts.slice(0, std::min(test_ghosts.size(), t.eval_images));
  if (c.train.score_with_classifier) opt.classifier = ensure_classifier(c);
  opt.on_epoch = print_record;
  auto snapshot = c;
  snapshot.train.training = t;
  config::save_run_config(snapshot, run_dir / "run_config.json");

  std::cout << "train: " << ghosts.size() << " ghosts (M=" << m << ") vs " << reals.size() << " real images, "
            << t.epochs << " epochs, batch " << t.batch_size << " -> " << run_dir.string() << '\n';
  auto result = training::train(t, ghosts, reals, std::move(opt), resume);
  if (!result.metrics.empty()) {
    std::cout << "train: final ";
    print_record(result.metrics.back());
  }
  std::cout << "train: checkpoint " << result.final_checkpoint.string() << '\n';
  return result.final_checkpoint;
}

static fs::path default_run_dir(const config::RunConfig& c) {
  const auto name = c.train.run_name.empty() ? config::default_run_name(c.train.training) : c.train.run_name;
  return config::Layout{c.workspace}.runs_dir() / name;
}

int train(const config::RunConfig& c, bool resume) {
  run_training(c, c.train.training, default_run_dir(c), resume);
  return 0;
}

static std::map<double, cgi::GhostDataset> load_test_sets(const config::RunConfig& c) {
  const config::Layout L{c.workspace};
  std::map<double, cgi::GhostDataset> out;
  for (const auto b : c.eval.test_betas) out.emplace(b, require_ghosts(L, "test", config::patterns_for_beta(b)));
  return out;
}

int evaluate(const config::RunConfig& c) {
  const config::Layout L{c.workspace};
  eval::EvaluationReport report;
  report.row_kind = "train_beta";
  if (!c.eval.checkpoints.empty()) {
    std::map<double, fs::path> models;
    for (const auto& [key, path] : c.eval.checkpoints) {
      double beta = 0.0;
      try {
        beta = std::stod(key);
      } catch (const std::exception&) {
        throw ConfigurationError("eval.checkpoints: key '" + key + "' is not a train beta");
      }
      if (!fs::exists(path)) {
        throw DependencyError("train", "cell beta=" + key + ": checkpoint missing: " + path);
      }
      models.emplace(beta, path);
    }
    auto tests = load_test_sets(c);
    auto classifier = ensure_classifier(c);
    eval::CellOptions opt;
    opt.n_splits = c.eval.n_splits;
    opt.grid_dir = L.reports_dir() / "cross_beta_grids";
    report = eval::cross_beta_evaluation(models, tests, classifier, opt);
  }
  eval::write_report(report, L.reports_dir() / "cross_beta");
  std::cout << eval::to_table(report);
  std::cout << "eval: " << report.cells.size() << " cells -> " << (L.reports_dir() / "cross_beta.txt").string() << '\n';
  return 0;
}

int ablate(const config::RunConfig& c, bool resume) {
  const config::Layout L{c.workspace};
  std::vector<std::pair<std::pair<double, double>, fs::path>> models;
  for (const auto& [l1, l2] : c.eval.lambda_pairs) {
    auto t = c.train.training;
    t.beta_train = c.eval.ablate_beta;
    t.lambda1 = l1;
    t.lambda2 = l2;
    const auto run_dir = L.runs_dir() / ("ablate_" + config::default_run_name(t));
    const auto done = training::checkpoint_path(run_dir, t.epochs);
    if (fs::exists(done)) {
      std::cout << "ablate: " << eval::lambda_key(l1, l2) << " up to date (" << done.string() << ")\n";
      models.emplace_back(std::make_pair(l1, l2), done);
      continue;
    }
    const bool partial = training::latest_checkpoint(run_dir).has_value();
    models.emplace_back(std::make_pair(l1, l2), run_training(c, t, run_dir, resume || partial));
  }
  eval::EvaluationReport report;
  report.row_kind = "lambda";
  if (!models.empty()) {
    auto tests = load_test_sets(c);
    auto classifier = ensure_classifier(c);
    eval::CellOptions opt;
    opt.n_splits = c.eval.n_splits;
    opt.grid_dir = L.reports_dir() / "ablation_grids";
    report = eval::ablation_grid(models, tests, classifier, opt);
  }
  eval::write_report(report, L.reports_dir() / "ablation");
  std::cout << eval::to_table(report);
  std::cout << "ablate: " << report.cells.size() << " cells -> " << (L.reports_dir() / "ablation.txt").string() << '\n';
  return 0;
}

int plot(const config::RunConfig& c) {
  const fs::path run_dir = c.plot.run_dir.empty() ? default_run_dir(c) : fs::path(c.plot.run_dir);
  const fs::path out_dir = c.plot.out_dir.empty() ? run_dir / "plots" : fs::path(c.plot.out_dir);
  const auto log = run_dir / "metrics.jsonl";
  if (!fs::exists(log)) throw DependencyError("train", "missing metrics log " + log.string());
  const auto records = training::read_metrics_log(log);
  std::vector<double> epochs, g, d, is, is_epochs, reg;
  for (const auto& r : records) {
    epochs.push_back(static_cast<double>(r.epoch));
    g.push_back(r.generator_loss);
    d.push_back(r.critic_loss);
    if (r.inception_score) {
      is_epochs.push_back(static_cast<double>(r.epoch));
      is.push_back(*r.inception_score);
      reg.push_back(*r.regularized_inception_score);
    }
  }
  imaging::plot_curve(out_dir / "generator_loss.png", "generator loss", "epoch", epochs, g);
  imaging::plot_curve(out_dir / "critic_loss.png", "critic loss", "epoch", epochs, d);
  imaging::plot_curve(out_dir / "inception_score.png", "inception score", "epoch", is_epochs, is);
  imaging::plot_curve(out_dir / "regularized_inception_score.png", "IS - MSE1 - MSE2", "epoch", is_epochs, reg);
  std::cout << "plot: " << records.size() << " epochs -> " << out_dir.string() << '\n';
  return 0;
}


}  // namespace cgigan::pipeline
