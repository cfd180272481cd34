#pragma once

#include <torch/torch.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "cgigan/cgi.hpp"
#include "cgigan/classifier.hpp"
#include "cgigan/datasets.hpp"
#include "cgigan/error.hpp"
#include "cgigan/imaging.hpp"
#include "cgigan/json_util.hpp"
#include "cgigan/losses.hpp"
#include "cgigan/models.hpp"
#include "cgigan/rng.hpp"
#include "cgigan/scoring.hpp"

namespace cgigan::training {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kCheckpointVersion = 1;

struct TrainingConfig {
  double lambda1 = 10.0;
  double lambda2 = 10.0;
  double alpha = 0.1;
  double gp_weight = 10.0;
  std::int64_t critic_iters = 5;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  std::int64_t batch_size = 256;
  std::int64_t epochs = 200;
  std::uint64_t seed = 0;       // batch sampling and interpolation weights
  std::uint64_t init_seed = 0;  // network initialisation
  double beta_train = 0.25;
  std::int64_t checkpoint_every = 1;
  std::int64_t eval_images = 2048;
  std::int64_t sample_images = 64;
  std::int64_t n_splits = 10;
  models::GeneratorConfig generator;
  models::CriticConfig critic;

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0) throw ConfigurationError("train: lambda1 and lambda2 must be >= 0");
    if (!(alpha > 0 && alpha <= 1)) throw ConfigurationError("train: alpha must lie in (0, 1]");
    if (!(gp_weight > 0)) throw ConfigurationError("train: gp_weight must be > 0");
    if (!(learning_rate > 0)) throw ConfigurationError("train: learning_rate must be > 0");
    if (critic_iters < 1) throw ConfigurationError("train: critic_iters must be >= 1");
    if (batch_size < 2) throw ConfigurationError("train: batch_size must be >= 2");
    if (epochs < 0) throw ConfigurationError("train: epochs must be >= 0");
    if (checkpoint_every < 1) throw ConfigurationError("train: checkpoint_every must be >= 1");
    if (!(beta_train > 0)) throw ConfigurationError("train: beta_train must be > 0");
    if (n_splits < 1) throw ConfigurationError("train: n_splits must be >= 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
      throw ConfigurationError("train: Adam betas must lie in [0, 1)");
    }
    generator.spatial_plan();
    critic.validate();
  }
};

inline json to_json(const models::GeneratorConfig& g) {
  return {{"image_size", g.image_size},
          {"kernel_size", g.kernel_size},
          {"negative_slope", g.negative_slope},
          {"encoder_channels", g.encoder_channels},
          {"encoder_strides", g.encoder_strides},
          {"decoder_channels", g.decoder_channels},
          {"decoder_strides", g.decoder_strides},
          {"decoder_output_padding", g.decoder_output_padding}};
}

inline models::GeneratorConfig generator_config_from_json(const json& j) {
  const std::string sec = "train.generator";
  json_util::reject_unknown(j,
                            {"image_size", "kernel_size", "negative_slope", "encoder_channels", "encoder_strides",
                             "decoder_channels", "decoder_strides", "decoder_output_padding"},
                            sec);
  models::GeneratorConfig g;
  json_util::read(j, "image_size", g.image_size, sec);
  json_util::read(j, "kernel_size", g.kernel_size, sec);
  json_util::read(j, "negative_slope", g.negative_slope, sec);
  json_util::read(j, "encoder_channels", g.encoder_channels, sec);
  json_util::read(j, "encoder_strides", g.encoder_strides, sec);
  json_util::read(j, "decoder_channels", g.decoder_channels, sec);
  json_util::read(j, "decoder_strides", g.decoder_strides, sec);
  json_util::read(j, "decoder_output_padding", g.decoder_output_padding, sec);
  return g;
}

inline json to_json(const models::CriticConfig& c) {
  return {{"image_size", c.image_size},     {"kernel_size", c.kernel_size}, {"negative_slope", c.negative_slope},
          {"channels", c.channels},         {"strides", c.strides},         {"flatten_width", c.flatten_width}};
}

inline models::CriticConfig critic_config_from_json(const json& j) {
  const std::string sec = "train.critic";
  json_util::reject_unknown(j, {"image_size", "kernel_size", "negative_slope", "channels", "strides", "flatten_width"},
                            sec);
  models::CriticConfig c;
  json_util::read(j, "image_size", c.image_size, sec);
  json_util::read(j, "kernel_size", c.kernel_size, sec);
  json_util::read(j, "negative_slope", c.negative_slope, sec);
  json_util::read(j, "channels", c.channels, sec);
  json_util::read(j, "strides", c.strides, sec);
  json_util::read(j, "flatten_width", c.flatten_width, sec);
  return c;
}

inline json to_json(const TrainingConfig& c) {
  return {{"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"alpha", c.alpha},
          {"gp_weight", c.gp_weight},
          {"critic_iters", c.critic_iters},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"init_seed", c.init_seed},
          {"beta_train", c.beta_train},
          {"checkpoint_every", c.checkpoint_every},
          {"eval_images", c.eval_images},
          {"sample_images", c.sample_images},
          {"n_splits", c.n_splits},
          {"generator", to_json(c.generator)},
          {"critic", to_json(c.critic)}};
}

/// Overlays the keys present in `j` onto `base`.
inline TrainingConfig training_config_from_json(const json& j, TrainingConfig base = {}) {
  const std::string sec = "train";
  json_util::reject_unknown(j,
                            {"lambda1", "lambda2", "alpha", "gp_weight", "critic_iters", "learning_rate", "adam_beta1",
                             "adam_beta2", "batch_size", "epochs", "seed", "init_seed", "beta_train",
                             "checkpoint_every", "eval_images", "sample_images", "n_splits", "generator", "critic"},
                            sec);
  auto& c = base;
  json_util::read(j, "lambda1", c.lambda1, sec);
  json_util::read(j, "lambda2", c.lambda2, sec);
  json_util::read(j, "alpha", c.alpha, sec);
  json_util::read(j, "gp_weight", c.gp_weight, sec);
  json_util::read(j, "critic_iters", c.critic_iters, sec);
  json_util::read(j, "learning_rate", c.learning_rate, sec);
  json_util::read(j, "adam_beta1", c.adam_beta1, sec);
  json_util::read(j, "adam_beta2", c.adam_beta2, sec);
  json_util::read(j, "batch_size", c.batch_size, sec);
  json_util::read(j, "epochs", c.epochs, sec);
  json_util::read(j, "seed", c.seed, sec);
  json_util::read(j, "init_seed", c.init_seed, sec);
  json_util::read(j, "beta_train", c.beta_train, sec);
  json_util::read(j, "checkpoint_every", c.checkpoint_every, sec);
  json_util::read(j, "eval_images", c.eval_images, sec);
  json_util::read(j, "sample_images", c.sample_images, sec);
  json_util::read(j, "n_splits", c.n_splits, sec);
  if (j.contains("generator")) c.generator = generator_config_from_json(j.at("generator"));
  if (j.contains("critic")) c.critic = critic_config_from_json(j.at("critic"));
  return c;
}

struct MetricsRecord {
  std::int64_t epoch = 0;
  double generator_loss = 0.0;
  double critic_loss = 0.0;
  double mse1 = 0.0;
  double mse2 = 0.0;
  std::optional<double> inception_score;
  std::optional<double> regularized_inception_score;
  std::optional<double> macro_f1;
  double wall_time = 0.0;  // seconds spent in this epoch
  std::int64_t generator_steps = 0;
  std::int64_t critic_steps = 0;
  std::int64_t shadow_updates = 0;
};

inline json to_json(const MetricsRecord& r) {
  json j = {{"epoch", r.epoch},
            {"generator_loss", r.generator_loss},
            {"critic_loss", r.critic_loss},
            {"mse1", r.mse1},
            {"mse2", r.mse2},
            {"wall_time", r.wall_time},
            {"generator_steps", r.generator_steps},
            {"critic_steps", r.critic_steps},
            {"shadow_updates", r.shadow_updates}};
  if (r.inception_score) j["inception_score"] = *r.inception_score;
  if (r.regularized_inception_score) j["regularized_inception_score"] = *r.regularized_inception_score;
  if (r.macro_f1) j["macro_f1"] = *r.macro_f1;
  return j;
}

inline MetricsRecord metrics_from_json(const json& j) {
  MetricsRecord r;
  r.epoch = j.at("epoch").get<std::int64_t>();
  r.generator_loss = j.at("generator_loss").get<double>();
  r.critic_loss = j.at("critic_loss").get<double>();
  r.mse1 = j.at("mse1").get<double>();
  r.mse2 = j.at("mse2").get<double>();
  r.wall_time = j.value("wall_time", 0.0);
  r.generator_steps = j.value("generator_steps", std::int64_t{0});
  r.critic_steps = j.value("critic_steps", std::int64_t{0});
  r.shadow_updates = j.value("shadow_updates", std::int64_t{0});
  if (j.contains("inception_score")) r.inception_score = j.at("inception_score").get<double>();
  if (j.contains("regularized_inception_score")) {
    r.regularized_inception_score = j.at("regularized_inception_score").get<double>();
  }
  if (j.contains("macro_f1")) r.macro_f1 = j.at("macro_f1").get<double>();
  return r;
}

/// Reads a line-delimited metrics log.
inline std::vector<MetricsRecord> read_metrics_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("metrics log missing: " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(metrics_from_json(json::parse(line)));
  }
  return out;
}

inline fs::path checkpoint_path(const fs::path& run_dir, std::int64_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04lld.pt", static_cast<long long>(epoch));
  return run_dir / "checkpoints" / name;
}

/// Highest-epoch checkpoint in `run_dir`, if any.
inline std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
  const auto dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) return std::nullopt;
  std::optional<fs::path> best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("epoch_", 0) == 0 && e.path().extension() == ".pt") {
      if (!best || name > best->filename().string()) best = e.path();
    }
  }
  return best;
}

struct TrainerOptions {
  std::optional<fs::path> run_dir;
  /// Enables inception score / macro F1 in the per-epoch record.
  eval::Classifier classifier{nullptr};
  /// Held-out ghosts for per-epoch scoring; defaults to the training ghosts.
  std::optional<cgi::GhostDataset> eval_ghosts;
  std::function<void(const MetricsRecord&)> on_epoch;
};

/// Adversarial training of G against D with the shadow regulariser. Each
/// generator step runs `critic_iters` critic updates on freshly sampled
/// batches, then one generator update on the next slice of the epoch's
/// ghost permutation, then one shadow update.
class Trainer {
 public:
  Trainer(TrainingConfig config, cgi::GhostDataset ghosts, data::LabeledImageSet reals, TrainerOptions options = {})
      : config_(std::move(config)),
        ghosts_(std::move(ghosts)),
        reals_(std::move(reals)),
        options_(std::move(options)),
        gen_(make_generator(config_.seed)) {
    config_.validate();
    check_inputs();
    generator_ = models::init_generator(config_.generator, config_.init_seed);
    critic_ = models::init_critic(config_.critic, config_.init_seed + 1);
    shadow_ = models::ShadowGenerator(generator_, config_.alpha);
    opt_g_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), adam_options());
    opt_d_ = std::make_unique<torch::optim::Adam>(critic_->parameters(), adam_options());
    ghost_x_ = ghosts_.ghosts.unsqueeze(1).contiguous();
    real_x_ = reals_.images.unsqueeze(1).to(torch::kFloat32).contiguous();
    if (options_.run_dir) prepare_run_dir();
  }

  /// One pass over the ghost set. Appends to the history and, with a run
  /// directory, to the metrics log, sample grids and checkpoints.
  MetricsRecord run_epoch() {
    const auto started = std::chrono::steady_clock::now();
    const auto n_ghost = ghost_x_.size(0);
    const auto n_real = real_x_.size(0);
    const auto batch = config_.batch_size;
    const auto steps = n_ghost / batch;
    generator_->train();
    critic_->train();
    shadow_.train();

    auto critic_fn = [this](const torch::Tensor& x) { return critic_->forward(x); };
    auto generator_fn = [this](const torch::Tensor& x) { return generator_->forward(x); };

    double g_sum = 0.0, d_sum = 0.0;
    std::int64_t g_steps = 0, d_steps = 0, sh_steps = 0;
    auto perm = torch::randperm(n_ghost, gen_, torch::kInt64);
    for (std::int64_t s = 0; s < steps; ++s) {
      for (std::int64_t c = 0; c < config_.critic_iters; ++c) {
        auto yi = torch::randint(n_ghost, {batch}, gen_, torch::kInt64);
        auto xi = torch::randint(n_real, {batch}, gen_, torch::kInt64);
        torch::Tensor fake;
        {
          torch::NoGradGuard no_grad;
          fake = generator_->forward(ghost_x_.index_select(0, yi));
        }
        auto terms = losses::critic_loss(critic_fn, real_x_.index_select(0, xi), fake, config_.gp_weight, gen_);
        require_finite(terms.wasserstein, "critic Wasserstein term");
        require_finite(terms.penalty, "gradient penalty");
        opt_d_->zero_grad();
        terms.total.backward();
        opt_d_->step();
        d_sum += terms.total.item<double>();
        ++d_steps;
      }

      auto y = ghost_x_.index_select(0, perm.slice(0, s * batch, (s + 1) * batch));
      set_requires_grad(*critic_, false);
      auto terms = losses::generator_loss(critic_fn, generator_fn, shadow_, y, config_.lambda1, config_.lambda2);
      require_finite(terms.adversarial, "adversarial term");
      require_finite(terms.mse1, "MSE1");
      require_finite(terms.mse2, "MSE2");
      opt_g_->zero_grad();
      terms.total.backward();
      opt_g_->step();
      set_requires_grad(*critic_, true);
      g_sum += terms.total.item<double>();
      ++g_steps;

      models::shadow_update(shadow_, generator_, config_.alpha);
      ++sh_steps;
    }

    ++epoch_;
    generator_steps_ += g_steps;
    critic_steps_ += d_steps;
    shadow_updates_ += sh_steps;

    MetricsRecord rec;
    rec.epoch = epoch_;
    rec.generator_loss = g_steps > 0 ? g_sum / static_cast<double>(g_steps) : 0.0;
    rec.critic_loss = d_steps > 0 ? d_sum / static_cast<double>(d_steps) : 0.0;
    rec.generator_steps = g_steps;
    rec.critic_steps = d_steps;
    rec.shadow_updates = sh_steps;

    const auto& eval_set = options_.eval_ghosts ? *options_.eval_ghosts : ghosts_;
    auto subset = eval_set.slice(0, std::min(eval_set.size(), config_.eval_images));
    auto* clf = options_.classifier.is_empty() ? nullptr : &options_.classifier;
    auto scores = eval::score_generator(generator_, shadow_, subset, clf, config_.n_splits);
    rec.mse1 = scores.mse1;
    rec.mse2 = scores.mse2;
    rec.inception_score = scores.inception_score;
    rec.regularized_inception_score = scores.regularized_inception_score;
    rec.macro_f1 = scores.macro_f1;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history_.push_back(rec);

    if (options_.run_dir) {
      const auto& dir = *options_.run_dir;
      std::ofstream(dir / "metrics.jsonl", std::ios::app) << to_json(rec).dump() << '\n';
      const auto k = std::min<std::int64_t>(config_.sample_images, scores.generated.size(0));
      if (k > 0) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04lld.png", static_cast<long long>(epoch_));
        imaging::write_image_grid(dir / "samples" / name, scores.generated.slice(0, 0, k));
      }
      if (epoch_ % config_.checkpoint_every == 0 || epoch_ == config_.epochs) {
        save_checkpoint(checkpoint_path(dir, epoch_));
      }
    }
    if (options_.on_epoch) options_.on_epoch(rec);
    return rec;
  }

  /// Runs epochs until `config.epochs` is reached.
  std::vector<MetricsRecord> train() {
    while (epoch_ < config_.epochs) run_epoch();
    return history_;
  }

  void save_checkpoint(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    torch::serialize::OutputArchive ar;
    ar.write("format_version", c10::IValue(static_cast<std::int64_t>(kCheckpointVersion)));
    ar.write("config", c10::IValue(to_json(config_).dump()));
    ar.write("epoch", c10::IValue(epoch_));
    ar.write("generator_steps", c10::IValue(generator_steps_));
    ar.write("critic_steps", c10::IValue(critic_steps_));
    ar.write("shadow_updates", c10::IValue(shadow_updates_));
    json hist = json::array();
    for (const auto& r : history_) hist.push_back(to_json(r));
    ar.write("metrics", c10::IValue(hist.dump()));
    ar.write("rng_state", generator_state(gen_));
    torch::serialize::OutputArchive g, d, sh, og, od;
    generator_->save(g);
    critic_->save(d);
    shadow_.network()->save(sh);
    opt_g_->save(og);
    opt_d_->save(od);
    ar.write("generator", g);
    ar.write("critic", d);
    ar.write("shadow", sh);
    ar.write("generator_optimizer", og);
    ar.write("critic_optimizer", od);
    ar.save_to(path.string());
  }

  /// Restores every piece of training state, including the sampler RNG, so
  /// the next epoch reproduces an uninterrupted run on the same platform.
  void load_checkpoint(const fs::path& path) {
    auto ar = open_checkpoint(path);
    c10::IValue v;
    ar.read("config", v);
    const auto saved = training_config_from_json(json::parse(v.toStringRef()));
    if (to_json(saved.generator) != to_json(config_.generator) || to_json(saved.critic) != to_json(config_.critic)) {
      throw IncompatibleFormat(path.string() + ": checkpoint architecture differs from the configured one");
    }
    ar.read("epoch", v);
    epoch_ = v.toInt();
    ar.read("generator_steps", v);
    generator_steps_ = v.toInt();
    ar.read("critic_steps", v);
    critic_steps_ = v.toInt();
    ar.read("shadow_updates", v);
    shadow_updates_ = v.toInt();
    ar.read("metrics", v);
    history_.clear();
    for (const auto& r : json::parse(v.toStringRef())) history_.push_back(metrics_from_json(r));
    torch::Tensor state;
    ar.read("rng_state", state);
    restore_generator_state(gen_, state);
    torch::serialize::InputArchive g, d, sh, og, od;
    ar.read("generator", g);
    ar.read("critic", d);
    ar.read("shadow", sh);
    ar.read("generator_optimizer", og);
    ar.read("critic_optimizer", od);
    generator_->load(g);
    critic_->load(d);
    shadow_.network()->load(sh);
    for (auto& p : shadow_.network()->parameters()) p.set_requires_grad(false);
    opt_g_->load(og);
    opt_d_->load(od);
    if (options_.run_dir) rewrite_metrics_log();
  }

  /// Loads the newest checkpoint of the run directory; false if none exists.
  bool resume() {
    if (!options_.run_dir) return false;
    auto latest = latest_checkpoint(*options_.run_dir);
    if (!latest) return false;
    load_checkpoint(*latest);
    return true;
  }

  const TrainingConfig& config() const { return config_; }
  models::Generator& generator() { return generator_; }
  models::Critic& critic() { return critic_; }
  models::ShadowGenerator& shadow() { return shadow_; }
  std::int64_t epoch() const { return epoch_; }
  std::int64_t generator_steps() const { return generator_steps_; }
  std::int64_t critic_steps() const { return critic_steps_; }
  std::int64_t shadow_updates() const { return shadow_updates_; }
  const std::vector<MetricsRecord>& history() const { return history_; }

  static torch::serialize::InputArchive open_checkpoint(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw InvalidArgument("checkpoint missing: " + path.string());
    torch::serialize::InputArchive ar;
    try {
      ar.load_from(path.string());
    } catch (const c10::Error& e) {
      throw IncompatibleFormat(path.string() + ": not a checkpoint (" + e.what_without_backtrace() + ")");
    }
    c10::IValue v;
    if (!ar.try_read("format_version", v) || v.toInt() != kCheckpointVersion) {
      throw IncompatibleFormat(path.string() + ": unsupported checkpoint version");
    }
    return ar;
  }

  static TrainingConfig read_config(const fs::path& path) {
    auto ar = open_checkpoint(path);
    c10::IValue v;
    ar.read("config", v);
    return training_config_from_json(json::parse(v.toStringRef()));
  }

 private:
  torch::optim::AdamOptions adam_options() const {
    return torch::optim::AdamOptions(config_.learning_rate).betas({config_.adam_beta1, config_.adam_beta2});
  }

  void check_inputs() const {
    const auto s = config_.generator.image_size;
    if (ghosts_.size() == 0 || reals_.size() == 0) throw InvalidArgument("train: ghost and real sets must be non-empty");
    if (ghosts_.height() != s || ghosts_.width() != s || reals_.images.size(1) != s || reals_.images.size(2) != s) {
      throw InvalidArgument("train: image sizes do not match the " + std::to_string(s) + "x" + std::to_string(s) +
                            " generator");
    }
    if (ghosts_.size() < config_.batch_size || reals_.size() < config_.batch_size) {
      throw InvalidArgument("train: batch_size " + std::to_string(config_.batch_size) +
                            " exceeds the ghost or real set size");
    }
    auto gs = ghosts_.source_indices.contiguous();
    auto rs = reals_.source_indices.contiguous();
    std::unordered_set<std::int64_t> seen(gs.data_ptr<std::int64_t>(), gs.data_ptr<std::int64_t>() + gs.numel());
    const auto* rp = rs.data_ptr<std::int64_t>();
    for (std::int64_t i = 0; i < rs.numel(); ++i) {
      if (seen.count(rp[i]) != 0) {
        throw InvalidArgument("train: ghost and ground-truth sets share source image " + std::to_string(rp[i]) +
                              "; training must be unpaired");
      }
    }
  }

  void prepare_run_dir() {
    const auto& dir = *options_.run_dir;
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "samples");
    std::ofstream(dir / "config.json") << to_json(config_).dump(2) << '\n';
    const auto& eval_set = options_.eval_ghosts ? *options_.eval_ghosts : ghosts_;
    const auto k = std::min(config_.sample_images, eval_set.size());
    if (k > 0) imaging::write_image_grid(dir / "samples" / "ghosts.png", eval_set.ghosts.slice(0, 0, k));
    if (!fs::exists(dir / "metrics.jsonl")) std::ofstream(dir / "metrics.jsonl").flush();
  }

  void rewrite_metrics_log() const {
    std::ofstream out(*options_.run_dir / "metrics.jsonl", std::ios::trunc);
    for (const auto& r : history_) out << to_json(r).dump() << '\n';
  }

  static void require_finite(const torch::Tensor& t, const char* term) {
    const double v = t.item<double>();
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite loss in " << term << " (value " << v << ")";
      throw NonFiniteLoss(term, msg.str());
    }
  }

  static void set_requires_grad(torch::nn::Module& m, bool on) {
    for (auto& p : m.parameters()) p.set_requires_grad(on);
  }

  TrainingConfig config_;
  cgi::GhostDataset ghosts_;
  data::LabeledImageSet reals_;
  TrainerOptions options_;
  at::Generator gen_;
  models::Generator generator_{nullptr};
  models::Critic critic_{nullptr};
  models::ShadowGenerator shadow_;
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  torch::Tensor ghost_x_;
  torch::Tensor real_x_;
  std::int64_t epoch_ = 0;
  std::int64_t generator_steps_ = 0;
  std::int64_t critic_steps_ = 0;
  std::int64_t shadow_updates_ = 0;
  std::vector<MetricsRecord> history_;
};

struct TrainResult {
  fs::path final_checkpoint;
  std::vector<MetricsRecord> metrics;
};

/// Trains to completion inside `options.run_dir`, first resuming from its
/// newest checkpoint when `resume` is set.
inline TrainResult train(const TrainingConfig& config, const cgi::GhostDataset& ghosts,
                         const data::LabeledImageSet& reals, TrainerOptions options, bool resume = false) {
  if (!options.run_dir) throw InvalidArgument("train: a run directory is required");
  const auto dir = *options.run_dir;
  Trainer trainer(config, ghosts, reals, std::move(options));
  if (resume) trainer.resume();
  auto metrics = trainer.train();
  auto final = checkpoint_path(dir, trainer.epoch());
  if (!fs::exists(final)) trainer.save_checkpoint(final);
  return {final, metrics};
}

}  // namespace cgigan::training
