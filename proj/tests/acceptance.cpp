// One PASS / FAIL / SKIP line per acceptance criterion.
//
//   cgigan_acceptance [criterion ...]     (default: all)
//
// Environment: MNIST_DIR overrides the data location, CGIGAN_FULL_SCALE=1
// enables the full-size reproduction, CGIGAN_TREND_EPOCHS sets the epoch
// budget of the regularisation trend run.

#include <torch/torch.h>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cgigan/cgigan.hpp"
#include "oracles.hpp"

using namespace cgigan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { pass, fail, skip } kind;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

fs::path mnist_dir() {
  if (const char* env = std::getenv("MNIST_DIR")) return env;
  return CGIGAN_MNIST_DIR;
}

bool have_mnist() { return fs::exists(mnist_dir() / "train-images-idx3-ubyte"); }

std::int64_t env_int(const char* name, std::int64_t fallback) {
  const char* v = std::getenv(name);
  return v != nullptr ? std::stoll(v) : fallback;
}

/// Scratch directory under the system temp dir, removed at scope exit.
struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag) {
    path = fs::temp_directory_path() / ("cgigan_acceptance_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const data::MnistData& mnist() {
  static const data::MnistData m = data::load_mnist(mnist_dir());
  return m;
}

std::vector<double> flat(const torch::Tensor& t) {
  auto c = t.to(torch::kFloat64).contiguous().reshape({-1});
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

eval::Classifier full_mnist_classifier(eval::ClassifierQuality* quality) {
  eval::ClassifierTraining opt;
  opt.epochs = 5;
  opt.min_inception_score = 0;  // the criterion reports the values itself
  opt.min_accuracy = 0;
  auto net = eval::train_classifier(mnist().train, mnist().test, 0, opt);
  if (quality != nullptr) *quality = eval::assess_classifier(net, mnist().test);
  return net;
}

// 1. Tensor ghost reconstruction against the loop oracle.
Outcome cgi_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> side(1, 8), count(1, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    int h = side(rng), w = side(rng);
    while (h * w > 64) w = side(rng);
    const int m = count(rng);
    auto bank = cgi::generate_speckle_bank(m, h, w, rng());
    auto object = torch::empty({h, w}, torch::kFloat64);
    auto* op = object.data_ptr<double>();
    for (int i = 0; i < h * w; ++i) op[i] = unit(rng);
    auto gi = cgi::reconstruct_ghost(cgi::bucket_measure({object, std::nullopt}, bank), bank);

    std::vector<std::vector<double>> patterns;
    for (int k = 0; k < m; ++k) patterns.push_back(flat(bank.patterns[k]));
    auto expected = oracle::ghost(oracle::buckets(flat(object), patterns), patterns);
    auto got = flat(gi.pixels);
    for (std::size_t p = 0; p < got.size(); ++p) worst = std::max(worst, std::abs(got[p] - expected[p]));
  }
  return verdict(worst <= 1e-10, "1000 pairs, max |diff| " + fmt(worst, 3) + " (<= 1e-10)");
}

// 2. Reconstruction fidelity rises with the pattern count.
Outcome snr_monotonic() {
  if (!have_mnist()) return {Outcome::skip, "MNIST not found in " + mnist_dir().string()};
  auto images = mnist().train.head(100);
  auto master = cgi::generate_speckle_bank(784, 28, 28, 0);
  std::vector<double> means;
  for (std::int64_t m : {196, 392, 784}) {
    auto ds = data::build_ghost_dataset(images, master.head(m));
    double sum = 0.0;
    for (std::int64_t i = 0; i < 100; ++i) sum += oracle::pearson(flat(ds.ghosts[i]), flat(images.images[i]));
    means.push_back(sum / 100.0);
  }
  const bool ok = means[0] < means[1] && means[1] < means[2];
  return verdict(ok, "mean Pearson r at M=196/392/784: " + fmt(means[0]) + " < " + fmt(means[1]) + " < " +
                         fmt(means[2]));
}

// 3. The scoring classifier is good enough to trust.
Outcome classifier_quality() {
  if (!have_mnist()) return {Outcome::skip, "MNIST not found in " + mnist_dir().string()};
  eval::ClassifierQuality q;
  full_mnist_classifier(&q);
  return verdict(q.inception_score >= 9.5 && q.accuracy >= 0.98,
                 "held-out IS " + fmt(q.inception_score) + " (>= 9.5), accuracy " + fmt(q.accuracy) + " (>= 0.98)");
}

// 4. Metrics on inputs with closed-form answers.
Outcome metric_analytics() {
  std::vector<std::string> failures;
  auto check = [&](const std::string& what, double got, double want) {
    if (std::abs(got - want) > 1e-6) failures.push_back(what + " = " + fmt(got, 8) + ", want " + fmt(want, 8));
  };
  check("IS(uniform)", metrics::inception_score_from_probs(torch::full({100, 10}, 0.1, torch::kFloat64), 10), 1.0);
  check("IS(one-hot)",
        metrics::inception_score_from_probs(torch::one_hot(torch::arange(100) % 10, 10).to(torch::kFloat64), 10), 10.0);
  auto truth = torch::arange(100) % 10;
  check("F1(perfect)", metrics::macro_f1_from_predictions(truth, truth), 1.0);
  check("F1(all class 0)", metrics::macro_f1_from_predictions(torch::zeros({100}, torch::kInt64), truth),
        (2 * 0.1 / 1.1) / 10);
  check("regularized IS", metrics::regularized_inception_score(8.0, 0.5, 0.3), 7.2);

  auto probs = torch::softmax(2 * torch::randn({257, 10}, torch::kFloat64), 1);
  std::vector<std::vector<double>> rows;
  for (std::int64_t i = 0; i < probs.size(0); ++i) rows.push_back(flat(probs[i]));
  check("IS(random) vs oracle", metrics::inception_score_from_probs(probs, 10), oracle::inception_score(rows, 10));
  std::string detail = failures.empty() ? "IS 1/10 bounds, F1 1 and 0.01818, regularized IS, oracle IS" : "";
  for (const auto& f : failures) detail += f + "; ";
  return verdict(failures.empty(), detail);
}

models::GeneratorConfig micro_generator() {
  models::GeneratorConfig c;
  c.image_size = 8;
  c.encoder_channels = {3, 4};
  c.encoder_strides = {2, 1};
  c.decoder_channels = {4, 3};
  c.decoder_strides = {2, 1};
  c.decoder_output_padding = {1, 0};
  return c;
}

models::CriticConfig micro_critic() {
  models::CriticConfig c;
  c.image_size = 8;
  c.channels = {3, 4};
  c.strides = {2, 2};
  c.flatten_width = 16;
  return c;
}

// 5. Loss terms on cases with known values, plus finite differences.
Outcome loss_analytics() {
  std::vector<std::string> failures;
  auto gen = make_generator(0);

  // A constant critic has zero input gradient: the unweighted penalty is exactly 1.
  auto constant = [](const torch::Tensor& x) { return torch::full({x.size(0)}, 0.3, x.options()); };
  auto terms = losses::critic_loss(constant, torch::rand({4, 1, 3, 3}), torch::rand({4, 1, 3, 3}), 10.0, gen);
  const double gp = terms.penalty.item<double>();
  if (std::abs(gp - 1.0) > 1e-6 || std::abs(gp * 10.0 - 10.0) > 1e-5) {
    failures.push_back("zero-gradient penalty " + fmt(gp, 8) + " (want 1, i.e. gp_weight after weighting)");
  }

  // Zero regularisation weights leave only -mean D(G(y)).
  auto g = models::init_generator(micro_generator(), 0);
  auto d = models::init_critic(micro_critic(), 1);
  g->eval();
  models::ShadowGenerator sh(g, 0.1);
  sh.eval();
  auto y = torch::rand({4, 1, 8, 8});
  auto adv = losses::generator_loss([&](const torch::Tensor& x) { return d->forward(x); },
                                    [&](const torch::Tensor& x) { return g->forward(x); }, sh, y, 0.0, 0.0);
  if (!torch::equal(adv.total, -d->forward(g->forward(y)).mean())) failures.push_back("lambda=0 is not pure adversarial");

  // k shadow updates towards a fixed net keep a (1 - alpha)^k share of the start.
  auto live = models::init_generator(micro_generator(), 1);
  live->to(torch::kFloat64);
  auto start = models::init_generator(micro_generator(), 2);
  start->to(torch::kFloat64);
  models::ShadowGenerator shadow(start, 0.1);
  for (int i = 0; i < 25; ++i) models::shadow_update(shadow, live);
  const double keep = std::pow(0.9, 25);
  auto sp = start->named_parameters();
  auto lp = live->named_parameters();
  double worst_ema = 0.0;
  for (auto& kv : shadow.network()->named_parameters()) {
    auto expected = keep * sp[kv.key()] + (1 - keep) * lp[kv.key()];
    worst_ema = std::max(worst_ema, (kv.value() - expected).abs().max().item<double>());
  }
  if (worst_ema > 1e-6) failures.push_back("EMA identity off by " + fmt(worst_ema, 3));

  // Autodiff through the penalty against central differences.
  auto critic = models::init_critic(micro_critic(), 3);
  critic->to(torch::kFloat64);
  auto real = torch::rand({3, 1, 8, 8}, torch::kFloat64);
  auto fake = torch::rand({3, 1, 8, 8}, torch::kFloat64);
  auto loss = [&] {
    auto g42 = make_generator(42);
    return losses::critic_loss([&](const torch::Tensor& x) { return critic->forward(x); }, real, fake, 10.0, g42)
        .total;
  };
  critic->zero_grad();
  loss().backward();
  double worst_fd = 0.0;
  for (auto& p : critic->parameters()) {
    auto data = p.data().view({-1});
    auto grad = p.grad().view({-1});
    for (std::int64_t idx : {std::int64_t{0}, p.numel() / 2}) {
      const double orig = data[idx].item<double>();
      const double h = 1e-6;
      data[idx] = orig + h;
      const double up = loss().item<double>();
      data[idx] = orig - h;
      const double down = loss().item<double>();
      data[idx] = orig;
      const double fd = (up - down) / (2 * h);
      const double ad = grad[idx].item<double>();
      worst_fd = std::max(worst_fd, std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-4}));
    }
  }
  if (worst_fd > 1e-3) failures.push_back("finite-difference relative error " + fmt(worst_fd, 3));

  std::string detail = "penalty " + fmt(gp, 8) + ", lambda=0 exact, EMA max err " + fmt(worst_ema, 3) +
                       ", FD rel err " + fmt(worst_fd, 3);
  for (const auto& f : failures) detail += "; " + f;
  return verdict(failures.empty(), detail);
}

struct Subsets {
  cgi::GhostDataset train_ghosts;
  data::LabeledImageSet reals;
  cgi::GhostDataset test_ghosts;
};

/// Unpaired halves of the first `train_images` training images, ghosts at `m` patterns.
Subsets unpaired_subsets(std::int64_t train_images, std::int64_t test_images, std::int64_t m) {
  auto train = mnist().train.head(train_images);
  auto split = data::unpaired_split(train, 0);
  auto a = train.select_sources(split.ghost_source_indices, data::SplitTag::subset_a);
  auto b = train.select_sources(split.ground_truth_indices, data::SplitTag::subset_b);
  auto test = mnist().test.head(test_images);
  auto master = cgi::generate_speckle_bank(784, 28, 28, 0);
  return {data::build_ghost_dataset(a, master.head(m)), b, data::build_ghost_dataset(test, master.head(m))};
}

double trained_f1(const Subsets& s, training::TrainingConfig cfg, eval::Classifier& classifier, const fs::path& dir) {
  training::TrainerOptions opt;
  opt.run_dir = dir;
  auto result = training::train(cfg, s.train_ghosts, s.reals, opt);
  auto cell = eval::evaluate_cell("trend", result.final_checkpoint, s.test_ghosts.beta, s.test_ghosts, classifier,
                                  eval::CellOptions{});
  return cell.macro_f1;
}

// 6. Shadow regularisation is what makes reconstructions class-faithful.
Outcome regularization_trend() {
  if (!have_mnist()) return {Outcome::skip, "MNIST not found in " + mnist_dir().string()};
  const auto epochs = env_int("CGIGAN_TREND_EPOCHS", 6);
  auto subsets = unpaired_subsets(10000, 2000, 392);
  auto classifier = full_mnist_classifier(nullptr);
  Scratch scratch("trend");
  training::TrainingConfig cfg;
  cfg.beta_train = 0.5;
  cfg.epochs = epochs;
  cfg.batch_size = 64;
  cfg.checkpoint_every = epochs;
  cfg.eval_images = 256;
  cfg.sample_images = 16;
  cfg.lambda1 = cfg.lambda2 = 10.0;
  const double f1_reg = trained_f1(subsets, cfg, classifier, scratch.path / "lambda10_10");
  std::printf("  lambda=(10,10): F1 %.4f\n", f1_reg);
  std::fflush(stdout);
  cfg.lambda1 = cfg.lambda2 = 0.0;
  const double f1_free = trained_f1(subsets, cfg, classifier, scratch.path / "lambda0_0");
  std::printf("  lambda=(0,0):   F1 %.4f\n", f1_free);
  return verdict(f1_reg >= 0.5 && f1_free <= 0.2,
                 "beta=0.5, 5000+5000 unpaired, " + std::to_string(epochs) + " epochs: F1 " + fmt(f1_reg) +
                     " (>= 0.5) with lambda=(10,10), " + fmt(f1_free) + " (<= 0.2) with lambda=(0,0)");
}

// 7. Full-size cross-beta reproduction: hours of compute, opt-in.
Outcome full_scale() {
  const char* flag = std::getenv("CGIGAN_FULL_SCALE");
  if (flag == nullptr || std::string(flag) != "1") return {Outcome::skip, "set CGIGAN_FULL_SCALE=1 to run"};
  if (!have_mnist()) return {Outcome::skip, "MNIST not found in " + mnist_dir().string()};
  auto subsets = unpaired_subsets(60000, 10000, 196);
  eval::ClassifierQuality q;
  auto classifier = full_mnist_classifier(&q);
  Scratch scratch("full");
  training::TrainingConfig cfg;  // defaults are the full-size settings
  cfg.checkpoint_every = 10;
  training::TrainerOptions opt;
  opt.run_dir = scratch.path / "beta0.25";
  opt.on_epoch = [](const training::MetricsRecord& r) {
    std::printf("  epoch %lld  G %.4f  D %.4f\n", static_cast<long long>(r.epoch), r.generator_loss, r.critic_loss);
    std::fflush(stdout);
  };
  auto result = training::train(cfg, subsets.train_ghosts, subsets.reals, opt);
  auto master = cgi::generate_speckle_bank(784, 28, 28, 0);
  std::map<double, cgi::GhostDataset> tests;
  for (std::int64_t m : {196, 392, 784}) tests[m / 784.0] = data::build_ghost_dataset(mnist().test, master.head(m));
  auto report = eval::cross_beta_evaluation({{0.25, result.final_checkpoint}}, tests, classifier, {});
  std::string detail;
  bool ok = true;
  for (const auto& c : report.cells) {
    detail += "test beta " + fmt(c.test_beta) + ": IS " + fmt(c.inception_score) + " F1 " + fmt(c.macro_f1) + "; ";
    ok = ok && std::isfinite(c.inception_score) && c.inception_score >= 1.0;
  }
  return verdict(ok, detail);
}

// 8. Short end-to-end run: finite losses and exact resume.
Outcome smoke() {
  if (!have_mnist()) return {Outcome::skip, "MNIST not found in " + mnist_dir().string()};
  auto subsets = unpaired_subsets(512, 256, 196);
  training::TrainingConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.eval_images = 128;
  cfg.sample_images = 16;
  cfg.seed = 7;
  Scratch scratch("smoke");

  training::TrainerOptions a_opt;
  a_opt.run_dir = scratch.path / "a";
  training::Trainer a(cfg, subsets.train_ghosts, subsets.reals, a_opt);
  auto history = a.train();
  bool finite = history.size() == 2;
  for (const auto& r : history) {
    finite = finite && std::isfinite(r.generator_loss) && std::isfinite(r.critic_loss) && std::isfinite(r.mse1) &&
             std::isfinite(r.mse2);
  }

  training::TrainerOptions b_opt;
  b_opt.run_dir = scratch.path / "b";
  training::Trainer b(cfg, subsets.train_ghosts, subsets.reals, b_opt);
  b.load_checkpoint(training::checkpoint_path(*a_opt.run_dir, 1));
  auto resumed = b.train();
  bool exact = resumed.size() == 2 && resumed[1].generator_loss == history[1].generator_loss &&
               resumed[1].critic_loss == history[1].critic_loss;
  auto pa = a.generator()->parameters();
  auto pb = b.generator()->parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) exact = exact && torch::equal(pa[i], pb[i]);
  auto sa = a.shadow().network()->parameters();
  auto sb = b.shadow().network()->parameters();
  for (std::size_t i = 0; i < sa.size(); ++i) exact = exact && torch::equal(sa[i], sb[i]);
  return verdict(finite && exact, std::string("2 epochs on 256 ghosts: losses ") + (finite ? "finite" : "NOT finite") +
                                      ", resume from epoch 1 " + (exact ? "bit-identical" : "DIVERGED"));
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0: no wall-clock limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  const std::vector<Criterion> all{
      {1, "ghost reconstruction matches loop oracle", 10, cgi_oracle},
      {2, "fidelity increases with pattern count", 120, snr_monotonic},
      {3, "classifier quality", 900, classifier_quality},
      {4, "metric analytics", 0, metric_analytics},
      {5, "loss analytics", 0, loss_analytics},
      {6, "shadow regularisation trend", 0, regularization_trend},
      {7, "full-scale reproduction", 0, full_scale},
      {8, "smoke run with resume", 300, smoke},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::stoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    torch::manual_seed(static_cast<std::uint64_t>(c.id));
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.kind == Outcome::pass && c.budget_seconds > 0 && secs > c.budget_seconds) {
      o = {Outcome::fail, o.detail + "; took " + fmt(secs) + " s, budget " + fmt(c.budget_seconds) + " s"};
    }
    const char* tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.kind == Outcome::fail;
  }
  return failures == 0 ? 0 : 1;
}
