#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <optional>

#include "cgigan/cgi.hpp"
#include "cgigan/classifier.hpp"
#include "cgigan/losses.hpp"
#include "cgigan/metrics.hpp"
#include "cgigan/models.hpp"

namespace cgigan::eval {

struct GeneratorScores {
  double mse1 = 0.0;
  double mse2 = 0.0;
  std::optional<double> inception_score;
  std::optional<double> regularized_inception_score;
  std::optional<double> macro_f1;
  torch::Tensor generated;  // (K, 1, H, W) float32
};

/// Runs G and G_sh in eval mode over `ghosts` and scores the reconstructions.
/// Classifier-based scores are filled only when `classifier` is non-null;
/// macro F1 additionally needs every label to be a class (>= 0).
inline GeneratorScores score_generator(models::Generator& generator, models::ShadowGenerator& shadow,
                                       const cgi::GhostDataset& ghosts, Classifier* classifier,
                                       std::int64_t n_splits = 10, std::int64_t batch = 512) {
  torch::NoGradGuard no_grad;
  const bool g_training = generator->is_training();
  const bool s_training = shadow.network()->is_training();
  generator->eval();
  shadow.eval();

  auto dtype = generator->parameters().front().scalar_type();
  auto y = ghosts.ghosts.unsqueeze(1).to(dtype);
  const auto n = y.size(0);
  if (n == 0) throw InvalidArgument("score_generator: empty ghost set");
  std::vector<torch::Tensor> outs;
  double se1 = 0.0, se2 = 0.0;
  for (std::int64_t i = 0; i < n; i += batch) {
    auto yb = y.slice(0, i, std::min(n, i + batch));
    auto gb = generator->forward(yb);
    const auto w = static_cast<double>(yb.size(0));
    se1 += losses::mse1(gb, yb).item<double>() * w;
    se2 += losses::mse2(shadow, gb, yb).item<double>() * w;
    outs.push_back(gb.to(torch::kFloat32));
  }
  generator->train(g_training);
  shadow.train(s_training);

  GeneratorScores s;
  s.mse1 = se1 / static_cast<double>(n);
  s.mse2 = se2 / static_cast<double>(n);
  s.generated = torch::cat(outs);
  if (classifier != nullptr) {
    auto probs = predict_probabilities(*classifier, s.generated);
    s.inception_score = metrics::inception_score_from_probs(probs, n_splits);
    s.regularized_inception_score = metrics::regularized_inception_score(*s.inception_score, s.mse1, s.mse2);
    if (ghosts.labels.numel() == n && ghosts.labels.min().item<std::int64_t>() >= 0) {
      s.macro_f1 = metrics::macro_f1_from_predictions(probs.argmax(1), ghosts.labels);
    }
  }
  return s;
}

}  // namespace cgigan::eval
