#pragma once

#include <torch/torch.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cgigan/error.hpp"

namespace cgigan::metrics {

/// Inception score from per-image class probabilities `probs` (K, C).
/// Rows are cut into splits of ceil(K / n_splits) (the last may be smaller);
/// each split scores exp(mean_x KL(p(c|x) || p(c))) with p(c) the split's
/// marginal, and the split scores are averaged. 0 log 0 is taken as 0.
inline double inception_score_from_probs(const torch::Tensor& probs, std::int64_t n_splits = 10) {
  if (probs.dim() != 2 || probs.size(0) == 0) throw InvalidArgument("inception_score: empty batch");
  if (n_splits < 1) throw InvalidArgument("inception_score: n_splits must be >= 1");
  auto p = probs.to(torch::kFloat64);
  const auto k = p.size(0);
  const auto chunk = (k + n_splits - 1) / n_splits;
  double total = 0.0;
  std::int64_t splits = 0;
  for (const auto& part : p.split(chunk, 0)) {
    auto marginal = part.mean(0, /*keepdim=*/true);
    auto ratio = torch::where(part > 0, part / marginal, torch::ones_like(part));
    auto kl = (part * torch::log(ratio)).sum(1);
    total += std::exp(kl.mean().item<double>());
    ++splits;
  }
  return total / static_cast<double>(splits);
}

/// (C, C) counts, rows = true class, columns = predicted class.
inline torch::Tensor confusion_matrix(const torch::Tensor& predicted, const torch::Tensor& truth,
                                      std::int64_t num_classes = 10) {
  if (predicted.numel() != truth.numel()) {
    throw InvalidArgument("confusion_matrix: " + std::to_string(predicted.numel()) + " predictions vs " +
                          std::to_string(truth.numel()) + " labels");
  }
  auto t = truth.to(torch::kInt64).reshape({-1});
  auto p = predicted.to(torch::kInt64).reshape({-1});
  if (t.numel() > 0 && (t.min().item<std::int64_t>() < 0 || t.max().item<std::int64_t>() >= num_classes ||
                        p.min().item<std::int64_t>() < 0 || p.max().item<std::int64_t>() >= num_classes)) {
    throw InvalidArgument("confusion_matrix: class index outside [0, " + std::to_string(num_classes) + ")");
  }
  auto flat = torch::bincount(t * num_classes + p, /*weights=*/{}, num_classes * num_classes);
  return flat.reshape({num_classes, num_classes});
}

/// Unweighted mean of per-class F1 = 2TP / (2TP + FP + FN). A class absent
/// from both predictions and truth contributes 0.
inline double macro_f1_from_predictions(const torch::Tensor& predicted, const torch::Tensor& truth,
                                        std::int64_t num_classes = 10) {
  auto cm = confusion_matrix(predicted, truth, num_classes).to(torch::kFloat64);
  auto tp = cm.diagonal();
  auto fp = cm.sum(0) - tp;
  auto fn = cm.sum(1) - tp;
  auto denom = 2 * tp + fp + fn;
  auto f1 = torch::where(denom > 0, 2 * tp / torch::where(denom > 0, denom, torch::ones_like(denom)),
                         torch::zeros_like(denom));
  return f1.mean().item<double>();
}

/// IS - MSE1 - MSE2.
inline double regularized_inception_score(double inception, double mse1, double mse2) {
  if (mse1 < 0 || mse2 < 0) throw InvalidArgument("regularized_inception_score: MSE terms must be >= 0");
  return inception - mse1 - mse2;
}

}  // namespace cgigan::metrics
