#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>

#include "cgigan/datasets.hpp"
#include "cgigan/error.hpp"
#include "cgigan/metrics.hpp"
#include "cgigan/rng.hpp"

namespace cgigan::eval {

namespace nn = torch::nn;

/// Small 10-class digit classifier: two conv/pool stages and two dense layers.
class ClassifierImpl : public nn::Module {
 public:
  ClassifierImpl() {
    conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(1, 32, 3).padding(1)));
    conv2_ = register_module("conv2", nn::Conv2d(nn::Conv2dOptions(32, 64, 3).padding(1)));
    fc1_ = register_module("fc1", nn::Linear(64 * 7 * 7, 128));
    fc2_ = register_module("fc2", nn::Linear(128, 10));
  }

  /// Logits (batch, 10) for (batch, 1, 28, 28) inputs.
  torch::Tensor forward(const torch::Tensor& x) {
    if (x.dim() != 4 || x.size(1) != 1 || x.size(2) != 28 || x.size(3) != 28) {
      throw InvalidArgument("classifier: expected (batch, 1, 28, 28), got " + c10::str(x.sizes()));
    }
    auto h = torch::max_pool2d(torch::relu(conv1_->forward(x)), 2);
    h = torch::max_pool2d(torch::relu(conv2_->forward(h)), 2);
    h = torch::relu(fc1_->forward(h.flatten(1)));
    return fc2_->forward(h);
  }

  void reset_parameters(std::uint64_t seed) {
    torch::NoGradGuard no_grad;
    auto gen = make_generator(seed);
    auto he = [&](torch::Tensor& w, double fan_in) { w.uniform_(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in), gen); };
    he(conv1_->weight, 9.0);
    he(conv2_->weight, 32 * 9.0);
    he(fc1_->weight, 64 * 49.0);
    fc2_->weight.uniform_(-std::sqrt(3.0 / 128.0), std::sqrt(3.0 / 128.0), gen);
    for (auto* b : {&conv1_->bias, &conv2_->bias, &fc1_->bias, &fc2_->bias}) b->zero_();
  }

 private:
  nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(Classifier);

inline torch::Tensor as_image_batch(const torch::Tensor& images) {
  return images.dim() == 3 ? images.unsqueeze(1) : images;
}

/// Row-stochastic (K, 10) float64 class probabilities, computed in eval mode.
inline torch::Tensor predict_probabilities(Classifier& classifier, const torch::Tensor& images,
                                           std::int64_t batch = 1000) {
  torch::NoGradGuard no_grad;
  const bool was_training = classifier->is_training();
  classifier->eval();
  auto x = as_image_batch(images).to(torch::kFloat32);
  std::vector<torch::Tensor> parts;
  for (std::int64_t i = 0; i < x.size(0); i += batch) {
    auto logits = classifier->forward(x.slice(0, i, std::min(x.size(0), i + batch)));
    parts.push_back(torch::softmax(logits.to(torch::kFloat64), 1));
  }
  classifier->train(was_training);
  return parts.empty() ? torch::empty({0, 10}, torch::kFloat64) : torch::cat(parts);
}

inline torch::Tensor predict_labels(Classifier& classifier, const torch::Tensor& images) {
  return predict_probabilities(classifier, images).argmax(1);
}

inline double inception_score(Classifier& classifier, const torch::Tensor& images, std::int64_t n_splits = 10) {
  if (!images.defined() || images.size(0) == 0) throw InvalidArgument("inception_score: empty batch");
  return metrics::inception_score_from_probs(predict_probabilities(classifier, images), n_splits);
}

/// Macro F1 of the classifier's argmax predictions on `generated` against the
/// labels of the images the ghosts were simulated from.
inline double macro_f1(Classifier& classifier, const torch::Tensor& generated, const torch::Tensor& true_labels) {
  if (generated.size(0) != true_labels.numel()) {
    throw InvalidArgument("macro_f1: " + std::to_string(generated.size(0)) + " images vs " +
                          std::to_string(true_labels.numel()) + " labels");
  }
  return metrics::macro_f1_from_predictions(predict_labels(classifier, generated), true_labels);
}

struct ClassifierTraining {
  std::int64_t epochs = 5;
  std::int64_t batch_size = 128;
  double learning_rate = 1e-3;
  double min_inception_score = 9.5;
  double min_accuracy = 0.98;
  std::function<void(std::int64_t epoch, double loss)> on_epoch;
};

struct ClassifierQuality {
  double inception_score = 0.0;
  double accuracy = 0.0;
};

inline ClassifierQuality assess_classifier(Classifier& classifier, const data::LabeledImageSet& held_out) {
  auto probs = predict_probabilities(classifier, held_out.images);
  ClassifierQuality q;
  q.inception_score = metrics::inception_score_from_probs(probs, 10);
  q.accuracy = probs.argmax(1).eq(held_out.labels).to(torch::kFloat64).mean().item<double>();
  return q;
}

/// Adam on cross-entropy with a seeded shuffle. Throws TrainingQualityError
/// when the held-out inception score or accuracy falls short.
inline Classifier train_classifier(const data::LabeledImageSet& train, const data::LabeledImageSet& held_out,
                                   std::uint64_t seed, const ClassifierTraining& opt = {}) {
  if (train.size() == 0) throw InvalidArgument("train_classifier: empty training set");
  Classifier net;
  net->reset_parameters(seed);
  auto gen = make_generator(seed + 1);
  torch::optim::Adam adam(net->parameters(), torch::optim::AdamOptions(opt.learning_rate));
  auto x = as_image_batch(train.images).to(torch::kFloat32);
  const auto n = train.size();
  net->train();
  for (std::int64_t epoch = 0; epoch < opt.epochs; ++epoch) {
    auto perm = torch::randperm(n, gen, torch::kInt64);
    double loss_sum = 0.0;
    std::int64_t batches = 0;
    for (std::int64_t i = 0; i < n; i += opt.batch_size) {
      auto idx = perm.slice(0, i, std::min(n, i + opt.batch_size));
      auto loss = torch::cross_entropy_loss(net->forward(x.index_select(0, idx)), train.labels.index_select(0, idx));
      adam.zero_grad();
      loss.backward();
      adam.step();
      loss_sum += loss.item<double>();
      ++batches;
    }
    if (opt.on_epoch) opt.on_epoch(epoch + 1, loss_sum / static_cast<double>(batches));
  }
  net->eval();
  if (held_out.size() > 0 && (opt.min_inception_score > 0 || opt.min_accuracy > 0)) {
    auto q = assess_classifier(net, held_out);
    if (q.inception_score < opt.min_inception_score || q.accuracy < opt.min_accuracy) {
      std::ostringstream msg;
      msg << std::setprecision(4) << "classifier below quality thresholds: inception score " << q.inception_score
          << " (need " << opt.min_inception_score << "), accuracy " << q.accuracy << " (need " << opt.min_accuracy
          << ")";
      throw TrainingQualityError(msg.str());
    }
  }
  return net;
}

inline void save_classifier(Classifier& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  torch::save(net, path.string());
}

inline Classifier load_classifier(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw InvalidArgument("classifier checkpoint missing: " + path.string());
  Classifier net;
  torch::load(net, path.string());
  net->eval();
  return net;
}

}  // namespace cgigan::eval
