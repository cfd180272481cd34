#pragma once

// Constrained WGAN-GP objective. Critics, generators and shadow networks are
// taken as callables `Tensor(const Tensor&)` so the terms can be checked
// against closed-form toy networks as well as the real modules.

#include <torch/torch.h>

#include <string>

#include "cgigan/error.hpp"

namespace cgigan::losses {

namespace detail {

inline void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* who) {
  if (a.sizes() != b.sizes()) {
    throw InvalidArgument(std::string(who) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                          c10::str(b.sizes()));
  }
}

}  // namespace detail

/// Mean over the batch of the per-image mean squared pixel difference.
inline torch::Tensor mse1(const torch::Tensor& generated, const torch::Tensor& ghosts) {
  detail::check_same_shape(generated, ghosts, "mse1");
  if (generated.dim() < 1 || generated.size(0) == 0) throw InvalidArgument("mse1: empty batch");
  return (generated - ghosts).square().flatten(1).mean(1).mean();
}

/// mse1 measured after both batches pass through the shadow network. The
/// shadow's own parameters must not require gradients; gradients still reach
/// `generated` through its forward computation.
template <class Shadow>
torch::Tensor mse2(Shadow&& shadow, const torch::Tensor& generated, const torch::Tensor& ghosts) {
  detail::check_same_shape(generated, ghosts, "mse2");
  return mse1(shadow(generated), shadow(ghosts));
}

/// Mean over the batch of (||grad_x D(x_hat)||_2 - 1)^2 at x_hat = t*real + (1-t)*fake,
/// t ~ U[0, 1) drawn once per image from `gen`. The result stays differentiable
/// with respect to the critic's parameters.
template <class Critic>
torch::Tensor gradient_penalty(Critic&& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               at::Generator& gen) {
  detail::check_same_shape(real, fake, "gradient_penalty");
  if (real.dim() < 1 || real.size(0) < 1) throw InvalidArgument("gradient_penalty: empty batch");
  std::vector<std::int64_t> tshape(static_cast<std::size_t>(real.dim()), 1);
  tshape[0] = real.size(0);
  auto t = torch::rand(tshape, gen, real.options().requires_grad(false));
  auto x_hat = (t * real.detach() + (1 - t) * fake.detach()).requires_grad_(true);
  auto scores = critic(x_hat);
  torch::Tensor grad;
  if (scores.requires_grad()) {
    grad = torch::autograd::grad({scores}, {x_hat}, {torch::ones_like(scores)}, /*retain_graph=*/true,
                                 /*create_graph=*/true, /*allow_unused=*/true)[0];
  }
  if (!grad.defined()) grad = torch::zeros_like(x_hat);
  return (grad.flatten(1).norm(2, 1) - 1).square().mean();
}

struct CriticLossTerms {
  torch::Tensor total;
  torch::Tensor wasserstein;  // -E[D(x)] + E[D(G(y))]
  torch::Tensor penalty;      // before gp_weight
};

/// -mean D(x) + mean D(G(y)) + gp_weight * penalty. `fake` is detached so no
/// gradient reaches the generator.
template <class Critic>
CriticLossTerms critic_loss(Critic&& critic, const torch::Tensor& real, const torch::Tensor& fake, double gp_weight,
                            at::Generator& gen) {
  detail::check_same_shape(real, fake, "critic_loss");
  auto fake_d = fake.detach();
  CriticLossTerms out;
  out.wasserstein = -critic(real).mean() + critic(fake_d).mean();
  out.penalty = gradient_penalty(critic, real, fake_d, gen);
  out.total = out.wasserstein + gp_weight * out.penalty;
  return out;
}

struct GeneratorLossTerms {
  torch::Tensor total;
  torch::Tensor adversarial;  // -E[D(G(y))]
  torch::Tensor mse1;
  torch::Tensor mse2;  // only evaluated when lambda2 != 0, zero otherwise
  torch::Tensor generated;
};

/// -mean D(G(y)) + lambda1 * mse1(G(y), y) + lambda2 * mse2(G_sh, G(y), y).
template <class Critic, class Gen, class Shadow>
GeneratorLossTerms generator_loss(Critic&& critic, Gen&& generator, Shadow&& shadow, const torch::Tensor& ghosts,
                                  double lambda1, double lambda2) {
  if (lambda1 < 0 || lambda2 < 0) throw InvalidArgument("generator_loss: lambda1 and lambda2 must be >= 0");
  GeneratorLossTerms out;
  out.generated = generator(ghosts);
  detail::check_same_shape(out.generated, ghosts, "generator_loss");
  out.adversarial = -critic(out.generated).mean();
  out.mse1 = mse1(out.generated, ghosts);
  out.mse2 = lambda2 != 0.0 ? mse2(shadow, out.generated, ghosts) : torch::zeros({}, ghosts.options());
  out.total = out.adversarial;
  if (lambda1 != 0.0) out.total = out.total + lambda1 * out.mse1;
  if (lambda2 != 0.0) out.total = out.total + lambda2 * out.mse2;
  return out;
}

}  // namespace cgigan::losses
