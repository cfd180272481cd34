#pragma once

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include <cstdint>

namespace cgigan {

/// A CPU generator owned by the caller. Every random draw in the library takes
/// one of these explicitly so that runs never depend on the global torch seed.
inline at::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

inline torch::Tensor generator_state(const at::Generator& gen) {
  return gen.get_state();
}

inline void restore_generator_state(at::Generator& gen, const torch::Tensor& state) {
  gen.set_state(state);
}

}  // namespace cgigan
