#pragma once

// Numerical computational ghost imaging: seeded speckle illumination, bucket
// detection and correlation reconstruction. All arithmetic runs in float64;
// datasets are stored as float32 after per-image normalisation.

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgigan/error.hpp"
#include "cgigan/rng.hpp"

namespace cgigan::cgi {

inline constexpr int kGhostFormatVersion = 1;
inline constexpr const char* kNormalizationRule = "per_image_min_max";

/// Fixed ensemble of M illumination patterns, shape (M, H, W), float64 in [0, 1).
struct SpeckleBank {
  torch::Tensor patterns;
  std::uint64_t seed = 0;

  std::int64_t count() const { return patterns.size(0); }
  std::int64_t height() const { return patterns.size(1); }
  std::int64_t width() const { return patterns.size(2); }
  std::int64_t pixels() const { return height() * width(); }

  /// The first `m` patterns. Banks of different size cut from one master bank
  /// are nested, so ghost sets at different SNR share their illumination.
  SpeckleBank head(std::int64_t m) const {
    if (m < 1 || m > count()) {
      throw InvalidArgument("SpeckleBank::head: requested " + std::to_string(m) + " patterns from a bank of " +
                            std::to_string(count()));
    }
    return {patterns.slice(0, 0, m).contiguous(), seed};
  }
};

struct ObjectImage {
  torch::Tensor pixels;  // (H, W), values in [0, 1]
  std::optional<std::int64_t> label;
};

struct BucketSeries {
  torch::Tensor values;  // (M,) float64
};

struct GhostImage {
  torch::Tensor pixels;  // (H, W) float64, signed
  double beta = 0.0;
  std::int64_t source_index = -1;
  std::optional<std::int64_t> label;
};

/// A set of normalised ghost images simulated with one shared bank.
/// Labels of -1 mark sources without a class.
struct GhostDataset {
  torch::Tensor ghosts;          // (count, H, W) float32 in [0, 1]
  torch::Tensor labels;          // (count,) int64
  torch::Tensor source_indices;  // (count,) int64
  std::int64_t patterns = 0;     // M
  std::int64_t pixels = 0;       // N = H * W
  double beta = 0.0;             // M / N
  std::uint64_t bank_seed = 0;
  std::string normalization = kNormalizationRule;
  int format_version = kGhostFormatVersion;

  std::int64_t size() const { return ghosts.defined() ? ghosts.size(0) : 0; }
  std::int64_t height() const { return ghosts.size(1); }
  std::int64_t width() const { return ghosts.size(2); }

  /// Rows `[begin, end)` as an independent dataset with the same metadata.
  GhostDataset slice(std::int64_t begin, std::int64_t end) const {
    GhostDataset out = *this;
    out.ghosts = ghosts.slice(0, begin, end).clone();
    out.labels = labels.slice(0, begin, end).clone();
    out.source_indices = source_indices.slice(0, begin, end).clone();
    return out;
  }
};

/// Exactly M / N.
inline double snr_coefficient(std::int64_t patterns, std::int64_t pixels) {
  if (pixels < 1) throw InvalidArgument("snr_coefficient: pixel count must be >= 1");
  if (patterns < 0) throw InvalidArgument("snr_coefficient: pattern count must be >= 0");
  return static_cast<double>(patterns) / static_cast<double>(pixels);
}

/// M i.i.d. uniform [0, 1) intensity patterns, bit-identical for a given seed.
inline SpeckleBank generate_speckle_bank(std::int64_t patterns, std::int64_t height, std::int64_t width,
                                         std::uint64_t seed) {
  if (patterns < 1 || height < 1 || width < 1) {
    throw InvalidArgument("generate_speckle_bank: M, H and W must all be >= 1");
  }
  auto gen = make_generator(seed);
  auto bank = torch::rand({patterns, height, width}, gen, torch::TensorOptions().dtype(torch::kFloat64));
  return {bank, seed};
}

/// B_m = sum_ij O[i,j] * S_m[i,j]: the full-frame inner product with each pattern.
inline BucketSeries bucket_measure(const ObjectImage& object, const SpeckleBank& bank) {
  const auto& px = object.pixels;
  if (px.dim() != 2 || px.size(0) != bank.height() || px.size(1) != bank.width()) {
    throw InvalidArgument("bucket_measure: object shape " + c10::str(px.sizes()) + " does not match bank frame (" +
                          std::to_string(bank.height()) + ", " + std::to_string(bank.width()) + ")");
  }
  auto flat = bank.patterns.reshape({bank.count(), bank.pixels()});
  return {flat.matmul(px.to(torch::kFloat64).reshape({bank.pixels()}))};
}

/// Per-pixel covariance <(B_m - <B>)(S_m - <S>)> over the M realisations,
/// with <.> the plain arithmetic mean (divide by M).
inline GhostImage reconstruct_ghost(const BucketSeries& buckets, const SpeckleBank& bank) {
  const auto& b = buckets.values;
  if (b.dim() != 1 || b.size(0) != bank.count()) {
    throw InvalidArgument("reconstruct_ghost: bucket series of length " + std::to_string(b.numel()) +
                          " does not match bank size " + std::to_string(bank.count()));
  }
  const auto m = bank.count();
  auto centered_b = b.to(torch::kFloat64) - b.to(torch::kFloat64).mean();
  auto centered_s = bank.patterns - bank.patterns.mean(0, /*keepdim=*/true);
  auto gi = torch::tensordot(centered_b, centered_s, {0}, {0}) / static_cast<double>(m);
  GhostImage out;
  out.pixels = gi;
  out.beta = snr_coefficient(m, bank.pixels());
  return out;
}

/// Per-image affine map of [min, max] onto [0, 1]; a constant image maps to zeros.
inline torch::Tensor normalize_ghost(const torch::Tensor& pixels) {
  auto p = pixels.to(torch::kFloat64);
  const double lo = p.min().item<double>();
  const double hi = p.max().item<double>();
  if (!(hi > lo)) return torch::zeros_like(p);
  return (p - lo) / (hi - lo);
}

inline torch::Tensor normalize_ghost(const GhostImage& ghost) { return normalize_ghost(ghost.pixels); }

namespace detail {

// Batched form of bucket_measure -> reconstruct_ghost -> normalize_ghost for
// rows of `objects` (K, N). Same algebra as the single-image path, arranged as
// two matrix products so large sets stay tractable.
inline torch::Tensor simulate_rows(const torch::Tensor& objects, const torch::Tensor& flat_patterns,
                                   const torch::Tensor& centered_patterns) {
  const double m = static_cast<double>(flat_patterns.size(0));
  auto buckets = objects.matmul(flat_patterns.t());                      // (K, M)
  auto centered = buckets - buckets.mean(1, /*keepdim=*/true);           // (K, M)
  auto ghosts = centered.matmul(centered_patterns) / m;                  // (K, N)
  auto lo = std::get<0>(ghosts.min(1, /*keepdim=*/true));
  auto hi = std::get<0>(ghosts.max(1, /*keepdim=*/true));
  auto range = hi - lo;
  auto safe = torch::where(range > 0, range, torch::ones_like(range));
  return torch::where(range > 0, (ghosts - lo) / safe, torch::zeros_like(ghosts));
}

}  // namespace detail

/// Simulates a ghost image for every row of `images` (K, H, W) using one
/// shared bank. `labels` and `source_indices` are carried through unchanged.
inline GhostDataset build_ghost_dataset(const torch::Tensor& images, const torch::Tensor& labels,
                                        const torch::Tensor& source_indices, const SpeckleBank& bank,
                                        std::int64_t chunk = 1024) {
  GhostDataset out;
  out.patterns = bank.count();
  out.pixels = bank.pixels();
  out.beta = snr_coefficient(bank.count(), bank.pixels());
  out.bank_seed = bank.seed;

  const std::int64_t count = images.defined() ? images.size(0) : 0;
  if (count > 0 && (images.dim() != 3 || images.size(1) != bank.height() || images.size(2) != bank.width())) {
    throw InvalidArgument("build_ghost_dataset: images of shape " + c10::str(images.sizes()) +
                          " do not match bank frame (" + std::to_string(bank.height()) + ", " +
                          std::to_string(bank.width()) + ")");
  }
  if (labels.numel() != count || source_indices.numel() != count) {
    throw InvalidArgument("build_ghost_dataset: labels/source_indices length must equal image count");
  }

  out.ghosts = torch::empty({count, bank.height(), bank.width()}, torch::kFloat32);
  out.labels = labels.to(torch::kInt64).reshape({count}).clone();
  out.source_indices = source_indices.to(torch::kInt64).reshape({count}).clone();
  if (count == 0) return out;

  torch::NoGradGuard no_grad;
  auto flat = bank.patterns.reshape({bank.count(), bank.pixels()});
  auto centered = flat - flat.mean(0, /*keepdim=*/true);
  auto objects = images.reshape({count, bank.pixels()}).to(torch::kFloat64);
  auto dst = out.ghosts.view({count, bank.pixels()});
  for (std::int64_t begin = 0; begin < count; begin += chunk) {
    const auto end = std::min(count, begin + chunk);
    dst.slice(0, begin, end).copy_(detail::simulate_rows(objects.slice(0, begin, end), flat, centered));
  }
  return out;
}

/// List form: source indices are the positions in `images`; absent labels become -1.
inline GhostDataset build_ghost_dataset(std::span<const ObjectImage> images, const SpeckleBank& bank) {
  const auto count = static_cast<std::int64_t>(images.size());
  std::vector<torch::Tensor> frames;
  std::vector<std::int64_t> labels;
  frames.reserve(images.size());
  for (const auto& img : images) {
    if (img.pixels.dim() != 2 || img.pixels.size(0) != bank.height() || img.pixels.size(1) != bank.width()) {
      throw InvalidArgument("build_ghost_dataset: object shape " + c10::str(img.pixels.sizes()) +
                            " does not match bank frame");
    }
    frames.push_back(img.pixels.to(torch::kFloat64));
    labels.push_back(img.label.value_or(-1));
  }
  auto stacked = count > 0 ? torch::stack(frames) : torch::empty({0, bank.height(), bank.width()}, torch::kFloat64);
  return build_ghost_dataset(stacked, torch::tensor(labels, torch::kInt64).reshape({count}),
                             torch::arange(count, torch::kInt64), bank);
}

}  // namespace cgigan::cgi
