#pragma once

#include <torch/torch.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgigan/cgi.hpp"
#include "cgigan/error.hpp"
#include "cgigan/rng.hpp"

namespace cgigan::data {

enum class SplitTag { full, subset_a, subset_b, test };

inline std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::full: return "full";
    case SplitTag::subset_a: return "subset_A";
    case SplitTag::subset_b: return "subset_B";
    case SplitTag::test: return "test";
  }
  return "full";
}

inline SplitTag split_tag_from_string(const std::string& s) {
  if (s == "full") return SplitTag::full;
  if (s == "subset_A") return SplitTag::subset_a;
  if (s == "subset_B") return SplitTag::subset_b;
  if (s == "test") return SplitTag::test;
  throw InvalidArgument("unknown split tag '" + s + "'");
}

/// Images in [0, 1] with their class labels. `source_indices` are row numbers
/// in the canonical file the images came from.
struct LabeledImageSet {
  torch::Tensor images;          // (count, H, W) float32
  torch::Tensor labels;          // (count,) int64
  torch::Tensor source_indices;  // (count,) int64
  SplitTag split_tag = SplitTag::full;

  std::int64_t size() const { return images.defined() ? images.size(0) : 0; }

  /// Rows whose source index is in `indices`, in the order given.
  LabeledImageSet select_sources(const std::vector<std::int64_t>& indices, SplitTag tag) const {
    // source index -> row
    std::vector<std::int64_t> row_of;
    auto src = source_indices.contiguous();
    const auto* sp = src.data_ptr<std::int64_t>();
    std::int64_t max_src = 0;
    for (std::int64_t i = 0; i < size(); ++i) max_src = std::max(max_src, sp[i]);
    row_of.assign(static_cast<std::size_t>(max_src + 1), -1);
    for (std::int64_t i = 0; i < size(); ++i) row_of[static_cast<std::size_t>(sp[i])] = i;

    std::vector<std::int64_t> rows;
    rows.reserve(indices.size());
    for (auto idx : indices) {
      if (idx < 0 || idx > max_src || row_of[static_cast<std::size_t>(idx)] < 0) {
        throw InvalidArgument("select_sources: index " + std::to_string(idx) + " not present in set");
      }
      rows.push_back(row_of[static_cast<std::size_t>(idx)]);
    }
    auto r = torch::tensor(rows, torch::kInt64).reshape({static_cast<std::int64_t>(rows.size())});
    return {images.index_select(0, r), labels.index_select(0, r), source_indices.index_select(0, r), tag};
  }

  LabeledImageSet head(std::int64_t n) const {
    n = std::min(n, size());
    return {images.slice(0, 0, n).clone(), labels.slice(0, 0, n).clone(), source_indices.slice(0, 0, n).clone(),
            split_tag};
  }
};

struct MnistData {
  LabeledImageSet train;
  LabeledImageSet test;
};

/// Two disjoint halves of a seeded permutation of the training indices.
/// Subset A is simulated into ghosts; subset B is the unpaired ground truth.
struct UnpairedSplit {
  std::vector<std::int64_t> ghost_source_indices;
  std::vector<std::int64_t> ground_truth_indices;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::uint8_t> read_gz_or_plain(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IngestionError(path.string(), "cannot open file");
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf{};
  for (;;) {
    int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      gzclose(f);
      throw IngestionError(path.string(), "read error");
    }
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return out;
}

inline std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

// Accepts both the canonical name and its gzipped form.
inline std::filesystem::path locate(const std::filesystem::path& dir, const std::string& stem) {
  for (const auto& name : {stem, stem + ".gz"}) {
    auto p = dir / name;
    if (std::filesystem::is_regular_file(p)) return p;
  }
  throw IngestionError((dir / stem).string(), "file not found");
}

inline torch::Tensor read_idx_images(const std::filesystem::path& path) {
  auto bytes = read_gz_or_plain(path);
  if (bytes.size() < 16 || be32(bytes, 0) != 0x00000803u) {
    throw IngestionError(path.string(), "not an IDX3 unsigned-byte image file");
  }
  const auto count = be32(bytes, 4), rows = be32(bytes, 8), cols = be32(bytes, 12);
  const std::size_t need = 16 + std::size_t{count} * rows * cols;
  if (bytes.size() != need) {
    throw IngestionError(path.string(), "size " + std::to_string(bytes.size()) + " does not match header (" +
                                            std::to_string(need) + ")");
  }
  auto raw = torch::from_blob(bytes.data() + 16, {count, rows, cols}, torch::kUInt8);
  return raw.to(torch::kFloat32).div_(255.0f);
}

inline torch::Tensor read_idx_labels(const std::filesystem::path& path) {
  auto bytes = read_gz_or_plain(path);
  if (bytes.size() < 8 || be32(bytes, 0) != 0x00000801u) {
    throw IngestionError(path.string(), "not an IDX1 unsigned-byte label file");
  }
  const auto count = be32(bytes, 4);
  if (bytes.size() != 8 + std::size_t{count}) throw IngestionError(path.string(), "truncated label file");
  auto labels = torch::from_blob(bytes.data() + 8, {count}, torch::kUInt8).to(torch::kInt64);
  if (labels.max().item<std::int64_t>() > 9) throw IngestionError(path.string(), "label outside 0-9");
  return labels;
}

inline LabeledImageSet read_pair(const std::filesystem::path& dir, const std::string& images_stem,
                                 const std::string& labels_stem, SplitTag tag) {
  auto img_path = locate(dir, images_stem);
  auto lbl_path = locate(dir, labels_stem);
  auto images = read_idx_images(img_path);
  auto labels = read_idx_labels(lbl_path);
  if (images.size(0) != labels.size(0)) {
    throw IngestionError(lbl_path.string(), "label count " + std::to_string(labels.size(0)) +
                                                " differs from image count " + std::to_string(images.size(0)));
  }
  return {images, labels, torch::arange(images.size(0), torch::kInt64), tag};
}

}  // namespace detail

/// Reads the canonical MNIST IDX files (optionally gzipped) from `dir`.
/// Pixels are raw bytes divided by 255.
inline MnistData load_mnist(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IngestionError(dir.string(), "MNIST directory not found");
  MnistData out;
  out.train = detail::read_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", SplitTag::full);
  out.test = detail::read_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", SplitTag::test);
  return out;
}

inline UnpairedSplit unpaired_split(const LabeledImageSet& train, std::uint64_t seed) {
  const auto n = train.size();
  if (n % 2 != 0) throw InvalidArgument("unpaired_split: image count " + std::to_string(n) + " is odd");
  auto gen = make_generator(seed);
  auto perm = torch::randperm(n, gen, torch::kInt64);
  auto sources = train.source_indices.index_select(0, perm).contiguous();
  const auto* p = sources.data_ptr<std::int64_t>();
  UnpairedSplit split;
  split.seed = seed;
  split.ghost_source_indices.assign(p, p + n / 2);
  split.ground_truth_indices.assign(p + n / 2, p + n);
  return split;
}

/// Ghosts for every image of `set`, keeping its labels and source indices.
inline cgi::GhostDataset build_ghost_dataset(const LabeledImageSet& set, const cgi::SpeckleBank& bank) {
  return cgi::build_ghost_dataset(set.images, set.labels, set.source_indices, bank);
}

}  // namespace cgigan::data
