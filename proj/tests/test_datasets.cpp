#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "cgigan/datasets.hpp"
#include "cgigan/storage.hpp"
#include "support.hpp"

using namespace cgigan;
using cgigan::testing::TempDir;

namespace {

data::LabeledImageSet synthetic_set(std::int64_t n, std::int64_t first_source = 0) {
  data::LabeledImageSet s;
  s.images = torch::rand({n, 28, 28});
  s.labels = torch::arange(n, torch::kInt64) % 10;
  s.source_indices = torch::arange(first_source, first_source + n, torch::kInt64);
  return s;
}

std::set<std::int64_t> as_set(const std::vector<std::int64_t>& v) { return {v.begin(), v.end()}; }

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                           static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(UnpairedSplit, DisjointCoveringHalvesForManySeeds) {
  auto train = synthetic_set(200);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    auto split = data::unpaired_split(train, seed);
    ASSERT_EQ(split.ghost_source_indices.size(), 100u);
    ASSERT_EQ(split.ground_truth_indices.size(), 100u);
    auto a = as_set(split.ghost_source_indices);
    auto b = as_set(split.ground_truth_indices);
    for (auto i : a) ASSERT_EQ(b.count(i), 0u) << "seed " << seed;
    a.insert(b.begin(), b.end());
    ASSERT_EQ(a.size(), 200u);
    ASSERT_EQ(*a.begin(), 0);
    ASSERT_EQ(*a.rbegin(), 199);
  }
}

TEST(UnpairedSplit, DeterministicAndSeedSensitive) {
  auto train = synthetic_set(60);
  auto a = data::unpaired_split(train, 5);
  auto b = data::unpaired_split(train, 5);
  auto c = data::unpaired_split(train, 6);
  EXPECT_EQ(a.ghost_source_indices, b.ghost_source_indices);
  EXPECT_NE(a.ghost_source_indices, c.ghost_source_indices);
}

TEST(UnpairedSplit, OddCountRejected) {
  EXPECT_THROW(data::unpaired_split(synthetic_set(7), 0), InvalidArgument);
}

TEST(LabeledImageSet, SelectSourcesKeepsRowsAligned) {
  auto s = synthetic_set(10, 50);
  auto sub = s.select_sources({57, 52}, data::SplitTag::subset_b);
  ASSERT_EQ(sub.size(), 2);
  EXPECT_EQ(sub.split_tag, data::SplitTag::subset_b);
  EXPECT_EQ(sub.source_indices[0].item<std::int64_t>(), 57);
  EXPECT_EQ(sub.labels[1].item<std::int64_t>(), 2);
  EXPECT_TRUE(torch::equal(sub.images[0], s.images[7]));
}

TEST(Storage, GhostDatasetRoundTripIsBitExact) {
  TempDir dir;
  auto images = synthetic_set(100);
  auto bank = cgi::generate_speckle_bank(784, 28, 28, 3).head(196);
  auto ds = data::build_ghost_dataset(images, bank);
  const auto path = dir / "ghosts.h5";
  storage::save(ds, path);
  auto back = storage::load_ghost_dataset(path);
  EXPECT_TRUE(torch::equal(back.ghosts, ds.ghosts));
  EXPECT_TRUE(torch::equal(back.labels, ds.labels));
  EXPECT_TRUE(torch::equal(back.source_indices, ds.source_indices));
  EXPECT_EQ(back.patterns, 196);
  EXPECT_EQ(back.pixels, 784);
  EXPECT_EQ(back.beta, 0.25);
  EXPECT_EQ(back.bank_seed, 3u);
  EXPECT_EQ(back.normalization, cgi::kNormalizationRule);
}

TEST(Storage, ImageSetAndSplitRoundTrip) {
  TempDir dir;
  auto s = synthetic_set(12, 1000);
  s.split_tag = data::SplitTag::test;
  storage::save(s, dir / "set.h5");
  auto back = storage::load_image_set(dir / "set.h5");
  EXPECT_TRUE(torch::equal(back.images, s.images));
  EXPECT_TRUE(torch::equal(back.labels, s.labels));
  EXPECT_TRUE(torch::equal(back.source_indices, s.source_indices));
  EXPECT_EQ(back.split_tag, data::SplitTag::test);

  auto split = data::unpaired_split(synthetic_set(20), 9);
  storage::save(split, dir / "split.json");
  auto sb = storage::load_split(dir / "split.json");
  EXPECT_EQ(sb.ghost_source_indices, split.ghost_source_indices);
  EXPECT_EQ(sb.ground_truth_indices, split.ground_truth_indices);
  EXPECT_EQ(sb.seed, 9u);
}

TEST(Storage, EmptyOrForeignFilesAreIncompatible) {
  TempDir dir;
  std::ofstream(dir / "empty.h5").flush();
  EXPECT_THROW(storage::load_ghost_dataset(dir / "empty.h5"), IncompatibleFormat);
  std::ofstream(dir / "text.h5") << "not an hdf5 file";
  EXPECT_THROW(storage::load_ghost_dataset(dir / "text.h5"), IncompatibleFormat);
  EXPECT_THROW(storage::load_image_set(dir / "missing.h5"), IncompatibleFormat);
}

TEST(Storage, VersionMismatchIsIncompatible) {
  TempDir dir;
  auto ds = data::build_ghost_dataset(synthetic_set(3), cgi::generate_speckle_bank(10, 28, 28, 0));
  storage::save(ds, dir / "g.h5");
  const auto sidecar = storage::sidecar_path(dir / "g.h5");
  std::ifstream in(sidecar);
  auto meta = nlohmann::json::parse(in);
  in.close();
  meta["format_version"] = storage::kFormatVersion + 1;
  std::ofstream(sidecar) << meta.dump();
  EXPECT_THROW(storage::load_ghost_dataset(dir / "g.h5"), IncompatibleFormat);
  // A ghost file is not an image set.
  meta["format_version"] = storage::kFormatVersion;
  std::ofstream(sidecar) << meta.dump();
  EXPECT_THROW(storage::load_image_set(dir / "g.h5"), IncompatibleFormat);
}

TEST(Mnist, MalformedFilesNameTheFile) {
  TempDir dir;
  EXPECT_THROW(data::load_mnist(dir / "nope"), IngestionError);
  write_bytes(dir / "train-images-idx3-ubyte", {0, 0, 8, 3, 0, 0, 0, 1});
  write_bytes(dir / "train-labels-idx1-ubyte", {0, 0, 8, 1, 0, 0, 0, 1, 3});
  write_bytes(dir / "t10k-images-idx3-ubyte", {0, 0, 8, 3, 0, 0, 0, 1});
  write_bytes(dir / "t10k-labels-idx1-ubyte", {0, 0, 8, 1, 0, 0, 0, 1, 3});
  try {
    data::load_mnist(dir.path());
    FAIL() << "expected IngestionError";
  } catch (const IngestionError& e) {
    EXPECT_NE(std::string(e.what()).find("idx3-ubyte"), std::string::npos) << e.what();
  }
}

TEST(Mnist, TinyHandWrittenIdxFiles) {
  TempDir dir;
  // Two 28x28 images: all zeros and all 255.
  std::vector<std::uint8_t> img{0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 28, 0, 0, 0, 28};
  img.resize(16 + 784, 0);
  img.resize(16 + 2 * 784, 255);
  for (const auto* stem : {"train", "t10k"}) {
    write_bytes(dir / (std::string(stem) + "-images-idx3-ubyte"), img);
    write_bytes(dir / (std::string(stem) + "-labels-idx1-ubyte"), {0, 0, 8, 1, 0, 0, 0, 2, 4, 9});
  }
  auto m = data::load_mnist(dir.path());
  ASSERT_EQ(m.train.size(), 2);
  EXPECT_EQ(m.train.images[0].max().item<float>(), 0.0f);
  EXPECT_EQ(m.train.images[1].min().item<float>(), 1.0f);
  EXPECT_EQ(m.test.labels[1].item<std::int64_t>(), 9);
}

TEST(Mnist, CanonicalFiles) {
  REQUIRE_MNIST();
  auto m = data::load_mnist(cgigan::testing::mnist_dir());
  EXPECT_EQ(m.train.size(), 60000);
  EXPECT_EQ(m.test.size(), 10000);
  EXPECT_GE(m.train.images.min().item<float>(), 0.0f);
  EXPECT_LE(m.train.images.max().item<float>(), 1.0f);
  auto hist = torch::bincount(m.train.labels, {}, 10);
  EXPECT_GT(hist.min().item<std::int64_t>(), 0);
  // The canonical training label file: 5923 zeros, 6742 ones.
  EXPECT_EQ(hist[0].item<std::int64_t>(), 5923);
  EXPECT_EQ(hist[1].item<std::int64_t>(), 6742);

  auto split = data::unpaired_split(m.train, 0);
  EXPECT_EQ(split.ghost_source_indices.size(), 30000u);
  EXPECT_EQ(split.ground_truth_indices.size(), 30000u);
  // Test images never enter a training subset: train and test sources are separate index spaces.
  EXPECT_EQ(m.test.split_tag, data::SplitTag::test);
}

TEST(GhostDataset, BetaAtEachPatternCount) {
  REQUIRE_MNIST();
  auto m = data::load_mnist(cgigan::testing::mnist_dir());
  auto first = m.train.head(100);
  auto master = cgi::generate_speckle_bank(784, 28, 28, 0);
  for (auto [patterns, beta] : {std::pair{196, 0.25}, {392, 0.5}, {784, 1.0}}) {
    auto ds = data::build_ghost_dataset(first, master.head(patterns));
    EXPECT_EQ(ds.size(), 100);
    EXPECT_EQ(ds.beta, beta);
  }
}
