#pragma once

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace cgigan::testing {

inline std::filesystem::path mnist_dir() {
  if (const char* env = std::getenv("MNIST_DIR")) return env;
#ifdef CGIGAN_MNIST_DIR
  return CGIGAN_MNIST_DIR;
#else
  return "data/mnist";
#endif
}

inline bool have_mnist() { return std::filesystem::exists(mnist_dir() / "train-images-idx3-ubyte"); }

#define REQUIRE_MNIST() \
  if (!::cgigan::testing::have_mnist()) GTEST_SKIP() << "MNIST not found in " << ::cgigan::testing::mnist_dir()

/// Fresh scratch directory removed at scope exit.
class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      path_ = base / ("cgigan_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++) + "_" +
                      std::to_string(i));
      if (std::filesystem::create_directories(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::filesystem::path path_;
};

inline std::vector<double> to_vector(const torch::Tensor& t) {
  auto c = t.to(torch::kFloat64).contiguous().reshape({-1});
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

}  // namespace cgigan::testing
