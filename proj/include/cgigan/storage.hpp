#pragma once

// Named-array container for datasets: an HDF5 file with one dataset per array
// plus a JSON sidecar (`<file>.json`) carrying the metadata record.

#include <H5Cpp.h>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cgigan/cgi.hpp"
#include "cgigan/datasets.hpp"
#include "cgigan/error.hpp"
#include <nlohmann/json.hpp>

namespace cgigan::storage {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kGhostKind = "cgigan.ghost_dataset";
inline constexpr const char* kImageSetKind = "cgigan.image_set";

inline std::filesystem::path sidecar_path(const std::filesystem::path& container) {
  return container.string() + ".json";
}

namespace detail {

template <class T>
const H5::PredType& h5_type();
template <>
inline const H5::PredType& h5_type<float>() { return H5::PredType::NATIVE_FLOAT; }
template <>
inline const H5::PredType& h5_type<std::int64_t>() { return H5::PredType::NATIVE_INT64; }

template <class T>
void write_array(H5::H5File& file, const std::string& name, const torch::Tensor& t) {
  auto c = t.contiguous();
  std::vector<hsize_t> dims(c.sizes().begin(), c.sizes().end());
  H5::DataSpace space(static_cast<int>(dims.size()), dims.data());
  auto ds = file.createDataSet(name, h5_type<T>(), space);
  if (c.numel() > 0) ds.write(c.data_ptr<T>(), h5_type<T>());
}

template <class T>
torch::Tensor read_array(H5::H5File& file, const std::string& name, torch::ScalarType dtype) {
  auto ds = file.openDataSet(name);
  auto space = ds.getSpace();
  std::vector<hsize_t> dims(static_cast<std::size_t>(space.getSimpleExtentNdims()));
  space.getSimpleExtentDims(dims.data());
  std::vector<std::int64_t> shape(dims.begin(), dims.end());
  auto t = torch::empty(shape, dtype);
  if (t.numel() > 0) ds.read(t.data_ptr<T>(), h5_type<T>());
  return t;
}

inline void write_sidecar(const std::filesystem::path& container, const nlohmann::json& meta) {
  std::ofstream out(sidecar_path(container));
  if (!out) throw InvalidArgument("cannot write " + sidecar_path(container).string());
  out << meta.dump(2) << '\n';
}

inline nlohmann::json read_sidecar(const std::filesystem::path& container, const char* kind) {
  auto p = sidecar_path(container);
  std::ifstream in(p);
  if (!in) throw IncompatibleFormat(container.string() + ": metadata sidecar " + p.string() + " missing");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleFormat(p.string() + ": unreadable metadata (" + e.what() + ")");
  }
  if (meta.value("format", std::string{}) != kind) {
    throw IncompatibleFormat(container.string() + ": expected a " + kind + " container");
  }
  if (meta.value("format_version", -1) != kFormatVersion) {
    throw IncompatibleFormat(container.string() + ": format version " +
                             std::to_string(meta.value("format_version", -1)) + ", this build reads version " +
                             std::to_string(kFormatVersion));
  }
  return meta;
}

inline H5::H5File open_container(const std::filesystem::path& path) {
  H5::Exception::dontPrint();
  if (!std::filesystem::is_regular_file(path)) {
    throw IncompatibleFormat(path.string() + ": container file missing");
  }
  if (std::filesystem::file_size(path) == 0) throw IncompatibleFormat(path.string() + ": empty container file");
  try {
    if (!H5::H5File::isHdf5(path.string())) throw IncompatibleFormat(path.string() + ": not an HDF5 container");
    return H5::H5File(path.string(), H5F_ACC_RDONLY);
  } catch (const H5::Exception& e) {
    throw IncompatibleFormat(path.string() + ": " + e.getDetailMsg());
  }
}

}  // namespace detail

inline void save(const cgi::GhostDataset& ds, const std::filesystem::path& path) {
  H5::Exception::dontPrint();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  try {
    H5::H5File file(path.string(), H5F_ACC_TRUNC);
    detail::write_array<float>(file, "ghosts", ds.ghosts.to(torch::kFloat32));
    detail::write_array<std::int64_t>(file, "labels", ds.labels.to(torch::kInt64));
    detail::write_array<std::int64_t>(file, "source_indices", ds.source_indices.to(torch::kInt64));
  } catch (const H5::Exception& e) {
    throw InvalidArgument(path.string() + ": " + e.getDetailMsg());
  }
  detail::write_sidecar(path, {{"format", kGhostKind},
                               {"format_version", kFormatVersion},
                               {"count", ds.size()},
                               {"height", ds.ghosts.size(1)},
                               {"width", ds.ghosts.size(2)},
                               {"M", ds.patterns},
                               {"N", ds.pixels},
                               {"beta", ds.beta},
                               {"seed", ds.bank_seed},
                               {"normalization", ds.normalization}});
}

inline cgi::GhostDataset load_ghost_dataset(const std::filesystem::path& path) {
  auto file = detail::open_container(path);
  auto meta = detail::read_sidecar(path, kGhostKind);
  cgi::GhostDataset ds;
  try {
    ds.ghosts = detail::read_array<float>(file, "ghosts", torch::kFloat32);
    ds.labels = detail::read_array<std::int64_t>(file, "labels", torch::kInt64);
    ds.source_indices = detail::read_array<std::int64_t>(file, "source_indices", torch::kInt64);
  } catch (const H5::Exception& e) {
    throw IncompatibleFormat(path.string() + ": " + e.getDetailMsg());
  }
  ds.patterns = meta.at("M").get<std::int64_t>();
  ds.pixels = meta.at("N").get<std::int64_t>();
  ds.beta = meta.at("beta").get<double>();
  ds.bank_seed = meta.at("seed").get<std::uint64_t>();
  ds.normalization = meta.at("normalization").get<std::string>();
  ds.format_version = meta.at("format_version").get<int>();
  if (ds.ghosts.size(0) != meta.at("count").get<std::int64_t>()) {
    throw IncompatibleFormat(path.string() + ": array length disagrees with metadata count");
  }
  return ds;
}

inline void save(const data::LabeledImageSet& set, const std::filesystem::path& path) {
  H5::Exception::dontPrint();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  try {
    H5::H5File file(path.string(), H5F_ACC_TRUNC);
    detail::write_array<float>(file, "images", set.images.to(torch::kFloat32));
    detail::write_array<std::int64_t>(file, "labels", set.labels.to(torch::kInt64));
    detail::write_array<std::int64_t>(file, "source_indices", set.source_indices.to(torch::kInt64));
  } catch (const H5::Exception& e) {
    throw InvalidArgument(path.string() + ": " + e.getDetailMsg());
  }
  detail::write_sidecar(path, {{"format", kImageSetKind},
                               {"format_version", kFormatVersion},
                               {"count", set.size()},
                               {"height", set.images.size(1)},
                               {"width", set.images.size(2)},
                               {"split_tag", data::to_string(set.split_tag)}});
}

inline data::LabeledImageSet load_image_set(const std::filesystem::path& path) {
  auto file = detail::open_container(path);
  auto meta = detail::read_sidecar(path, kImageSetKind);
  data::LabeledImageSet set;
  try {
    set.images = detail::read_array<float>(file, "images", torch::kFloat32);
    set.labels = detail::read_array<std::int64_t>(file, "labels", torch::kInt64);
    set.source_indices = detail::read_array<std::int64_t>(file, "source_indices", torch::kInt64);
  } catch (const H5::Exception& e) {
    throw IncompatibleFormat(path.string() + ": " + e.getDetailMsg());
  }
  set.split_tag = data::split_tag_from_string(meta.at("split_tag").get<std::string>());
  return set;
}

inline void save(const data::UnpairedSplit& split, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << nlohmann::json{{"format", "cgigan.unpaired_split"},
                        {"format_version", kFormatVersion},
                        {"seed", split.seed},
                        {"ghost_source_indices", split.ghost_source_indices},
                        {"ground_truth_indices", split.ground_truth_indices}}
             .dump()
      << '\n';
}

inline data::UnpairedSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IncompatibleFormat(path.string() + ": split file missing");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleFormat(path.string() + ": " + e.what());
  }
  if (j.value("format_version", -1) != kFormatVersion) {
    throw IncompatibleFormat(path.string() + ": unsupported split format version");
  }
  data::UnpairedSplit s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.ghost_source_indices = j.at("ghost_source_indices").get<std::vector<std::int64_t>>();
  s.ground_truth_indices = j.at("ground_truth_indices").get<std::vector<std::int64_t>>();
  return s;
}

}  // namespace cgigan::storage
