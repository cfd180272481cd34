#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cgigan/cgi.hpp"
#include "cgigan/classifier.hpp"
#include "cgigan/error.hpp"
#include "cgigan/imaging.hpp"
#include "cgigan/models.hpp"
#include "cgigan/scoring.hpp"
#include "cgigan/training.hpp"

namespace cgigan::eval {

using nlohmann::json;
namespace fs = std::filesystem;

struct ReportCell {
  std::string row;  // "beta=0.25" or "lambda=(10,10)"
  double test_beta = 0.0;
  double inception_score = 0.0;
  double macro_f1 = 0.0;
  double mse1 = 0.0;
  double mse2 = 0.0;
  double regularized_inception_score = 0.0;
  std::string sample_grid;  // empty when no grid directory was given
};

struct EvaluationReport {
  std::string row_kind;  // "train_beta" or "lambda"
  std::vector<std::string> rows;
  std::vector<double> test_betas;
  std::vector<ReportCell> cells;

  bool empty() const { return cells.empty(); }

  const ReportCell* find(const std::string& row, double test_beta) const {
    for (const auto& c : cells) {
      if (c.row == row && c.test_beta == test_beta) return &c;
    }
    return nullptr;
  }
};

inline std::string format_beta(double beta) {
  std::ostringstream s;
  s << beta;
  return s.str();
}

inline std::string lambda_key(double l1, double l2) {
  return "lambda=(" + format_beta(l1) + "," + format_beta(l2) + ")";
}

inline json to_json(const EvaluationReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"row", c.row},
                     {"test_beta", c.test_beta},
                     {"inception_score", c.inception_score},
                     {"macro_f1", c.macro_f1},
                     {"mse1", c.mse1},
                     {"mse2", c.mse2},
                     {"regularized_inception_score", c.regularized_inception_score},
                     {"sample_grid", c.sample_grid}});
  }
  return {{"row_kind", r.row_kind}, {"rows", r.rows}, {"test_betas", r.test_betas}, {"cells", cells}};
}

inline EvaluationReport report_from_json(const json& j) {
  EvaluationReport r;
  r.row_kind = j.at("row_kind").get<std::string>();
  r.rows = j.at("rows").get<std::vector<std::string>>();
  r.test_betas = j.at("test_betas").get<std::vector<double>>();
  for (const auto& c : j.at("cells")) {
    r.cells.push_back({c.at("row").get<std::string>(), c.at("test_beta").get<double>(),
                       c.at("inception_score").get<double>(), c.at("macro_f1").get<double>(),
                       c.at("mse1").get<double>(), c.at("mse2").get<double>(),
                       c.at("regularized_inception_score").get<double>(), c.at("sample_grid").get<std::string>()});
  }
  return r;
}

/// Rows by test beta, one "IS / F1" column per row key.
inline std::string to_table(const EvaluationReport& r) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", "test beta");
  out << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, " | %-18s", row.c_str());
    out << buf;
  }
  out << '\n';
  for (const auto beta : r.test_betas) {
    std::snprintf(buf, sizeof buf, "%-12s", format_beta(beta).c_str());
    out << buf;
    for (const auto& row : r.rows) {
      const auto* c = r.find(row, beta);
      if (c != nullptr) {
        std::snprintf(buf, sizeof buf, " | %6.3f / %-9.3f", c->inception_score, c->macro_f1);
      } else {
        std::snprintf(buf, sizeof buf, " | %-18s", "-");
      }
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

/// Writes `<stem>.json` and `<stem>.txt`.
inline void write_report(const EvaluationReport& r, const fs::path& stem) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  std::ofstream(fs::path(stem).concat(".json")) << to_json(r).dump(2) << '\n';
  std::ofstream(fs::path(stem).concat(".txt")) << to_table(r);
}

struct LoadedGenerator {
  models::Generator generator{nullptr};
  models::ShadowGenerator shadow;
  training::TrainingConfig config;
};

/// Live and shadow generators of a training checkpoint, in eval mode.
inline LoadedGenerator load_generator_from_checkpoint(const fs::path& path) {
  auto ar = training::Trainer::open_checkpoint(path);
  c10::IValue v;
  ar.read("config", v);
  LoadedGenerator out;
  out.config = training::training_config_from_json(json::parse(v.toStringRef()));
  out.generator = models::Generator(out.config.generator);
  torch::serialize::InputArchive g, sh;
  ar.read("generator", g);
  ar.read("shadow", sh);
  out.generator->load(g);
  out.shadow = models::ShadowGenerator(out.generator, out.config.alpha);
  out.shadow.network()->load(sh);
  for (auto& p : out.shadow.network()->parameters()) p.set_requires_grad(false);
  out.generator->eval();
  out.shadow.eval();
  return out;
}

struct CellOptions {
  std::int64_t n_splits = 10;
  std::optional<fs::path> grid_dir;
  std::int64_t grid_images = 64;
};

inline ReportCell evaluate_cell(const std::string& row, const fs::path& checkpoint, double test_beta,
                                const cgi::GhostDataset& test_set, Classifier& classifier, const CellOptions& opt) {
  LoadedGenerator loaded;
  try {
    loaded = load_generator_from_checkpoint(checkpoint);
  } catch (const std::exception& e) {
    throw InvalidArgument("cell " + row + " / test beta " + format_beta(test_beta) + ": " + e.what());
  }
  auto s = score_generator(loaded.generator, loaded.shadow, test_set, &classifier, opt.n_splits);
  ReportCell c;
  c.row = row;
  c.test_beta = test_beta;
  c.inception_score = *s.inception_score;
  c.regularized_inception_score = *s.regularized_inception_score;
  if (!s.macro_f1) {
    throw InvalidArgument("cell " + row + ": test set for beta " + format_beta(test_beta) + " lacks source labels");
  }
  c.macro_f1 = *s.macro_f1;
  c.mse1 = s.mse1;
  c.mse2 = s.mse2;
  if (opt.grid_dir) {
    std::string name = row + "_test_" + format_beta(test_beta) + ".png";
    for (auto& ch : name) {
      if (ch == '(' || ch == ')' || ch == ',' || ch == '=') ch = '_';
    }
    const auto path = *opt.grid_dir / name;
    const auto k = std::min<std::int64_t>(opt.grid_images, s.generated.size(0));
    imaging::write_image_grid(path, s.generated.slice(0, 0, k));
    c.sample_grid = path.string();
  }
  return c;
}

namespace detail {

inline void require_checkpoint(const std::string& row, const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw InvalidArgument("cell " + row + ": checkpoint missing: " + path.string());
  }
}

}  // namespace detail

/// Grid of train beta (rows) by test beta (columns).
inline EvaluationReport cross_beta_evaluation(const std::map<double, fs::path>& models,
                                              const std::map<double, cgi::GhostDataset>& test_sets,
                                              Classifier& classifier, const CellOptions& opt = {}) {
  EvaluationReport r;
  r.row_kind = "train_beta";
  if (models.empty()) return r;
  for (const auto& [beta, _] : test_sets) r.test_betas.push_back(beta);
  for (const auto& [train_beta, path] : models) {
    const auto row = "beta=" + format_beta(train_beta);
    detail::require_checkpoint(row, path);
    r.rows.push_back(row);
  }
  for (const auto& [train_beta, path] : models) {
    const auto row = "beta=" + format_beta(train_beta);
    for (const auto& [test_beta, set] : test_sets) {
      r.cells.push_back(evaluate_cell(row, path, test_beta, set, classifier, opt));
    }
  }
  return r;
}

/// One row per regularization pair, each evaluated on every test beta.
inline EvaluationReport ablation_grid(const std::vector<std::pair<std::pair<double, double>, fs::path>>& models,
                                      const std::map<double, cgi::GhostDataset>& test_sets, Classifier& classifier,
                                      const CellOptions& opt = {}) {
  EvaluationReport r;
  r.row_kind = "lambda";
  if (models.empty()) return r;
  for (const auto& [beta, _] : test_sets) r.test_betas.push_back(beta);
  for (const auto& [pair, path] : models) {
    const auto row = lambda_key(pair.first, pair.second);
    detail::require_checkpoint(row, path);
    r.rows.push_back(row);
  }
  // Largest test beta first, as the noise-free column conventionally leads.
  std::vector<double> order(r.test_betas.rbegin(), r.test_betas.rend());
  r.test_betas = order;
  for (const auto& [pair, path] : models) {
    const auto row = lambda_key(pair.first, pair.second);
    for (const auto beta : order) {
      r.cells.push_back(evaluate_cell(row, path, beta, test_sets.at(beta), classifier, opt));
    }
  }
  return r;
}

}  // namespace cgigan::eval
