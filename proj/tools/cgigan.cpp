// Command-line driver: prepare-data, simulate, train, eval, ablate, plot.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cgigan/cgigan.hpp"

using namespace cgigan;
using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool resume = false;
};

config::RunConfig resolve_config(const Flags& f) {
  auto base = config::profile(f.profile.empty() ? "paper" : f.profile);
  config::RunConfig c = base;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ConfigurationError("cannot read config file " + f.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigurationError(f.config_path + ": " + e.what());
    }
    if (!f.profile.empty()) j.erase("profile");  // the flag wins
    c = config::run_config_from_json(j, base);
  }
  if (f.seed) c.train.training.seed = *f.seed;
  if (!f.out.empty()) c.workspace = f.out;
  config::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ghost-image reconstruction with an adversarially trained, shadow-regularized generator"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--profile", f.profile, "Default profile")->check(CLI::IsMember({"smoke", "paper"}));
  app.add_option("--seed", f.seed, "Training seed override");
  app.add_option("--out", f.out, "Workspace directory override");
  app.add_flag("--resume", f.resume, "Continue from the newest checkpoint");
  auto* prepare = app.add_subcommand("prepare-data", "Cache MNIST splits and the unpaired subsets");
  auto* simulate = app.add_subcommand("simulate", "Simulate ghost-image caches for each pattern count");
  auto* train = app.add_subcommand("train", "Train a generator");
  auto* evaluate = app.add_subcommand("eval", "Cross-beta evaluation of trained generators");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate the regularization grid");
  auto* plot = app.add_subcommand("plot", "Plot loss and metric curves of a run");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto c = resolve_config(f);
    if (*prepare) return pipeline::prepare_data(c);
    if (*simulate) return pipeline::simulate(c);
    if (*train) return pipeline::train(c, f.resume);
    if (*evaluate) return pipeline::evaluate(c);
    if (*ablate) return pipeline::ablate(c, f.resume);
    if (*plot) return pipeline::plot(c);
  } catch (const ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DependencyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
