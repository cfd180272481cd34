#pragma once

// Subcommands of the command-line driver. Each reads its inputs from and
// writes its outputs to the workspace named by the configuration, and
// throws DependencyError when an upstream stage has not been run.

#include "cgigan/classifier.hpp"
#include "cgigan/config.hpp"

namespace cgigan::pipeline {

/// Loads MNIST, applies the limits and writes train/test sets plus the unpaired split.
/// A rerun with unchanged inputs does nothing.
int prepare_data(const config::RunConfig& c);

/// Ghost caches for subset A and the test set at every configured pattern count.
int simulate(const config::RunConfig& c);

/// The scoring classifier at the configured path, trained on full MNIST and saved when absent.
eval::Classifier ensure_classifier(const config::RunConfig& c);

int train(const config::RunConfig& c, bool resume);
int evaluate(const config::RunConfig& c);
int ablate(const config::RunConfig& c, bool resume);
int plot(const config::RunConfig& c);

}  // namespace cgigan::pipeline
