#pragma once

#include <eiv/bench/config.hpp>
#include <eiv/simgen.hpp>

#include <filesystem>

namespace eiv::bench {

/// Dataset directory layout:
///   manifest.json         shape, sample count, corruption, noise levels, seed
///   y.csv                 N x 1 responses
///   samples/Z_<i>.csv     observed d1 x d2 sample i (6-digit index)
///   mask/M_<i>.csv        missing-entry mask of sample i (missing data only)
///   theta_star.csv        true parameter (optional)
/// Clean covariates are not exported.
void write_dataset(const std::filesystem::path& dir, const Dataset<double>& ds,
                   const ExperimentConfig& cfg);

/// Reads a directory written by write_dataset. The clean design is left
/// empty; theta_star is empty when the file is absent.
Dataset<double> read_dataset(const std::filesystem::path& dir);

}  // namespace eiv::bench
