// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "featopt/fixtures/planted.hpp"
#include "featopt/metrics/encoding.hpp"
#include "featopt/metrics/logreg.hpp"
#include "featopt/optimizer/tpe.hpp"
#include "featopt/random.hpp"
#include "featopt/types.hpp"

namespace featopt::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem = "featopt-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Random matrix over a mix of Boolean, real and categorical features whose
// encoding stays within `max_columns` columns. Labels are balanced over
// `n_classes` and depend weakly on the first feature; ~5% of values Missing.
FeatureMatrix random_feature_matrix(Rng& rng, std::size_t rows, std::size_t n_classes,
                                    std::size_t max_columns);

// Shapley values of logit `cls` at `row` by enumeration over all column
// subsets; columns outside the coalition sit at the fitted column mean.
std::vector<double> brute_force_shapley(const metrics::ClassifierModel& model,
                                        const metrics::EncodedMatrix& enc, std::size_t row,
                                        std::size_t cls);

// Central-difference gradient of logreg_objective, packed as [vec(W), b].
Eigen::VectorXd finite_difference_gradient(const Eigen::MatrixXd& x,
                                           const std::vector<int>& labels,
                                           const Eigen::MatrixXd& weights,
                                           const Eigen::VectorXd& bias, double l2,
                                           double step = 1e-5);

// Deterministic objective on an n x n grid with a single maximum at
// (opt_row, opt_col): separable, decaying with distance along each axis,
// with a fixed pseudo-random ripple that never reaches the optimum's value.
struct GridObjective {
  std::size_t n = 16;
  std::size_t opt_row = 11;
  std::size_t opt_col = 4;

  double operator()(const PromptCandidate& c) const;
};

// Number of evaluations until the optimum is first suggested.
std::size_t tpe_trials_to_optimum(const GridObjective& f, std::uint64_t seed,
                                  const optimizer::TpeOptions& options = {});
// Uniform random search without replacement.
std::size_t random_trials_to_optimum(const GridObjective& f, std::uint64_t seed);

// Pearson chi-square statistic against a uniform expectation, and its
// upper-tail p-value.
double chi_square_statistic(const std::vector<std::size_t>& counts);
double chi_square_p_value(double statistic, double degrees_of_freedom);

double median(std::vector<double> values);

// An offline run over the planted corpus: data.jsonl, transcript.json and
// config.toml written into a directory.
struct PlantedDemo {
  fixtures::CorpusOptions corpus;
  fixtures::TranscriptOptions transcript;
  std::size_t annotation_size = 512;
  std::size_t n_example_sets = 4;
  std::size_t example_set_size = 16;
  std::size_t n_feedback_rounds = 1;
  std::size_t n_iter = 0;  // 0: leave unset
  std::uint64_t seed = 7;
  std::string mode = "reflective";
  std::string run_dir = "run";
  std::string extra_config;  // appended verbatim

  // Returns the config path.
  std::filesystem::path write(const std::filesystem::path& dir) const;
};

}  // namespace featopt::testing
