// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "featopt_test/support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

namespace featopt::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& stem) {
  static std::uint64_t counter = 0;
  const auto salt = std::to_string(::getpid()) + "-" + std::to_string(counter++);
  Rng rng(derive_seed(fnv1a64(salt), std::uint64_t{0}));
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() /
                     (stem + "-" + salt + "-" + std::to_string(uniform_index(rng, 1u << 30)));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create a temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

FeatureMatrix random_feature_matrix(Rng& rng, std::size_t rows, std::size_t n_classes,
                                    std::size_t max_columns) {
  std::vector<std::string> classes;
  for (std::size_t c = 0; c < n_classes; ++c) classes.push_back("c" + std::to_string(c));

  FeatureSet fs;
  std::size_t columns = 0;
  const std::size_t wanted = 1 + uniform_index(rng, 4);
  for (std::size_t f = 0; f < wanted; ++f) {
    const auto kind = uniform_index(rng, 3);
    FeatureValueType type = FeatureValueType::boolean();
    std::size_t width = 2;
    if (kind == 1) {
      type = FeatureValueType::real();
    } else if (kind == 2) {
      const std::size_t k = 2 + uniform_index(rng, 2);
      std::vector<std::string> cats;
      for (std::size_t i = 0; i < k; ++i) cats.push_back("v" + std::to_string(i));
      type = FeatureValueType::categorical(cats);
      width = k + 1;
    }
    if (columns + width > max_columns) continue;
    columns += width;
    const std::string name = "f" + std::to_string(fs.features.size());
    fs.features.push_back({name, type, "random feature", "report " + name});
  }
  if (fs.empty()) fs.features.push_back({"f0", FeatureValueType::boolean(), "d", "p"});

  std::vector<std::size_t> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) labels[i] = i % n_classes;
  shuffle(labels, rng);

  std::vector<FeatureRow> out;
  for (std::size_t i = 0; i < rows; ++i) {
    FeatureRow row{"r" + std::to_string(i), classes[labels[i]], {}};
    for (std::size_t f = 0; f < fs.size(); ++f) {
      const auto& type = fs.features[f].value_type;
      const bool informative = f == 0 && uniform_unit(rng) < 0.6;
      if (uniform_unit(rng) < 0.05) {
        row.values.push_back(Missing{MissingReason::kParseFailed});
      } else if (type.kind == ValueKind::kBoolean) {
        row.values.push_back(informative ? labels[i] % 2 == 1 : uniform_index(rng, 2) == 1);
      } else if (type.kind == ValueKind::kReal) {
        const double base = informative ? static_cast<double>(labels[i]) : 0.0;
        row.values.push_back(base + 2.0 * uniform_unit(rng) - 1.0);
      } else {
        const auto k = type.categories.size();
        const auto pick = informative ? labels[i] % k : uniform_index(rng, k);
        row.values.push_back(Category{type.categories[pick]});
      }
    }
    out.push_back(std::move(row));
  }
  return FeatureMatrix(std::move(fs), std::move(classes), std::move(out));
}

std::vector<double> brute_force_shapley(const metrics::ClassifierModel& model,
                                        const metrics::EncodedMatrix& enc, std::size_t row,
                                        std::size_t cls) {
  const std::size_t n = enc.cols();
  if (n > 16) throw std::invalid_argument("too many columns to enumerate");
  const auto r = static_cast<Eigen::Index>(row);
  const auto c = static_cast<Eigen::Index>(cls);
  auto value = [&](std::uint32_t mask) {
    double v = model.bias(c);
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double xj = (mask >> j) & 1u ? enc.x(r, jj) : enc.stats.column_means(jj);
      v += model.weights(c, jj) * xj;
    }
    return v;
  };
  std::vector<double> factorial(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) factorial[i] = factorial[i - 1] * static_cast<double>(i);

  std::vector<double> phi(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if ((mask >> j) & 1u) continue;
      const auto s = static_cast<std::size_t>(__builtin_popcount(mask));
      const double weight = factorial[s] * factorial[n - s - 1] / factorial[n];
      phi[j] += weight * (value(mask | (1u << j)) - value(mask));
    }
  }
  return phi;
}

Eigen::VectorXd finite_difference_gradient(const Eigen::MatrixXd& x,
                                           const std::vector<int>& labels,
                                           const Eigen::MatrixXd& weights,
                                           const Eigen::VectorXd& bias, double l2,
                                           double step) {
  const auto nw = weights.size();
  Eigen::VectorXd grad(nw + bias.size());
  for (Eigen::Index k = 0; k < nw; ++k) {
    Eigen::MatrixXd plus = weights, minus = weights;
    plus.data()[k] += step;
    minus.data()[k] -= step;
    grad(k) = (metrics::logreg_objective(x, labels, plus, bias, l2) -
               metrics::logreg_objective(x, labels, minus, bias, l2)) /
              (2.0 * step);
  }
  for (Eigen::Index k = 0; k < bias.size(); ++k) {
    Eigen::VectorXd plus = bias, minus = bias;
    plus(k) += step;
    minus(k) -= step;
    grad(nw + k) = (metrics::logreg_objective(x, labels, weights, plus, l2) -
                    metrics::logreg_objective(x, labels, weights, minus, l2)) /
                   (2.0 * step);
  }
  return grad;
}

double GridObjective::operator()(const PromptCandidate& c) const {
  const auto di = std::abs(static_cast<double>(c.instruction_id) - static_cast<double>(opt_row));
  const auto dj = std::abs(static_cast<double>(c.example_set_id) - static_cast<double>(opt_col));
  const double span = static_cast<double>(n);
  // Ripple in [0, 0.005) keyed by the cell, absent at the optimum; the
  // nearest neighbours score at most 0.9 * 15/16 + 0.005 < 0.9.
  const auto cell = c.instruction_id * n + c.example_set_id;
  const double ripple =
      (di + dj == 0.0) ? 0.0 : 0.005 * static_cast<double>(splitmix64(cell) % 1000) / 1000.0;
  return 0.9 * (1.0 - di / span) * (1.0 - dj / span) + ripple;
}

std::size_t tpe_trials_to_optimum(const GridObjective& f, std::uint64_t seed,
                                  const optimizer::TpeOptions& options) {
  optimizer::TpeState state(options, seed);
  for (std::size_t t = 1; t <= f.n * f.n; ++t) {
    const auto c = optimizer::tpe_suggest(state, f.n, f.n);
    if (c.instruction_id == f.opt_row && c.example_set_id == f.opt_col) return t;
    state.observe(c, f(c));
  }
  return f.n * f.n + 1;
}

std::size_t random_trials_to_optimum(const GridObjective& f, std::uint64_t seed) {
  std::vector<std::size_t> order(f.n * f.n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "random-search"));
  shuffle(order, rng);
  const auto target = f.opt_row * f.n + f.opt_col;
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), target) - order.begin()) +
         1;
}

double chi_square_statistic(const std::vector<std::size_t>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

double chi_square_p_value(double statistic, double degrees_of_freedom) {
  boost::math::chi_squared dist(degrees_of_freedom);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of nothing");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

fs::path PlantedDemo::write(const fs::path& dir) const {
  fs::create_directories(dir);
  const auto c = fixtures::make_planted_corpus(corpus);
  write_file(dir / "data.jsonl", fixtures::to_jsonl(c.records));
  write_file(dir / "transcript.json", fixtures::scripted_transcript(c, transcript).dump(1));
  std::string config = fmt::format(
      "[dataset]\npath = \"data.jsonl\"\ntrain_per_class = 16\nannotation_size = {}\n"
      "[endpoint]\nmax_in_flight = 4\n"
      "[run]\ndir = \"{}\"\n"
      "[search]\nseed = {}\nn_example_sets = {}\nexample_set_size = {}\n"
      "n_feedback_rounds = {}\nk_reflect = {}\nmode = \"{}\"\n",
      annotation_size, run_dir, seed, n_example_sets, example_set_size, n_feedback_rounds,
      transcript.k_reflect, mode);
  if (n_iter > 0) config += fmt::format("n_iter = {}\n", n_iter);
  config += extra_config;
  write_file(dir / "config.toml", config);
  return dir / "config.toml";
}

}  // namespace featopt::testing
