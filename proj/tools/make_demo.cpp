// Copyright 2026 The featopt Authors.
// SPDX-License-Identifier: Apache-2.0

// Writes an offline demo: a planted-ticket dataset, a scripted transcript that
// plays every agent, and a config pointing at both.
//
//   featopt_make_demo <out-dir> [--noise p] [--seed n]
//   featopt optimize --config <out-dir>/demo.toml --scripted-lm <out-dir>/transcript.json

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "featopt/fixtures/planted.hpp"

namespace {

void write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

constexpr const char* kConfig = R"(# Offline demo over the planted-ticket corpus.
[dataset]
path = "data.jsonl"
format = "jsonl"
train_per_class = 16
annotation_size = 512

[run]
dir = "run"

[search]
seed = 7
n_example_sets = 4
example_set_size = 16
n_feedback_rounds = 1
k_reflect = 4
lambda = 0.75
mode = "reflective"
)";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: featopt_make_demo <out-dir> [--noise p] [--seed n]\n";
    return 1;
  }
  featopt::fixtures::CorpusOptions options;
  for (int i = 2; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--noise") {
      options.label_noise = std::stod(argv[i + 1]);
    } else if (flag == "--seed") {
      options.seed = std::stoull(argv[i + 1]);
    } else {
      std::cerr << "unknown flag " << flag << "\n";
      return 1;
    }
  }
  try {
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    const auto corpus = featopt::fixtures::make_planted_corpus(options);
    write(dir / "data.jsonl", featopt::fixtures::to_jsonl(corpus.records));
    write(dir / "transcript.json", featopt::fixtures::scripted_transcript(corpus).dump(1) + "\n");
    write(dir / "demo.toml", kConfig);
    std::cout << "wrote " << corpus.records.size() << " records to " << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "featopt_make_demo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
