#pragma once

#include <optional>
#include <string>

#include "gapforge/training.hpp"

namespace gapforge::cli {

// flag > config file > built-in default
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::optional<int> max_width;
    std::optional<std::string> model;
    std::optional<double> neg_ratio;
    std::optional<double> learning_rate;
    std::optional<int> epochs;
    std::optional<int> k;
};

TrainConfig resolve_config(const std::string& config_path, const Overrides& overrides);
std::string resolve_model_kind(const std::string& config_path, const Overrides& overrides);

std::uint64_t hash_file(const std::string& path);

// Clean + split + summarize a directory of marker-text (*.txt) or JSONL
// (*.jsonl) files into one corpus file; prints corpus statistics.
void run_prepare(const std::string& raw_dir, const std::string& out_corpus,
                 std::uint64_t seed);

// Trains on the train and dev splits (all documents when the corpus carries
// no split assignments) and writes checkpoint, run log, and manifest.
void run_train(const std::string& corpus_path, const TrainConfig& config,
               const std::string& model_kind, const std::string& out_dir);

// Negative-ratio grid search; writes the chosen ratio into the manifest.
void run_tune(const std::string& corpus_path, const TrainConfig& config,
              const std::string& out_dir);

void run_eval(const std::string& checkpoint_dir, const std::string& corpus_path,
              const std::string& protocol, const std::string& out_report);

void run_generate(const std::string& checkpoint_dir, const std::string& exemplar_file,
                  const std::string& input_file, const std::string& out_file,
                  const std::string& format, bool with_scores);

}  // namespace gapforge::cli
