#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adr/data.hpp"
#include "adr/losses.hpp"
#include "adr/trainer.hpp"

namespace adr::cli {

struct DatasetConfig {
  std::string preset = "overlapping-pairs";  // or "two-separated", "idx"
  int classes = 10;
  int dim = 2;
  int train_per_class = 200;
  int val_per_class = 100;
  double gap = 1.0;
  double tight_std = 0.6;
  double loose_std = 1.2;
  double radius = 4.0;
  std::string images, labels, val_images, val_labels;  // idx preset
  double noise_rate = 0.0;
  double longtail = 1.0;  // 1 = disabled
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<int> hidden{64};
  losses::LossSpec loss;
  trainer::Schedule schedule{0.05, 40, 0.1};
  double momentum = 0.9;
  double weight_decay = 0.0;
  int epochs = 100;
  int batch = 64;
  int topk = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out = "runs/out";
  int threads = 0;
};

/// Flat key = value file with [section] headers; unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
void apply_kv(ExperimentConfig& cfg, const std::string& section, const std::string& key,
              const std::string& value);

/// Fails fast (before any compute) on inconsistent settings.
void validate(const ExperimentConfig& cfg);

/// Deterministic JSON snapshot embedded into every output file.
std::string snapshot(const ExperimentConfig& cfg);

/// Datasets for one replicate; seed drives generation, noise and long-tail.
struct SeedData {
  data::LabeledDataset train;
  data::LabeledDataset val;
  int corrupted = 0;  // labels flipped by the noise transform
};
SeedData build_datasets(const ExperimentConfig& cfg, std::uint64_t seed);

trainer::TrainOptions train_options(const ExperimentConfig& cfg, std::uint64_t seed);

losses::LossKind parse_loss_kind(const std::string& name);

}  // namespace adr::cli
