#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adr/data.hpp"
#include "adr/losses.hpp"
#include "adr/model.hpp"

namespace adr::trainer {

/// Flattened parameters plus the classical momentum buffer.
struct OptimState {
  std::vector<double> theta;
  std::vector<double> velocity;
  double alpha = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

/// v <- mu*v + (g + wd*theta); theta <- theta - alpha*v. With mu = 0 this is
/// the plain update theta <- theta - alpha*g.
void sgd_step(OptimState& state, std::span<const double> grads);

/// alpha(epoch) = alpha0 * factor^floor(epoch / drop_every).
struct Schedule {
  double alpha0 = 0.05;
  int drop_every = 40;
  double factor = 0.1;
  double at(int epoch) const;
};

/// Fraction of samples whose label is among the k largest logits
/// (ties broken by ascending index).
double topk_accuracy(const Matrix& logits, std::span<const int> labels, int k);

/// Equal-width binning on [0,1]; ECE = sum_b (n_b/n) |acc_b - conf_b|.
double expected_calibration_error(std::span<const double> confidences,
                                  std::span<const std::uint8_t> correct, int bins = 15);

/// Max softmax probability and top-1 hit per row; feeds the ECE.
void confidence_and_correct(const Matrix& logits, std::span<const int> labels,
                            std::vector<double>& conf, std::vector<std::uint8_t>& correct);

struct EpochRow {
  int epoch = 0;
  double train_loss = 0, train_ce_part = 0, train_adr_part = 0, train_acc = 0;
  double val_loss = 0, val_acc_top1 = 0, val_acc_topk = 0, ece = 0;
};

struct TrainOptions {
  std::vector<int> hidden{64};
  losses::LossSpec loss;
  Schedule schedule;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int batch_size = 64;
  int epochs = 100;
  int topk = 5;
  std::uint64_t seed = 1;
  std::string config_snapshot;  // resolved config, embedded into outputs
};

struct RunRecord {
  std::string config_snapshot;
  std::uint64_t seed = 0;
  std::vector<EpochRow> rows;
  bool diverged = false;
  int diverged_epoch = -1;
  double final_train_confidence = 0.0;  // mean max-probability on the train set
  double wall_seconds = 0.0;
  model::MlpParams final_params;
};

/// Deterministic given datasets + options; standardizes features with
/// train-split statistics before optimizing.
RunRecord train(const data::LabeledDataset& train_ds, const data::LabeledDataset& val_ds,
                const TrainOptions& opt);

/// Writes metrics.csv, config.json and checkpoint.bin under dir.
void persist(const RunRecord& rec, const std::string& dir);

extern const char* const kMetricsHeader;

}  // namespace adr::trainer
