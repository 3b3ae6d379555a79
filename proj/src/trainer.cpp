#include "adr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "adr/csvio.hpp"

namespace adr::trainer {

void sgd_step(OptimState& state, std::span<const double> grads) {
  if (grads.size() != state.theta.size() || state.velocity.size() != state.theta.size())
    throw std::invalid_argument("sgd_step: shape mismatch");
  const double mu = state.momentum, wd = state.weight_decay, alpha = state.alpha;
  for (std::size_t i = 0; i < state.theta.size(); ++i) {
    const double g = grads[i] + wd * state.theta[i];
    state.velocity[i] = mu * state.velocity[i] + g;
    state.theta[i] -= alpha * state.velocity[i];
  }
}

double Schedule::at(int epoch) const {
  if (drop_every < 1 || factor <= 0.0 || factor > 1.0)
    throw std::invalid_argument("schedule: need drop_every >= 1 and factor in (0,1]");
  return alpha0 * std::pow(factor, epoch / drop_every);
}

double topk_accuracy(const Matrix& logits, std::span<const int> labels, int k) {
  if (k < 1 || k > logits.cols) throw std::invalid_argument("topk_accuracy: k out of range");
  if (static_cast<int>(labels.size()) != logits.rows)
    throw std::invalid_argument("topk_accuracy: label count mismatch");
  int hits = 0;
  for (int i = 0; i < logits.rows; ++i) {
    const double* z = logits.row(i);
    const int label = labels[i];
    const double zl = z[label];
    // Rank of the label under (value desc, index asc) ordering.
    int rank = 0;
    for (int j = 0; j < logits.cols; ++j) {
      if (z[j] > zl || (z[j] == zl && j < label)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / logits.rows;
}

double expected_calibration_error(std::span<const double> confidences,
                                  std::span<const std::uint8_t> correct, int bins) {
  if (bins < 1) throw std::invalid_argument("ece: bins must be >= 1");
  if (confidences.size() != correct.size())
    throw std::invalid_argument("ece: length mismatch");
  const int n = static_cast<int>(confidences.size());
  if (n == 0) return 0.0;
  std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n; ++i) {
    const double c = confidences[i];
    if (c < 0.0 || c > 1.0) throw std::invalid_argument("ece: confidence outside [0,1]");
    int b = static_cast<int>(c * bins);
    if (b == bins) b = bins - 1;  // confidence exactly 1 lands in the last bin
    conf_sum[b] += c;
    acc_sum[b] += correct[i] ? 1.0 : 0.0;
    ++count[b];
  }
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double acc = acc_sum[b] / count[b];
    const double conf = conf_sum[b] / count[b];
    ece += (static_cast<double>(count[b]) / n) * std::abs(acc - conf);
  }
  return ece;
}

void confidence_and_correct(const Matrix& logits, std::span<const int> labels,
                            std::vector<double>& conf, std::vector<std::uint8_t>& correct) {
  conf.resize(logits.rows);
  correct.resize(logits.rows);
  for (int i = 0; i < logits.rows; ++i) {
    const auto p = simplex::softmax(logits.row_span(i));
    const int am = simplex::argmax_index(p.span());
    conf[i] = p[am];
    correct[i] = am == labels[i] ? 1 : 0;
  }
}

namespace {

double regularizer_weight(const losses::LossSpec& s) {
  switch (s.kind) {
    case losses::LossKind::CeAdr:
    case losses::LossKind::LsAdr:
      return s.adr.gamma;
    case losses::LossKind::CeEntropy:
      return s.ent.lambda;
    default:
      return 0.0;
  }
}

double mean_max_prob(const Matrix& logits) {
  double sum = 0.0;
  for (int i = 0; i < logits.rows; ++i) {
    const auto p = simplex::softmax(logits.row_span(i));
    sum += p[simplex::argmax_index(p.span())];
  }
  return logits.rows > 0 ? sum / logits.rows : 0.0;
}

}  // namespace

const char* const kMetricsHeader =
    "epoch,train_loss,train_ce_part,train_adr_part,train_acc,val_loss,val_acc_top1,"
    "val_acc_topk,ece";

RunRecord train(const data::LabeledDataset& train_ds, const data::LabeledDataset& val_ds,
                const TrainOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (train_ds.classes != val_ds.classes || train_ds.dim() != val_ds.dim())
    throw std::invalid_argument("train: train/validation datasets disagree");

  data::LabeledDataset tr = train_ds;
  data::LabeledDataset va = val_ds;
  const data::Standardizer st = data::fit_standardizer(tr);
  data::standardize(st, tr);
  data::standardize(st, va);

  std::vector<int> sizes{tr.dim()};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(tr.classes);
  model::MlpParams params = model::init(sizes, opt.seed);

  OptimState state;
  state.theta = model::flatten(params);
  state.velocity.assign(state.theta.size(), 0.0);
  state.momentum = opt.momentum;
  state.weight_decay = opt.weight_decay;

  RunRecord rec;
  rec.seed = opt.seed;
  rec.config_snapshot = opt.config_snapshot;

  const double reg_w = regularizer_weight(opt.loss);
  const int n = tr.size();
  const int topk = std::min(opt.topk, tr.classes);

  for (int epoch = 0; epoch < opt.epochs && !rec.diverged; ++epoch) {
    state.alpha = opt.schedule.at(epoch);
    double ce_sum = 0.0, reg_sum = 0.0;
    int correct = 0;
    for (const auto& idx : data::batch_order(n, opt.batch_size, opt.seed, epoch)) {
      const data::Batch b = data::gather(tr, idx);
      model::ForwardCache cache;
      const Matrix logits = model::forward(params, b.x, &cache);
      const bool finite =
          std::all_of(logits.a.begin(), logits.a.end(), [](double v) { return std::isfinite(v); });
      if (!finite) {
        rec.diverged = true;
        rec.diverged_epoch = epoch;
        break;
      }
      losses::BatchLoss bl = losses::batch_eval(opt.loss, logits, b.y);
      if (!std::isfinite(bl.value) || bl.value > 1e6) {
        rec.diverged = true;
        rec.diverged_epoch = epoch;
        break;
      }
      const int bs = static_cast<int>(idx.size());
      ce_sum += bl.ce_part * bs;
      reg_sum += bl.reg_part * bs;
      correct += bl.correct;
      const double inv = 1.0 / bs;  // batch reduction: mean
      for (double& g : bl.dlogits.a) g *= inv;
      const model::ParamGrads grads = model::backward(params, cache, bl.dlogits);
      sgd_step(state, model::flatten(grads));
      model::write_flat(state.theta, params);
    }
    if (!rec.diverged &&
        !std::all_of(state.theta.begin(), state.theta.end(),
                     [](double v) { return std::isfinite(v); })) {
      rec.diverged = true;
      rec.diverged_epoch = epoch;
    }
    if (rec.diverged) break;

    EpochRow row;
    row.epoch = epoch;
    row.train_ce_part = ce_sum / n;
    row.train_adr_part = reg_sum / n;
    row.train_loss = row.train_ce_part + reg_w * row.train_adr_part;
    row.train_acc = static_cast<double>(correct) / n;

    const Matrix val_logits = model::forward(params, va.features);
    const losses::BatchLoss vl = losses::batch_eval(opt.loss, val_logits, va.labels);
    row.val_loss = vl.ce_part + reg_w * vl.reg_part;
    row.val_acc_top1 = topk_accuracy(val_logits, va.labels, 1);
    row.val_acc_topk = topk_accuracy(val_logits, va.labels, topk);
    std::vector<double> conf;
    std::vector<std::uint8_t> corr;
    confidence_and_correct(val_logits, va.labels, conf, corr);
    row.ece = expected_calibration_error(conf, corr);
    rec.rows.push_back(row);
  }

  if (!rec.diverged) rec.final_train_confidence = mean_max_prob(model::forward(params, tr.features));
  rec.final_params = std::move(params);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

void persist(const RunRecord& rec, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(dir + "/metrics.csv");
    if (!os) throw std::runtime_error("persist: cannot write metrics.csv in " + dir);
    if (!rec.config_snapshot.empty()) os << "# config " << rec.config_snapshot << '\n';
    os << kMetricsHeader << '\n';
    for (const auto& r : rec.rows) {
      os << r.epoch << ',' << io::fmt(r.train_loss) << ',' << io::fmt(r.train_ce_part) << ','
         << io::fmt(r.train_adr_part) << ',' << io::fmt(r.train_acc) << ',' << io::fmt(r.val_loss)
         << ',' << io::fmt(r.val_acc_top1) << ',' << io::fmt(r.val_acc_topk) << ','
         << io::fmt(r.ece) << '\n';
    }
  }
  {
    std::ofstream os(dir + "/config.json");
    os << (rec.config_snapshot.empty() ? "{}" : rec.config_snapshot) << '\n';
  }
  model::save_checkpoint(rec.final_params, dir + "/checkpoint.bin");
}

}  // namespace adr::trainer
