#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "adr/matrix.hpp"

namespace adr::data {

/// Raised by the IDX reader; the message names the failing byte offset.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabeledDataset {
  Matrix features;          // [n x d]
  std::vector<int> labels;  // in [0, classes)
  int classes = 0;
  std::string split;  // "train" or "validation"

  int size() const { return features.rows; }
  int dim() const { return features.cols; }
};

struct ClusterSpec {
  std::vector<double> mean;
  double stddev = 1.0;
  int count = 0;
};

/// Isotropic Gaussian blob per class, deterministic for a given seed.
LabeledDataset gaussian_clusters(const std::vector<ClusterSpec>& specs, std::uint64_t seed);

/// Paired-cluster preset: pair anchors sit far apart (scaled basis vectors
/// when the dimension allows, a circle otherwise) while the two classes of a
/// pair are only `gap` apart, one tight and one loose, producing the
/// semantic-overlap regime.
struct OverlapPreset {
  int classes = 10;
  int dim = 2;
  double gap = 1.0;
  double tight_std = 0.6;
  double loose_std = 1.2;
  double radius = 4.0;
  int per_class = 200;
};

LabeledDataset overlapping_pairs(const OverlapPreset& preset, std::uint64_t seed);

/// Widely separated two-class preset; linearly separable by construction.
LabeledDataset two_separated_clusters(int per_class, std::uint64_t seed);

/// IDX image/label pair: magic 0x803 / 0x801, big-endian dims, pixels
/// scaled to [0,1], images flattened to rows*cols.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

struct NoiseResult {
  LabeledDataset ds;
  std::vector<int> corrupted;  // indices whose label was flipped
};

/// Flips floor(rate*n) labels (chosen without replacement) to a uniformly
/// random different class. Symmetric noise, fixed per dataset seed.
NoiseResult inject_label_noise(const LabeledDataset& ds, double rate, std::uint64_t seed);

/// Exponential class-frequency profile: class k keeps
/// ceil(n_k * imbalance^(-k/(c-1))) samples.
LabeledDataset longtail_resample(const LabeledDataset& ds, double imbalance, std::uint64_t seed);

struct Batch {
  Matrix x;
  std::vector<int> y;
};

/// Seeded per-epoch shuffle, final short batch retained.
std::vector<std::vector<int>> batch_order(int n, int batch_size, std::uint64_t seed, int epoch);
Batch gather(const LabeledDataset& ds, std::span<const int> idx);
std::vector<Batch> batches(const LabeledDataset& ds, int batch_size, std::uint64_t seed,
                           int epoch);

/// Per-dimension zero-mean unit-variance transform fitted on train stats.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;
};

Standardizer fit_standardizer(const LabeledDataset& train);
void standardize(const Standardizer& s, LabeledDataset& ds);

/// Header f0..f{d-1},label.
void export_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace adr::data
