#include "adr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace adr::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& is, std::size_t& offset, const std::string& path) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is)
    throw FormatError(path + ": truncated at offset " + std::to_string(offset));
  offset += 4;
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

}  // namespace

LabeledDataset gaussian_clusters(const std::vector<ClusterSpec>& specs, std::uint64_t seed) {
  if (specs.size() < 2) throw std::invalid_argument("gaussian_clusters: need at least 2 classes");
  const int dim = static_cast<int>(specs.front().mean.size());
  int total = 0;
  for (const auto& s : specs) {
    if (s.stddev <= 0.0) throw std::invalid_argument("gaussian_clusters: stddev must be positive");
    if (s.count <= 0) throw std::invalid_argument("gaussian_clusters: count must be positive");
    if (static_cast<int>(s.mean.size()) != dim)
      throw std::invalid_argument("gaussian_clusters: inconsistent mean dimensions");
    total += s.count;
  }
  LabeledDataset ds;
  ds.classes = static_cast<int>(specs.size());
  ds.features = Matrix(total, dim);
  ds.labels.resize(total);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  int row = 0;
  for (int k = 0; k < ds.classes; ++k) {
    const ClusterSpec& s = specs[k];
    for (int i = 0; i < s.count; ++i, ++row) {
      double* f = ds.features.row(row);
      for (int j = 0; j < dim; ++j) f[j] = s.mean[j] + s.stddev * unit(rng);
      ds.labels[row] = k;
    }
  }
  return ds;
}

LabeledDataset overlapping_pairs(const OverlapPreset& p, std::uint64_t seed) {
  if (p.classes < 2 || p.dim < 2)
    throw std::invalid_argument("overlapping_pairs: need classes >= 2 and dim >= 2");
  const int anchors = (p.classes + 1) / 2;
  std::vector<ClusterSpec> specs;
  for (int k = 0; k < p.classes; ++k) {
    const int a = k / 2;
    std::vector<double> mean(p.dim, 0.0);
    std::vector<double> shift(p.dim, 0.0);
    if (p.dim >= anchors) {
      mean[a] = p.radius;
      shift[(a + 1) % p.dim] = 1.0;  // toward the next basis direction
    } else {
      const double theta = 2.0 * std::numbers::pi * a / anchors;
      mean[0] = p.radius * std::cos(theta);
      mean[1] = p.radius * std::sin(theta);
      shift[0] = -std::sin(theta);  // tangential
      shift[1] = std::cos(theta);
    }
    if (k % 2 == 1)
      for (int j = 0; j < p.dim; ++j) mean[j] += p.gap * shift[j];
    specs.push_back({std::move(mean), k % 2 == 0 ? p.tight_std : p.loose_std, p.per_class});
  }
  return gaussian_clusters(specs, seed);
}

LabeledDataset two_separated_clusters(int per_class, std::uint64_t seed) {
  std::vector<ClusterSpec> specs{{{-10.0, 0.0}, 0.1, per_class}, {{10.0, 0.0}, 0.1, per_class}};
  return gaussian_clusters(specs, seed);
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw FormatError(images_path + ": cannot open");
  std::size_t off = 0;
  const std::uint32_t magic_i = read_u32_be(imgs, off, images_path);
  if (magic_i != kImagesMagic)
    throw FormatError(images_path + ": bad magic at offset 0");
  const std::uint32_t count = read_u32_be(imgs, off, images_path);
  const std::uint32_t rows = read_u32_be(imgs, off, images_path);
  const std::uint32_t cols = read_u32_be(imgs, off, images_path);
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;

  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw FormatError(labels_path + ": cannot open");
  std::size_t loff = 0;
  const std::uint32_t magic_l = read_u32_be(labs, loff, labels_path);
  if (magic_l != kLabelsMagic)
    throw FormatError(labels_path + ": bad magic at offset 0");
  const std::uint32_t lcount = read_u32_be(labs, loff, labels_path);
  if (lcount != count)
    throw FormatError(labels_path + ": label count " + std::to_string(lcount) +
                      " does not match image count " + std::to_string(count));

  LabeledDataset ds;
  ds.features = Matrix(static_cast<int>(count), static_cast<int>(dim));
  ds.labels.resize(count);
  std::vector<unsigned char> buf(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
    if (!imgs)
      throw FormatError(images_path + ": truncated at offset " + std::to_string(off));
    off += dim;
    double* f = ds.features.row(static_cast<int>(i));
    for (std::size_t j = 0; j < dim; ++j) f[j] = buf[j] / 255.0;
  }
  int max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const int ch = labs.get();
    if (ch == EOF)
      throw FormatError(labels_path + ": truncated at offset " + std::to_string(loff));
    ++loff;
    ds.labels[i] = ch;
    max_label = std::max(max_label, ch);
  }
  ds.classes = max_label + 1;
  return ds;
}

NoiseResult inject_label_noise(const LabeledDataset& ds, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("inject_label_noise: rate in [0,1]");
  if (ds.classes < 2) throw std::invalid_argument("inject_label_noise: need at least 2 classes");
  NoiseResult out{ds, {}};
  const int n = ds.size();
  const int m = static_cast<int>(std::floor(rate * n));
  if (m == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  out.corrupted.assign(order.begin(), order.begin() + m);
  std::sort(out.corrupted.begin(), out.corrupted.end());
  for (int idx : out.corrupted) {
    // Uniform over the c-1 wrong classes; never maps a label to itself.
    std::uniform_int_distribution<int> wrong(0, ds.classes - 2);
    int k = wrong(rng);
    if (k >= ds.labels[idx]) ++k;
    out.ds.labels[idx] = k;
  }
  return out;
}

LabeledDataset longtail_resample(const LabeledDataset& ds, double imbalance, std::uint64_t seed) {
  if (imbalance < 1.0) throw std::invalid_argument("longtail_resample: imbalance must be >= 1");
  const int c = ds.classes;
  std::vector<std::vector<int>> per_class(c);
  for (int i = 0; i < ds.size(); ++i) per_class[ds.labels[i]].push_back(i);
  for (int k = 1; k < c; ++k)
    if (per_class[k].size() != per_class[0].size())
      throw std::invalid_argument("longtail_resample: dataset must be class-balanced");
  std::mt19937_64 rng(seed);
  std::vector<int> keep;
  for (int k = 0; k < c; ++k) {
    const double factor = std::pow(imbalance, -static_cast<double>(k) / (c - 1));
    const int target =
        static_cast<int>(std::ceil(static_cast<double>(per_class[k].size()) * factor));
    if (target < 1) throw std::invalid_argument("longtail_resample: class emptied");
    std::shuffle(per_class[k].begin(), per_class[k].end(), rng);
    per_class[k].resize(target);
    std::sort(per_class[k].begin(), per_class[k].end());
    keep.insert(keep.end(), per_class[k].begin(), per_class[k].end());
  }
  LabeledDataset out;
  out.classes = c;
  out.split = ds.split;
  out.features = Matrix(static_cast<int>(keep.size()), ds.dim());
  out.labels.resize(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::copy(ds.features.row(keep[i]), ds.features.row(keep[i]) + ds.dim(),
              out.features.row(static_cast<int>(i)));
    out.labels[i] = ds.labels[keep[i]];
  }
  return out;
}

std::vector<std::vector<int>> batch_order(int n, int batch_size, std::uint64_t seed, int epoch) {
  if (batch_size < 1) throw std::invalid_argument("batch_order: batch size must be >= 1");
  std::seed_seq seq{static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(epoch),
                    std::uint64_t{0x9e3779b97f4a7c15ULL}};
  std::mt19937_64 rng(seq);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

Batch gather(const LabeledDataset& ds, std::span<const int> idx) {
  Batch b;
  b.x = Matrix(static_cast<int>(idx.size()), ds.dim());
  b.y.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(ds.features.row(idx[i]), ds.features.row(idx[i]) + ds.dim(),
              b.x.row(static_cast<int>(i)));
    b.y[i] = ds.labels[idx[i]];
  }
  return b;
}

std::vector<Batch> batches(const LabeledDataset& ds, int batch_size, std::uint64_t seed,
                           int epoch) {
  std::vector<Batch> out;
  for (const auto& idx : batch_order(ds.size(), batch_size, seed, epoch))
    out.push_back(gather(ds, idx));
  return out;
}

Standardizer fit_standardizer(const LabeledDataset& train) {
  const int n = train.size(), d = train.dim();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* f = train.features.row(i);
    for (int j = 0; j < d; ++j) s.mean[j] += f[j];
  }
  for (int j = 0; j < d; ++j) s.mean[j] /= n;
  for (int i = 0; i < n; ++i) {
    const double* f = train.features.row(i);
    for (int j = 0; j < d; ++j) s.stddev[j] += (f[j] - s.mean[j]) * (f[j] - s.mean[j]);
  }
  for (int j = 0; j < d; ++j) s.stddev[j] = std::max(std::sqrt(s.stddev[j] / n), 1e-12);
  return s;
}

void standardize(const Standardizer& s, LabeledDataset& ds) {
  const int n = ds.size(), d = ds.dim();
  if (static_cast<int>(s.mean.size()) != d)
    throw std::invalid_argument("standardize: dimension mismatch");
  for (int i = 0; i < n; ++i) {
    double* f = ds.features.row(i);
    for (int j = 0; j < d; ++j) f[j] = (f[j] - s.mean[j]) / s.stddev[j];
  }
}

void export_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export_csv: cannot open " + path);
  for (int j = 0; j < ds.dim(); ++j) os << 'f' << j << ',';
  os << "label\n";
  char buf[40];
  for (int i = 0; i < ds.size(); ++i) {
    const double* f = ds.features.row(i);
    for (int j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.12g", f[j]);
      os << buf << ',';
    }
    os << ds.labels[i] << '\n';
  }
}

}  // namespace adr::data
