#include "adr/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "adr/kernels.hpp"

namespace adr::model {

namespace {

void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

MlpParams init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("init: need at least two layer sizes");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("init: layer sizes must be positive");
  MlpParams p;
  p.sizes = layer_sizes;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = layer_sizes[l];
    layer.out = layer_sizes[l + 1];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / layer.in));
    layer.w.resize(static_cast<std::size_t>(layer.out) * layer.in);
    for (double& w : layer.w) w = dist(rng);
    layer.b.assign(layer.out, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward(const MlpParams& params, const Matrix& batch, ForwardCache* cache) {
  if (batch.cols != params.layers.front().in)
    throw std::invalid_argument("forward: input width does not match first layer");
  if (cache) {
    cache->input = batch;
    cache->pre.clear();
    cache->act.clear();
  }
  Matrix act = batch;
  const int last = static_cast<int>(params.layers.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    const DenseLayer& layer = params.layers[l];
    Matrix wmat;
    wmat.rows = layer.out;
    wmat.cols = layer.in;
    wmat.a = layer.w;
    Matrix z;
    kernels::linear_forward(act, wmat, layer.b, z);
    if (cache) cache->pre.push_back(z);
    if (l < last) {
      Matrix a;
      kernels::relu_forward(z, a);
      if (cache) cache->act.push_back(a);
      act = std::move(a);
    } else {
      act = std::move(z);
    }
  }
  return act;
}

ParamGrads backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits) {
  const int nlayers = static_cast<int>(params.layers.size());
  if (static_cast<int>(cache.pre.size()) != nlayers)
    throw std::invalid_argument("backward: cache does not match params");
  if (dlogits.rows != cache.input.rows || dlogits.cols != params.layers.back().out)
    throw std::invalid_argument("backward: dlogits shape mismatch");
  ParamGrads grads;
  grads.layers.resize(nlayers);
  Matrix dz = dlogits;
  for (int l = nlayers - 1; l >= 0; --l) {
    const DenseLayer& layer = params.layers[l];
    const Matrix& below = l == 0 ? cache.input : cache.act[l - 1];
    DenseLayer& g = grads.layers[l];
    g.in = layer.in;
    g.out = layer.out;
    g.b.assign(layer.out, 0.0);
    Matrix dw;
    kernels::linear_backward_params(dz, below, dw, g.b);
    g.w = std::move(dw.a);
    if (l > 0) {
      Matrix wmat;
      wmat.rows = layer.out;
      wmat.cols = layer.in;
      wmat.a = layer.w;
      Matrix da;
      kernels::linear_backward_input(dz, wmat, da);
      Matrix next_dz;
      kernels::relu_backward(da, cache.pre[l - 1], next_dz);
      dz = std::move(next_dz);
    }
  }
  return grads;
}

namespace {
template <typename T>
std::vector<double> flatten_layers(const T& holder) {
  std::vector<double> out;
  for (const auto& l : holder.layers) {
    out.insert(out.end(), l.w.begin(), l.w.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  return out;
}
}  // namespace

std::vector<double> flatten(const MlpParams& params) { return flatten_layers(params); }
std::vector<double> flatten(const ParamGrads& grads) { return flatten_layers(grads); }

void write_flat(std::span<const double> theta, MlpParams& params) {
  if (theta.size() != params.param_count())
    throw std::invalid_argument("write_flat: size mismatch");
  std::size_t off = 0;
  for (auto& l : params.layers) {
    std::copy(theta.begin() + off, theta.begin() + off + l.w.size(), l.w.begin());
    off += l.w.size();
    std::copy(theta.begin() + off, theta.begin() + off + l.b.size(), l.b.begin());
    off += l.b.size();
  }
}

void save_checkpoint(const MlpParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  write_u32_le(os, static_cast<std::uint32_t>(params.sizes.size()));
  for (int s : params.sizes) write_u32_le(os, static_cast<std::uint32_t>(s));
  for (const auto& l : params.layers) {
    for (double w : l.w) write_f64_le(os, w);
    for (double b : l.b) write_f64_le(os, b);
  }
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  const std::uint32_t n = read_u32_le(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(read_u32_le(is));
  MlpParams params = init(sizes, 0);
  for (auto& l : params.layers) {
    for (double& w : l.w) w = read_f64_le(is);
    for (double& b : l.b) b = read_f64_le(is);
  }
  return params;
}

}  // namespace adr::model
