#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adr/matrix.hpp"

namespace adr::model {

/// One fully connected layer; weights row-major [out x in].
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

/// ReLU hidden activations, identity output. Double precision throughout;
/// this is a correctness artifact, not a speed artifact.
struct MlpParams {
  std::vector<int> sizes;  // input, hidden..., classes
  std::vector<DenseLayer> layers;

  std::size_t param_count() const;
};

/// He-style init: W ~ N(0, 2/in), biases zero, deterministic per seed.
MlpParams init(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Pre-activations and activations of one minibatch, kept for backward.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;  // per layer, before ReLU
  std::vector<Matrix> act;  // per hidden layer, after ReLU
};

/// Returns logits [B x c]; fills the cache when given.
Matrix forward(const MlpParams& params, const Matrix& batch, ForwardCache* cache = nullptr);

struct ParamGrads {
  std::vector<DenseLayer> layers;  // same shapes as the params
};

/// Exact gradients of the scalar loss whose logit-gradient is dlogits.
/// No batch scaling happens here; dlogits carries whatever reduction the
/// caller chose.
ParamGrads backward(const MlpParams& params, const ForwardCache& cache, const Matrix& dlogits);

// Flat views in layer order (W row-major, then b, per layer).
std::vector<double> flatten(const MlpParams& params);
std::vector<double> flatten(const ParamGrads& grads);
void write_flat(std::span<const double> theta, MlpParams& params);

// Checkpoint: count-prefixed little-endian uint32 layer sizes, then the flat
// parameter vector as little-endian 64-bit floats.
void save_checkpoint(const MlpParams& params, const std::string& path);
MlpParams load_checkpoint(const std::string& path);

}  // namespace adr::model
