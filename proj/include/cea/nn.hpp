#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cea/rng.hpp"

// Minimal dense-network substrate: forward pass, reverse-mode gradients,
// Adam, target-network updates and a flat binary snapshot format. Fixed MLP
// topology only; everything is double precision.
namespace cea::nn {

using Vector = std::vector<double>;

enum class Activation : std::uint8_t { Identity = 0, Relu = 1, Tanh = 2 };

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct Layer {
  Matrix w;   // out x in
  Vector b;   // out
  Activation act = Activation::Identity;
};

struct ForwardCache {
  Vector input;
  std::vector<Vector> pre;   // pre-activation per layer
  std::vector<Vector> post;  // post-activation per layer
  bool valid = false;
};

class DenseNet;

struct GradientTape {
  std::vector<Matrix> dw;
  std::vector<Vector> db;

  GradientTape() = default;
  explicit GradientTape(const DenseNet& net);
  void zero();
  void scale(double factor);
  void add(const GradientTape& other);
  double global_norm() const;
  // Scales gradients so the global norm is at most max_norm.
  void clip_global_norm(double max_norm);
  bool finite() const;
};

class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(int input_dim, std::vector<Layer> layers);

  // hidden_act on every hidden layer, output_act on the last layer;
  // weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
  static DenseNet make_mlp(int input_dim, const std::vector<int>& hidden,
                           int output_dim, Activation hidden_act,
                           Activation output_act, Rng& rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t param_count() const;

  Vector forward(std::span<const double> x) const;
  Vector forward(std::span<const double> x, ForwardCache& cache) const;

  // Accumulates parameter gradients into tape and returns dLoss/dInput.
  // Requires a cache filled by forward() for the same input.
  Vector backward(const ForwardCache& cache, std::span<const double> out_grad,
                  GradientTape& tape) const;

 private:
  int input_dim_ = 0;
  std::vector<Layer> layers_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const DenseNet& net, AdamConfig cfg);

  // Applies one Adam step. Returns false (and leaves the net untouched)
  // when the tape contains non-finite gradients.
  bool step(DenseNet& net, const GradientTape& tape);

  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
  std::int64_t t_ = 0;
};

// target <- source (exact copy of parameters; shapes must match)
void hard_update(const DenseNet& source, DenseNet& target);
// target <- tau*source + (1-tau)*target, tau in (0, 1]
void soft_update(const DenseNet& source, DenseNet& target, double tau);

// Flat little-endian snapshot: shape header (layer dims, activation tags)
// followed by raw float64 parameters.
void serialize(const DenseNet& net, std::ostream& out);
DenseNet deserialize(std::istream& in);
void save_snapshot(const DenseNet& net, const std::string& path);
DenseNet load_snapshot(const std::string& path);

}  // namespace cea::nn
