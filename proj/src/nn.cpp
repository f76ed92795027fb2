#include "cea/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cea/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace cea::nn {

namespace {

void apply_activation(Activation act, const Vector& pre, Vector& post) {
  post.resize(pre.size());
  switch (act) {
    case Activation::Identity:
      post = pre;
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < pre.size(); ++i)
        post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = std::tanh(pre[i]);
      break;
  }
}

// delta *= act'(pre), using post where cheaper (tanh)
void apply_activation_grad(Activation act, const Vector& pre,
                           const Vector& post, Vector& delta) {
  switch (act) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (pre[i] <= 0.0) delta[i] = 0.0;
      break;
    case Activation::Tanh:
      for (std::size_t i = 0; i < delta.size(); ++i)
        delta[i] *= 1.0 - post[i] * post[i];
      break;
  }
}

void check_same_shape(const DenseNet& a, const DenseNet& b,
                      const char* what) {
  if (a.input_dim() != b.input_dim() ||
      a.layers().size() != b.layers().size())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    const Layer& la = a.layers()[l];
    const Layer& lb = b.layers()[l];
    if (la.w.rows != lb.w.rows || la.w.cols != lb.w.cols ||
        la.b.size() != lb.b.size())
      throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

GradientTape::GradientTape(const DenseNet& net) {
  dw.reserve(net.layers().size());
  db.reserve(net.layers().size());
  for (const Layer& l : net.layers()) {
    dw.emplace_back(l.w.rows, l.w.cols);
    db.emplace_back(l.b.size(), 0.0);
  }
}

void GradientTape::zero() {
  for (Matrix& m : dw) std::fill(m.data.begin(), m.data.end(), 0.0);
  for (Vector& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void GradientTape::scale(double factor) {
  for (Matrix& m : dw)
    for (double& x : m.data) x *= factor;
  for (Vector& v : db)
    for (double& x : v) x *= factor;
}

void GradientTape::add(const GradientTape& other) {
  for (std::size_t l = 0; l < dw.size(); ++l) {
    kernels::axpy(1.0, other.dw[l].data, dw[l].data);
    kernels::axpy(1.0, other.db[l], db[l]);
  }
}

double GradientTape::global_norm() const {
  double sq = 0.0;
  for (const Matrix& m : dw) sq += kernels::dot(m.data, m.data);
  for (const Vector& v : db) sq += kernels::dot(v, v);
  return std::sqrt(sq);
}

void GradientTape::clip_global_norm(double max_norm) {
  const double norm = global_norm();
  if (norm > max_norm && norm > 0.0) scale(max_norm / norm);
}

bool GradientTape::finite() const {
  for (const Matrix& m : dw)
    for (double x : m.data)
      if (!std::isfinite(x)) return false;
  for (const Vector& v : db)
    for (double x : v)
      if (!std::isfinite(x)) return false;
  return true;
}

DenseNet::DenseNet(int input_dim, std::vector<Layer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  int dim = input_dim;
  for (const Layer& l : layers_) {
    if (l.w.cols != dim || l.w.rows != static_cast<int>(l.b.size()))
      throw std::invalid_argument("DenseNet: layer dimensions do not chain");
    dim = l.w.rows;
  }
}

DenseNet DenseNet::make_mlp(int input_dim, const std::vector<int>& hidden,
                            int output_dim, Activation hidden_act,
                            Activation output_act, Rng& rng) {
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);

  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer l;
    l.w = Matrix(dims[i + 1], dims[i]);
    l.b.assign(dims[i + 1], 0.0);
    l.act = (i + 2 == dims.size()) ? output_act : hidden_act;
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    for (double& w : l.w.data) w = rng.uniform(-bound, bound);
    for (double& b : l.b) b = rng.uniform(-bound, bound);
    layers.push_back(std::move(l));
  }
  return DenseNet(input_dim, std::move(layers));
}

int DenseNet::output_dim() const {
  return layers_.empty() ? input_dim_ : layers_.back().w.rows;
}

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.w.data.size() + l.b.size();
  return n;
}

Vector DenseNet::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("forward: input dimension mismatch");
  Vector cur(x.begin(), x.end());
  Vector pre, post;
  for (const Layer& l : layers_) {
    pre.resize(l.w.rows);
    kernels::matvec_bias(l.w.rows, l.w.cols, l.w.data.data(), l.b.data(),
                         cur.data(), pre.data());
    apply_activation(l.act, pre, post);
    cur = post;
  }
  return cur;
}

Vector DenseNet::forward(std::span<const double> x, ForwardCache& cache) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("forward: input dimension mismatch");
  cache.input.assign(x.begin(), x.end());
  cache.pre.resize(layers_.size());
  cache.post.resize(layers_.size());
  const Vector* cur = &cache.input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    cache.pre[i].resize(l.w.rows);
    kernels::matvec_bias(l.w.rows, l.w.cols, l.w.data.data(), l.b.data(),
                         cur->data(), cache.pre[i].data());
    apply_activation(l.act, cache.pre[i], cache.post[i]);
    cur = &cache.post[i];
  }
  cache.valid = true;
  return layers_.empty() ? cache.input : cache.post.back();
}

Vector DenseNet::backward(const ForwardCache& cache,
                          std::span<const double> out_grad,
                          GradientTape& tape) const {
  if (!cache.valid)
    throw std::logic_error("backward: forward cache missing");
  if (cache.pre.size() != layers_.size())
    throw std::logic_error("backward: cache does not match network");
  if (static_cast<int>(out_grad.size()) != output_dim())
    throw std::invalid_argument("backward: output gradient size mismatch");
  if (tape.dw.size() != layers_.size())
    throw std::invalid_argument("backward: tape shape mismatch");

  Vector delta(out_grad.begin(), out_grad.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& l = layers_[li];
    apply_activation_grad(l.act, cache.pre[li], cache.post[li], delta);
    const Vector& in = (li == 0) ? cache.input : cache.post[li - 1];
    kernels::ger(l.w.rows, l.w.cols, 1.0, delta.data(), in.data(),
                 tape.dw[li].data.data());
    kernels::axpy(1.0, delta, tape.db[li]);
    Vector prev(l.w.cols);
    kernels::matvec_t(l.w.rows, l.w.cols, l.w.data.data(), delta.data(),
                      prev.data());
    delta = std::move(prev);
  }
  return delta;
}

AdamState::AdamState(const DenseNet& net, AdamConfig cfg) : cfg_(cfg) {
  for (const Layer& l : net.layers()) {
    mw_.emplace_back(l.w.rows, l.w.cols);
    vw_.emplace_back(l.w.rows, l.w.cols);
    mb_.emplace_back(l.b.size(), 0.0);
    vb_.emplace_back(l.b.size(), 0.0);
  }
}

bool AdamState::step(DenseNet& net, const GradientTape& tape) {
  if (tape.dw.size() != net.layers().size() || mw_.size() != tape.dw.size())
    throw std::invalid_argument("optimizer step: shape mismatch");
  if (!tape.finite()) return false;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr_over_bc1 = cfg_.lr / bc1;
  const double inv_bc2 = 1.0 / bc2;

  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    Layer& layer = net.layers()[l];
    kernels::adam_update(layer.w.data.size(), layer.w.data.data(),
                         tape.dw[l].data.data(), mw_[l].data.data(),
                         vw_[l].data.data(), cfg_.beta1, cfg_.beta2, cfg_.eps,
                         lr_over_bc1, inv_bc2);
    kernels::adam_update(layer.b.size(), layer.b.data(), tape.db[l].data(),
                         mb_[l].data(), vb_[l].data(), cfg_.beta1, cfg_.beta2,
                         cfg_.eps, lr_over_bc1, inv_bc2);
  }
  return true;
}

void hard_update(const DenseNet& source, DenseNet& target) {
  check_same_shape(source, target, "hard_update");
  for (std::size_t l = 0; l < source.layers().size(); ++l) {
    target.layers()[l].w.data = source.layers()[l].w.data;
    target.layers()[l].b = source.layers()[l].b;
  }
}

void soft_update(const DenseNet& source, DenseNet& target, double tau) {
  if (!(tau > 0.0) || tau > 1.0)
    throw std::invalid_argument("soft_update: tau must be in (0, 1]");
  check_same_shape(source, target, "soft_update");
  if (tau == 1.0) {  // bit-identical to hard_update
    hard_update(source, target);
    return;
  }
  for (std::size_t l = 0; l < source.layers().size(); ++l) {
    kernels::blend(tau, source.layers()[l].w.data, target.layers()[l].w.data);
    kernels::blend(tau, source.layers()[l].b, target.layers()[l].b);
  }
}

namespace {

constexpr char kMagic[8] = {'C', 'E', 'A', 'N', 'N', '0', '1', '\n'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("snapshot: truncated stream");
  return v;
}

}  // namespace

void serialize(const DenseNet& net, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, static_cast<std::uint32_t>(net.input_dim()));
  write_raw(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& l : net.layers()) {
    write_raw(out, static_cast<std::uint32_t>(l.w.rows));
    write_raw(out, static_cast<std::uint32_t>(l.w.cols));
    write_raw(out, static_cast<std::uint8_t>(l.act));
  }
  for (const Layer& l : net.layers()) {
    out.write(reinterpret_cast<const char*>(l.w.data.data()),
              static_cast<std::streamsize>(l.w.data.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l.b.data()),
              static_cast<std::streamsize>(l.b.size() * sizeof(double)));
  }
}

DenseNet deserialize(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("snapshot: bad magic");
  const auto input_dim = read_raw<std::uint32_t>(in);
  const auto n_layers = read_raw<std::uint32_t>(in);
  std::vector<Layer> layers(n_layers);
  for (Layer& l : layers) {
    const auto rows = read_raw<std::uint32_t>(in);
    const auto cols = read_raw<std::uint32_t>(in);
    const auto act = read_raw<std::uint8_t>(in);
    if (act > 2) throw std::runtime_error("snapshot: bad activation tag");
    l.w = Matrix(static_cast<int>(rows), static_cast<int>(cols));
    l.b.assign(rows, 0.0);
    l.act = static_cast<Activation>(act);
  }
  for (Layer& l : layers) {
    in.read(reinterpret_cast<char*>(l.w.data.data()),
            static_cast<std::streamsize>(l.w.data.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(l.b.data()),
            static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    if (!in) throw std::runtime_error("snapshot: truncated parameters");
  }
  return DenseNet(static_cast<int>(input_dim), std::move(layers));
}

void save_snapshot(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  serialize(net, out);
  if (!out) throw std::runtime_error("snapshot: write failed for " + path);
}

DenseNet load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  return deserialize(in);
}

}  // namespace cea::nn
