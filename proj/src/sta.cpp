#include "cea/sta.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cea/kernels.hpp"

namespace cea::sta {

Vector ActionEncoding::encode(const Action& a) const {
  if (one_hot) {
    if (!a.discrete() || a.index >= dim)
      throw std::invalid_argument("sta: action outside the discrete space");
    Vector v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(a.index)] = 1.0;
    return v;
  }
  if (a.discrete() || static_cast<int>(a.value.size()) != dim)
    throw std::invalid_argument("sta: continuous action dimension mismatch");
  Vector v = a.value;
  for (double& x : v) x /= scale;
  return v;
}

Vector delta(std::span<const double> s, std::span<const double> s_next) {
  if (s.size() != s_next.size())
    throw std::invalid_argument("delta: dimension mismatch");
  Vector d(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) d[i] = s_next[i] - s[i];
  return d;
}

Vector reparameterize(std::span<const double> mu, std::span<const double> var,
                      std::span<const double> noise) {
  if (mu.size() != var.size() || mu.size() != noise.size())
    throw std::invalid_argument("reparameterize: length mismatch");
  Vector z(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (var[i] < 0.0)
      throw std::invalid_argument("reparameterize: negative variance");
    z[i] = mu[i] + std::sqrt(var[i]) * noise[i];
  }
  return z;
}

double kl_loss(std::span<const double> mu, std::span<const double> var) {
  if (mu.size() != var.size())
    throw std::invalid_argument("kl_loss: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(var[i] > 0.0))
      throw std::invalid_argument("kl_loss: non-positive variance");
    acc += mu[i] * mu[i] + var[i] - std::log(var[i]) - 1.0;
  }
  return 0.5 * acc;
}

double recon_loss(std::span<const double> d_pred,
                  std::span<const double> d_true) {
  if (d_pred.size() != d_true.size())
    throw std::invalid_argument("recon_loss: dimension mismatch");
  const double sq = kernels::squared_distance(d_pred, d_true);
  return sq / (2.0 * static_cast<double>(d_pred.size()));
}

StaModel::StaModel(int state_dim, ActionEncoding enc, StaConfig cfg, Rng& rng)
    : state_dim_(state_dim), enc_(enc), cfg_(cfg) {
  const int a_dim = enc_.encoded_dim();
  encoder_ = nn::DenseNet::make_mlp(state_dim + a_dim, cfg_.hidden,
                                    2 * cfg_.latent_dim, nn::Activation::Relu,
                                    nn::Activation::Identity, rng);
  decoder_ = nn::DenseNet::make_mlp(cfg_.latent_dim + a_dim, cfg_.hidden,
                                    state_dim, nn::Activation::Relu,
                                    nn::Activation::Identity, rng);
  enc_opt_ = nn::AdamState(encoder_, {.lr = cfg_.lr});
  dec_opt_ = nn::AdamState(decoder_, {.lr = cfg_.lr});
  noise_rng_ = rng.substream("sta-noise");
}

std::pair<Vector, Vector> StaModel::encode(std::span<const double> d,
                                           const Action& a) const {
  if (static_cast<int>(d.size()) != state_dim_)
    throw std::invalid_argument("sta: delta dimension mismatch");
  Vector in(d.begin(), d.end());
  const Vector a_enc = enc_.encode(a);
  in.insert(in.end(), a_enc.begin(), a_enc.end());
  const Vector out = encoder_.forward(in);

  const int n = cfg_.latent_dim;
  Vector mu(out.begin(), out.begin() + n);
  Vector var(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lv = std::clamp(out[static_cast<std::size_t>(n + i)],
                                 cfg_.logvar_min, cfg_.logvar_max);
    var[static_cast<std::size_t>(i)] = std::exp(lv);
  }
  for (double x : mu)
    if (!std::isfinite(x)) throw std::runtime_error("sta: non-finite encoding");
  return {std::move(mu), std::move(var)};
}

Vector StaModel::decode(std::span<const double> z, const Action& a) const {
  if (static_cast<int>(z.size()) != cfg_.latent_dim)
    throw std::invalid_argument("sta: latent dimension mismatch");
  Vector in(z.begin(), z.end());
  const Vector a_enc = enc_.encode(a);
  in.insert(in.end(), a_enc.begin(), a_enc.end());
  return decoder_.forward(in);
}

Vector StaModel::generate(std::span<const double> s, const Action& a,
                          Rng& rng) const {
  if (static_cast<int>(s.size()) != state_dim_)
    throw std::invalid_argument("sta: state dimension mismatch");
  Vector z(static_cast<std::size_t>(cfg_.latent_dim));
  for (double& x : z) x = rng.normal();
  Vector d = decode(z, a);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
  return d;
}

StaLoss StaModel::loss_with_noise(const TrainSample& sample,
                                  std::span<const double> noise) const {
  const auto [mu, var] = encode(sample.d, sample.a);
  const Vector z = reparameterize(mu, var, noise);
  const Vector d_pred = decode(z, sample.a);
  StaLoss loss;
  loss.recon = recon_loss(d_pred, sample.d);
  loss.kl = kl_loss(mu, var);
  loss.total = loss.recon + loss.kl;
  return loss;
}

StaLoss StaModel::grad_with_noise(const TrainSample& sample,
                                  std::span<const double> noise,
                                  nn::GradientTape& enc_tape,
                                  nn::GradientTape& dec_tape,
                                  double scale) const {
  if (static_cast<int>(sample.d.size()) != state_dim_)
    throw std::invalid_argument("sta: delta dimension mismatch");
  const int latent = cfg_.latent_dim;
  if (static_cast<int>(noise.size()) != latent)
    throw std::invalid_argument("sta: noise dimension mismatch");
  const Vector a_enc = enc_.encode(sample.a);

  nn::ForwardCache enc_cache, dec_cache;
  Vector enc_in = sample.d;
  enc_in.insert(enc_in.end(), a_enc.begin(), a_enc.end());
  const Vector enc_out = encoder_.forward(enc_in, enc_cache);

  Vector mu(enc_out.begin(), enc_out.begin() + latent);
  Vector logvar(static_cast<std::size_t>(latent));
  std::vector<bool> in_range(static_cast<std::size_t>(latent));
  for (int i = 0; i < latent; ++i) {
    const double raw = enc_out[static_cast<std::size_t>(latent + i)];
    in_range[static_cast<std::size_t>(i)] =
        raw > cfg_.logvar_min && raw < cfg_.logvar_max;
    logvar[static_cast<std::size_t>(i)] =
        std::clamp(raw, cfg_.logvar_min, cfg_.logvar_max);
  }

  Vector sigma(static_cast<std::size_t>(latent)),
      var(static_cast<std::size_t>(latent));
  for (int i = 0; i < latent; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    var[k] = std::exp(logvar[k]);
    sigma[k] = std::exp(0.5 * logvar[k]);
  }
  const Vector z = reparameterize(mu, var, noise);

  Vector dec_in = z;
  dec_in.insert(dec_in.end(), a_enc.begin(), a_enc.end());
  const Vector d_pred = decoder_.forward(dec_in, dec_cache);

  StaLoss loss;
  loss.recon = recon_loss(d_pred, sample.d);
  loss.kl = kl_loss(mu, var);
  loss.total = loss.recon + loss.kl;

  Vector d_grad(d_pred.size());
  for (std::size_t i = 0; i < d_pred.size(); ++i)
    d_grad[i] =
        (d_pred[i] - sample.d[i]) / static_cast<double>(d_pred.size()) * scale;
  const Vector dec_in_grad = decoder_.backward(dec_cache, d_grad, dec_tape);

  // KL gradient plus the reparameterization path through z
  Vector enc_grad(static_cast<std::size_t>(2 * latent));
  for (int i = 0; i < latent; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double dz = dec_in_grad[k];  // already carries `scale`
    enc_grad[k] = mu[k] * scale + dz;
    double dlogvar =
        0.5 * (var[k] - 1.0) * scale + dz * 0.5 * sigma[k] * noise[k];
    if (!in_range[k]) dlogvar = 0.0;  // clamped: no gradient flows
    enc_grad[static_cast<std::size_t>(latent + i)] = dlogvar;
  }
  encoder_.backward(enc_cache, enc_grad, enc_tape);
  return loss;
}

StaLoss StaModel::train_step(const std::vector<TrainSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("sta: empty batch");
  const int latent = cfg_.latent_dim;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  nn::GradientTape enc_tape(encoder_);
  nn::GradientTape dec_tape(decoder_);

  StaLoss loss;
  Vector eps(static_cast<std::size_t>(latent));
  for (const TrainSample& sample : batch) {
    for (double& e : eps) e = noise_rng_.normal();
    const StaLoss sample_loss =
        grad_with_noise(sample, eps, enc_tape, dec_tape, inv_b);
    loss.recon += sample_loss.recon;
    loss.kl += sample_loss.kl;
  }

  loss.recon *= inv_b;
  loss.kl *= inv_b;
  loss.total = loss.recon + loss.kl;
  if (!std::isfinite(loss.total))
    throw std::runtime_error("sta: non-finite loss, step aborted");

  enc_tape.clip_global_norm(cfg_.grad_clip);
  dec_tape.clip_global_norm(cfg_.grad_clip);
  enc_opt_.step(encoder_, enc_tape);
  dec_opt_.step(decoder_, dec_tape);
  return loss;
}

namespace {
constexpr char kStaMagic[8] = {'C', 'E', 'A', 'S', 'T', 'A', '1', '\n'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("sta checkpoint: truncated stream");
  return v;
}
}  // namespace

void serialize(const StaModel& m, std::ostream& out) {
  out.write(kStaMagic, sizeof(kStaMagic));
  write_raw(out, static_cast<std::uint32_t>(m.state_dim_));
  write_raw(out, static_cast<std::uint8_t>(m.enc_.one_hot ? 1 : 0));
  write_raw(out, static_cast<std::uint32_t>(m.enc_.dim));
  write_raw(out, m.enc_.scale);
  write_raw(out, static_cast<std::uint32_t>(m.cfg_.latent_dim));
  write_raw(out, m.cfg_.lr);
  write_raw(out, m.cfg_.grad_clip);
  write_raw(out, m.cfg_.logvar_min);
  write_raw(out, m.cfg_.logvar_max);
  write_raw(out, static_cast<std::uint8_t>(m.trained_ ? 1 : 0));
  nn::serialize(m.encoder_, out);
  nn::serialize(m.decoder_, out);
}

StaModel deserialize_sta(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kStaMagic, sizeof(kStaMagic)) != 0)
    throw std::runtime_error("sta checkpoint: bad magic");
  StaModel m;
  m.state_dim_ = static_cast<int>(read_raw<std::uint32_t>(in));
  m.enc_.one_hot = read_raw<std::uint8_t>(in) != 0;
  m.enc_.dim = static_cast<int>(read_raw<std::uint32_t>(in));
  m.enc_.scale = read_raw<double>(in);
  m.cfg_.latent_dim = static_cast<int>(read_raw<std::uint32_t>(in));
  m.cfg_.lr = read_raw<double>(in);
  m.cfg_.grad_clip = read_raw<double>(in);
  m.cfg_.logvar_min = read_raw<double>(in);
  m.cfg_.logvar_max = read_raw<double>(in);
  m.trained_ = read_raw<std::uint8_t>(in) != 0;
  m.encoder_ = nn::deserialize(in);
  m.decoder_ = nn::deserialize(in);
  // optimizer state is not persisted; training resumes with fresh moments
  m.enc_opt_ = nn::AdamState(m.encoder_, {.lr = m.cfg_.lr});
  m.dec_opt_ = nn::AdamState(m.decoder_, {.lr = m.cfg_.lr});
  return m;
}

void save_sta(const StaModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("sta checkpoint: cannot open " + path);
  serialize(m, out);
  if (!out) throw std::runtime_error("sta checkpoint: write failed");
}

StaModel load_sta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sta checkpoint: cannot open " + path);
  return deserialize_sta(in);
}

}  // namespace cea::sta
