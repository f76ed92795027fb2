#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cea/nn.hpp"
#include "cea/replay.hpp"
#include "cea/rng.hpp"

// State transition autoencoder: a conditional variational autoencoder over
// transition deltas d = s' - s, conditioned on the action. The decoder is
// used generatively to turn a counterfactual action into an estimated next
// state ŝ' = s + d'.
namespace cea::sta {

using nn::Vector;
using replay::Action;

// One-hot for discrete spaces; continuous actions are divided by `scale`
// so conditioning inputs stay O(1).
struct ActionEncoding {
  bool one_hot = true;
  int dim = 1;          // action-space size (discrete) or vector dim
  double scale = 1.0;   // continuous normalization divisor

  int encoded_dim() const { return dim; }
  Vector encode(const Action& a) const;
};

struct StaConfig {
  int latent_dim = 8;
  std::vector<int> hidden = {128, 128};
  double lr = 1e-3;
  double grad_clip = 10.0;
  double logvar_min = -10.0;
  double logvar_max = 10.0;
};

struct StaLoss {
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

struct TrainSample {
  Vector d;
  Action a;
};

class StaModel {
 public:
  StaModel() = default;
  StaModel(int state_dim, ActionEncoding enc, StaConfig cfg, Rng& rng);

  int state_dim() const { return state_dim_; }
  int latent_dim() const { return cfg_.latent_dim; }
  const ActionEncoding& action_encoding() const { return enc_; }
  const StaConfig& config() const { return cfg_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  const nn::DenseNet& encoder() const { return encoder_; }
  const nn::DenseNet& decoder() const { return decoder_; }

  // (mu, sigma^2); sigma^2 = exp(log-variance clamped to config bounds)
  std::pair<Vector, Vector> encode(std::span<const double> d,
                                   const Action& a) const;
  Vector decode(std::span<const double> z, const Action& a) const;
  // z ~ N(0, I);  returns s + decode(z, a)
  Vector generate(std::span<const double> s, const Action& a, Rng& rng) const;

  // One Adam step on recon + kl over the batch; returns batch-mean losses.
  StaLoss train_step(const std::vector<TrainSample>& batch);

  // Single-sample loss under a fixed reparameterization noise vector; the
  // finite-difference gradient checks drive these two directly.
  StaLoss loss_with_noise(const TrainSample& sample,
                          std::span<const double> noise) const;
  // Same forward pass, also accumulating parameter gradients times `scale`.
  StaLoss grad_with_noise(const TrainSample& sample,
                          std::span<const double> noise,
                          nn::GradientTape& enc_tape,
                          nn::GradientTape& dec_tape, double scale) const;

  friend void serialize(const StaModel& m, std::ostream& out);
  friend StaModel deserialize_sta(std::istream& in);

 private:
  int state_dim_ = 0;
  ActionEncoding enc_;
  StaConfig cfg_;
  nn::DenseNet encoder_;  // [d; a_enc] -> [mu; logvar]
  nn::DenseNet decoder_;  // [z; a_enc] -> d'
  nn::AdamState enc_opt_;
  nn::AdamState dec_opt_;
  Rng noise_rng_{20240901};
  bool trained_ = false;
};

Vector delta(std::span<const double> s, std::span<const double> s_next);
Vector reparameterize(std::span<const double> mu, std::span<const double> var,
                      std::span<const double> noise);
double kl_loss(std::span<const double> mu, std::span<const double> var);
double recon_loss(std::span<const double> d_pred, std::span<const double> d_true);

void save_sta(const StaModel& m, const std::string& path);
StaModel load_sta(const std::string& path);
void serialize(const StaModel& m, std::ostream& out);
StaModel deserialize_sta(std::istream& in);

}  // namespace cea::sta
