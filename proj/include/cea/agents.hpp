#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cea/nn.hpp"
#include "cea/replay.hpp"
#include "cea/rng.hpp"

namespace cea::agents {

using nn::Vector;
using replay::Action;
using replay::Batch;

// Q_a = V + A_a - mean(A)
Vector dueling_aggregate(double v, std::span<const double> advantages);

// Shared trunk feeding a scalar value head and a per-action advantage head.
struct DuelingNet {
  nn::DenseNet trunk;
  nn::DenseNet value_head;
  nn::DenseNet adv_head;

  static DuelingNet make(int obs_dim, int n_actions,
                         const std::vector<int>& hidden, Rng& rng);

  Vector q_values(std::span<const double> s) const;

  struct Cache {
    nn::ForwardCache trunk, value, adv;
    Vector q;
  };
  Vector q_values(std::span<const double> s, Cache& cache) const;

  struct Tape {
    nn::GradientTape trunk, value, adv;
    explicit Tape(const DuelingNet& net)
        : trunk(net.trunk), value(net.value_head), adv(net.adv_head) {}
    void clip_global_norm(double max_norm);
  };
  void backward(const Cache& cache, std::span<const double> q_grad,
                Tape& tape) const;
};

void hard_update(const DuelingNet& source, DuelingNet& target);

struct DqnConfig {
  double gamma = 0.99;
  double lr = 1e-3;
  int target_update = 100;     // hard update period (learn steps)
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_decay_steps = 10000;
  std::vector<int> hidden = {128, 128};
  double grad_clip = 10.0;
};

// done ? r : r + gamma * Q_target(s', argmax_a Q_online(s', a))
double dqn_td_target(double r, std::span<const double> s_next, bool done,
                     const DuelingNet& online, const DuelingNet& target,
                     double gamma);

struct LearnResult {
  std::vector<double> abs_td;
  bool applied = true;
  double loss = 0.0;
  double mean_q = 0.0;
};

class DqnAgent {
 public:
  DqnAgent(int obs_dim, int n_actions, DqnConfig cfg, Rng& rng);

  Action act(std::span<const double> s, bool explore, Rng& rng);
  LearnResult learn_step(const Batch& batch);

  double current_epsilon() const;
  const DuelingNet& online() const { return online_; }
  DuelingNet& online() { return online_; }
  const DuelingNet& target() const { return target_; }
  const DqnConfig& config() const { return cfg_; }
  long learn_steps() const { return learn_steps_; }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  DqnConfig cfg_;
  int n_actions_;
  DuelingNet online_, target_;
  nn::AdamState opt_trunk_, opt_value_, opt_adv_;
  long act_steps_ = 0;
  long learn_steps_ = 0;
};

struct DdpgConfig {
  double gamma = 0.98;
  double actor_lr = 2e-4;
  double critic_lr = 2e-4;
  double tau = 0.005;
  double sigma = 0.01;  // exploration noise std-dev
  std::vector<int> hidden = {128, 128};
  double grad_clip = 10.0;
};

class DdpgAgent {
 public:
  DdpgAgent(int obs_dim, int action_dim, double action_bound, DdpgConfig cfg,
            Rng& rng);

  Action act(std::span<const double> s, bool explore, Rng& rng);
  LearnResult learn_step(const Batch& batch);

  Vector actor_action(std::span<const double> s) const;  // deterministic
  double critic_value(std::span<const double> s, std::span<const double> a) const;
  const DdpgConfig& config() const { return cfg_; }
  double action_bound() const { return action_bound_; }

  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  Vector critic_input(std::span<const double> s, std::span<const double> a) const;

  DdpgConfig cfg_;
  int obs_dim_;
  int action_dim_;
  double action_bound_;
  nn::DenseNet actor_, actor_target_;
  nn::DenseNet critic_, critic_target_;
  nn::AdamState actor_opt_, critic_opt_;
};

}  // namespace cea::agents
