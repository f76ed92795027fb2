#include "cea/agents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cea/kernels.hpp"

namespace cea::agents {

Vector dueling_aggregate(double v, std::span<const double> advantages) {
  if (advantages.empty())
    throw std::invalid_argument("dueling_aggregate: empty advantage vector");
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  Vector q(advantages.size());
  for (std::size_t i = 0; i < advantages.size(); ++i)
    q[i] = v + advantages[i] - mean;
  return q;
}

DuelingNet DuelingNet::make(int obs_dim, int n_actions,
                            const std::vector<int>& hidden, Rng& rng) {
  if (hidden.empty())
    throw std::invalid_argument("dueling net needs at least one hidden layer");
  DuelingNet net;
  std::vector<int> trunk_hidden(hidden.begin(), hidden.end() - 1);
  net.trunk = nn::DenseNet::make_mlp(obs_dim, trunk_hidden, hidden.back(),
                                     nn::Activation::Relu,
                                     nn::Activation::Relu, rng);
  net.value_head = nn::DenseNet::make_mlp(hidden.back(), {}, 1,
                                          nn::Activation::Relu,
                                          nn::Activation::Identity, rng);
  net.adv_head = nn::DenseNet::make_mlp(hidden.back(), {}, n_actions,
                                        nn::Activation::Relu,
                                        nn::Activation::Identity, rng);
  return net;
}

Vector DuelingNet::q_values(std::span<const double> s) const {
  const Vector t = trunk.forward(s);
  const Vector v = value_head.forward(t);
  const Vector a = adv_head.forward(t);
  return dueling_aggregate(v[0], a);
}

Vector DuelingNet::q_values(std::span<const double> s, Cache& cache) const {
  const Vector t = trunk.forward(s, cache.trunk);
  const Vector v = value_head.forward(t, cache.value);
  const Vector a = adv_head.forward(t, cache.adv);
  cache.q = dueling_aggregate(v[0], a);
  return cache.q;
}

void DuelingNet::Tape::clip_global_norm(double max_norm) {
  // one joint norm across the three parameter sets
  double sq = 0.0;
  for (const nn::GradientTape* t : {&trunk, &value, &adv}) {
    for (const auto& m : t->dw) sq += kernels::dot(m.data, m.data);
    for (const auto& v : t->db) sq += kernels::dot(v, v);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    trunk.scale(f);
    value.scale(f);
    adv.scale(f);
  }
}

void DuelingNet::backward(const Cache& cache, std::span<const double> q_grad,
                          Tape& tape) const {
  const std::size_t n = q_grad.size();
  double sum = 0.0;
  for (double g : q_grad) sum += g;

  // Q_a = V + A_a - mean(A):  dV = sum(dQ), dA_b = dQ_b - sum(dQ)/n
  Vector v_grad(1, sum);
  Vector a_grad(n);
  for (std::size_t i = 0; i < n; ++i)
    a_grad[i] = q_grad[i] - sum / static_cast<double>(n);

  const Vector g_t1 = value_head.backward(cache.value, v_grad, tape.value);
  const Vector g_t2 = adv_head.backward(cache.adv, a_grad, tape.adv);
  Vector t_grad(g_t1.size());
  for (std::size_t i = 0; i < t_grad.size(); ++i) t_grad[i] = g_t1[i] + g_t2[i];
  trunk.backward(cache.trunk, t_grad, tape.trunk);
}

void hard_update(const DuelingNet& source, DuelingNet& target) {
  nn::hard_update(source.trunk, target.trunk);
  nn::hard_update(source.value_head, target.value_head);
  nn::hard_update(source.adv_head, target.adv_head);
}

double dqn_td_target(double r, std::span<const double> s_next, bool done,
                     const DuelingNet& online, const DuelingNet& target,
                     double gamma) {
  if (done) return r;
  const Vector q_online = online.q_values(s_next);
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(q_online.begin(), q_online.end()) -
                               q_online.begin());
  const Vector q_target = target.q_values(s_next);
  return r + gamma * q_target[best];
}

DqnAgent::DqnAgent(int obs_dim, int n_actions, DqnConfig cfg, Rng& rng)
    : cfg_(cfg),
      n_actions_(n_actions),
      online_(DuelingNet::make(obs_dim, n_actions, cfg.hidden, rng)),
      target_(online_),
      opt_trunk_(online_.trunk, {.lr = cfg.lr}),
      opt_value_(online_.value_head, {.lr = cfg.lr}),
      opt_adv_(online_.adv_head, {.lr = cfg.lr}) {
  hard_update(online_, target_);
}

double DqnAgent::current_epsilon() const {
  const double frac =
      cfg_.eps_decay_steps <= 0
          ? 1.0
          : std::min(1.0, static_cast<double>(act_steps_) /
                              static_cast<double>(cfg_.eps_decay_steps));
  return cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;
}

Action DqnAgent::act(std::span<const double> s, bool explore, Rng& rng) {
  if (explore) {
    const double eps = current_epsilon();
    ++act_steps_;
    if (rng.uniform() < eps) {
      return Action::make_discrete(
          static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_actions_))));
    }
  }
  const Vector q = online_.q_values(s);
  const int best = static_cast<int>(
      std::max_element(q.begin(), q.end()) - q.begin());
  return Action::make_discrete(best);
}

LearnResult DqnAgent::learn_step(const Batch& batch) {
  if (batch.transitions.empty())
    throw std::invalid_argument("dqn: empty batch");
  const std::size_t b = batch.transitions.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  DuelingNet::Tape tape(online_);
  LearnResult result;
  result.abs_td.reserve(b);

  DuelingNet::Cache cache;
  for (std::size_t i = 0; i < b; ++i) {
    const replay::Transition& t = batch.transitions[i];
    if (!t.a.discrete())
      throw std::invalid_argument("dqn: continuous action in batch");
    const double y =
        dqn_td_target(t.r, t.s_next, t.done, online_, target_, cfg_.gamma);
    const Vector q = online_.q_values(t.s, cache);
    const double td = q[static_cast<std::size_t>(t.a.index)] - y;
    result.abs_td.push_back(std::fabs(td));
    result.loss += batch.weights[i] * td * td * inv_b;
    result.mean_q += q[static_cast<std::size_t>(t.a.index)] * inv_b;

    Vector q_grad(q.size(), 0.0);
    q_grad[static_cast<std::size_t>(t.a.index)] =
        2.0 * batch.weights[i] * td * inv_b;
    online_.backward(cache, q_grad, tape);
  }

  if (!std::isfinite(result.loss)) {
    result.applied = false;
    return result;
  }
  tape.clip_global_norm(cfg_.grad_clip);
  const bool ok = opt_trunk_.step(online_.trunk, tape.trunk) &&
                  opt_value_.step(online_.value_head, tape.value) &&
                  opt_adv_.step(online_.adv_head, tape.adv);
  result.applied = ok;
  if (!ok) return result;

  ++learn_steps_;
  if (cfg_.target_update > 0 && learn_steps_ % cfg_.target_update == 0)
    hard_update(online_, target_);
  return result;
}

void DqnAgent::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dqn: cannot open " + path);
  nn::serialize(online_.trunk, out);
  nn::serialize(online_.value_head, out);
  nn::serialize(online_.adv_head, out);
}

void DqnAgent::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dqn: cannot open " + path);
  online_.trunk = nn::deserialize(in);
  online_.value_head = nn::deserialize(in);
  online_.adv_head = nn::deserialize(in);
  hard_update(online_, target_);
}

// ------------------------------------------------------------------- DDPG

DdpgAgent::DdpgAgent(int obs_dim, int action_dim, double action_bound,
                     DdpgConfig cfg, Rng& rng)
    : cfg_(cfg),
      obs_dim_(obs_dim),
      action_dim_(action_dim),
      action_bound_(action_bound),
      actor_(nn::DenseNet::make_mlp(obs_dim, cfg.hidden, action_dim,
                                    nn::Activation::Relu, nn::Activation::Tanh,
                                    rng)),
      actor_target_(actor_),
      critic_(nn::DenseNet::make_mlp(obs_dim + action_dim, cfg.hidden, 1,
                                     nn::Activation::Relu,
                                     nn::Activation::Identity, rng)),
      critic_target_(critic_),
      actor_opt_(actor_, {.lr = cfg.actor_lr}),
      critic_opt_(critic_, {.lr = cfg.critic_lr}) {}

Vector DdpgAgent::critic_input(std::span<const double> s,
                               std::span<const double> a) const {
  Vector in(s.begin(), s.end());
  in.insert(in.end(), a.begin(), a.end());
  return in;
}

Vector DdpgAgent::actor_action(std::span<const double> s) const {
  Vector a = actor_.forward(s);
  for (double& x : a) x *= action_bound_;
  return a;
}

double DdpgAgent::critic_value(std::span<const double> s,
                               std::span<const double> a) const {
  return critic_.forward(critic_input(s, a))[0];
}

Action DdpgAgent::act(std::span<const double> s, bool explore, Rng& rng) {
  Vector a = actor_action(s);
  if (explore) {
    for (double& x : a) {
      x += cfg_.sigma * rng.normal();
      x = std::clamp(x, -action_bound_, action_bound_);
    }
  }
  return Action::make_continuous(std::move(a));
}

LearnResult DdpgAgent::learn_step(const Batch& batch) {
  if (batch.transitions.empty())
    throw std::invalid_argument("ddpg: empty batch");
  const std::size_t b = batch.transitions.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  LearnResult result;
  result.abs_td.reserve(b);

  // critic step: weighted MSE against r + gamma * Q'(s', actor'(s'))
  nn::GradientTape critic_tape(critic_);
  nn::ForwardCache cache;
  for (std::size_t i = 0; i < b; ++i) {
    const replay::Transition& t = batch.transitions[i];
    if (t.a.discrete())
      throw std::invalid_argument("ddpg: discrete action in batch");
    double y = t.r;
    if (!t.done) {
      Vector a_next = actor_target_.forward(t.s_next);
      for (double& x : a_next) x *= action_bound_;
      y += cfg_.gamma * critic_target_.forward(critic_input(t.s_next, a_next))[0];
    }
    const Vector q = critic_.forward(critic_input(t.s, t.a.value), cache);
    const double td = q[0] - y;
    result.abs_td.push_back(std::fabs(td));
    result.loss += batch.weights[i] * td * td * inv_b;
    result.mean_q += q[0] * inv_b;

    const Vector q_grad(1, 2.0 * batch.weights[i] * td * inv_b);
    critic_.backward(cache, q_grad, critic_tape);
  }
  if (!std::isfinite(result.loss)) {
    result.applied = false;
    return result;
  }
  critic_tape.clip_global_norm(cfg_.grad_clip);
  if (!critic_opt_.step(critic_, critic_tape)) {
    result.applied = false;
    return result;
  }

  // actor step: ascend the critic; critic weight gradients are discarded
  nn::GradientTape actor_tape(actor_);
  nn::GradientTape critic_scratch(critic_);
  nn::ForwardCache actor_cache;
  for (std::size_t i = 0; i < b; ++i) {
    const replay::Transition& t = batch.transitions[i];
    Vector a = actor_.forward(t.s, actor_cache);
    for (double& x : a) x *= action_bound_;
    critic_.forward(critic_input(t.s, a), cache);
    const Vector q_grad(1, -inv_b);  // maximize mean Q
    const Vector in_grad = critic_.backward(cache, q_grad, critic_scratch);
    Vector a_grad(in_grad.begin() + obs_dim_, in_grad.end());
    for (double& g : a_grad) g *= action_bound_;
    actor_.backward(actor_cache, a_grad, actor_tape);
  }
  actor_tape.clip_global_norm(cfg_.grad_clip);
  if (!actor_opt_.step(actor_, actor_tape)) {
    result.applied = false;
    return result;
  }

  nn::soft_update(actor_, actor_target_, cfg_.tau);
  nn::soft_update(critic_, critic_target_, cfg_.tau);
  return result;
}

void DdpgAgent::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ddpg: cannot open " + path);
  nn::serialize(actor_, out);
  nn::serialize(critic_, out);
}

void DdpgAgent::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ddpg: cannot open " + path);
  actor_ = nn::deserialize(in);
  critic_ = nn::deserialize(in);
  nn::hard_update(actor_, actor_target_);
  nn::hard_update(critic_, critic_target_);
}

}  // namespace cea::agents
