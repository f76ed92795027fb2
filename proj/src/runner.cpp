#include "cea/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace cea::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("runner: cannot open " + path);
  return out;
}

json action_json(const replay::Action& a) {
  if (a.discrete()) return a.index;
  return a.value;
}

}  // namespace

std::vector<double> ema_smooth(const std::vector<double>& series,
                               double factor) {
  if (series.empty())
    throw std::invalid_argument("ema_smooth: empty series");
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t i = 1; i < series.size(); ++i)
    out[i] = factor * series[i] + (1.0 - factor) * out[i - 1];
  return out;
}

std::size_t first_episode_at_least(const std::vector<double>& smoothed,
                                   double threshold) {
  for (std::size_t i = 0; i < smoothed.size(); ++i)
    if (smoothed[i] >= threshold) return i;
  return smoothed.size();
}

RunSummary summarize(std::vector<SeedResult> runs) {
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  RunSummary s;
  s.runs = std::move(runs);

  double sum = 0.0;
  std::size_t count = 0;
  for (const SeedResult& r : s.runs) {
    for (double v : r.smoothed) sum += v;
    count += r.smoothed.size();
  }
  s.mean = sum / static_cast<double>(count);

  double sq = 0.0;
  for (const SeedResult& r : s.runs)
    for (double v : r.smoothed) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(count));

  double final_sum = 0.0;
  for (const SeedResult& r : s.runs) final_sum += r.smoothed.back();
  s.final_value = final_sum / static_cast<double>(s.runs.size());

  const std::size_t episodes = s.runs[0].smoothed.size();
  s.band.resize(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    double lo = s.runs[0].smoothed[e], hi = lo, mean = 0.0;
    for (const SeedResult& r : s.runs) {
      lo = std::min(lo, r.smoothed[e]);
      hi = std::max(hi, r.smoothed[e]);
      mean += r.smoothed[e];
    }
    s.band[e] = {lo, hi, mean / static_cast<double>(s.runs.size())};
  }
  return s;
}

std::unique_ptr<envs::Env> build_env(const std::string& name,
                                     const EnvParams& p) {
  if (name == "gridworld")
    return std::make_unique<envs::GridWorld>(p.grid_width, p.grid_height,
                                             p.grid_tx, p.grid_ty,
                                             p.grid_max_steps);
  if (name == "pendulum")
    return std::make_unique<envs::PendulumEnv>(p.pend_g, p.pend_m, p.pend_l,
                                               p.pend_dt, p.pend_torque,
                                               p.pend_speed, p.pend_max_steps);
  if (name == "minihighway")
    return std::make_unique<envs::MiniHighway>(
        p.hw_lanes, p.hw_vehicles, p.hw_road, p.hw_vmin, p.hw_vmax, p.hw_phi,
        p.hw_kappa, p.hw_max_steps);
  throw std::invalid_argument("unknown environment: " + name);
}

ExperimentConfig default_config(const std::string& env_name) {
  ExperimentConfig cfg;
  cfg.env_name = env_name;
  cfg.dqn.eps_decay_steps = 0;  // resolved per run: 30% of planned steps
  cfg.cea.base_batch = 32;
  cfg.cea.injection_cap = 4 * cfg.cea.base_batch;
  cfg.sampler.n_samples = 3;
  if (env_name == "gridworld") {
    cfg.agent_kind = "dqn";
    cfg.episodes = 300;
    cfg.seeds = {42, 43, 44, 45};
  } else if (env_name == "minihighway") {
    cfg.agent_kind = "dqn";
    cfg.episodes = 300;
    cfg.seeds = {42, 43, 44, 45};
  } else if (env_name == "pendulum") {
    cfg.agent_kind = "ddpg";
    cfg.episodes = 150;
    cfg.seeds = {1, 2, 3, 4, 5, 6, 7};
    cfg.memory_size = 50000;
  } else {
    throw std::invalid_argument("unknown environment: " + env_name);
  }
  return cfg;
}

ExperimentConfig apply_config(ExperimentConfig cfg,
                              const config::Config& file) {
  using config::Config;
  const Config& f = file;

  cfg.env_name = f.get_string("experiment", "env", cfg.env_name);
  // re-derive env-specific defaults when the file names another env
  ExperimentConfig base = default_config(cfg.env_name);
  base.env_name = cfg.env_name;
  cfg.agent_kind = f.get_string("experiment", "agent", base.agent_kind);
  cfg.episodes = static_cast<int>(f.get_int("experiment", "episodes", base.episodes));
  cfg.seeds = f.has("experiment", "seeds") ? f.get_uint_list("experiment", "seeds")
                                           : base.seeds;
  cfg.cea_on = f.get_bool("experiment", "cea", cfg.cea_on);
  cfg.per_on = f.get_bool("experiment", "per", cfg.per_on);
  cfg.out_dir = f.get_string("experiment", "out_dir", cfg.out_dir);
  cfg.parallel = static_cast<int>(f.get_int("experiment", "parallel", cfg.parallel));
  cfg.train_freq = static_cast<int>(f.get_int("experiment", "train_freq", cfg.train_freq));
  cfg.warmup = static_cast<std::size_t>(f.get_int("experiment", "warmup", 0));
  cfg.dump_trajectories =
      f.get_bool("experiment", "dump_trajectories", cfg.dump_trajectories);
  cfg.memory_size = base.memory_size;
  cfg.episodes = static_cast<int>(f.get_int("experiment", "episodes", base.episodes));

  cfg.memory_size = static_cast<std::size_t>(
      f.get_int("replay", "memory_size", static_cast<long>(cfg.memory_size)));
  cfg.priority_exponent =
      f.get_double("replay", "priority_exponent", cfg.priority_exponent);
  cfg.importance_start =
      f.get_double("replay", "importance_start", cfg.importance_start);
  cfg.prior_eps = f.get_double("replay", "prior_eps", cfg.prior_eps);
  cfg.batch_size = static_cast<int>(f.get_int("replay", "batch_size", cfg.batch_size));

  cfg.dqn.gamma = f.get_double("agent", "gamma", cfg.dqn.gamma);
  cfg.dqn.lr = f.get_double("agent", "lr", cfg.dqn.lr);
  cfg.dqn.target_update =
      static_cast<int>(f.get_int("agent", "target_update", cfg.dqn.target_update));
  cfg.dqn.eps_start = f.get_double("agent", "eps_start", cfg.dqn.eps_start);
  cfg.dqn.eps_end = f.get_double("agent", "eps_end", cfg.dqn.eps_end);
  cfg.dqn.eps_decay_steps =
      f.get_int("agent", "eps_decay_steps", base.dqn.eps_decay_steps);
  cfg.ddpg.gamma = f.get_double("agent", "gamma_continuous", cfg.ddpg.gamma);
  cfg.ddpg.actor_lr = f.get_double("agent", "actor_lr", cfg.ddpg.actor_lr);
  cfg.ddpg.critic_lr = f.get_double("agent", "critic_lr", cfg.ddpg.critic_lr);
  cfg.ddpg.tau = f.get_double("agent", "tau", cfg.ddpg.tau);
  cfg.ddpg.sigma = f.get_double("agent", "sigma", cfg.ddpg.sigma);

  cfg.sta.latent_dim =
      static_cast<int>(f.get_int("sta", "latent_dim", cfg.sta.latent_dim));
  cfg.sta.lr = f.get_double("sta", "lr", cfg.sta.lr);
  cfg.sta_transitions =
      static_cast<int>(f.get_int("sta", "transitions", cfg.sta_transitions));
  cfg.sta_train_steps =
      static_cast<int>(f.get_int("sta", "train_steps", cfg.sta_train_steps));
  cfg.sta_batch = static_cast<int>(f.get_int("sta", "batch", cfg.sta_batch));
  cfg.sta_checkpoint = f.get_string("sta", "checkpoint", cfg.sta_checkpoint);

  cfg.sampler.n_samples =
      static_cast<int>(f.get_int("kde", "n_samples", cfg.sampler.n_samples));
  cfg.sampler.lr = f.get_double("kde", "lr", cfg.sampler.lr);
  cfg.sampler.iters = static_cast<int>(f.get_int("kde", "iters", cfg.sampler.iters));
  cfg.sampler.grid_m = static_cast<int>(f.get_int("kde", "grid_m", cfg.sampler.grid_m));
  cfg.sampler.line_search = f.get_bool("kde", "line_search", cfg.sampler.line_search);
  const std::string mode = f.get_string("kde", "gradient_mode", "exact");
  if (mode == "exact")
    cfg.sampler.gradient_mode = kde::GradientMode::Exact;
  else if (mode == "paper_form")
    cfg.sampler.gradient_mode = kde::GradientMode::Paper;
  else
    throw std::runtime_error("config: unknown kde.gradient_mode " + mode);

  cfg.cea.threshold_ratio =
      f.get_double("cea", "threshold_ratio", cfg.cea.threshold_ratio);
  const std::string metric = f.get_string("cea", "metric", "euclidean");
  if (metric == "euclidean")
    cfg.cea.metric = augment::DistanceMetric::Euclidean;
  else if (metric == "manhattan")
    cfg.cea.metric = augment::DistanceMetric::Manhattan;
  else
    throw std::runtime_error("config: unknown cea.metric " + metric);
  cfg.cea.augment_period =
      static_cast<int>(f.get_int("cea", "augment_period", cfg.cea.augment_period));
  cfg.cea.base_batch =
      static_cast<int>(f.get_int("cea", "base_batch", cfg.cea.base_batch));
  cfg.cea.injection_cap = static_cast<int>(
      f.get_int("cea", "injection_cap", 4 * cfg.cea.base_batch));
  cfg.cea.anneal_decay = f.get_double("cea", "anneal_decay", cfg.cea.anneal_decay);
  cfg.cea.stop_at_fill_fraction =
      f.get_double("cea", "stop_at_fill_fraction", cfg.cea.stop_at_fill_fraction);
  cfg.cea.normalize_state =
      f.get_bool("cea", "normalize_state", cfg.cea.normalize_state);

  cfg.env.grid_width = static_cast<int>(f.get_int("env", "grid_width", cfg.env.grid_width));
  cfg.env.grid_height =
      static_cast<int>(f.get_int("env", "grid_height", cfg.env.grid_height));
  cfg.env.grid_tx = static_cast<int>(f.get_int("env", "treasure_x", cfg.env.grid_tx));
  cfg.env.grid_ty = static_cast<int>(f.get_int("env", "treasure_y", cfg.env.grid_ty));
  cfg.env.grid_max_steps =
      static_cast<int>(f.get_int("env", "grid_max_steps", cfg.env.grid_max_steps));
  cfg.env.pend_dt = f.get_double("env", "pendulum_dt", cfg.env.pend_dt);
  cfg.env.pend_torque = f.get_double("env", "pendulum_torque", cfg.env.pend_torque);
  cfg.env.pend_max_steps =
      static_cast<int>(f.get_int("env", "pendulum_max_steps", cfg.env.pend_max_steps));
  cfg.env.hw_lanes = static_cast<int>(f.get_int("env", "lanes", cfg.env.hw_lanes));
  cfg.env.hw_vmin = f.get_double("env", "v_min", cfg.env.hw_vmin);
  cfg.env.hw_vmax = f.get_double("env", "v_max", cfg.env.hw_vmax);
  cfg.env.hw_phi = f.get_double("env", "phi", cfg.env.hw_phi);
  cfg.env.hw_kappa = f.get_double("env", "kappa", cfg.env.hw_kappa);
  cfg.env.hw_max_steps =
      static_cast<int>(f.get_int("env", "highway_max_steps", cfg.env.hw_max_steps));
  return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
  const config::Config file = config::Config::parse_file(path);
  ExperimentConfig cfg = default_config(
      file.get_string("experiment", "env", "gridworld"));
  return apply_config(std::move(cfg), file);
}

sta::StaModel pretrain_sta(envs::Env& env, int transitions, int train_steps,
                           int batch, const sta::StaConfig& cfg, Rng& rng,
                           std::vector<std::array<double, 4>>* curve) {
  const envs::ActionSpace space = env.action_space();
  sta::ActionEncoding enc;
  if (space.discrete) {
    enc.one_hot = true;
    enc.dim = space.count;
  } else {
    enc.one_hot = false;
    enc.dim = space.dim;
    enc.scale = std::max(std::fabs(space.low), std::fabs(space.high));
  }

  Rng collect_rng = rng.substream("collect");
  std::vector<sta::TrainSample> corpus;
  corpus.reserve(static_cast<std::size_t>(transitions));
  std::vector<double> s = env.reset(collect_rng.next_u64());
  while (static_cast<int>(corpus.size()) < transitions) {
    replay::Action a;
    if (space.discrete) {
      a = replay::Action::make_discrete(static_cast<int>(
          collect_rng.uniform_index(static_cast<std::uint64_t>(space.count))));
    } else {
      std::vector<double> v(static_cast<std::size_t>(space.dim));
      for (double& x : v) x = collect_rng.uniform(space.low, space.high);
      a = replay::Action::make_continuous(std::move(v));
    }
    const envs::StepResult res = env.step(a);
    corpus.push_back({sta::delta(s, res.s_next), a});
    s = res.done ? env.reset(collect_rng.next_u64()) : res.s_next;
  }

  Rng model_rng = rng.substream("model");
  sta::StaModel model(env.obs_dim(), enc, cfg, model_rng);
  Rng batch_rng = rng.substream("batches");
  std::vector<sta::TrainSample> mb(static_cast<std::size_t>(batch));
  for (int step = 0; step < train_steps; ++step) {
    for (auto& sample : mb)
      sample = corpus[batch_rng.uniform_index(corpus.size())];
    const sta::StaLoss loss = model.train_step(mb);
    if (curve != nullptr)
      curve->push_back({static_cast<double>(step), loss.recon, loss.kl,
                        loss.total});
  }
  model.mark_trained();
  return model;
}

namespace {

struct SeedOutput {
  SeedResult result;
};

SeedOutput run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::unique_ptr<envs::Env> env = build_env(cfg.env_name, cfg.env);
  const envs::ActionSpace space = env->action_space();

  if (cfg.agent_kind == "dqn" && !space.discrete)
    throw std::invalid_argument("config: dqn requires a discrete action space");
  if (cfg.agent_kind == "ddpg" && space.discrete)
    throw std::invalid_argument("config: ddpg requires a continuous action space");
  if (cfg.agent_kind != "dqn" && cfg.agent_kind != "ddpg")
    throw std::invalid_argument("config: unknown agent kind " + cfg.agent_kind);

  Rng root(seed);
  Rng env_rng = root.substream("env");
  Rng agent_rng = root.substream("agent");
  Rng sta_rng = root.substream("sta");
  Rng sampler_rng = root.substream("sampler");
  Rng replay_rng = root.substream("replay");

  const std::string tag = "_" + std::to_string(seed);
  const fs::path dir(cfg.out_dir);

  // --- transition model (only needed with augmentation on)
  std::unique_ptr<sta::StaModel> sta_model;
  if (cfg.cea_on) {
    if (!cfg.sta_checkpoint.empty()) {
      sta_model = std::make_unique<sta::StaModel>(sta::load_sta(cfg.sta_checkpoint));
      if (!sta_model->trained())
        throw std::runtime_error("config: checkpointed transition model is untrained");
    } else {
      std::vector<std::array<double, 4>> curve;
      const std::unique_ptr<envs::Env> collect_env =
          build_env(cfg.env_name, cfg.env);
      sta_model = std::make_unique<sta::StaModel>(
          pretrain_sta(*collect_env, cfg.sta_transitions, cfg.sta_train_steps,
                       cfg.sta_batch, cfg.sta, sta_rng, &curve));
      std::ofstream out = open_out((dir / ("sta_loss" + tag + ".csv")).string());
      out << "step,recon,kl,total\n";
      for (const auto& row : curve)
        out << static_cast<long>(row[0]) << ',' << fmt(row[1]) << ','
            << fmt(row[2]) << ',' << fmt(row[3]) << '\n';
    }
  }

  // --- replay buffer (PER off degrades to uniform sampling, unit weights)
  const double delta_exp = cfg.per_on ? cfg.priority_exponent : 0.0;
  const double eta0 = cfg.per_on ? cfg.importance_start : 0.0;
  replay::PerBuffer buffer(cfg.memory_size, delta_exp, eta0, cfg.prior_eps);

  // --- agents
  const long planned_steps =
      static_cast<long>(cfg.episodes) * env->max_steps();
  std::unique_ptr<agents::DqnAgent> dqn;
  std::unique_ptr<agents::DdpgAgent> ddpg;
  if (cfg.agent_kind == "dqn") {
    agents::DqnConfig acfg = cfg.dqn;
    if (acfg.eps_decay_steps <= 0)
      acfg.eps_decay_steps = static_cast<long>(0.3 * planned_steps);
    dqn = std::make_unique<agents::DqnAgent>(env->obs_dim(), space.count, acfg,
                                             agent_rng);
  } else {
    ddpg = std::make_unique<agents::DdpgAgent>(env->obs_dim(), space.dim,
                                               space.high, cfg.ddpg, agent_rng);
  }

  // --- augmenter
  kde::SamplerConfig sampler_cfg = cfg.sampler;
  if (!space.discrete) {
    sampler_cfg.bounds.assign(static_cast<std::size_t>(space.dim),
                              {space.low, space.high});
  }
  augment::CeaAugmenter augmenter(cfg.cea, sampler_cfg);

  const std::size_t warmup =
      cfg.warmup > 0 ? cfg.warmup
                     : (cfg.agent_kind == "dqn"
                            ? std::max<std::size_t>(
                                  500, static_cast<std::size_t>(cfg.batch_size))
                            : 5000);

  std::ofstream returns_csv =
      open_out((dir / ("returns" + tag + ".csv")).string());
  returns_csv << "episode,return,smoothed,explore,loss,real_count,cf_count\n";
  std::ofstream train_csv =
      open_out((dir / ("train_log" + tag + ".csv")).string());
  train_csv << "step,loss,mean_q,explore\n";
  std::ofstream augment_csv =
      open_out((dir / ("augment_log" + tag + ".csv")).string());
  augment_csv << "call,episode,candidates,retained,added,real_count,cf_count\n";
  std::ofstream traj_jsonl;
  if (cfg.dump_trajectories)
    traj_jsonl = open_out((dir / ("trajectories" + tag + ".jsonl")).string());

  SeedResult result;
  result.seed = seed;
  long global_step = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    if (cfg.cea_on && ep > 0 && ep % cfg.cea.augment_period == 0) {
      const auto [real_count, cf_count] = buffer.counts();
      if (real_count >= static_cast<std::size_t>(cfg.cea.base_batch)) {
        const augment::AugmentResult r =
            augmenter.augment(buffer, *sta_model, sampler_rng);
        ++result.augment_calls;
        augment_csv << augmenter.calls() << ',' << ep << ',' << r.candidates
                    << ',' << r.retained << ',' << r.added << ','
                    << r.real_count << ',' << r.counterfactual_count << '\n';
      }
    }

    std::vector<double> s = env->reset(env_rng.next_u64());
    double ep_return = 0.0;
    double ep_loss = 0.0;
    long ep_learn_steps = 0;
    bool done = false;
    int step_in_ep = 0;
    while (!done) {
      const replay::Action a = cfg.agent_kind == "dqn"
                                   ? dqn->act(s, true, agent_rng)
                                   : ddpg->act(s, true, agent_rng);
      const envs::StepResult sr = env->step(a);
      if (cfg.dump_trajectories) {
        json j;
        j["episode"] = ep;
        j["step"] = step_in_ep;
        j["s"] = s;
        j["a"] = action_json(a);
        j["r"] = sr.r;
        j["done"] = sr.done;
        traj_jsonl << j.dump() << '\n';
      }
      buffer.push({s, a, sr.r, sr.s_next, sr.done, replay::Provenance::Real});
      ep_return += sr.r;
      s = sr.s_next;
      done = sr.done;
      ++global_step;
      ++step_in_ep;

      if (buffer.size() >= warmup &&
          global_step % std::max(1, cfg.train_freq) == 0) {
        if (cfg.per_on) {
          const double frac = std::min(
              1.0, static_cast<double>(global_step) /
                       static_cast<double>(std::max<long>(1, planned_steps)));
          buffer.set_importance_exponent(cfg.importance_start +
                                         (1.0 - cfg.importance_start) * frac);
        }
        replay::Batch batch =
            buffer.sample(static_cast<std::size_t>(cfg.batch_size), replay_rng);
        const agents::LearnResult lr = cfg.agent_kind == "dqn"
                                           ? dqn->learn_step(batch)
                                           : ddpg->learn_step(batch);
        if (lr.applied)
          buffer.update_priorities(batch.indices, lr.abs_td);
        ep_loss += lr.loss;
        ++ep_learn_steps;
        const double explore = cfg.agent_kind == "dqn"
                                   ? dqn->current_epsilon()
                                   : cfg.ddpg.sigma;
        train_csv << global_step << ',' << fmt(lr.loss) << ','
                  << fmt(lr.mean_q) << ',' << fmt(explore) << '\n';
      }
    }

    result.returns.push_back(ep_return);
    const std::vector<double> partial = ema_smooth(result.returns);
    const double explore =
        cfg.agent_kind == "dqn" ? dqn->current_epsilon() : cfg.ddpg.sigma;
    const auto [real_count, cf_count] = buffer.counts();
    returns_csv << ep << ',' << fmt(ep_return) << ',' << fmt(partial.back())
                << ',' << fmt(explore) << ','
                << fmt(ep_learn_steps > 0 ? ep_loss / ep_learn_steps : 0.0)
                << ',' << real_count << ',' << cf_count << '\n';
  }

  result.smoothed = ema_smooth(result.returns);
  const auto [real_count, cf_count] = buffer.counts();
  result.real_count = real_count;
  result.counterfactual_count = cf_count;

  buffer.dump_jsonl((dir / ("priorities_dump" + tag + ".jsonl")).string());

  return {std::move(result)};
}

}  // namespace

void write_summary_json(const RunSummary& summary, const ExperimentConfig& cfg,
                        const std::string& path) {
  json j;
  j["env"] = cfg.env_name;
  j["agent"] = cfg.agent_kind;
  j["cea"] = cfg.cea_on;
  j["per"] = cfg.per_on;
  j["episodes"] = cfg.episodes;
  j["seeds"] = cfg.seeds;
  j["smoothing_factor"] = 0.05;
  j["mean"] = summary.mean;
  j["std"] = summary.stddev;
  j["std_pooling"] = "seeds_and_episodes_jointly";
  j["final"] = summary.final_value;
  json per_seed = json::object();
  for (const SeedResult& r : summary.runs) {
    json s;
    s["final_smoothed"] = r.smoothed.back();
    s["last_return"] = r.returns.back();
    s["real_count"] = r.real_count;
    s["counterfactual_count"] = r.counterfactual_count;
    s["augment_calls"] = r.augment_calls;
    per_seed[std::to_string(r.seed)] = std::move(s);
  }
  j["per_seed"] = std::move(per_seed);
  json band = json::array();
  for (const auto& [lo, hi, mean] : summary.band)
    band.push_back({lo, hi, mean});
  j["band_min_max_mean"] = std::move(band);

  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.episodes < 1)
    throw std::invalid_argument("config: episodes must be >= 1");
  if (cfg.seeds.empty())
    throw std::invalid_argument("config: need at least one seed");

  fs::create_directories(cfg.out_dir);

  const int workers = cfg.parallel > 0
                          ? cfg.parallel
                          : std::max(1u, std::thread::hardware_concurrency());

  std::vector<SeedResult> results(cfg.seeds.size());
  std::size_t next = 0;
  while (next < cfg.seeds.size()) {
    const std::size_t wave =
        std::min<std::size_t>(static_cast<std::size_t>(workers),
                              cfg.seeds.size() - next);
    std::vector<std::future<SeedOutput>> futures;
    for (std::size_t i = 0; i < wave; ++i) {
      const std::uint64_t seed = cfg.seeds[next + i];
      futures.push_back(std::async(std::launch::async, [&cfg, seed] {
        return run_one_seed(cfg, seed);
      }));
    }
    for (std::size_t i = 0; i < wave; ++i)
      results[next + i] = futures[i].get().result;
    next += wave;
  }

  RunSummary summary = summarize(std::move(results));
  write_summary_json(summary, cfg, (fs::path(cfg.out_dir) / "summary.json").string());
  return summary;
}

std::map<std::string, RunSummary> ablation_grid(const ExperimentConfig& base) {
  const std::vector<std::pair<std::string, std::pair<bool, bool>>> variants = {
      {"backbone", {false, false}},
      {"backbone_per", {false, true}},
      {"backbone_cea", {true, false}},
      {"backbone_cea_per", {true, true}},
  };
  std::map<std::string, RunSummary> out;
  for (const auto& [label, flags] : variants) {
    ExperimentConfig cfg = base;
    cfg.cea_on = flags.first;
    cfg.per_on = flags.second;
    cfg.out_dir = (fs::path(base.out_dir) / label).string();
    out.emplace(label, run_experiment(cfg));
  }

  json j;
  for (const auto& [label, summary] : out) {
    j[label] = {{"mean", summary.mean},
                {"std", summary.stddev},
                {"final", summary.final_value}};
  }
  fs::create_directories(base.out_dir);
  std::ofstream ab =
      open_out((fs::path(base.out_dir) / "ablation.json").string());
  ab << j.dump(2) << '\n';
  return out;
}

}  // namespace cea::runner
