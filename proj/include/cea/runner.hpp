#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cea/agents.hpp"
#include "cea/cea.hpp"
#include "cea/config.hpp"
#include "cea/envs.hpp"
#include "cea/kde.hpp"
#include "cea/replay.hpp"
#include "cea/rng.hpp"
#include "cea/sta.hpp"

// Experiment harness: seeded multi-run training loops with optional
// counterfactual augmentation, CSV/JSONL logging and summary aggregation.
// One root seed per run spawns named substreams (env, agent, sta, sampler,
// replay) so toggling augmentation does not perturb the rest of the
// pipeline.
namespace cea::runner {

struct EnvParams {
  int grid_width = 6, grid_height = 6, grid_tx = 5, grid_ty = 5,
      grid_max_steps = 50;
  double pend_g = 10.0, pend_m = 1.0, pend_l = 1.0, pend_dt = 0.05,
         pend_torque = 2.0, pend_speed = 8.0;
  int pend_max_steps = 200;
  int hw_lanes = 3, hw_vehicles = 4;
  double hw_road = 100.0, hw_vmin = 1.0, hw_vmax = 3.0, hw_phi = 1.0,
         hw_kappa = 5.0;
  int hw_max_steps = 60;
};

struct ExperimentConfig {
  std::string env_name = "gridworld";
  std::string agent_kind = "dqn";  // "dqn" or "ddpg"
  bool cea_on = true;
  bool per_on = true;
  std::vector<std::uint64_t> seeds = {42, 43, 44, 45};
  int episodes = 300;
  std::string out_dir = "out";
  int parallel = 0;  // seed-level parallelism; 0 = hardware concurrency
  int train_freq = 1;
  std::size_t warmup = 0;  // stored transitions before learning; 0 = auto
  bool dump_trajectories = false;

  // replay
  std::size_t memory_size = 20000;
  double priority_exponent = 0.2;
  double importance_start = 0.6;  // annealed linearly to 1.0
  double prior_eps = 1e-6;
  int batch_size = 128;

  agents::DqnConfig dqn;
  agents::DdpgConfig ddpg;

  sta::StaConfig sta;
  int sta_transitions = 5000;
  int sta_train_steps = 3000;
  int sta_batch = 128;
  std::string sta_checkpoint;  // optional; skips in-run pretraining

  augment::CeaConfig cea;
  kde::SamplerConfig sampler;

  EnvParams env;
};

ExperimentConfig default_config(const std::string& env_name);
// File values override defaults; sections: experiment, replay, agent, sta,
// kde, cea, env.
ExperimentConfig config_from_file(const std::string& path);
ExperimentConfig apply_config(ExperimentConfig base, const config::Config& file);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> returns;
  std::vector<double> smoothed;
  std::size_t real_count = 0;
  std::size_t counterfactual_count = 0;
  int augment_calls = 0;
};

struct RunSummary {
  std::vector<SeedResult> runs;
  // pooled over every smoothed point of every seed
  double mean = 0.0;
  double stddev = 0.0;
  // mean over seeds of the last smoothed value
  double final_value = 0.0;
  // per-episode [min, max, mean] across seeds
  std::vector<std::array<double, 3>> band;
};

// y_0 = x_0, y_t = factor*x_t + (1-factor)*y_{t-1}
std::vector<double> ema_smooth(const std::vector<double>& series,
                               double factor = 0.05);
RunSummary summarize(std::vector<SeedResult> runs);
// first episode index whose smoothed value reaches the threshold, or
// series size when it never does
std::size_t first_episode_at_least(const std::vector<double>& smoothed,
                                   double threshold);

std::unique_ptr<envs::Env> build_env(const std::string& name,
                                     const EnvParams& p);

// Uniform-random transition collection plus training; optionally records
// the loss curve as (step, recon, kl, total) rows.
sta::StaModel pretrain_sta(envs::Env& env, int transitions, int train_steps,
                           int batch, const sta::StaConfig& cfg, Rng& rng,
                           std::vector<std::array<double, 4>>* curve = nullptr);

RunSummary run_experiment(const ExperimentConfig& cfg);

// backbone / backbone+PER / backbone+CEA / backbone+CEA+PER with shared
// seeds; writes one summary per variant plus a combined ablation.json.
std::map<std::string, RunSummary> ablation_grid(const ExperimentConfig& base);

void write_summary_json(const RunSummary& summary, const ExperimentConfig& cfg,
                        const std::string& path);

}  // namespace cea::runner
