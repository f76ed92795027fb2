// Command-line harness: seeded training runs with optional counterfactual
// experience augmentation, the PER/CEA ablation grid, transition-model
// pretraining, and the entropy-sampling demo trace.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cea/kde.hpp"
#include "cea/kernels.hpp"
#include "cea/runner.hpp"

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

void print_summary(const cea::runner::RunSummary& s) {
  std::cout << "mean " << fmt(s.mean) << "  std " << fmt(s.stddev)
            << "  final " << fmt(s.final_value) << "\n";
}

int cmd_train(const std::string& config_path, const std::string& seed_list,
              const std::string& cea_flag, const std::string& per_flag,
              const std::string& out_dir) {
  cea::runner::ExperimentConfig cfg =
      config_path.empty() ? cea::runner::default_config("gridworld")
                          : cea::runner::config_from_file(config_path);
  if (!seed_list.empty()) cfg.seeds = parse_seed_list(seed_list);
  if (!cea_flag.empty()) cfg.cea_on = cea_flag == "on";
  if (!per_flag.empty()) cfg.per_on = per_flag == "on";
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  const cea::runner::RunSummary summary = cea::runner::run_experiment(cfg);
  print_summary(summary);
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
  cea::runner::ExperimentConfig cfg =
      config_path.empty() ? cea::runner::default_config("gridworld")
                          : cea::runner::config_from_file(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  const auto grid = cea::runner::ablation_grid(cfg);
  for (const auto& [label, summary] : grid) {
    std::cout << label << ": ";
    print_summary(summary);
  }
  return 0;
}

int cmd_sta_pretrain(const std::string& env_name, int transitions,
                     const std::string& out_path, std::uint64_t seed,
                     int train_steps) {
  cea::runner::ExperimentConfig cfg = cea::runner::default_config(env_name);
  const std::unique_ptr<cea::envs::Env> env =
      cea::runner::build_env(env_name, cfg.env);
  cea::Rng rng(seed);
  cea::Rng sta_rng = rng.substream("sta");
  std::vector<std::array<double, 4>> curve;
  const cea::sta::StaModel model = cea::runner::pretrain_sta(
      *env, transitions, train_steps, cfg.sta_batch, cfg.sta, sta_rng, &curve);
  cea::sta::save_sta(model, out_path);

  const std::filesystem::path loss_path =
      std::filesystem::path(out_path).parent_path() / "sta_loss.csv";
  std::ofstream loss(loss_path);
  loss << "step,recon,kl,total\n";
  for (const auto& row : curve)
    loss << static_cast<long>(row[0]) << ',' << fmt(row[1]) << ','
         << fmt(row[2]) << ',' << fmt(row[3]) << '\n';
  std::cout << "checkpoint written to " << out_path << " (loss curve: "
            << loss_path.string() << ")\n";
  std::cout << "final loss " << fmt(curve.empty() ? 0.0 : curve.back()[3])
            << "\n";
  return 0;
}

int cmd_sample_demo(int dim, const std::string& out_path, std::uint64_t seed) {
  cea::kde::SamplerConfig cfg;
  cfg.n_samples = dim == 1 ? 3 : 9;
  cfg.bounds.assign(static_cast<std::size_t>(dim), {-4.0, 4.0});
  cfg.grid_m = dim == 1 ? 256 : 128;

  const std::vector<cea::kde::Point> known = {
      cea::kde::Point(static_cast<std::size_t>(dim), 0.0)};
  cea::Rng rng(seed);
  cea::kde::OptimTrace trace;
  const std::vector<cea::kde::Point> final_points =
      cea::kde::optimize_candidates(known, cfg, rng, &trace);

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot open " << out_path << "\n";
    return 1;
  }
  out << "iter,entropy";
  for (int c = 0; c < cfg.n_samples; ++c) {
    out << ",c" << c << "_x";
    if (dim == 2) out << ",c" << c << "_y";
  }
  out << "\n";
  for (std::size_t it = 0; it < trace.entropy.size(); ++it) {
    out << it << ',' << fmt(trace.entropy[it]);
    for (const cea::kde::Point& p : trace.candidates[it])
      for (double x : p) out << ',' << fmt(x);
    out << "\n";
  }

  std::cout << "entropy " << fmt(trace.entropy.front()) << " -> "
            << fmt(trace.entropy.back()) << "; trace in " << out_path << "\n";
  for (std::size_t i = 0; i < final_points.size(); ++i) {
    std::cout << "candidate " << i << ":";
    for (double x : final_points[i]) std::cout << ' ' << fmt(x);
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual experience augmentation for off-policy RL"};
  app.require_subcommand(1);

  std::string config_path, seed_list, cea_flag, per_flag, out_dir;
  auto* train = app.add_subcommand("train", "run seeded training");
  train->add_option("--config", config_path, "config file (key = value with [sections])");
  train->add_option("--seed-list", seed_list, "comma-separated seeds, e.g. 42,43,44,45");
  train->add_option("--cea", cea_flag, "on|off")->check(CLI::IsMember({"on", "off"}));
  train->add_option("--per", per_flag, "on|off")->check(CLI::IsMember({"on", "off"}));
  train->add_option("--out", out_dir, "output directory");

  std::string ab_config, ab_out;
  auto* ablate = app.add_subcommand("ablate", "backbone/PER/CEA ablation grid");
  ablate->add_option("--config", ab_config, "config file");
  ablate->add_option("--out", ab_out, "output directory");

  std::string pre_env = "gridworld", pre_out = "sta.ckpt";
  int pre_transitions = 5000, pre_steps = 3000;
  std::uint64_t pre_seed = 7;
  auto* pretrain = app.add_subcommand("sta-pretrain",
                                      "train the transition model on random-policy data");
  pretrain->add_option("--env", pre_env, "gridworld|pendulum|minihighway");
  pretrain->add_option("--transitions", pre_transitions, "corpus size");
  pretrain->add_option("--train-steps", pre_steps, "gradient steps");
  pretrain->add_option("--out", pre_out, "checkpoint path");
  pretrain->add_option("--seed", pre_seed, "root seed");

  int demo_dim = 1;
  std::string demo_out = "kde_trace.csv";
  std::uint64_t demo_seed = 1;
  auto* demo = app.add_subcommand("sample-demo",
                                  "entropy-maximizing sampling trace");
  demo->add_option("--dim", demo_dim, "1 or 2")->check(CLI::IsMember({1, 2}));
  demo->add_option("--out", demo_out, "trace CSV path");
  demo->add_option("--seed", demo_seed, "seed for candidate init");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, seed_list, cea_flag, per_flag, out_dir);
    if (ablate->parsed()) return cmd_ablate(ab_config, ab_out);
    if (pretrain->parsed())
      return cmd_sta_pretrain(pre_env, pre_transitions, pre_out, pre_seed,
                              pre_steps);
    if (demo->parsed()) return cmd_sample_demo(demo_dim, demo_out, demo_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
