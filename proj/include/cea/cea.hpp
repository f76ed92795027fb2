#pragma once

#include <cstddef>
#include <vector>

#include "cea/kde.hpp"
#include "cea/replay.hpp"
#include "cea/rng.hpp"
#include "cea/sta.hpp"

// Counterfactual experience augmentation: sample actions that were not
// taken, imagine their next states with the transition autoencoder, borrow
// the reward (and done flag) of the closest real transition, and inject the
// completed experiences into the replay buffer under a decaying budget.
namespace cea::augment {

using replay::Action;
using replay::PerBuffer;
using replay::Transition;
using Vector = std::vector<double>;

enum class DistanceMetric { Euclidean, Manhattan };

struct CeaConfig {
  double threshold_ratio = 0.1;   // keep the closest ceil(ratio * n) pairs
  DistanceMetric metric = DistanceMetric::Euclidean;
  int augment_period = 5;         // episodes between augmentation calls
  int base_batch = 32;            // real experiences drawn per call
  int injection_cap = 128;        // initial per-call budget (4x base_batch)
  double anneal_decay = 0.9;      // budget multiplier per call
  double stop_at_fill_fraction = 0.9;
  bool normalize_state = false;   // per-dimension scaling before distances
};

struct CtpMatch {
  std::size_t counterfactual_index = 0;
  std::size_t real_index = 0;
  double distance = 0.0;
  double reward = 0.0;
};

// For each counterfactual next state, the closest real next state under the
// configured metric; sorted ascending by distance and truncated to
// ceil(threshold_ratio * candidate count).
std::vector<CtpMatch> ctp_match(const std::vector<Vector>& counterfactual_next,
                                const std::vector<Vector>& real_next,
                                const std::vector<double>& real_rewards,
                                const CeaConfig& cfg);

// done flag for a counterfactual is copied from its matched real transition
bool done_flag_policy(const Transition& matched_real);

struct AugmentResult {
  int candidates = 0;  // counterfactuals generated before filtering
  int retained = 0;    // kept by the threshold ratio
  int added = 0;       // pushed into the buffer (cap applied)
  std::size_t real_count = 0;
  std::size_t counterfactual_count = 0;
};

// Runs the full augmentation pass; holds the annealing budget across calls.
class CeaAugmenter {
 public:
  CeaAugmenter(CeaConfig cfg, kde::SamplerConfig sampler_cfg);

  // Draws up to cfg.base_batch not-yet-augmented real experiences, expands
  // them with counterfactual actions (complement enumeration for discrete
  // spaces, entropy-optimized samples for continuous ones), matches rewards
  // against the full real pool and pushes the retained experiences. Returns
  // zero work once the buffer fill reaches stop_at_fill_fraction.
  AugmentResult augment(PerBuffer& buffer, const sta::StaModel& model,
                        Rng& rng);

  const CeaConfig& config() const { return cfg_; }
  double current_cap() const { return cap_; }
  int calls() const { return calls_; }

 private:
  CeaConfig cfg_;
  kde::SamplerConfig sampler_cfg_;
  double cap_;
  int calls_ = 0;
};

}  // namespace cea::augment
