#include "cea/cea.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cea/kernels.hpp"

namespace cea::augment {

namespace {

double distance(const Vector& a, const Vector& b, DistanceMetric metric) {
  if (metric == DistanceMetric::Euclidean)
    return std::sqrt(kernels::squared_distance(a, b));
  return kernels::manhattan_distance(a, b);
}

}  // namespace

std::vector<CtpMatch> ctp_match(const std::vector<Vector>& counterfactual_next,
                                const std::vector<Vector>& real_next,
                                const std::vector<double>& real_rewards,
                                const CeaConfig& cfg) {
  if (counterfactual_next.empty())
    throw std::invalid_argument("ctp: no counterfactual states");
  if (real_next.empty()) throw std::invalid_argument("ctp: empty real pool");
  if (real_next.size() != real_rewards.size())
    throw std::invalid_argument("ctp: rewards do not match the pool");
  if (!(cfg.threshold_ratio > 0.0) || cfg.threshold_ratio > 1.0)
    throw std::invalid_argument("ctp: threshold ratio outside (0, 1]");

  // optional per-dimension scaling by the real pool's range
  std::vector<double> inv_scale;
  if (cfg.normalize_state) {
    const std::size_t dim = real_next[0].size();
    std::vector<double> lo(real_next[0]), hi(real_next[0]);
    for (const Vector& v : real_next)
      for (std::size_t k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    inv_scale.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
      inv_scale[k] = hi[k] > lo[k] ? 1.0 / (hi[k] - lo[k]) : 1.0;
  }
  auto scaled = [&](const Vector& v) {
    Vector out = v;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= inv_scale[k];
    return out;
  };

  std::vector<CtpMatch> matches;
  matches.reserve(counterfactual_next.size());
  std::vector<Vector> pool_scaled;
  if (cfg.normalize_state)
    for (const Vector& v : real_next) pool_scaled.push_back(scaled(v));
  const std::vector<Vector>& pool =
      cfg.normalize_state ? pool_scaled : real_next;

  for (std::size_t c = 0; c < counterfactual_next.size(); ++c) {
    const Vector query =
        cfg.normalize_state ? scaled(counterfactual_next[c]) : counterfactual_next[c];
    std::size_t best = 0;
    double best_d = distance(query, pool[0], cfg.metric);
    for (std::size_t i = 1; i < pool.size(); ++i) {
      const double d = distance(query, pool[i], cfg.metric);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    matches.push_back({c, best, best_d, real_rewards[best]});
  }

  std::stable_sort(matches.begin(), matches.end(),
                   [](const CtpMatch& a, const CtpMatch& b) {
                     return a.distance < b.distance;
                   });
  const std::size_t keep = static_cast<std::size_t>(std::ceil(
      cfg.threshold_ratio * static_cast<double>(counterfactual_next.size())));
  if (matches.size() > keep) matches.resize(keep);
  return matches;
}

bool done_flag_policy(const Transition& matched_real) {
  return matched_real.done;
}

CeaAugmenter::CeaAugmenter(CeaConfig cfg, kde::SamplerConfig sampler_cfg)
    : cfg_(cfg), sampler_cfg_(sampler_cfg), cap_(cfg.injection_cap) {
  if (!(cfg.threshold_ratio > 0.0) || cfg.threshold_ratio > 1.0)
    throw std::invalid_argument("cea: threshold ratio outside (0, 1]");
  if (!(cfg.anneal_decay > 0.0) || cfg.anneal_decay >= 1.0)
    throw std::invalid_argument("cea: anneal decay outside (0, 1)");
  if (!(cfg.stop_at_fill_fraction > 0.0) || cfg.stop_at_fill_fraction > 1.0)
    throw std::invalid_argument("cea: stop fraction outside (0, 1]");
}

AugmentResult CeaAugmenter::augment(PerBuffer& buffer,
                                    const sta::StaModel& model, Rng& rng) {
  if (!model.trained())
    throw std::runtime_error("cea: transition model is not trained");

  AugmentResult res;
  auto update_counts = [&] {
    const auto [real, cf] = buffer.counts();
    res.real_count = real;
    res.counterfactual_count = cf;
  };

  if (buffer.fill_fraction() >= cfg_.stop_at_fill_fraction) {
    update_counts();
    return res;  // pool considered full; no more counterfactuals
  }

  std::vector<std::size_t> pool = buffer.unaugmented_real_indices();
  if (pool.empty()) {
    update_counts();
    return res;
  }

  // draw base_batch distinct sources among the not-yet-augmented ones
  const std::size_t want =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.base_batch), pool.size());
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(want);

  const bool discrete = model.action_encoding().one_hot;

  // generate counterfactual (s, a, s') candidates
  std::vector<Vector> cand_s;
  std::vector<Action> cand_a;
  std::vector<Vector> cand_next;
  for (const std::size_t src : pool) {
    const Transition& t = buffer.at(src);
    if (discrete) {
      const int k = model.action_encoding().dim;
      for (const int a : kde::enumerate_discrete_counterfactuals(t.a.index, k)) {
        const Action action = Action::make_discrete(a);
        cand_s.push_back(t.s);
        cand_a.push_back(action);
        cand_next.push_back(model.generate(t.s, action, rng));
      }
    } else {
      const std::vector<kde::Point> known = {t.a.value};
      const std::vector<kde::Point> sampled =
          kde::optimize_candidates(known, sampler_cfg_, rng);
      for (const kde::Point& p : sampled) {
        const Action action = Action::make_continuous(p);
        cand_s.push_back(t.s);
        cand_a.push_back(action);
        cand_next.push_back(model.generate(t.s, action, rng));
      }
    }
    buffer.mark_augmented(src);
  }
  res.candidates = static_cast<int>(cand_next.size());
  if (cand_next.empty()) {
    update_counts();
    return res;
  }

  // Snapshot the real pool before pushing anything: at capacity a push can
  // evict the very slot a later match points at.
  std::vector<Vector> real_next;
  std::vector<double> real_rewards;
  std::vector<bool> real_done;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer.at(i);
    if (t.provenance != replay::Provenance::Real) continue;
    real_next.push_back(t.s_next);
    real_rewards.push_back(t.r);
    real_done.push_back(t.done);
  }
  if (real_next.empty()) {
    update_counts();
    return res;
  }

  const std::vector<CtpMatch> matches =
      ctp_match(cand_next, real_next, real_rewards, cfg_);
  res.retained = static_cast<int>(matches.size());

  const int budget = std::max(0, static_cast<int>(cap_));
  for (const CtpMatch& m : matches) {
    if (res.added >= budget) break;
    Transition t;
    t.s = cand_s[m.counterfactual_index];
    t.a = cand_a[m.counterfactual_index];
    t.r = m.reward;
    t.s_next = cand_next[m.counterfactual_index];
    t.done = real_done[m.real_index];
    t.provenance = replay::Provenance::Counterfactual;
    buffer.push(std::move(t));
    ++res.added;
  }

  cap_ *= cfg_.anneal_decay;
  ++calls_;
  update_counts();
  return res;
}

}  // namespace cea::augment
