#pragma once

#include <array>
#include <span>
#include <vector>

#include "cea/rng.hpp"

// Counterfactual action sampling: place candidate actions so that the
// differential entropy of a Gaussian kernel density over known + candidate
// points is maximized, via gradient ascent on the trapezoid-integrated
// entropy (dims 1-2) or a frozen Monte-Carlo estimate (dims > 2). Discrete
// spaces enumerate the complement instead.
namespace cea::kde {

using Point = std::vector<double>;

struct KdeModel {
  std::vector<Point> centers;  // known actions plus candidates
  double bandwidth = 1.0;
  int dim = 1;
};

enum class GradientMode {
  // gradient of the trapezoid-approximated entropy (finite-difference exact)
  Exact,
  // the printed closed form, kept verbatim for comparison: log p decomposed
  // as a sum of per-kernel exponents, sign as printed
  Paper,
};

struct SamplerConfig {
  int n_samples = 3;     // candidates to place
  double lr = 5.0;       // large on purpose; the line search halves bad steps
  int iters = 120;
  int grid_m = 256;      // trapezoid subdivisions per axis, >= 8
  std::vector<std::array<double, 2>> bounds;  // per-axis [low, high]
  GradientMode gradient_mode = GradientMode::Exact;
  bool line_search = true;  // halve a step up to 5 times if entropy drops
  int mc_samples = 4096;    // dim > 2 only
};

struct OptimTrace {
  // one row per accepted iteration: entropy followed by candidate coords
  std::vector<double> entropy;
  std::vector<std::vector<Point>> candidates;
};

void validate(const KdeModel& model);
void validate(const SamplerConfig& cfg, int dim);

// Product-kernel mixture density; the 1-D case is
// p(x) = 1/(|A| h sqrt(2 pi)) * sum_i exp(-(x - a_i)^2 / (2 h^2)).
double density(const KdeModel& model, std::span<const double> x);

// Differential entropy of the mixture over cfg.bounds, trapezoid rule with
// cfg.grid_m subdivisions per axis (tensor product in 2-D). dim <= 2 only.
double entropy(const KdeModel& model, const SamplerConfig& cfg);

// Monte-Carlo entropy for dim > 2: mean of -log p over samples drawn from
// the mixture. The sample set is drawn once from `rng` so that repeated
// evaluations see the same frozen objective.
struct McSample {
  std::vector<Point> points;
};
McSample draw_mc_samples(const KdeModel& model, int count, Rng& rng);
double entropy_mc(const KdeModel& model, const McSample& samples);

// dH/d(center `which`). Exact mode differentiates the same quadrature
// entropy() computes; paper mode evaluates the printed expression.
Point grad_entropy(const KdeModel& model, const SamplerConfig& cfg, int which);
Point grad_entropy_mc(const KdeModel& model, const McSample& samples,
                      int which);

// Gradient-ascent placement of cfg.n_samples candidates, starting uniform
// over bounds. Accepted steps never decrease the (frozen) objective when
// line_search is on. Returns the final candidate positions, clipped to
// bounds.
std::vector<Point> optimize_candidates(const std::vector<Point>& known,
                                       const SamplerConfig& cfg, Rng& rng,
                                       OptimTrace* trace = nullptr);

// All discrete action indices except the one taken; empty when k < 2.
std::vector<int> enumerate_discrete_counterfactuals(int taken, int k);

// Silverman's rule over the point set, floored at 0.1x the mean axis width
// of cfg.bounds.
double silverman_bandwidth(const std::vector<Point>& points,
                           const SamplerConfig& cfg);

}  // namespace cea::kde
