#include "cea/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cea/kernels.hpp"

namespace cea::kde {

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

// 1/(|A| (h sqrt(2 pi))^dim)
double norm_const(const KdeModel& m) {
  return 1.0 /
         (static_cast<double>(m.centers.size()) *
          std::pow(m.bandwidth * kSqrt2Pi, static_cast<double>(m.dim)));
}

// flattened centers for the kernel-sum primitive
std::vector<double> flatten(const std::vector<Point>& pts, int dim) {
  std::vector<double> flat;
  flat.reserve(pts.size() * static_cast<std::size_t>(dim));
  for (const Point& p : pts) flat.insert(flat.end(), p.begin(), p.end());
  return flat;
}

struct GridAxis {
  double lo, step;
  int nodes;  // grid_m + 1
};

GridAxis axis(const SamplerConfig& cfg, int k) {
  const auto [lo, hi] = cfg.bounds[static_cast<std::size_t>(k)];
  return {lo, (hi - lo) / cfg.grid_m, cfg.grid_m + 1};
}

// trapezoid weight for node j on an axis
double trap_w(const GridAxis& ax, int j) {
  return (j == 0 || j == ax.nodes - 1) ? ax.step * 0.5 : ax.step;
}

double ylogy(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

void validate(const KdeModel& model) {
  if (model.centers.empty())
    throw std::invalid_argument("kde: need at least one center");
  if (!(model.bandwidth > 0.0))
    throw std::invalid_argument("kde: bandwidth must be positive");
  for (const Point& c : model.centers)
    if (static_cast<int>(c.size()) != model.dim)
      throw std::invalid_argument("kde: center dimension mismatch");
}

void validate(const SamplerConfig& cfg, int dim) {
  if (cfg.grid_m < 8) throw std::invalid_argument("kde: grid too coarse");
  if (static_cast<int>(cfg.bounds.size()) != dim)
    throw std::invalid_argument("kde: bounds do not match dimension");
  for (const auto& [lo, hi] : cfg.bounds)
    if (!(lo < hi)) throw std::invalid_argument("kde: bounds low >= high");
  if (cfg.n_samples < 0)
    throw std::invalid_argument("kde: negative sample count");
}

double density(const KdeModel& model, std::span<const double> x) {
  validate(model);
  if (static_cast<int>(x.size()) != model.dim)
    throw std::invalid_argument("kde: query dimension mismatch");
  const std::vector<double> flat = flatten(model.centers, model.dim);
  const double inv_two_h2 = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
  const double s = kernels::gaussian_kernel_sum(
      model.centers.size(), static_cast<std::size_t>(model.dim), flat.data(),
      x.data(), inv_two_h2);
  return norm_const(model) * s;
}

double entropy(const KdeModel& model, const SamplerConfig& cfg) {
  validate(model);
  validate(cfg, model.dim);
  if (model.dim > 2)
    throw std::invalid_argument("kde: grid entropy supports dims 1 and 2");

  const std::vector<double> flat = flatten(model.centers, model.dim);
  const double inv_two_h2 = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
  const double c = norm_const(model);
  const std::size_t n = model.centers.size();

  double h = 0.0;
  if (model.dim == 1) {
    const GridAxis ax = axis(cfg, 0);
    for (int j = 0; j < ax.nodes; ++j) {
      const double x = ax.lo + j * ax.step;
      const double p =
          c * kernels::gaussian_kernel_sum(n, 1, flat.data(), &x, inv_two_h2);
      h -= trap_w(ax, j) * ylogy(p);
    }
  } else {
    const GridAxis ax0 = axis(cfg, 0);
    const GridAxis ax1 = axis(cfg, 1);
    for (int j0 = 0; j0 < ax0.nodes; ++j0) {
      const double w0 = trap_w(ax0, j0);
      for (int j1 = 0; j1 < ax1.nodes; ++j1) {
        const double x[2] = {ax0.lo + j0 * ax0.step, ax1.lo + j1 * ax1.step};
        const double p =
            c * kernels::gaussian_kernel_sum(n, 2, flat.data(), x, inv_two_h2);
        h -= w0 * trap_w(ax1, j1) * ylogy(p);
      }
    }
  }
  return h;
}

McSample draw_mc_samples(const KdeModel& model, int count, Rng& rng) {
  validate(model);
  McSample s;
  s.points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Point& center =
        model.centers[rng.uniform_index(model.centers.size())];
    Point p(center.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      p[k] = center[k] + model.bandwidth * rng.normal();
    s.points.push_back(std::move(p));
  }
  return s;
}

double entropy_mc(const KdeModel& model, const McSample& samples) {
  validate(model);
  if (samples.points.empty())
    throw std::invalid_argument("kde: empty Monte-Carlo sample set");
  double acc = 0.0;
  for (const Point& x : samples.points) acc -= std::log(density(model, x));
  return acc / static_cast<double>(samples.points.size());
}

Point grad_entropy(const KdeModel& model, const SamplerConfig& cfg,
                   int which) {
  validate(model);
  validate(cfg, model.dim);
  if (which < 0 || which >= static_cast<int>(model.centers.size()))
    throw std::out_of_range("kde: candidate index out of range");
  if (model.dim > 2)
    throw std::invalid_argument("kde: grid gradient supports dims 1 and 2");

  const std::vector<double> flat = flatten(model.centers, model.dim);
  const double h2 = model.bandwidth * model.bandwidth;
  const double inv_two_h2 = 1.0 / (2.0 * h2);
  const double c = norm_const(model);
  const std::size_t n = model.centers.size();
  const Point& a = model.centers[static_cast<std::size_t>(which)];
  const bool paper = cfg.gradient_mode == GradientMode::Paper;
  // the printed form carries log of the normalization constant separately
  const double log_c = std::log(static_cast<double>(n) *
                                std::pow(model.bandwidth * kSqrt2Pi,
                                         static_cast<double>(model.dim)));

  Point grad(static_cast<std::size_t>(model.dim), 0.0);

  auto accumulate = [&](const double* x, double w) {
    double own_sq = 0.0;
    for (int k = 0; k < model.dim; ++k) {
      const double d = x[k] - a[k];
      own_sq += d * d;
    }
    const double own_kernel = std::exp(-own_sq * inv_two_h2);
    if (paper) {
      // decomposed "log p": -log(|A| (h sqrt(2pi))^dim) + sum_i -(x-a_i)^2/2h^2
      double exp_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double sq = kernels::squared_distance(
            std::span(x, static_cast<std::size_t>(model.dim)),
            std::span(flat.data() + i * model.dim,
                      static_cast<std::size_t>(model.dim)));
        exp_sum -= sq * inv_two_h2;
      }
      const double bracket = -log_c + exp_sum + 1.0;
      for (int k = 0; k < model.dim; ++k) {
        // sign as printed: dy/da = -(x-a)/(|A| h^(d+2) (2pi)^(d/2)) K (...)
        const double dpda = -(x[k] - a[k]) / h2 * c * own_kernel;
        grad[static_cast<std::size_t>(k)] -= w * dpda * bracket;
      }
    } else {
      const double p =
          c * kernels::gaussian_kernel_sum(n, static_cast<std::size_t>(model.dim),
                                           flat.data(), x, inv_two_h2);
      if (p <= 0.0) return;  // underflowed tail; contributes zero either way
      const double factor = std::log(p) + 1.0;
      for (int k = 0; k < model.dim; ++k) {
        const double dpda = c * own_kernel * (x[k] - a[k]) / h2;
        grad[static_cast<std::size_t>(k)] -= w * dpda * factor;
      }
    }
  };

  if (model.dim == 1) {
    const GridAxis ax = axis(cfg, 0);
    for (int j = 0; j < ax.nodes; ++j) {
      const double x = ax.lo + j * ax.step;
      accumulate(&x, trap_w(ax, j));
    }
  } else {
    const GridAxis ax0 = axis(cfg, 0);
    const GridAxis ax1 = axis(cfg, 1);
    for (int j0 = 0; j0 < ax0.nodes; ++j0) {
      for (int j1 = 0; j1 < ax1.nodes; ++j1) {
        const double x[2] = {ax0.lo + j0 * ax0.step, ax1.lo + j1 * ax1.step};
        accumulate(x, trap_w(ax0, j0) * trap_w(ax1, j1));
      }
    }
  }
  return grad;
}

Point grad_entropy_mc(const KdeModel& model, const McSample& samples,
                      int which) {
  validate(model);
  if (which < 0 || which >= static_cast<int>(model.centers.size()))
    throw std::out_of_range("kde: candidate index out of range");
  const double h2 = model.bandwidth * model.bandwidth;
  const double c = norm_const(model);
  const Point& a = model.centers[static_cast<std::size_t>(which)];
  Point grad(a.size(), 0.0);
  for (const Point& x : samples.points) {
    const double p = density(model, x);
    const double own_kernel =
        std::exp(-kernels::squared_distance(x, a) / (2.0 * h2));
    for (std::size_t k = 0; k < a.size(); ++k)
      grad[k] -= c * own_kernel * (x[k] - a[k]) / h2 / p;
  }
  // grad already accumulated with the leading minus of -mean log p
  const double inv = 1.0 / static_cast<double>(samples.points.size());
  for (double& g : grad) g *= inv;
  return grad;
}

std::vector<int> enumerate_discrete_counterfactuals(int taken, int k) {
  if (k < 2) return {};
  if (taken < 0 || taken >= k)
    throw std::out_of_range("taken action outside the action space");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k - 1));
  for (int i = 0; i < k; ++i)
    if (i != taken) out.push_back(i);
  return out;
}

double silverman_bandwidth(const std::vector<Point>& points,
                           const SamplerConfig& cfg) {
  const int dim = static_cast<int>(cfg.bounds.size());
  double mean_width = 0.0;
  for (const auto& [lo, hi] : cfg.bounds) mean_width += hi - lo;
  mean_width /= static_cast<double>(cfg.bounds.size());
  const double floor_h = 0.1 * mean_width;

  const std::size_t n = points.size();
  if (n < 2) return floor_h;

  // mean per-axis standard deviation
  double var_sum = 0.0;
  for (int k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (const Point& p : points) mean += p[static_cast<std::size_t>(k)];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const Point& p : points) {
      const double d = p[static_cast<std::size_t>(k)] - mean;
      var += d * d;
    }
    var_sum += var / static_cast<double>(n);
  }
  const double sigma = std::sqrt(var_sum / dim);
  const double factor =
      std::pow(4.0 / ((dim + 2.0) * static_cast<double>(n)),
               1.0 / (dim + 4.0));
  return std::max(sigma * factor, floor_h);
}

std::vector<Point> optimize_candidates(const std::vector<Point>& known,
                                       const SamplerConfig& cfg, Rng& rng,
                                       OptimTrace* trace) {
  if (known.empty())
    throw std::invalid_argument("kde: need at least one known action");
  const int dim = static_cast<int>(cfg.bounds.size());
  validate(cfg, dim);
  if (cfg.n_samples == 0) return {};

  auto clip = [&](Point& p) {
    for (int k = 0; k < dim; ++k) {
      const auto [lo, hi] = cfg.bounds[static_cast<std::size_t>(k)];
      p[static_cast<std::size_t>(k)] =
          std::clamp(p[static_cast<std::size_t>(k)], lo, hi);
    }
  };

  KdeModel model;
  model.dim = dim;
  model.centers = known;
  const std::size_t n_known = known.size();
  for (int i = 0; i < cfg.n_samples; ++i) {
    Point p(static_cast<std::size_t>(dim));
    for (int k = 0; k < dim; ++k) {
      const auto [lo, hi] = cfg.bounds[static_cast<std::size_t>(k)];
      p[static_cast<std::size_t>(k)] = rng.uniform(lo, hi);
    }
    model.centers.push_back(std::move(p));
  }
  // bandwidth from the known points only: candidates are optimization
  // variables, not data
  model.bandwidth = silverman_bandwidth(known, cfg);

  const bool grid_mode = dim <= 2;
  McSample mc;
  if (!grid_mode) mc = draw_mc_samples(model, cfg.mc_samples, rng);

  auto eval = [&](const KdeModel& m) {
    return grid_mode ? entropy(m, cfg) : entropy_mc(m, mc);
  };

  double h_cur = eval(model);

  auto record = [&]() {
    if (trace == nullptr) return;
    trace->entropy.push_back(h_cur);
    trace->candidates.emplace_back(model.centers.begin() + n_known,
                                   model.centers.end());
  };
  record();

  std::vector<Point> grads(static_cast<std::size_t>(cfg.n_samples));
  for (int it = 0; it < cfg.iters; ++it) {
    for (int c = 0; c < cfg.n_samples; ++c) {
      const int idx = static_cast<int>(n_known) + c;
      grads[static_cast<std::size_t>(c)] =
          grid_mode ? grad_entropy(model, cfg, idx)
                    : grad_entropy_mc(model, mc, idx);
    }
    if (cfg.line_search) {
      double step = cfg.lr;
      bool accepted = false;
      for (int attempt = 0; attempt <= 5 && !accepted; ++attempt) {
        KdeModel proposal = model;
        for (int c = 0; c < cfg.n_samples; ++c) {
          Point& p = proposal.centers[n_known + static_cast<std::size_t>(c)];
          kernels::axpy(step, grads[static_cast<std::size_t>(c)], p);
          clip(p);
        }
        const double h_new = eval(proposal);
        if (h_new >= h_cur) {
          model = std::move(proposal);
          h_cur = h_new;
          accepted = true;
        } else {
          step *= 0.5;
        }
      }
      // all attempts decreased entropy: skip this iteration's move
    } else {
      for (int c = 0; c < cfg.n_samples; ++c) {
        Point& p = model.centers[n_known + static_cast<std::size_t>(c)];
        kernels::axpy(cfg.lr, grads[static_cast<std::size_t>(c)], p);
        clip(p);
      }
      h_cur = eval(model);
    }
    record();
  }

  return {model.centers.begin() + static_cast<std::ptrdiff_t>(n_known),
          model.centers.end()};
}

}  // namespace cea::kde
