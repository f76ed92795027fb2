#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cea/kde.hpp"
#include "cea/rng.hpp"

using namespace cea;
using kde::GradientMode;
using kde::KdeModel;
using kde::Point;
using kde::SamplerConfig;

namespace {

SamplerConfig cfg_1d(double lo = -8.0, double hi = 8.0, int m = 512) {
  SamplerConfig cfg;
  cfg.bounds = {{lo, hi}};
  cfg.grid_m = m;
  return cfg;
}

// high-resolution trapezoid integration of the density itself
double integrate_density(const KdeModel& model, double lo, double hi, int m) {
  const double dx = (hi - lo) / m;
  double acc = 0.0;
  for (int j = 0; j <= m; ++j) {
    const double x = lo + j * dx;
    const double w = (j == 0 || j == m) ? dx / 2 : dx;
    acc += w * kde::density(model, std::vector<double>{x});
  }
  return acc;
}

}  // namespace

TEST_CASE("density: standard normal value at the mode") {
  KdeModel m{{Point{0.0}}, 1.0, 1};
  CHECK(kde::density(m, Point{0.0}) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-12));

  // two coincident centers average to the same density
  KdeModel two{{Point{0.0}, Point{0.0}}, 1.0, 1};
  CHECK(kde::density(two, Point{0.3}) ==
        doctest::Approx(kde::density(m, Point{0.3})).epsilon(1e-12));

  KdeModel bad{{Point{0.0}}, -1.0, 1};
  CHECK_THROWS_AS(kde::density(bad, Point{0.0}), std::invalid_argument);
}

TEST_CASE("density: integrates to one over a wide grid") {
  Rng rng(21);
  for (int round = 0; round < 5; ++round) {
    KdeModel m;
    m.dim = 1;
    m.bandwidth = rng.uniform(0.3, 1.5);
    const int n = 1 + static_cast<int>(rng.uniform_index(6));
    for (int i = 0; i < n; ++i) m.centers.push_back({rng.uniform(-3, 3)});
    const double mass = integrate_density(m, -3 - 10 * m.bandwidth,
                                          3 + 10 * m.bandwidth, 20000);
    CHECK(std::fabs(mass - 1.0) < 1e-3);
  }
}

TEST_CASE("density: translation equivariance") {
  Rng rng(22);
  for (int round = 0; round < 20; ++round) {
    KdeModel m;
    m.dim = 1;
    m.bandwidth = rng.uniform(0.2, 2.0);
    for (int i = 0; i < 4; ++i) m.centers.push_back({rng.uniform(-2, 2)});
    const double c = rng.uniform(-5, 5);
    const double x = rng.uniform(-2, 2);
    KdeModel shifted = m;
    for (Point& p : shifted.centers) p[0] += c;
    CHECK(kde::density(m, Point{x}) ==
          doctest::Approx(kde::density(shifted, Point{x + c})).epsilon(1e-10));
  }
}

TEST_CASE("entropy: single unit-bandwidth kernel is the Gaussian value") {
  // 0.5 * log(2*pi*e)
  KdeModel m{{Point{0.0}}, 1.0, 1};
  CHECK(kde::entropy(m, cfg_1d()) ==
        doctest::Approx(1.4189385332046727).epsilon(1e-6));
}

TEST_CASE("entropy: translation invariant on a recentred grid") {
  KdeModel m{{Point{-1.0}, Point{1.0}}, 0.7, 1};
  const double h0 = kde::entropy(m, cfg_1d(-9, 9, 600));
  KdeModel shifted{{Point{1.0}, Point{3.0}}, 0.7, 1};
  const double h1 = kde::entropy(shifted, cfg_1d(-7, 11, 600));
  CHECK(h0 == doctest::Approx(h1).epsilon(1e-9));
}

TEST_CASE("entropy: spreading two centers strictly increases it") {
  KdeModel tight{{Point{0.0}, Point{0.0}}, 1.0, 1};
  KdeModel spread{{Point{0.0}, Point{10.0}}, 1.0, 1};
  const SamplerConfig cfg = cfg_1d(-15, 25, 2000);
  CHECK(kde::entropy(spread, cfg) > kde::entropy(tight, cfg));
}

TEST_CASE("entropy: grid too coarse is rejected") {
  KdeModel m{{Point{0.0}}, 1.0, 1};
  SamplerConfig cfg = cfg_1d();
  cfg.grid_m = 4;
  CHECK_THROWS_AS(kde::entropy(m, cfg), std::invalid_argument);
}

TEST_CASE("grad_entropy: exact mode matches finite differences, dims 1 and 2") {
  Rng rng(23);
  int checked = 0;
  for (int round = 0; round < 60; ++round) {
    const int dim = round % 2 == 0 ? 1 : 2;
    KdeModel m;
    m.dim = dim;
    m.bandwidth = rng.uniform(0.4, 1.5);
    const int n = 2 + static_cast<int>(rng.uniform_index(4));
    for (int i = 0; i < n; ++i) {
      Point p(static_cast<std::size_t>(dim));
      for (double& x : p) x = rng.uniform(-2, 2);
      m.centers.push_back(std::move(p));
    }
    SamplerConfig cfg;
    cfg.bounds.assign(static_cast<std::size_t>(dim), {-6.0, 6.0});
    cfg.grid_m = dim == 1 ? 400 : 96;

    const int which = static_cast<int>(rng.uniform_index(m.centers.size()));
    const Point grad = kde::grad_entropy(m, cfg, which);
    for (int k = 0; k < dim; ++k) {
      const double eps = 1e-6;
      KdeModel up = m, down = m;
      up.centers[static_cast<std::size_t>(which)][static_cast<std::size_t>(k)] += eps;
      down.centers[static_cast<std::size_t>(which)][static_cast<std::size_t>(k)] -= eps;
      const double fd =
          (kde::entropy(up, cfg) - kde::entropy(down, cfg)) / (2 * eps);
      const double an = grad[static_cast<std::size_t>(k)];
      const double scale = std::max({std::fabs(fd), std::fabs(an), 1e-8});
      CHECK(std::fabs(fd - an) / scale < 1e-4);
      ++checked;
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("grad_entropy: pushes a candidate away from a lone center") {
  const double h = 1.0;
  SamplerConfig cfg = cfg_1d(-8, 8, 800);
  // exactly on the center: symmetric grid, gradient vanishes
  KdeModel at{{Point{0.0}, Point{0.0}}, h, 1};
  CHECK(std::fabs(kde::grad_entropy(at, cfg, 1)[0]) < 1e-9);
  // half a bandwidth to the right: pushed further right
  KdeModel right{{Point{0.0}, Point{h / 2}}, h, 1};
  CHECK(kde::grad_entropy(right, cfg, 1)[0] > 1e-4);
  // and mirrored on the left
  KdeModel left{{Point{0.0}, Point{-h / 2}}, h, 1};
  CHECK(kde::grad_entropy(left, cfg, 1)[0] < -1e-4);
  CHECK(kde::grad_entropy(left, cfg, 1)[0] ==
        doctest::Approx(-kde::grad_entropy(right, cfg, 1)[0]).epsilon(1e-9));

  CHECK_THROWS_AS(kde::grad_entropy(at, cfg, 5), std::out_of_range);
}

TEST_CASE("grad_entropy: printed closed form differs from the exact one") {
  // The decomposed-log expression is not the derivative of the quadrature
  // entropy; keep it available but don't expect agreement.
  KdeModel m{{Point{0.0}, Point{0.8}}, 0.9, 1};
  SamplerConfig exact = cfg_1d(-6, 6, 400);
  SamplerConfig printed = exact;
  printed.gradient_mode = GradientMode::Paper;
  const double g_exact = kde::grad_entropy(m, exact, 1)[0];
  const double g_printed = kde::grad_entropy(m, printed, 1)[0];
  CHECK(std::isfinite(g_printed));
  CHECK(g_exact != doctest::Approx(g_printed).epsilon(1e-3));
}

TEST_CASE("entropy_mc: matches the analytic value for one 3-d kernel") {
  KdeModel m{{Point{0.0, 0.0, 0.0}}, 0.8, 3};
  Rng rng(24);
  const kde::McSample samples = kde::draw_mc_samples(m, 20000, rng);
  const double analytic = 3.0 * 0.5 * std::log(2 * M_PI * M_E * 0.64);
  CHECK(kde::entropy_mc(m, samples) == doctest::Approx(analytic).epsilon(0.02));
}

TEST_CASE("grad_entropy_mc: matches finite differences of the frozen objective") {
  KdeModel m{{Point{0.0, 0.0, 0.0}, Point{0.5, -0.2, 0.1}}, 0.7, 3};
  Rng rng(25);
  const kde::McSample samples = kde::draw_mc_samples(m, 3000, rng);
  const Point grad = kde::grad_entropy_mc(m, samples, 1);
  for (int k = 0; k < 3; ++k) {
    const double eps = 1e-6;
    KdeModel up = m, down = m;
    up.centers[1][static_cast<std::size_t>(k)] += eps;
    down.centers[1][static_cast<std::size_t>(k)] -= eps;
    const double fd =
        (kde::entropy_mc(up, samples) - kde::entropy_mc(down, samples)) /
        (2 * eps);
    CHECK(grad[static_cast<std::size_t>(k)] ==
          doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("optimize_candidates: spreads three points into empty space") {
  int entropy_up = 0, spacing_ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SamplerConfig cfg;
    cfg.n_samples = 3;
    cfg.bounds = {{-4.0, 4.0}};
    Rng rng(seed);
    kde::OptimTrace trace;
    const std::vector<Point> out =
        kde::optimize_candidates({Point{0.0}}, cfg, rng, &trace);
    REQUIRE(out.size() == 3);
    const double h = kde::silverman_bandwidth({Point{0.0}}, cfg);
    if (trace.entropy.back() > trace.entropy.front()) ++entropy_up;

    std::vector<Point> all = {Point{0.0}};
    all.insert(all.end(), out.begin(), out.end());
    double mind = 1e18;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j)
        mind = std::min(mind, std::fabs(all[i][0] - all[j][0]));
    if (mind >= h) ++spacing_ok;

    for (const Point& p : out) {
      CHECK(p[0] >= -4.0);
      CHECK(p[0] <= 4.0);
    }
    // accepted steps never decreased the objective
    for (std::size_t i = 1; i < trace.entropy.size(); ++i)
      CHECK(trace.entropy[i] >= trace.entropy[i - 1]);
  }
  CHECK(entropy_up >= 9);
  CHECK(spacing_ok >= 9);
}

TEST_CASE("optimize_candidates: zero samples is a no-op") {
  SamplerConfig cfg;
  cfg.n_samples = 0;
  cfg.bounds = {{-1.0, 1.0}};
  Rng rng(1);
  CHECK(kde::optimize_candidates({Point{0.0}}, cfg, rng).empty());
}

TEST_CASE("enumerate_discrete_counterfactuals") {
  CHECK(kde::enumerate_discrete_counterfactuals(1, 4) ==
        std::vector<int>{0, 2, 3});
  CHECK(kde::enumerate_discrete_counterfactuals(0, 2) == std::vector<int>{1});
  CHECK(kde::enumerate_discrete_counterfactuals(0, 1).empty());
  CHECK_THROWS_AS(kde::enumerate_discrete_counterfactuals(4, 4),
                  std::out_of_range);
}

TEST_CASE("silverman_bandwidth: floor applies to degenerate point sets") {
  SamplerConfig cfg;
  cfg.bounds = {{-4.0, 4.0}};
  CHECK(kde::silverman_bandwidth({Point{0.0}}, cfg) == doctest::Approx(0.8));
  // a spread sample produces a data-driven width above the floor
  std::vector<Point> pts;
  for (double x = -3; x <= 3; x += 0.5) pts.push_back({x});
  CHECK(kde::silverman_bandwidth(pts, cfg) > 0.8);
}
