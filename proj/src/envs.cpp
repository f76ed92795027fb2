#include "cea/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cea::envs {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

int require_discrete(const Action& a, int count, const char* env) {
  if (!a.discrete() || a.index >= count)
    throw std::invalid_argument(std::string(env) + ": action outside space");
  return a.index;
}

}  // namespace

// ---------------------------------------------------------------- GridWorld

GridWorld::GridWorld(int width, int height, int treasure_x, int treasure_y,
                     int max_steps)
    : width_(width),
      height_(height),
      tx_(treasure_x),
      ty_(treasure_y),
      max_steps_(max_steps) {
  if (width < 2 || height < 2)
    throw std::invalid_argument("gridworld: degenerate size");
  if (tx_ < 0 || tx_ >= width_ || ty_ < 0 || ty_ >= height_)
    throw std::invalid_argument("gridworld: treasure outside the grid");
}

Vector GridWorld::observe(int x, int y) const {
  return {static_cast<double>(x) / width_, static_cast<double>(y) / height_,
          static_cast<double>(tx_) / width_, static_cast<double>(ty_) / height_};
}

GridWorld::Outcome GridWorld::transition(int x, int y, int action) const {
  int nx = x, ny = y;
  switch (action) {
    case Up: ny = std::max(0, y - 1); break;
    case Down: ny = std::min(height_ - 1, y + 1); break;
    case Left: nx = std::max(0, x - 1); break;
    case Right: nx = std::min(width_ - 1, x + 1); break;
    default: throw std::invalid_argument("gridworld: unknown action");
  }
  const bool treasure = (nx == tx_ && ny == ty_);
  return {nx, ny, treasure ? 1.0 : 0.0, treasure};
}

Vector GridWorld::reset(std::uint64_t /*seed*/) {
  x_ = 0;
  y_ = 0;
  steps_ = 0;
  done_ = false;
  return observe(x_, y_);
}

StepResult GridWorld::step(const Action& a) {
  if (done_) throw std::logic_error("gridworld: episode is done");
  const int action = require_discrete(a, 4, "gridworld");
  const Outcome o = transition(x_, y_, action);
  x_ = o.x;
  y_ = o.y;
  ++steps_;
  done_ = o.done || steps_ >= max_steps_;
  return {observe(x_, y_), o.r, done_};
}

BisimClasses bisimulation_oracle(const GridWorld& env) {
  BisimClasses out;
  const int w = env.width();
  const int h = env.height();
  out.class_of.assign(static_cast<std::size_t>(w) * h * 4, -1);
  std::map<std::tuple<int, int, double>, int> key_to_class;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int a = 0; a < 4; ++a) {
        const GridWorld::Outcome o = env.transition(x, y, a);
        const auto key = std::make_tuple(o.x, o.y, o.r);
        auto [it, inserted] =
            key_to_class.try_emplace(key, out.n_classes);
        if (inserted) {
          ++out.n_classes;
          out.members.emplace_back();
        }
        const std::size_t idx =
            (static_cast<std::size_t>(y) * w + x) * 4 + static_cast<std::size_t>(a);
        out.class_of[idx] = it->second;
        out.members[static_cast<std::size_t>(it->second)].push_back(idx);
      }
    }
  }
  return out;
}

// ------------------------------------------------------------- PendulumEnv

PendulumEnv::PendulumEnv(double g, double mass, double length, double dt,
                         double torque_bound, double speed_bound,
                         int max_steps)
    : g_(g),
      m_(mass),
      l_(length),
      dt_(dt),
      torque_bound_(torque_bound),
      speed_bound_(speed_bound),
      max_steps_(max_steps) {}

Vector PendulumEnv::observe() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

void PendulumEnv::set_state(double theta, double theta_dot) {
  theta_ = wrap_angle(theta);
  theta_dot_ = theta_dot;
  steps_ = 0;
  done_ = false;
}

double PendulumEnv::energy() const {
  const double inertia = m_ * l_ * l_ / 3.0;
  return 0.5 * inertia * theta_dot_ * theta_dot_ +
         m_ * g_ * (l_ / 2.0) * std::cos(theta_);
}

Vector PendulumEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  theta_ = rng_.uniform(-kPi, kPi);
  theta_dot_ = rng_.uniform(-1.0, 1.0);
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult PendulumEnv::step(const Action& a) {
  if (done_) throw std::logic_error("pendulum: episode is done");
  if (a.discrete() || a.value.size() != 1)
    throw std::invalid_argument("pendulum: expected a 1-d torque");
  const double u = std::clamp(a.value[0], -torque_bound_, torque_bound_);

  const double cost =
      theta_ * theta_ + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;

  const double accel = 3.0 * g_ / (2.0 * l_) * std::sin(theta_) +
                       3.0 / (m_ * l_ * l_) * u;
  theta_dot_ = std::clamp(theta_dot_ + accel * dt_, -speed_bound_, speed_bound_);
  theta_ = wrap_angle(theta_ + theta_dot_ * dt_);

  ++steps_;
  done_ = steps_ >= max_steps_;
  return {observe(), -cost, done_};
}

// ------------------------------------------------------------- MiniHighway

MiniHighway::MiniHighway(int lanes, int n_vehicles, double road_length,
                         double v_min, double v_max, double phi, double kappa,
                         int max_steps)
    : lanes_(lanes),
      n_vehicles_(n_vehicles),
      road_length_(road_length),
      v_min_(v_min),
      v_max_(v_max),
      phi_(phi),
      kappa_(kappa),
      max_steps_(max_steps) {
  if (lanes < 2) throw std::invalid_argument("minihighway: need >= 2 lanes");
  if (!(v_min < v_max))
    throw std::invalid_argument("minihighway: v_min must be below v_max");
}

Vector MiniHighway::observe() const {
  Vector obs;
  obs.reserve(static_cast<std::size_t>(obs_dim()));
  obs.push_back((ego_speed_ - v_min_) / (v_max_ - v_min_));

  // nearest first, by wrapped longitudinal distance
  std::vector<std::pair<double, const Car*>> order;
  for (const Car& c : cars_) {
    double d = c.pos - ego_pos_;
    while (d > road_length_ / 2) d -= road_length_;
    while (d < -road_length_ / 2) d += road_length_;
    order.emplace_back(d, &c);
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (std::fabs(a.first) != std::fabs(b.first))
      return std::fabs(a.first) < std::fabs(b.first);
    return a.first < b.first;
  });
  for (const auto& [d, c] : order) {
    obs.push_back(static_cast<double>(c->lane - ego_lane_) / (lanes_ - 1));
    obs.push_back(d / (road_length_ / 2));
    obs.push_back((c->speed - v_min_) / (v_max_ - v_min_));
  }
  return obs;
}

bool MiniHighway::collides() const {
  for (const Car& c : cars_) {
    if (c.lane != ego_lane_) continue;
    double d = std::fabs(c.pos - ego_pos_);
    d = std::min(d, road_length_ - d);
    if (d < collision_gap_) return true;
  }
  return false;
}

Vector MiniHighway::reset(std::uint64_t seed) {
  Rng rng(seed);
  ego_lane_ = lanes_ / 2;
  ego_pos_ = 0.0;
  ego_speed_ = v_min_ + 0.25 * (v_max_ - v_min_);
  cars_.clear();
  for (int i = 0; i < n_vehicles_; ++i) {
    Car c;
    // spawn away from the ego to satisfy the no-overlap constraint
    c.lane = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(lanes_)));
    c.pos = ego_pos_ + rng.uniform(3.0 * collision_gap_,
                                   road_length_ - 3.0 * collision_gap_);
    while (c.pos >= road_length_) c.pos -= road_length_;
    c.speed = rng.uniform(v_min_, v_min_ + 0.5 * (v_max_ - v_min_));
    cars_.push_back(c);
  }
  steps_ = 0;
  done_ = false;
  return observe();
}

StepResult MiniHighway::step(const Action& a) {
  if (done_) throw std::logic_error("minihighway: episode is done");
  const int action = require_discrete(a, 4, "minihighway");
  switch (action) {
    case 0: ego_speed_ = std::min(v_max_, ego_speed_ + accel_); break;
    case 1: ego_speed_ = std::max(v_min_, ego_speed_ - accel_); break;
    case 2: ego_lane_ = std::max(0, ego_lane_ - 1); break;
    case 3: ego_lane_ = std::min(lanes_ - 1, ego_lane_ + 1); break;
    default: break;
  }

  ego_pos_ += ego_speed_;
  while (ego_pos_ >= road_length_) ego_pos_ -= road_length_;
  for (Car& c : cars_) {
    c.pos += c.speed;
    while (c.pos >= road_length_) c.pos -= road_length_;
  }

  const bool crash = collides();
  const double r =
      phi_ * (ego_speed_ - v_min_) / (v_max_ - v_min_) - (crash ? kappa_ : 0.0);
  ++steps_;
  done_ = crash || steps_ >= max_steps_;
  return {observe(), r, done_};
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "gridworld") return std::make_unique<GridWorld>();
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "minihighway") return std::make_unique<MiniHighway>();
  throw std::invalid_argument("unknown environment: " + name);
}

}  // namespace cea::envs
