#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cea/replay.hpp"
#include "cea/rng.hpp"

namespace cea::envs {

using replay::Action;
using Vector = std::vector<double>;

struct StepResult {
  Vector s_next;
  double r = 0.0;
  bool done = false;
};

struct ActionSpace {
  bool discrete = true;
  int count = 0;      // discrete
  int dim = 0;        // continuous
  double low = 0.0;   // continuous, per axis (symmetric boxes only)
  double high = 0.0;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual Vector reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Action& a) = 0;
  virtual int obs_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  virtual int max_steps() const = 0;
  virtual std::string name() const = 0;
};

// Treasure-hunt grid: deterministic moves, reward 1 exactly when the agent
// reaches the treasure cell (which ends the episode), otherwise 0. Moves
// into walls leave the position unchanged. Observation is
// [x/width, y/height, tx/width, ty/height].
class GridWorld final : public Env {
 public:
  enum Move { Up = 0, Down = 1, Left = 2, Right = 3 };

  GridWorld(int width = 6, int height = 6, int treasure_x = 5,
            int treasure_y = 5, int max_steps = 50);

  Vector reset(std::uint64_t seed) override;
  StepResult step(const Action& a) override;
  int obs_dim() const override { return 4; }
  ActionSpace action_space() const override { return {true, 4, 0, 0, 0}; }
  int max_steps() const override { return max_steps_; }
  std::string name() const override { return "gridworld"; }

  int width() const { return width_; }
  int height() const { return height_; }

  struct Outcome {
    int x, y;
    double r;
    bool done;
  };
  // Pure dynamics lookup, independent of episode state.
  Outcome transition(int x, int y, int action) const;
  Vector observe(int x, int y) const;

 private:
  int width_, height_;
  int tx_, ty_;
  int max_steps_;
  int x_ = 0, y_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// Torque-controlled swing-up: state (theta, theta_dot) advanced by
// semi-implicit Euler, theta wrapped to [-pi, pi], theta_dot clipped.
// Observation is [cos(theta), sin(theta), theta_dot]; reward
// -(theta^2 + 0.1*theta_dot^2 + 0.001*u^2). Episodes end at max_steps.
class PendulumEnv final : public Env {
 public:
  PendulumEnv(double g = 10.0, double mass = 1.0, double length = 1.0,
              double dt = 0.05, double torque_bound = 2.0,
              double speed_bound = 8.0, int max_steps = 200);

  Vector reset(std::uint64_t seed) override;
  StepResult step(const Action& a) override;
  int obs_dim() const override { return 3; }
  ActionSpace action_space() const override {
    return {false, 0, 1, -torque_bound_, torque_bound_};
  }
  int max_steps() const override { return max_steps_; }
  std::string name() const override { return "pendulum"; }

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  void set_state(double theta, double theta_dot);
  // Rod energy: 0.5*(m l^2/3) w^2 + m g (l/2) cos(theta), theta = 0 upright.
  double energy() const;

 private:
  Vector observe() const;

  double g_, m_, l_, dt_, torque_bound_, speed_bound_;
  int max_steps_;
  double theta_ = 0.0, theta_dot_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  Rng rng_{0};
};

// Looped multi-lane road with constant-speed ambient vehicles. Actions:
// accelerate, decelerate, lane left, lane right. Per-step reward
// phi*(v - v_min)/(v_max - v_min) - kappa*collision; a collision ends the
// episode. Observation: [v] plus relative (lane, position, speed) of the
// four nearest vehicles, all normalized.
class MiniHighway final : public Env {
 public:
  MiniHighway(int lanes = 3, int n_vehicles = 4, double road_length = 100.0,
              double v_min = 1.0, double v_max = 3.0, double phi = 1.0,
              double kappa = 5.0, int max_steps = 60);

  Vector reset(std::uint64_t seed) override;
  StepResult step(const Action& a) override;
  int obs_dim() const override { return 1 + 3 * n_vehicles_; }
  ActionSpace action_space() const override { return {true, 4, 0, 0, 0}; }
  int max_steps() const override { return max_steps_; }
  std::string name() const override { return "minihighway"; }

  double phi() const { return phi_; }
  double kappa() const { return kappa_; }

 private:
  struct Car {
    int lane;
    double pos;
    double speed;
  };

  Vector observe() const;
  bool collides() const;

  int lanes_, n_vehicles_;
  double road_length_, v_min_, v_max_, phi_, kappa_;
  int max_steps_;
  double accel_ = 0.25;
  double collision_gap_ = 2.0;

  int ego_lane_ = 0;
  double ego_pos_ = 0.0;
  double ego_speed_ = 0.0;
  std::vector<Car> cars_;
  int steps_ = 0;
  bool done_ = true;
};

// (state, action) pairs grouped by exact (successor, reward); pairs in one
// class are behaviorally interchangeable.
struct BisimClasses {
  // class id per (x, y, action), keyed as ((y*width)+x)*4 + action
  std::vector<int> class_of;
  int n_classes = 0;
  std::vector<std::vector<std::size_t>> members;
};
BisimClasses bisimulation_oracle(const GridWorld& env);

std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace cea::envs
