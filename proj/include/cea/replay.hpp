#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cea/rng.hpp"

namespace cea::replay {

using Vector = std::vector<double>;

enum class Provenance : std::uint8_t { Real = 0, Counterfactual = 1 };

// Discrete actions carry an index >= 0; continuous actions carry a value
// vector and index -1.
struct Action {
  int index = -1;
  Vector value;

  bool discrete() const { return index >= 0; }
  static Action make_discrete(int i) { return {i, {}}; }
  static Action make_continuous(Vector v) { return {-1, std::move(v)}; }
};

struct Transition {
  Vector s;
  Action a;
  double r = 0.0;
  Vector s_next;
  bool done = false;
  Provenance provenance = Provenance::Real;
};

struct Batch {
  std::vector<Transition> transitions;
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // importance weights, normalized by batch max
};

// Capacity-bounded ring of transitions with proportional prioritized
// sampling over a sum tree:
//   P_i = p_i^delta / sum_k p_k^delta,  w_i = (1/(N*P_i))^eta
// where p_i = |td_i| + prior_eps and N is the stored count. New transitions
// enter at the running maximum priority so they are sampled at least once
// before their TD error is known.
class PerBuffer {
 public:
  PerBuffer(std::size_t capacity, double priority_exponent,
            double importance_exponent, double prior_eps);

  void push(Transition t);
  Batch sample(std::size_t batch, Rng& rng);
  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  double fill_fraction() const {
    return static_cast<double>(size_) / static_cast<double>(capacity_);
  }

  // exact provenance tallies (real, counterfactual)
  std::pair<std::size_t, std::size_t> counts() const {
    return {real_count_, counterfactual_count_};
  }

  const Transition& at(std::size_t index) const;
  double priority_at(std::size_t index) const;  // stored p_i^delta
  double total_priority() const;

  double importance_exponent() const { return importance_exponent_; }
  void set_importance_exponent(double eta);
  double priority_exponent() const { return priority_exponent_; }

  // Augmentation bookkeeping: real transitions not yet used as a source of
  // counterfactuals.
  std::vector<std::size_t> unaugmented_real_indices() const;
  void mark_augmented(std::size_t index);

  // Recomputes internal sums bottom-up and checks every node against its
  // children; false means the tree is corrupt.
  bool audit() const;

  // One JSON object per line: s, a, r, s_next, done, provenance, priority.
  void dump_jsonl(const std::string& path) const;

 private:
  void set_leaf(std::size_t slot, double value);
  std::size_t find_prefix(double mass) const;

  std::size_t capacity_;
  double priority_exponent_;
  double importance_exponent_;
  double prior_eps_;
  double max_priority_ = 1.0;  // exponentiated scale

  std::vector<Transition> storage_;
  std::vector<std::uint8_t> augmented_;
  std::vector<double> tree_;  // 1-based heap layout, leaves at [cap, 2*cap)
  std::size_t tree_cap_ = 1;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::size_t real_count_ = 0;
  std::size_t counterfactual_count_ = 0;
};

}  // namespace cea::replay
