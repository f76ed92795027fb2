#include "cea/replay.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cea::replay {

PerBuffer::PerBuffer(std::size_t capacity, double priority_exponent,
                     double importance_exponent, double prior_eps)
    : capacity_(capacity),
      priority_exponent_(priority_exponent),
      importance_exponent_(importance_exponent),
      prior_eps_(prior_eps) {
  if (capacity == 0) throw std::invalid_argument("replay: zero capacity");
  if (priority_exponent < 0.0)
    throw std::invalid_argument("replay: negative priority exponent");
  if (importance_exponent < 0.0 || importance_exponent > 1.0)
    throw std::invalid_argument("replay: importance exponent outside [0,1]");
  if (!(prior_eps > 0.0))
    throw std::invalid_argument("replay: prior_eps must be positive");
  while (tree_cap_ < capacity) tree_cap_ <<= 1;
  tree_.assign(2 * tree_cap_, 0.0);
  storage_.resize(capacity);
  augmented_.assign(capacity, 0);
}

void PerBuffer::set_importance_exponent(double eta) {
  if (eta < 0.0 || eta > 1.0)
    throw std::invalid_argument("replay: importance exponent outside [0,1]");
  importance_exponent_ = eta;
}

void PerBuffer::set_leaf(std::size_t slot, double value) {
  std::size_t i = tree_cap_ + slot;
  tree_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

std::size_t PerBuffer::find_prefix(double mass) const {
  std::size_t i = 1;
  while (i < tree_cap_) {
    const std::size_t left = 2 * i;
    if (mass < tree_[left]) {
      i = left;
    } else {
      mass -= tree_[left];
      i = left + 1;
    }
  }
  return i - tree_cap_;
}

void PerBuffer::push(Transition t) {
  if (t.s.size() != t.s_next.size())
    throw std::invalid_argument("replay: state dimension mismatch");
  const std::size_t slot = next_;
  if (size_ == capacity_) {
    // evict the oldest occupant of this slot
    if (storage_[slot].provenance == Provenance::Real)
      --real_count_;
    else
      --counterfactual_count_;
  }
  if (t.provenance == Provenance::Real)
    ++real_count_;
  else
    ++counterfactual_count_;
  storage_[slot] = std::move(t);
  augmented_[slot] = 0;
  set_leaf(slot, max_priority_);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch PerBuffer::sample(std::size_t batch, Rng& rng) {
  if (batch == 0) throw std::invalid_argument("replay: empty batch");
  if (size_ < batch)
    throw std::runtime_error("replay: not enough stored transitions");

  Batch out;
  out.transitions.reserve(batch);
  out.indices.reserve(batch);
  out.weights.reserve(batch);

  const double total = tree_[1];
  const double n = static_cast<double>(size_);
  double w_max = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double mass = rng.uniform() * total;
    std::size_t slot = find_prefix(mass);
    if (slot >= size_) slot = size_ - 1;  // guard the total==mass edge
    const double p = tree_[tree_cap_ + slot] / total;
    const double w = std::pow(1.0 / (n * p), importance_exponent_);
    out.transitions.push_back(storage_[slot]);
    out.indices.push_back(slot);
    out.weights.push_back(w);
    w_max = std::max(w_max, w);
  }
  for (double& w : out.weights) w /= w_max;
  return out;
}

void PerBuffer::update_priorities(const std::vector<std::size_t>& indices,
                                  const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size())
    throw std::invalid_argument("replay: indices/errors length mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size_)
      throw std::out_of_range("replay: priority index out of range");
    const double p =
        std::pow(std::fabs(td_errors[i]) + prior_eps_, priority_exponent_);
    set_leaf(indices[i], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

const Transition& PerBuffer::at(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("replay: index out of range");
  return storage_[index];
}

double PerBuffer::priority_at(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("replay: index out of range");
  return tree_[tree_cap_ + index];
}

double PerBuffer::total_priority() const { return tree_[1]; }

std::vector<std::size_t> PerBuffer::unaugmented_real_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size_; ++i)
    if (storage_[i].provenance == Provenance::Real && augmented_[i] == 0)
      out.push_back(i);
  return out;
}

void PerBuffer::mark_augmented(std::size_t index) {
  if (index >= size_) throw std::out_of_range("replay: index out of range");
  augmented_[index] = 1;
}

bool PerBuffer::audit() const {
  for (std::size_t i = 1; i < tree_cap_; ++i) {
    const double children = tree_[2 * i] + tree_[2 * i + 1];
    const double scale = std::max({std::fabs(tree_[i]), std::fabs(children), 1.0});
    if (std::fabs(tree_[i] - children) > 1e-9 * scale) return false;
  }
  return true;
}

void PerBuffer::dump_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("replay: cannot open " + path);
  for (std::size_t i = 0; i < size_; ++i) {
    const Transition& t = storage_[i];
    nlohmann::json j;
    j["s"] = t.s;
    if (t.a.discrete())
      j["a"] = t.a.index;
    else
      j["a"] = t.a.value;
    j["r"] = t.r;
    j["s_next"] = t.s_next;
    j["done"] = t.done;
    j["provenance"] =
        t.provenance == Provenance::Real ? "real" : "counterfactual";
    j["priority"] = priority_at(i);
    out << j.dump() << '\n';
  }
}

}  // namespace cea::replay
