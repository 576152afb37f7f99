#pragma once

#include <utility>

#include <Eigen/Core>

namespace bsad {

class EpisodicMdp;

/// pi_h(s) for every (step, state). Entries start unset and are filled during the
/// backward search.
class DeterministicPolicy {
 public:
  static constexpr int kUnset = -1;

  DeterministicPolicy() = default;
  DeterministicPolicy(int horizon, int num_states)
      : table_(Eigen::MatrixXi::Constant(horizon, num_states, kUnset)) {}
  explicit DeterministicPolicy(Eigen::MatrixXi table) : table_(std::move(table)) {}

  int horizon() const { return static_cast<int>(table_.rows()); }
  int num_states() const { return static_cast<int>(table_.cols()); }

  int operator()(int step, int state) const { return table_(step, state); }
  bool is_set(int step, int state) const { return table_(step, state) != kUnset; }
  void set(int step, int state, int action) { table_(step, state) = action; }
  void unset(int step, int state) { table_(step, state) = kUnset; }

  bool complete() const { return (table_.array() != kUnset).all(); }

  /// Copy with every unset entry replaced by min(fill, actions_at(h, s) - 1).
  DeterministicPolicy completed(const EpisodicMdp& mdp, int fill = 0) const;

  /// Throws std::invalid_argument if a set entry is not an available action.
  void validate(const EpisodicMdp& mdp) const;

  const Eigen::MatrixXi& table() const { return table_; }

  bool operator==(const DeterministicPolicy& other) const {
    return table_.rows() == other.table_.rows() && table_.cols() == other.table_.cols() &&
           table_ == other.table_;
  }

 private:
  Eigen::MatrixXi table_;
};

}  // namespace bsad
