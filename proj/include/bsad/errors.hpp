#pragma once

#include <stdexcept>
#include <string>

namespace bsad {

/// An enumeration or convolution oracle was asked to handle more than its size guard.
class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No single deterministic policy is optimal at every (step, state).
class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(int step, int state, const std::string& what)
      : std::runtime_error(what), step_(step), state_(state) {}
  int step() const { return step_; }
  int state() const { return state_; }

 private:
  int step_;
  int state_;
};

/// A policy entry needed to evaluate or roll out a trajectory was never set.
class UnsetPolicyEntry : public std::runtime_error {
 public:
  UnsetPolicyEntry(int step, int state)
      : std::runtime_error("policy entry unset at step " + std::to_string(step) + ", state " +
                           std::to_string(state)),
        step_(step),
        state_(state) {}
  int step() const { return step_; }
  int state() const { return state_; }

 private:
  int step_;
  int state_;
};

class UnsupportedInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsad
