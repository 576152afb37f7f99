#include "bsad/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bsad {
namespace {

void check_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& where) {
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row(i)) || row(i) < 0.0) {
      std::ostringstream os;
      os << where << " has invalid entry " << row(i) << " at index " << i;
      throw std::invalid_argument(os.str());
    }
  }
  const double total = row.sum();
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << where << " sums to " << total << ", expected 1";
    throw std::invalid_argument(os.str());
  }
}

std::string row_name(int h, int s, int a) {
  return "transitions[" + std::to_string(h) + "][" + std::to_string(s) + "][" + std::to_string(a) + "]";
}

}  // namespace

EpisodicMdp::EpisodicMdp(int num_states, int num_actions, int horizon, std::vector<Eigen::MatrixXd> kernels,
                         Eigen::VectorXd initial_dist, Eigen::MatrixXi available_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      kernels_(std::move(kernels)),
      initial_dist_(std::move(initial_dist)),
      available_(std::move(available_actions)) {
  if (num_states_ < 1 || num_actions_ < 1 || horizon_ < 1) {
    throw std::invalid_argument("EpisodicMdp: S, A and H must all be at least 1");
  }
  if (static_cast<int>(kernels_.size()) != horizon_ - 1) {
    throw std::invalid_argument("EpisodicMdp: expected H-1 = " + std::to_string(horizon_ - 1) +
                                " transition kernels, got " + std::to_string(kernels_.size()));
  }
  for (int h = 0; h + 1 < horizon_; ++h) {
    const auto& k = kernels_[h];
    if (k.rows() != num_states_ * num_actions_ || k.cols() != num_states_) {
      throw std::invalid_argument("EpisodicMdp: kernel " + std::to_string(h) + " must be (S*A) x S");
    }
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_actions_; ++a) check_distribution(k.row(s * num_actions_ + a), row_name(h, s, a));
    }
  }
  if (initial_dist_.size() != num_states_) throw std::invalid_argument("EpisodicMdp: initial_dist must have S entries");
  check_distribution(initial_dist_.transpose(), "initial_dist");

  if (available_.size() == 0) {
    available_ = Eigen::MatrixXi::Constant(horizon_, num_states_, num_actions_);
  }
  if (available_.rows() != horizon_ || available_.cols() != num_states_) {
    throw std::invalid_argument("EpisodicMdp: available action table must be H x S");
  }
  for (int h = 0; h < horizon_; ++h) {
    for (int s = 0; s < num_states_; ++s) {
      if (available_(h, s) < 1 || available_(h, s) > num_actions_) {
        throw std::invalid_argument("EpisodicMdp: actions[" + std::to_string(h) + "][" + std::to_string(s) +
                                    "] must lie in 1..A");
      }
    }
  }
}

DiscountedMdp::DiscountedMdp(int num_states, int num_actions, double gamma, Eigen::MatrixXd kernel,
                             Eigen::MatrixXd reward, Eigen::VectorXd initial_dist)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      kernel_(std::move(kernel)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)) {
  if (num_states_ < 1 || num_actions_ < 1) throw std::invalid_argument("DiscountedMdp: S and A must be at least 1");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw std::invalid_argument("DiscountedMdp: gamma must lie in (0, 1)");
  if (kernel_.rows() != num_states_ * num_actions_ || kernel_.cols() != num_states_) {
    throw std::invalid_argument("DiscountedMdp: kernel must be (S*A) x S");
  }
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      check_distribution(kernel_.row(s * num_actions_ + a),
                         "transitions[" + std::to_string(s) + "][" + std::to_string(a) + "]");
    }
  }
  if (reward_.rows() != num_states_ || reward_.cols() != num_actions_) {
    throw std::invalid_argument("DiscountedMdp: reward must be S x A");
  }
  if ((reward_.array() < 0.0).any() || (reward_.array() > 1.0).any() || !reward_.allFinite()) {
    throw std::invalid_argument("DiscountedMdp: rewards must lie in [0, 1]");
  }
  if (initial_dist_.size() != num_states_) throw std::invalid_argument("DiscountedMdp: initial_dist must have S entries");
  check_distribution(initial_dist_.transpose(), "initial_dist");
}

}  // namespace bsad
