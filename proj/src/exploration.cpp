#include "bsad/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsad {

double exploration_bonus(int horizon, double iota, std::int64_t t) {
  return std::sqrt(horizon * iota / static_cast<double>(std::max<std::int64_t>(t, 1)));
}

double target_weight(int horizon, double iota, std::int64_t count) {
  return std::min(1.0, exploration_bonus(horizon, iota, count));
}

double iota(int num_states, int num_actions, int horizon, double c, double delta, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("iota: episode counter must be at least 1");
  const double arg = static_cast<double>(num_states) * num_actions * horizon * static_cast<double>(k) / delta;
  return std::max(0.0, c * std::log(arg));
}

double iota(const ExplorationState& state, std::int64_t k) {
  return iota(state.num_states, state.num_actions, state.horizon, state.c, state.delta, k);
}

ExplorationState::ExplorationState(int num_states, int num_actions, int horizon, double c, double delta)
    : num_states(num_states), num_actions(num_actions), horizon(horizon), c(c), delta(delta) {
  if (num_states < 1 || num_actions < 1 || horizon < 1) throw std::invalid_argument("S, A, H must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  reset();
}

void ExplorationState::reset() {
  J.assign(static_cast<std::size_t>(horizon), Eigen::MatrixXd::Ones(num_states, num_actions));
  L.assign(static_cast<std::size_t>(horizon), Eigen::MatrixXi::Zero(num_states, num_actions));
  W = Eigen::MatrixXd::Ones(horizon, num_states);
  k = 0;
}

int explore_episode(const EpisodicMdp& mdp, ExplorationState& state, int target_step, Rng& rng,
                    std::optional<int> initial_state, ExplorationTrace* trace) {
  if (!mdp.valid_step(target_step)) throw std::invalid_argument("explore_episode: target step out of range");
  if (state.k < 1) throw std::invalid_argument("explore_episode: episode counter not incremented");
  const double bonus_scale = iota(state, state.k);
  const int H = mdp.horizon();

  if (initial_state && !mdp.valid_state(*initial_state)) throw std::invalid_argument("explore_episode: bad initial state");
  int s = initial_state ? *initial_state : sample_categorical(mdp.initial_dist(), rng);
  if (trace) trace->states.push_back(s);
  std::vector<int> ties;
  for (int h = 0; h < target_step; ++h) {
    auto& J = state.J[static_cast<std::size_t>(h)];
    const int n = mdp.actions_at(h, s);
    ties.clear();
    double best = -1.0;
    for (int a = 0; a < n; ++a) {
      if (J(s, a) > best) {
        best = J(s, a);
        ties.assign(1, a);
      } else if (J(s, a) == best) {
        ties.push_back(a);
      }
    }
    const int a = ties.size() == 1 ? ties.front() : ties[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(ties.size())))];
    const int next = sample_categorical(mdp.transition(h, s, a), rng);
    const std::int64_t t = ++state.L[static_cast<std::size_t>(h)](s, a);

    if (h + 1 < target_step) {
      const int n_next = mdp.actions_at(h + 1, next);
      state.W(h + 1, next) = std::min(1.0, state.J[static_cast<std::size_t>(h + 1)].row(next).head(n_next).maxCoeff());
    }
    const double w = state.W(h + 1, next);
    const double alpha = learning_rate(t, H);
    const double beta = exploration_bonus(H, bonus_scale, t);
    J(s, a) = (1.0 - alpha) * J(s, a) + alpha * (w + 2.0 * beta);

    if (trace) {
      trace->states.push_back(next);
      trace->updates.push_back({h, s, a, t, w, beta, J(s, a)});
    }
    s = next;
  }
  return s;
}

double target_update(ExplorationState& state, Eigen::MatrixXi& target_visits, int step, int s) {
  const std::int64_t count = ++target_visits(step, s);
  const double w = target_weight(state.horizon, iota(state, std::max<std::int64_t>(state.k, 1)), count);
  state.W(step, s) = w;
  return w;
}

double alpha_weight(std::int64_t t, std::int64_t i, int horizon) {
  if (i < 0 || t < 0 || i > t) throw std::invalid_argument("alpha_weight: need 0 <= i <= t");
  double w = i == 0 ? 1.0 : learning_rate(i, horizon);
  for (std::int64_t j = i + 1; j <= t; ++j) w *= 1.0 - learning_rate(j, horizon);
  return w;
}

std::vector<double> alpha_weight_column(std::int64_t i, std::int64_t last, int horizon) {
  if (i < 0 || last < i) throw std::invalid_argument("alpha_weight_column: need 0 <= i <= last");
  std::vector<double> column;
  column.reserve(static_cast<std::size_t>(last - i + 1));
  double w = i == 0 ? 1.0 : learning_rate(i, horizon);
  column.push_back(w);
  for (std::int64_t t = i + 1; t <= last; ++t) {
    w *= 1.0 - learning_rate(t, horizon);
    column.push_back(w);
  }
  return column;
}

std::vector<double> alpha_weight_row(std::int64_t t, int horizon) {
  if (t < 0) throw std::invalid_argument("alpha_weight_row: need t >= 0");
  std::vector<double> row(static_cast<std::size_t>(t + 1));
  double tail = 1.0;  // prod_{j = i + 1}^{t} (1 - alpha_j)
  for (std::int64_t i = t; i >= 1; --i) {
    row[static_cast<std::size_t>(i)] = learning_rate(i, horizon) * tail;
    tail *= 1.0 - learning_rate(i, horizon);
  }
  row[0] = tail;
  return row;
}

void write_exploration_snapshot(std::ostream& out, const ExplorationState& state, std::int64_t episode,
                                bool header) {
  if (header) out << "episode,h,s,a,J,L\n";
  for (int h = 0; h < state.horizon; ++h) {
    for (int s = 0; s < state.num_states; ++s) {
      for (int a = 0; a < state.num_actions; ++a) {
        out << episode << ',' << h << ',' << s << ',' << a << ',' << state.J[static_cast<std::size_t>(h)](s, a) << ','
            << state.L[static_cast<std::size_t>(h)](s, a) << '\n';
      }
    }
  }
}

}  // namespace bsad
