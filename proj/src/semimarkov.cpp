#include "perpetua/semimarkov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

#include "perpetua/error.hpp"

namespace perpetua {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr int kDenseSolveLimit = 200;

std::vector<bool> reachable(const Eigen::MatrixXd &p, bool reverse) {
  const int n = static_cast<int>(p.rows());
  std::vector<bool> seen(n, false);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int k = 0; k < n; ++k) {
      const double w = reverse ? p(k, i) : p(i, k);
      if (w > 0.0 && !seen[k]) {
        seen[k] = true;
        queue.push_back(k);
      }
    }
  }
  return seen;
}

Eigen::VectorXd solve_stationary(const Eigen::MatrixXd &p) {
  const int n = static_cast<int>(p.rows());
  Eigen::VectorXd mu;
  if (n <= kDenseSolveLimit) {
    Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    mu = a.fullPivLu().solve(rhs);
  } else {
    // Lazy chain (I + P) / 2 is aperiodic with the same stationary law.
    mu = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int it = 0; it < 1000000; ++it) {
      Eigen::VectorXd next = 0.5 * (mu + p.transpose() * mu);
      next /= next.sum();
      const double change = (next - mu).cwiseAbs().maxCoeff();
      mu = std::move(next);
      if (change < 1e-15) {
        break;
      }
    }
  }
  mu /= mu.sum();
  const double residual = (p.transpose() * mu - mu).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10) || (mu.array() <= 0.0).any()) {
    fail(ErrorCode::NotIrreducible,
         "stationary solve failed (residual " + std::to_string(residual) + ")");
  }
  return mu;
}

} // namespace

const SojournLaw &SemiMarkovModel::law(int i, int j) const {
  const auto &slot = laws_[static_cast<std::size_t>(i) * n_ + j];
  if (!slot) {
    fail(ErrorCode::MissingSojournLaw,
         "no sojourn law for transition " + std::to_string(i) + " -> " +
             std::to_string(j));
  }
  return *slot;
}

int SemiMarkovModel::sample_initial(RandomStream &rng) const {
  if (initial_cumulative_.empty()) {
    return 0;
  }
  const double u = rng.uniform();
  for (int i = 0; i < n_; ++i) {
    if (u < initial_cumulative_[i]) {
      return i;
    }
  }
  return n_ - 1;
}

namespace {

template <class Edges> int pick_edge(const Edges &edges, double u) {
  for (const auto &e : edges) {
    if (u < e.cumulative) {
      return e.to;
    }
  }
  return edges.back().to;
}

} // namespace

int SemiMarkovModel::sample_successor(int i, RandomStream &rng) const {
  return pick_edge(edges_[i], rng.uniform());
}

SemiMarkovModel::Step SemiMarkovModel::sample_step(int i,
                                                   RandomStream &rng) const {
  const int next = sample_successor(i, rng);
  return {next, laws_[static_cast<std::size_t>(i) * n_ + next]->sample(rng)};
}

int SemiMarkovModel::sample_size_biased_successor(int i,
                                                  RandomStream &rng) const {
  return pick_edge(biased_edges_[i], rng.uniform());
}

SemiMarkovModel validate(ModelSpec spec) {
  const auto &p = spec.transition;
  const int n = static_cast<int>(p.rows());
  if (n < 2 || n > 1000 || p.cols() != n) {
    fail(ErrorCode::InvalidParameter,
         "transition matrix must be square with 2 to 1000 states");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(p(i, j)) || p(i, j) < 0.0 || p(i, j) > 1.0) {
        fail(ErrorCode::InvalidParameter,
             "P[" + std::to_string(i) + "][" + std::to_string(j) +
                 "] is not a probability");
      }
    }
    if (p(i, i) != 0.0) {
      fail(ErrorCode::SelfLoopError,
           "P[" + std::to_string(i) + "][" + std::to_string(i) + "] = " +
               std::to_string(p(i, i)) + " but self-transitions are not allowed");
    }
    const double sum = p.row(i).sum();
    if (std::abs(sum - 1.0) > kRowTolerance) {
      fail(ErrorCode::RowSumError,
           "row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  if (spec.laws.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::MissingSojournLaw, "sojourn table must have one row per state");
  }
  for (int i = 0; i < n; ++i) {
    if (spec.laws[i].size() != static_cast<std::size_t>(n)) {
      fail(ErrorCode::MissingSojournLaw,
           "sojourn table row " + std::to_string(i) + " has wrong length");
    }
    for (int j = 0; j < n; ++j) {
      if (p(i, j) > 0.0 && !spec.laws[i][j]) {
        fail(ErrorCode::MissingSojournLaw,
             "transition " + std::to_string(i) + " -> " + std::to_string(j) +
                 " has positive probability but no sojourn law");
      }
    }
  }
  const auto fwd = reachable(p, false);
  const auto bwd = reachable(p, true);
  for (int i = 0; i < n; ++i) {
    if (!fwd[i] || !bwd[i]) {
      fail(ErrorCode::NotIrreducible,
           "state " + std::to_string(i) + " does not communicate with state 0");
    }
  }

  SemiMarkovModel model;
  model.n_ = n;
  model.p_ = p;
  model.laws_.resize(static_cast<std::size_t>(n) * n);
  model.m_ij_ = Eigen::MatrixXd::Zero(n, n);
  model.m_i_ = Eigen::VectorXd::Zero(n);
  model.edges_.resize(n);
  model.biased_edges_.resize(n);
  for (int i = 0; i < n; ++i) {
    double cum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (p(i, j) > 0.0) {
        model.laws_[static_cast<std::size_t>(i) * n + j] = spec.laws[i][j];
        model.m_ij_(i, j) = spec.laws[i][j]->mean();
        model.m_i_(i) += p(i, j) * model.m_ij_(i, j);
        cum += p(i, j);
        model.edges_[i].push_back({j, cum});
      }
    }
    double bcum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (p(i, j) > 0.0) {
        bcum += p(i, j) * model.m_ij_(i, j) / model.m_i_(i);
        model.biased_edges_[i].push_back({j, bcum});
      }
    }
  }

  if (spec.initial.size() == 0) {
    model.initial_ = Eigen::VectorXd::Zero(n);
    model.initial_(0) = 1.0;
  } else {
    if (spec.initial.size() != n || (spec.initial.array() < 0.0).any() ||
        !spec.initial.allFinite() || std::abs(spec.initial.sum() - 1.0) > 1e-9) {
      fail(ErrorCode::InvalidParameter,
           "initial distribution must be a probability vector over the states");
    }
    model.initial_ = spec.initial;
  }
  double icum = 0.0;
  for (int i = 0; i < n; ++i) {
    icum += model.initial_(i);
    model.initial_cumulative_.push_back(icum);
  }

  model.mu_ = solve_stationary(p);
  model.pi_ = model.mu_.cwiseProduct(model.m_i_);
  model.pi_ /= model.pi_.sum();
  return model;
}

Eigen::VectorXd stationary_embedded(const SemiMarkovModel &model) {
  return model.embedded_stationary();
}

Eigen::VectorXd limiting_pi(const SemiMarkovModel &model) {
  return model.limiting();
}

double mean_cycle_length(const SemiMarkovModel &model, int j) {
  const auto &mu = model.embedded_stationary();
  double total = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    total += mu(k) * model.mean_sojourn(k);
  }
  return total / mu(j);
}

double pi_star_sample(const SemiMarkovModel &model, int j, RandomStream &rng) {
  const int k = model.sample_size_biased_successor(j, rng);
  return model.law(j, k).equilibrium_sample(rng);
}

double pi_star_survival(const SemiMarkovModel &model, int j, double x) {
  double total = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    if (model.has_transition(j, k)) {
      total += model.transition(j, k) * model.law(j, k).integrated_tail(x);
    }
  }
  return total / model.mean_sojourn(j);
}

Trajectory::Trajectory(std::vector<Segment> segments, double horizon)
    : segments_(std::move(segments)), horizon_(horizon) {}

double Trajectory::coverage() const {
  return segments_.empty() ? 0.0 : segments_.back().end();
}

std::size_t Trajectory::jump_count() const {
  return segments_.empty() ? 0 : segments_.size() - 1;
}

std::size_t Trajectory::segment_index(double t) const {
  if (t < 0.0 || t >= coverage()) {
    fail(ErrorCode::OutOfRange,
         "time " + std::to_string(t) + " outside simulated path");
  }
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double v, const Segment &s) { return v < s.start; });
  return static_cast<std::size_t>(it - segments_.begin()) - 1;
}

int Trajectory::state_at(double t) const {
  return segments_[segment_index(t)].state;
}

Trajectory simulate_from(const SemiMarkovModel &model, int start,
                         double horizon, RandomStream &rng) {
  if (!(horizon > 0.0)) {
    fail(ErrorCode::InvalidParameter, "horizon must be positive");
  }
  std::vector<Segment> segments;
  segments.reserve(64);
  double t = 0.0;
  int state = start;
  while (t < horizon) {
    const auto step = model.sample_step(state, rng);
    segments.push_back({state, t, step.duration});
    t += step.duration;
    state = step.next;
  }
  return Trajectory(std::move(segments), horizon);
}

Trajectory simulate(const SemiMarkovModel &model, double horizon,
                    RandomStream &rng) {
  const int start = model.sample_initial(rng);
  return simulate_from(model, start, horizon, rng);
}

Eigen::VectorXd occupation_fractions(const Trajectory &traj, int states,
                                     double t) {
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(states);
  for (const auto &s : traj.segments()) {
    if (s.start >= t) {
      break;
    }
    occ(s.state) += std::min(s.end(), t) - s.start;
  }
  return occ / t;
}

CycleIndex::CycleIndex(int state, std::vector<double> epochs, double coverage)
    : state_(state), epochs_(std::move(epochs)), coverage_(coverage) {}

std::vector<double> CycleIndex::cycle_lengths() const {
  std::vector<double> out;
  for (std::size_t k = 1; k < epochs_.size(); ++k) {
    out.push_back(epochs_[k] - epochs_[k - 1]);
  }
  return out;
}

std::optional<std::size_t> CycleIndex::last_renewal(double t) const {
  auto it = std::upper_bound(epochs_.begin(), epochs_.end(), t);
  if (it == epochs_.begin()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - epochs_.begin()) - 1;
}

CycleIndex cycle_index(const Trajectory &traj, int j) {
  std::vector<double> epochs;
  for (const auto &s : traj.segments()) {
    if (s.state == j) {
      epochs.push_back(s.start);
    }
  }
  if (epochs.empty()) {
    fail(ErrorCode::NeverHits,
         "state " + std::to_string(j) + " is never visited on the path");
  }
  return CycleIndex(j, std::move(epochs), traj.coverage());
}

Residuals residual_times(const CycleIndex &ci, double t) {
  const auto g = ci.last_renewal(t);
  if (!g) {
    fail(ErrorCode::OutOfRange, "time precedes the first hit");
  }
  if (*g + 1 >= ci.epochs().size()) {
    fail(ErrorCode::OutOfRange, "path does not cover the cycle containing t");
  }
  return {t - ci.epochs()[*g], ci.epochs()[*g + 1] - t};
}

} // namespace perpetua
