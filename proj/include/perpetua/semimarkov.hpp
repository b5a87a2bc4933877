#ifndef PERPETUA_SEMIMARKOV_HPP
#define PERPETUA_SEMIMARKOV_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "perpetua/distributions.hpp"
#include "perpetua/rng.hpp"

namespace perpetua {

/// Raw model description. laws[i][j] must be set wherever transition(i, j) > 0.
/// An empty initial vector means "start in state 0".
struct ModelSpec {
  Eigen::MatrixXd transition;
  std::vector<std::vector<std::optional<SojournLaw>>> laws;
  Eigen::VectorXd initial;
};

/// A validated semi-Markov environment: finite state space, embedded chain
/// without self-loops, irreducible, every used sojourn law with finite mean.
/// Immutable after construction and cheap to share between threads.
class SemiMarkovModel {
public:
  struct Step {
    int next;
    double duration;
  };

  int size() const { return n_; }
  double transition(int i, int j) const { return p_(i, j); }
  const Eigen::MatrixXd &transition_matrix() const { return p_; }
  const SojournLaw &law(int i, int j) const;
  bool has_transition(int i, int j) const { return p_(i, j) > 0.0; }
  const Eigen::VectorXd &initial() const { return initial_; }

  /// m_ij, the mean sojourn in i before jumping to j (0 when P_ij = 0).
  double mean_sojourn(int i, int j) const { return m_ij_(i, j); }
  /// m_i = sum_j P_ij m_ij.
  double mean_sojourn(int i) const { return m_i_(i); }

  const Eigen::VectorXd &embedded_stationary() const { return mu_; }
  const Eigen::VectorXd &limiting() const { return pi_; }

  int sample_initial(RandomStream &rng) const;
  int sample_successor(int i, RandomStream &rng) const;
  /// Successor and the sojourn in i that precedes the jump to it.
  Step sample_step(int i, RandomStream &rng) const;
  /// Successor drawn proportionally to P_ik m_ik.
  int sample_size_biased_successor(int i, RandomStream &rng) const;

private:
  friend SemiMarkovModel validate(ModelSpec spec);

  struct Edge {
    int to;
    double cumulative;
  };

  SemiMarkovModel() = default;

  int n_ = 0;
  Eigen::MatrixXd p_;
  std::vector<std::optional<SojournLaw>> laws_;
  Eigen::VectorXd initial_;
  Eigen::MatrixXd m_ij_;
  Eigen::VectorXd m_i_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd pi_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<std::vector<Edge>> biased_edges_;
  std::vector<double> initial_cumulative_;
};

SemiMarkovModel validate(ModelSpec spec);

Eigen::VectorXd stationary_embedded(const SemiMarkovModel &model);
Eigen::VectorXd limiting_pi(const SemiMarkovModel &model);
/// Expected length of a renewal cycle between successive entries to j.
double mean_cycle_length(const SemiMarkovModel &model, int j);
/// Draw from the size-biased averaged sojourn law of state j.
double pi_star_sample(const SemiMarkovModel &model, int j, RandomStream &rng);
double pi_star_survival(const SemiMarkovModel &model, int j, double x);

struct Segment {
  int state;
  double start;
  double duration;

  double end() const { return start + duration; }
};

/// A realised path of the environment as consecutive constant segments.
/// The last segment may extend past the horizon.
class Trajectory {
public:
  Trajectory(std::vector<Segment> segments, double horizon);

  const std::vector<Segment> &segments() const { return segments_; }
  double horizon() const { return horizon_; }
  /// End of the last segment; the path is known on [0, coverage()).
  double coverage() const;
  std::size_t jump_count() const;
  int state_at(double t) const;
  /// Index of the segment containing t.
  std::size_t segment_index(double t) const;

private:
  std::vector<Segment> segments_;
  double horizon_;
};

Trajectory simulate(const SemiMarkovModel &model, double horizon,
                    RandomStream &rng);
Trajectory simulate_from(const SemiMarkovModel &model, int start,
                         double horizon, RandomStream &rng);

/// Time spent in each state over [0, t] divided by t.
Eigen::VectorXd occupation_fractions(const Trajectory &traj, int states,
                                     double t);

/// Runs one renewal cycle of the environment started in j, calling
/// visit(state, duration) for every sojourn until the chain re-enters j.
template <class Visitor>
void simulate_cycle(const SemiMarkovModel &model, int j, RandomStream &rng,
                    Visitor &&visit) {
  int state = j;
  do {
    const auto step = model.sample_step(state, rng);
    visit(state, step.duration);
    state = step.next;
  } while (state != j);
}

/// Entry epochs of a fixed state along a trajectory.
class CycleIndex {
public:
  CycleIndex(int state, std::vector<double> epochs, double coverage);

  int state() const { return state_; }
  const std::vector<double> &epochs() const { return epochs_; }
  double first_hit() const { return epochs_.front(); }
  std::size_t complete_cycles() const { return epochs_.size() - 1; }
  std::vector<double> cycle_lengths() const;
  /// Largest k with tau_k <= t, or nothing when t precedes the first hit.
  std::optional<std::size_t> last_renewal(double t) const;
  double coverage() const { return coverage_; }

private:
  int state_;
  std::vector<double> epochs_;
  double coverage_;
};

CycleIndex cycle_index(const Trajectory &traj, int j);

struct Residuals {
  double backward;
  double forward;
};

Residuals residual_times(const CycleIndex &ci, double t);

} // namespace perpetua

#endif // PERPETUA_SEMIMARKOV_HPP
