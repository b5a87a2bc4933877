#ifndef PERPETUA_TESTS_FIXTURES_HPP
#define PERPETUA_TESTS_FIXTURES_HPP

#include <cmath>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "perpetua/distributions.hpp"
#include "perpetua/error.hpp"
#include "perpetua/perpetuity.hpp"
#include "perpetua/semimarkov.hpp"
#include "perpetua/stats.hpp"

namespace fixtures {

using perpetua::SojournLaw;

struct Edge {
  int from;
  int to;
  SojournLaw law;
};

inline perpetua::SemiMarkovModel model(const Eigen::MatrixXd &p,
                                       const std::vector<Edge> &edges,
                                       Eigen::VectorXd initial = {}) {
  perpetua::ModelSpec spec;
  const int n = static_cast<int>(p.rows());
  spec.transition = p;
  spec.laws.assign(n, std::vector<std::optional<SojournLaw>>(n));
  for (const auto &e : edges) {
    spec.laws[e.from][e.to] = e.law;
  }
  spec.initial = std::move(initial);
  return perpetua::validate(std::move(spec));
}

inline Eigen::MatrixXd swap_matrix() {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  return p;
}

inline perpetua::SemiMarkovModel swap(SojournLaw l01, SojournLaw l10,
                                      Eigen::VectorXd initial = {}) {
  return model(swap_matrix(), {{0, 1, l01}, {1, 0, l10}}, std::move(initial));
}

// The two-state exponential fixture: Exp(1) out of 0, Exp(2) out of 1.
inline perpetua::SemiMarkovModel swap_exponential(Eigen::VectorXd initial = {}) {
  return swap(SojournLaw::exponential(1.0), SojournLaw::exponential(2.0),
              std::move(initial));
}

inline perpetua::SemiMarkovModel cyclic3(SojournLaw l0, SojournLaw l1,
                                         SojournLaw l2) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;
  return model(p, {{0, 1, l0}, {1, 2, l1}, {2, 0, l2}});
}

inline perpetua::StateFns fns(std::vector<double> a, std::vector<double> b) {
  perpetua::StateFns f;
  f.a = Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  f.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  return f;
}

template <class F> perpetua::Sample draws(int n, F &&f) {
  std::vector<double> v(n);
  for (auto &x : v) x = f();
  return perpetua::Sample(std::move(v));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <class F> perpetua::ErrorCode code_of(F &&f) {
  try {
    f();
  } catch (const perpetua::Error &e) {
    return e.code();
  }
  return static_cast<perpetua::ErrorCode>(-1);
}

} // namespace fixtures

#endif // PERPETUA_TESTS_FIXTURES_HPP
