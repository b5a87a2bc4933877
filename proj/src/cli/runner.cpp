#include "perpetua/cli/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "perpetua/apps.hpp"
#include "perpetua/error.hpp"
#include "perpetua/limitlaws.hpp"
#include "perpetua/stats.hpp"

namespace perpetua::cli {

namespace {

using Rows = std::vector<std::vector<double>>;

constexpr double kMaxFailureRate = 1e-3;
constexpr double kMaxRejectionRate = 1e-3;
constexpr std::uint64_t kRootStream = kAuxiliaryStreamBase - 1;

struct Context {
  const ExperimentConfig &config;
  const SemiMarkovModel &model;
  const StateFns &fns;
  std::uint64_t seed;
  int reps;
  int workers;
  double horizon;
  ResultRecord &record;

  RandomStream sim_stream(int r) const { return RandomStream(seed, r); }
  RandomStream ref_stream(int r) const {
    return RandomStream(seed, kAuxiliaryStreamBase + static_cast<std::uint64_t>(r));
  }
  double tolerance(double fallback) const {
    return config.experiment.tolerance.value_or(fallback);
  }
};

// Runs f(r) for r in [0, n) on the worker pool. Row blocks land in slot r,
// so the output order never depends on scheduling.
template <class F> Rows replicate(Context &ctx, F &&f) {
  const int n = ctx.reps;
  std::vector<Rows> blocks(n);
  std::vector<std::string> errors(n);
  std::vector<ErrorCode> codes(n, ErrorCode::InvalidParameter);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < n; r = next++) {
      try {
        blocks[r] = f(r);
      } catch (const Error &e) {
        errors[r] = e.what();
        codes[r] = e.code();
      } catch (const std::exception &e) {
        errors[r] = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min(ctx.workers, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  Rows rows;
  int failed = 0;
  std::optional<int> first;
  for (int r = 0; r < n; ++r) {
    if (!errors[r].empty()) {
      ++failed;
      if (!first) first = r;
      if (ctx.record.errors.size() < 20) {
        ctx.record.errors.push_back("replication " + std::to_string(r) + ": " + errors[r]);
      }
      continue;
    }
    for (auto &row : blocks[r]) rows.push_back(std::move(row));
  }
  ctx.record.failures += failed;
  if (failed > kMaxFailureRate * n) {
    fail(codes[*first], std::to_string(failed) + " of " + std::to_string(n) +
                            " replications failed; first: " + errors[*first]);
  }
  return rows;
}

std::vector<double> column(const Rows &rows, std::size_t c) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto &row : rows) out.push_back(row[c]);
  return out;
}

void ks_check(ResultRecord &rec, const std::string &name,
              const std::vector<double> &x, const std::vector<double> &y,
              double threshold, bool standardized = false) {
  Sample sx(x);
  Sample sy(y);
  if (standardized) {
    sx = standardize(sx);
    sy = standardize(sy);
  }
  const auto ks = ks_two_sample(sx, sy);
  rec.checks.push_back({name, ks.statistic, threshold, ks.statistic <= threshold,
                        ks.p_value});
}

int state_for(const Trajectory &traj, double t) {
  if (t >= traj.coverage()) return traj.segments().back().state;
  return traj.state_at(t);
}

double default_horizon(const ExperimentConfig &c) {
  switch (c.experiment.kind) {
  case ExperimentKind::Simulate:
    return 100.0;
  case ExperimentKind::VerifyT1:
    return 200.0;
  case ExperimentKind::VerifyT2a:
  case ExperimentKind::VerifyT2b:
    return 2000.0;
  case ExperimentKind::VerifyT3a:
  case ExperimentKind::VerifyT3b:
    return 5000.0;
  case ExperimentKind::VerifyT4: {
    const double a = c.fns().a(0);
    return a < 0.0 ? 50.0 / -a : 1e4;
  }
  case ExperimentKind::Pitchfork:
  case ExperimentKind::Ou:
    return c.experiment.divergence ? 2000.0 : 300.0;
  case ExperimentKind::StableOu:
  case ExperimentKind::PitchforkSmallball:
    return 300.0;
  }
  return 100.0;
}

void run_simulate(Context &ctx) {
  ctx.record.columns = {"replication", "t", "state", "phi", "i_sign", "log_abs_i"};
  const double step = ctx.config.experiment.grid_step;
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double t = k * step;
    if (t > ctx.horizon * (1.0 + 1e-12)) break;
    grid.push_back(std::min(t, ctx.horizon));
  }
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    const auto traj = simulate(ctx.model, ctx.horizon, rng);
    const auto values = compute_phi_i_grid(traj, ctx.fns, grid);
    Rows rows;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      rows.push_back({double(r), grid[k], double(state_for(traj, grid[k])),
                      values[k].phi(), double(values[k].i_sign),
                      values[k].log_abs_i});
    }
    return rows;
  });
}

void run_t1(Context &ctx) {
  ctx.record.columns = {"replication", "i_t", "ref_state", "ref_i"};
  const auto law = theorem1_law(ctx.model, ctx.fns);
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto traj = simulate(ctx.model, ctx.horizon, rng);
    const double i_t = compute_phi_i(traj, ctx.fns, ctx.horizon).i();
    const auto ref = law.draw(ref_rng);
    return Rows{{double(r), i_t, double(ref.state), ref.value}};
  });
  ks_check(ctx.record, "ks_i_t", column(ctx.record.rows, 1),
           column(ctx.record.rows, 3), ctx.tolerance(0.02));
}

void run_t2(Context &ctx, bool critical) {
  const double t = ctx.horizon;
  const double mean_a = expectation_pi(ctx.model, ctx.fns.a);
  const auto params = theorem2_params(ctx.model, ctx.fns);
  ctx.record.estimates["sigma2"] = std::vector<double>(
      params.sigma2.data(), params.sigma2.data() + params.sigma2.size());
  ctx.record.estimates["scale"] = params.scale(0);
  const auto law = critical ? theorem2b_law(ctx.model, ctx.fns)
                            : theorem2a_law(ctx.model, ctx.fns);
  const double shift = critical ? 0.0 : t * mean_a;
  ctx.record.columns = {"replication", "x", "y", "ref_state", "ref_x", "ref_y"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto traj = simulate(ctx.model, t, rng);
    const auto f = compute_phi_i(traj, ctx.fns, t);
    const auto ref = law.draw(ref_rng);
    return Rows{{double(r), (f.log_phi + shift) / std::sqrt(t),
                 (f.log_abs_i + shift) / std::sqrt(t), double(ref.state),
                 ref.value.x, ref.value.y}};
  });
  const auto &rows = ctx.record.rows;
  if (critical) {
    ks_check(ctx.record, "ks_log_phi", column(rows, 1), column(rows, 4),
             ctx.tolerance(0.03));
    ks_check(ctx.record, "ks_log_abs_i", column(rows, 2), column(rows, 5),
             ctx.tolerance(0.035));
  } else {
    ks_check(ctx.record, "ks_log_phi", column(rows, 1), column(rows, 4),
             ctx.tolerance(0.03));
    ks_check(ctx.record, "ks_log_abs_i", column(rows, 2), column(rows, 4),
             ctx.tolerance(0.03));
  }
}

void run_t3(Context &ctx, bool critical) {
  const double t = ctx.horizon;
  const auto params = theorem3_params(ctx.model, ctx.fns);
  ctx.record.estimates["alpha"] = params.alpha;
  ctx.record.estimates["beta"] = params.beta(0);
  ctx.record.estimates["sigma"] = params.sigma(0);
  const auto law = critical ? theorem3b_law(params, ctx.model, ctx.config.experiment.steps)
                            : theorem3a_law(params, ctx.model);
  const double shift = critical ? 0.0 : t * params.mean_a;
  const double scale = std::pow(t, 1.0 / params.alpha);
  ctx.record.columns = {"replication", "x", "y", "ref_state", "ref_x", "ref_y"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto traj = simulate(ctx.model, t, rng);
    const auto f = compute_phi_i(traj, ctx.fns, t);
    const auto ref = law.draw(ref_rng);
    return Rows{{double(r), (f.log_phi + shift) / scale,
                 (f.log_abs_i + shift) / scale, double(ref.state), ref.value.x,
                 ref.value.y}};
  });
  const auto &rows = ctx.record.rows;
  const double tol = ctx.tolerance(0.05);
  ks_check(ctx.record, "ks_standardized_log_phi", column(rows, 1),
           column(rows, 4), tol, true);
  ks_check(ctx.record, "ks_standardized_log_abs_i", column(rows, 2),
           column(rows, critical ? 5 : 4), tol, true);
}

void run_t4(Context &ctx) {
  const double t = ctx.horizon;
  const double a = ctx.fns.a(0);
  if (a < 0.0) {
    const auto law = theorem4a_law(ctx.model, ctx.fns);
    ctx.record.columns = {"replication", "scaled_i", "ref_state", "ref"};
    ctx.record.rows = replicate(ctx, [&](int r) {
      auto rng = ctx.sim_stream(r);
      auto ref_rng = ctx.ref_stream(r);
      const auto traj = simulate(ctx.model, t, rng);
      const auto f = compute_phi_i(traj, ctx.fns, t);
      const double scaled =
          f.i_sign == 0 ? 0.0 : f.i_sign * std::exp(f.log_abs_i + a * t);
      const auto ref = law.draw(ref_rng);
      return Rows{{double(r), scaled, double(ref.state), ref.value}};
    });
    ks_check(ctx.record, "ks_scaled_i", column(ctx.record.rows, 1),
             column(ctx.record.rows, 3), ctx.tolerance(0.03));
    return;
  }
  const auto s = theorem4b_check(ctx.model, ctx.fns);
  ctx.record.estimates["mean_b"] = s.mean_b;
  ctx.record.estimates["clt_scale"] = s.clt_scale;
  const double band = 3.0 * s.clt_scale / std::sqrt(t);
  ctx.record.columns = {"replication", "i_over_t", "deviation"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    const auto traj = simulate(ctx.model, t, rng);
    const double ratio = compute_phi_i(traj, ctx.fns, t).i() / t;
    return Rows{{double(r), ratio, ratio - s.mean_b}};
  });
  int outside = 0;
  for (const auto &row : ctx.record.rows) {
    if (std::abs(row[2]) > band) ++outside;
  }
  const double frac = static_cast<double>(outside) / ctx.record.rows.size();
  ctx.record.checks.push_back(
      {"fraction_outside_clt_band", frac, ctx.tolerance(0.05),
       frac <= ctx.tolerance(0.05), std::nullopt});
}

double divergence_alpha(const Context &ctx) {
  try {
    return theorem3_params(ctx.model, ctx.fns).alpha;
  } catch (const Error &) {
    return 2.0;
  }
}

// Reference draw for the limit of the divergence statistic.
std::function<double(RandomStream &)> divergence_reference(const Context &ctx,
                                                          DivergenceCase kind) {
  const auto &model = ctx.model;
  const auto &fns = ctx.fns;
  const auto &f = ctx.config.functions;
  switch (kind) {
  case DivergenceCase::PitchforkGaussian:
  case DivergenceCase::OuGaussian: {
    const double k = kind == DivergenceCase::PitchforkGaussian ? 2.0 : 1.0;
    auto law = theorem2a_law(model, fns);
    return [law, k](RandomStream &rng) { return k * law.draw(rng).value.x; };
  }
  case DivergenceCase::PitchforkCritical:
  case DivergenceCase::OuCritical: {
    const double k = kind == DivergenceCase::PitchforkCritical ? 2.0 : 1.0;
    auto law = theorem2b_law(model, fns);
    return [law, k](RandomStream &rng) { return k * law.draw(rng).value.y; };
  }
  case DivergenceCase::PitchforkStable:
  case DivergenceCase::OuStable: {
    auto law = theorem3a_law(theorem3_params(model, fns), model);
    return [law](RandomStream &rng) { return law.draw(rng).value.x; };
  }
  case DivergenceCase::PitchforkStableCritical:
  case DivergenceCase::OuStableCritical: {
    auto law = theorem3b_law(theorem3_params(model, fns), model,
                             ctx.config.experiment.steps);
    return [law](RandomStream &rng) { return law.draw(rng).value.y; };
  }
  case DivergenceCase::PitchforkConstant: {
    auto law = theorem4a_law(model, {2.0 * fns.a, fns.b});
    const double base = 1.0 / (f.rho0 * f.rho0);
    return [law, base](RandomStream &rng) {
      return base + 2.0 * law.draw(rng).value;
    };
  }
  case DivergenceCase::OuConstant: {
    auto law = theorem4a_law(model, {2.0 * fns.a, fns.b.array().square().matrix()});
    const double h0 = f.h.h(f.x0);
    return [law, h0](RandomStream &rng) {
      return h0 + std::sqrt(std::max(0.0, law.draw(rng).value)) * rng.normal();
    };
  }
  case DivergenceCase::PitchforkZero: {
    // rho^-2 = rho0^-2 + 2 int b when a = 0.
    const double target = 2.0 * expectation_pi(model, fns.b);
    return [target](RandomStream &) { return target; };
  }
  case DivergenceCase::OuZero: {
    const double sd =
        std::sqrt(expectation_pi(model, fns.b.array().square().matrix()));
    return [sd](RandomStream &rng) { return sd * rng.normal(); };
  }
  }
  fail(ErrorCode::CaseMismatch, "unknown divergence case");
}

void run_divergence(Context &ctx, DivergenceCase kind) {
  const auto &f = ctx.config.functions;
  DivergenceSpec spec{kind, ctx.horizon, f.rho0, f.h, f.x0, divergence_alpha(ctx)};
  check_divergence_case(ctx.model, ctx.fns, spec);
  const auto reference = divergence_reference(ctx, kind);
  ctx.record.estimates["case"] = std::string(to_string(kind));
  ctx.record.columns = {"replication", "statistic", "ref"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto traj = simulate(ctx.model, spec.t, rng);
    const double stat = divergence_transform_on(traj, ctx.model, ctx.fns, spec, rng);
    return Rows{{double(r), stat, reference(ref_rng)}};
  });
  const auto x = column(ctx.record.rows, 1);
  const auto y = column(ctx.record.rows, 2);
  if (kind == DivergenceCase::PitchforkZero) {
    const double target = y.front();
    std::vector<double> dev;
    for (double v : x) dev.push_back(std::abs(v - target));
    const double med = Sample(dev).median() / std::max(1.0, std::abs(target));
    ctx.record.checks.push_back({"median_relative_deviation", med,
                                 ctx.tolerance(0.05),
                                 med <= ctx.tolerance(0.05), std::nullopt});
    return;
  }
  const bool scale_free = kind == DivergenceCase::PitchforkStable ||
                          kind == DivergenceCase::OuStable ||
                          kind == DivergenceCase::PitchforkStableCritical ||
                          kind == DivergenceCase::OuStableCritical;
  ks_check(ctx.record, scale_free ? "ks_standardized_statistic" : "ks_statistic",
           x, y, ctx.tolerance(scale_free ? 0.05 : 0.03), scale_free);
}

void run_pitchfork(Context &ctx) {
  if (const auto kind = ctx.config.experiment.divergence) {
    run_divergence(ctx, *kind);
    return;
  }
  const auto law = pitchfork_stationary_law(ctx.model, ctx.fns);
  const double rho0 = ctx.config.functions.rho0;
  const double times[] = {ctx.horizon};
  ctx.record.columns = {"replication", "rho_sq_t", "ref_state", "ref_rho_sq"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto path = pitchfork_path(ctx.model, ctx.fns, rho0, times, rng);
    const auto ref = law.draw(ref_rng);
    return Rows{{double(r), path.rho_sq.back(), double(ref.state), ref.value}};
  });
  ks_check(ctx.record, "ks_rho_sq", column(ctx.record.rows, 1),
           column(ctx.record.rows, 3), ctx.tolerance(0.03));
}

void run_smallball(Context &ctx) {
  RandomStream root_rng(ctx.seed, kRootStream);
  const double nu = smallball_exponent(ctx.model, ctx.fns,
                                       ctx.config.experiment.aux_reps, root_rng);
  const auto law = pitchfork_stationary_law(ctx.model, ctx.fns);
  ctx.record.columns = {"replication", "ref_state", "rho_sq"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.ref_stream(r);
    const auto d = law.draw(rng);
    return Rows{{double(r), double(d.state), d.value}};
  });
  const auto rho_sq = column(ctx.record.rows, 2);
  std::vector<double> inverse;
  for (double v : rho_sq) inverse.push_back(1.0 / v);
  const int k = std::max(50, static_cast<int>(inverse.size()) / 100);
  const auto hill = hill_index(Sample(inverse), k);
  ctx.record.estimates["nu_star"] = nu;
  ctx.record.estimates["hill"] = hill.alpha;
  ctx.record.estimates["hill_k"] = k;
  ctx.record.estimates["smallball_ratio_1e-2"] = smallball_ratio(rho_sq, nu, 1e-2);
  ctx.record.estimates["smallball_ratio_1e-3"] = smallball_ratio(rho_sq, nu, 1e-3);
  const double rel = std::abs(hill.alpha - nu) / nu;
  ctx.record.checks.push_back({"hill_vs_kesten_relative", rel,
                               ctx.tolerance(0.15), rel <= ctx.tolerance(0.15),
                               std::nullopt});
}

void run_ou(Context &ctx) {
  if (const auto kind = ctx.config.experiment.divergence) {
    run_divergence(ctx, *kind);
    return;
  }
  const auto &f = ctx.config.functions;
  const auto z_law = gou_z_law(ctx.model, ctx.fns);
  ctx.record.columns = {"replication", "x_t", "rejections", "ref_x", "ref_rejections"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const auto d = gou_draw(ctx.model, ctx.fns, f.h, f.x0, ctx.horizon, rng);
    const auto ref = gou_stationary_draw(z_law, f.h, ref_rng);
    return Rows{{double(r), d.value, double(d.rejections), ref.value,
                 double(ref.rejections)}};
  });
  double rejections = 0.0;
  for (const auto &row : ctx.record.rows) rejections += row[2] + row[4];
  const double rate = rejections / (2.0 * ctx.record.rows.size() + rejections);
  ctx.record.estimates["rejection_rate"] = rate;
  if (rate > kMaxRejectionRate) {
    fail(ErrorCode::DomainError,
         "rejection rate " + std::to_string(rate) + " exceeds " +
             std::to_string(kMaxRejectionRate) + " for the " +
             std::string(f.h.name()) + " transform");
  }
  ks_check(ctx.record, "ks_x_t", column(ctx.record.rows, 1),
           column(ctx.record.rows, 3), ctx.tolerance(0.03));
}

void run_stable_ou(Context &ctx) {
  const auto &f = ctx.config.functions;
  const double as = *f.alpha_star;
  const auto law = stable_ou_stationary_law(ctx.model, ctx.fns, as);
  ctx.record.columns = {"replication", "x_t", "ref_state", "ref_x"};
  ctx.record.rows = replicate(ctx, [&](int r) {
    auto rng = ctx.sim_stream(r);
    auto ref_rng = ctx.ref_stream(r);
    const double x = stable_ou_sample(ctx.model, ctx.fns, as, f.x0, ctx.horizon, rng);
    const auto ref = law.draw(ref_rng);
    return Rows{{double(r), x, double(ref.state), ref.value}};
  });
  ks_check(ctx.record, "ks_x_t", column(ctx.record.rows, 1),
           column(ctx.record.rows, 3), ctx.tolerance(0.03));
}

} // namespace

bool ResultRecord::pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check &c) { return c.pass; });
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char *env = std::getenv("PERPETUA_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception &) {
    }
    fail(ErrorCode::ValidationError,
         std::string("PERPETUA_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ResultRecord run(const ExperimentConfig &config) {
  validate_experiment(config);
  const auto start = std::chrono::steady_clock::now();
  ResultRecord record;
  record.experiment = std::string(to_string(config.experiment.kind));
  record.seed = config.run.seed;
  record.config_hash = config.config_hash;
  record.replications = config.experiment.replications;
  record.workers = resolve_workers(config.run.workers);
  record.horizon = config.experiment.horizon > 0.0 ? config.experiment.horizon
                                                   : default_horizon(config);
  Context ctx{config,          config.environment(), config.fns(),
              config.run.seed, record.replications,  record.workers,
              record.horizon,  record};
  const auto &pi = config.environment().limiting();
  record.estimates["pi"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  record.estimates["mean_a"] = expectation_pi(config.environment(), config.fns().a);

  switch (config.experiment.kind) {
  case ExperimentKind::Simulate:
    run_simulate(ctx);
    break;
  case ExperimentKind::VerifyT1:
    run_t1(ctx);
    break;
  case ExperimentKind::VerifyT2a:
    run_t2(ctx, false);
    break;
  case ExperimentKind::VerifyT2b:
    run_t2(ctx, true);
    break;
  case ExperimentKind::VerifyT3a:
    run_t3(ctx, false);
    break;
  case ExperimentKind::VerifyT3b:
    run_t3(ctx, true);
    break;
  case ExperimentKind::VerifyT4:
    run_t4(ctx);
    break;
  case ExperimentKind::Pitchfork:
    run_pitchfork(ctx);
    break;
  case ExperimentKind::PitchforkSmallball:
    run_smallball(ctx);
    break;
  case ExperimentKind::Ou:
    run_ou(ctx);
    break;
  case ExperimentKind::StableOu:
    run_stable_ou(ctx);
    break;
  }
  record.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return record;
}

} // namespace perpetua::cli
