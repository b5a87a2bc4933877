#include "perpetua/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "perpetua/error.hpp"
#include "perpetua/limitlaws.hpp"

namespace perpetua::cli {

namespace {

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::VerifyT1, "verify-t1"},
    {ExperimentKind::VerifyT2a, "verify-t2a"},
    {ExperimentKind::VerifyT2b, "verify-t2b"},
    {ExperimentKind::VerifyT3a, "verify-t3a"},
    {ExperimentKind::VerifyT3b, "verify-t3b"},
    {ExperimentKind::VerifyT4, "verify-t4"},
    {ExperimentKind::Pitchfork, "pitchfork"},
    {ExperimentKind::PitchforkSmallball, "pitchfork-smallball"},
    {ExperimentKind::Ou, "ou"},
    {ExperimentKind::StableOu, "stable-ou"},
};

std::string where(const YAML::Node &node) {
  if (node.Mark().is_null()) return "";
  return " (line " + std::to_string(node.Mark().line + 1) + ")";
}

[[noreturn]] void invalid(const YAML::Node &node, const std::string &msg) {
  fail(ErrorCode::ValidationError, msg + where(node));
}

template <class T> T scalar(const YAML::Node &node, const std::string &what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception &) {
    invalid(node, what + " has the wrong type");
  }
}

YAML::Node required(const YAML::Node &parent, const char *key,
                    const std::string &block) {
  const auto node = parent[key];
  if (!node) {
    invalid(parent, block + "." + key + " is required");
  }
  return node;
}

Eigen::VectorXd vector_of(const YAML::Node &node, const std::string &what) {
  if (!node.IsSequence()) {
    invalid(node, what + " must be a list");
  }
  Eigen::VectorXd v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = scalar<double>(node[i], what);
  }
  return v;
}

// Library errors raised while checking a config become ValidationError so
// the caller sees one error kind with the original code in the message.
template <class F> void as_validation(F &&check) {
  try {
    check();
  } catch (const Error &e) {
    if (e.code() == ErrorCode::ValidationError) throw;
    fail(ErrorCode::ValidationError, e.what());
  }
}

ModelSpec parse_model(const YAML::Node &block) {
  const auto rows = required(block, "transition", "model");
  if (!rows.IsSequence() || rows.size() == 0) {
    invalid(rows, "model.transition must be a list of rows");
  }
  const auto n = static_cast<int>(rows.size());
  ModelSpec spec;
  spec.transition.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const auto row = vector_of(rows[i], "model.transition row");
    if (row.size() != n) {
      invalid(rows[i], "model.transition row " + std::to_string(i) + " has " +
                           std::to_string(row.size()) + " entries, expected " +
                           std::to_string(n));
    }
    spec.transition.row(i) = row.transpose();
  }
  spec.laws.assign(n, std::vector<std::optional<SojournLaw>>(n));
  const auto table = required(block, "sojourn", "model");
  if (!table.IsSequence()) {
    invalid(table, "model.sojourn must be a list");
  }
  for (const auto &entry : table) {
    const int from = scalar<int>(required(entry, "from", "sojourn"), "sojourn.from");
    const int to = scalar<int>(required(entry, "to", "sojourn"), "sojourn.to");
    if (from < 0 || from >= n || to < 0 || to >= n) {
      invalid(entry, "sojourn entry refers to a state outside 0.." +
                         std::to_string(n - 1));
    }
    const auto name =
        scalar<std::string>(required(entry, "family", "sojourn"), "sojourn.family");
    const auto family = parse_family(name);
    if (!family) {
      invalid(entry, "unknown sojourn family '" + name + "'");
    }
    const auto params = vector_of(required(entry, "params", "sojourn"), "sojourn.params");
    std::vector<double> values(params.data(), params.data() + params.size());
    as_validation([&] { spec.laws[from][to] = SojournLaw::make(*family, values); });
  }
  if (const auto init = block["initial"]) {
    spec.initial = vector_of(init, "model.initial");
  }
  return spec;
}

void parse_functions(const YAML::Node &block, FunctionsBlock &f) {
  f.fns.a = vector_of(required(block, "a", "functions"), "functions.a");
  f.fns.b = vector_of(required(block, "b", "functions"), "functions.b");
  if (const auto h = block["h"]) {
    const auto name = scalar<std::string>(h, "functions.h");
    const auto parsed = HTransform::parse(name);
    if (!parsed) invalid(h, "unknown transform '" + name + "'");
    f.h = *parsed;
  }
  if (const auto v = block["alpha_star"]) f.alpha_star = scalar<double>(v, "functions.alpha_star");
  if (const auto v = block["rho0"]) f.rho0 = scalar<double>(v, "functions.rho0");
  if (const auto v = block["x0"]) f.x0 = scalar<double>(v, "functions.x0");
}

void parse_experiment(const YAML::Node &block, ExperimentBlock &e) {
  const auto kind = required(block, "kind", "experiment");
  const auto name = scalar<std::string>(kind, "experiment.kind");
  const auto parsed = parse_kind(name);
  if (!parsed) invalid(kind, "unknown experiment kind '" + name + "'");
  e.kind = *parsed;
  if (const auto v = block["horizon"]) e.horizon = scalar<double>(v, "experiment.horizon");
  if (const auto v = block["replications"]) e.replications = scalar<int>(v, "experiment.replications");
  if (const auto v = block["anchor"]) e.anchor = scalar<int>(v, "experiment.anchor");
  if (const auto v = block["tolerance"]) e.tolerance = scalar<double>(v, "experiment.tolerance");
  if (const auto v = block["grid_step"]) e.grid_step = scalar<double>(v, "experiment.grid_step");
  if (const auto v = block["steps"]) e.steps = scalar<int>(v, "experiment.steps");
  if (const auto v = block["aux_reps"]) e.aux_reps = scalar<int>(v, "experiment.aux_reps");
  if (const auto v = block["case"]) {
    const auto c = scalar<std::string>(v, "experiment.case");
    e.divergence = parse_divergence_case(c);
    if (!e.divergence) invalid(v, "unknown divergence case '" + c + "'");
  }
}

void parse_run(const YAML::Node &block, RunBlock &r) {
  if (const auto v = block["seed"]) r.seed = scalar<std::uint64_t>(v, "run.seed");
  if (const auto v = block["workers"]) r.workers = scalar<int>(v, "run.workers");
  if (const auto v = block["output"]) r.output = scalar<std::string>(v, "run.output");
}

bool is_pitchfork_case(DivergenceCase c) {
  return to_string(c).starts_with("pitchfork");
}

} // namespace

std::optional<ExperimentKind> parse_kind(std::string_view name) {
  for (const auto &k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::string_view to_string(ExperimentKind kind) {
  for (const auto &k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string &text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    fail(ErrorCode::ParseError, "line " + std::to_string(e.mark.line + 1) +
                                    ", column " + std::to_string(e.mark.column + 1) +
                                    ": " + e.msg);
  }
  if (!root.IsMap()) {
    fail(ErrorCode::ParseError, "top level must be a mapping");
  }
  ExperimentConfig config;
  config.config_hash = fnv1a(text);
  const auto spec = parse_model(required(root, "model", "config"));
  as_validation([&] { config.model = validate(spec); });
  parse_functions(required(root, "functions", "config"), config.functions);
  parse_experiment(required(root, "experiment", "config"), config.experiment);
  if (const auto run = root["run"]) parse_run(run, config.run);
  validate_experiment(config);
  return config;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorCode::IoError, "cannot read " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_overrides(ExperimentConfig &config, const Overrides &o) {
  if (o.kind) config.experiment.kind = *o.kind;
  if (o.seed) config.run.seed = *o.seed;
  if (o.replications) config.experiment.replications = *o.replications;
  if (o.horizon) config.experiment.horizon = *o.horizon;
  if (o.output) config.run.output = *o.output;
  if (o.workers) config.run.workers = *o.workers;
  validate_experiment(config);
}

void validate_experiment(const ExperimentConfig &config) {
  const auto &model = config.environment();
  const auto &fns = config.fns();
  const auto &e = config.experiment;
  as_validation([&] { fns.check(model.size()); });
  if (e.replications < 1) {
    fail(ErrorCode::ValidationError, "experiment.replications must be positive");
  }
  if (e.horizon < 0.0 || !std::isfinite(e.horizon)) {
    fail(ErrorCode::ValidationError, "experiment.horizon must be a finite value >= 0");
  }
  if (!(e.grid_step > 0.0)) {
    fail(ErrorCode::ValidationError, "experiment.grid_step must be positive");
  }
  if (e.anchor && (*e.anchor < 0 || *e.anchor >= model.size())) {
    fail(ErrorCode::ValidationError,
         "experiment.anchor " + std::to_string(*e.anchor) + " is not a state");
  }
  if (config.run.workers < 0) {
    fail(ErrorCode::ValidationError, "run.workers must be >= 0");
  }
  const double mean_a = expectation_pi(model, fns.a);
  const auto need_stable = [&] {
    if (!(mean_a > 0.0)) {
      fail(ErrorCode::ValidationError,
           "NotStable: this experiment needs the contracting regime E_pi a > 0, "
           "got " + std::to_string(mean_a));
    }
  };
  as_validation([&] {
    switch (e.kind) {
    case ExperimentKind::Simulate:
      break;
    case ExperimentKind::VerifyT1:
      need_stable();
      break;
    case ExperimentKind::VerifyT2a:
      if (!(mean_a < 0.0)) {
        fail(ErrorCode::NotDivergent,
             "Gaussian divergent case needs E_pi a < 0, got " + std::to_string(mean_a));
      }
      theorem2_params(model, fns);
      break;
    case ExperimentKind::VerifyT2b:
      theorem2b_law(model, fns);
      break;
    case ExperimentKind::VerifyT3a: {
      const auto p = theorem3_params(model, fns);
      if (!(p.mean_a < 0.0)) {
        fail(ErrorCode::NotDivergent,
             "heavy-tailed divergent case needs E_pi a < 0, got " +
                 std::to_string(p.mean_a));
      }
      break;
    }
    case ExperimentKind::VerifyT3b:
      theorem3b_law(theorem3_params(model, fns), model, e.steps);
      break;
    case ExperimentKind::VerifyT4:
      if (fns.a.maxCoeff() != fns.a.minCoeff()) {
        fail(ErrorCode::NotConstantA, "a must take the same value in every state");
      }
      if (fns.a(0) > 0.0) {
        fail(ErrorCode::NotDivergent, "constant a must be <= 0");
      }
      break;
    case ExperimentKind::Pitchfork:
    case ExperimentKind::Ou:
      if (e.divergence) {
        const bool pitch = e.kind == ExperimentKind::Pitchfork;
        if (is_pitchfork_case(*e.divergence) != pitch) {
          fail(ErrorCode::CaseMismatch, "case " +
                                            std::string(to_string(*e.divergence)) +
                                            " belongs to the other application");
        }
        DivergenceSpec spec{*e.divergence, 1.0, config.functions.rho0,
                            config.functions.h, config.functions.x0};
        if (const auto p = [&]() -> std::optional<StableCaseParams> {
              try {
                return theorem3_params(model, fns);
              } catch (const Error &) {
                return std::nullopt;
              }
            }()) {
          spec.alpha = p->alpha;
        }
        check_divergence_case(model, fns, spec);
      } else {
        need_stable();
        if (e.kind == ExperimentKind::Pitchfork && !(fns.b.minCoeff() > 0.0)) {
          fail(ErrorCode::NonPositiveB, "the pitchfork needs b > 0 in every state");
        }
      }
      break;
    case ExperimentKind::PitchforkSmallball:
      need_stable();
      if (!(fns.b.minCoeff() > 0.0)) {
        fail(ErrorCode::NonPositiveB, "the pitchfork needs b > 0 in every state");
      }
      if (fns.a.minCoeff() >= 0.0) {
        fail(ErrorCode::NoSignChange,
             "small-ball exponent needs a < 0 in at least one state");
      }
      break;
    case ExperimentKind::StableOu: {
      if (!config.functions.alpha_star) {
        fail(ErrorCode::InvalidParameter, "functions.alpha_star is required");
      }
      const double as = *config.functions.alpha_star;
      if (!(as > 1.0 && as < 2.0)) {
        fail(ErrorCode::UnsupportedAlpha,
             "noise index must lie in (1, 2), got " + std::to_string(as));
      }
      if (fns.b.minCoeff() < 0.0) {
        fail(ErrorCode::InvalidParameter, "stable noise needs b >= 0");
      }
      need_stable();
      break;
    }
    }
  });
}

} // namespace perpetua::cli
