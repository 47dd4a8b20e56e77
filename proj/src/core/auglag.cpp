#include "auglag.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace atls {

void validate(const OptimizerConfig& c) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::SemanticError, "optimizer: " + why); };
  if (!(c.mu0 >= 0.0)) fail("mu0 must be >= 0");
  if (!(c.gamma0 > 0.0)) fail("gamma0 must be > 0");
  if (!(c.varsigma > 0.0 && c.varsigma < 1.0)) fail("varsigma must lie in (0, 1)");
  if (!(c.eta > 0.0)) fail("eta must be > 0");
  if (!(c.dv_min > 0.0 && c.dv_min <= c.dv0 && c.dv0 < 1.0)) fail("need 0 < dv_min <= dv0 < 1");
  if (!(c.dv_growth >= 1.0)) fail("dv_growth must be >= 1");
  if (c.growth_after < 1) fail("growth_after must be >= 1");
  if (!(c.feasibility_tol >= 0.0)) fail("feasibility_tol must be >= 0");
  if (c.max_iterations < 1) fail("max_iterations must be >= 1");
  if (c.inner.max_iterations < 1) fail("inner max_iterations must be >= 1");
  if (!(c.inner.compliance_tol > 0.0) || !(c.inner.topology_tol >= 0.0)) fail("inner tolerances must be positive");
}

double normalized_violation(double q, double q0, double alpha, Sense sense) {
  const double r = q / (alpha * q0);
  return sense == Sense::Upper ? r - 1.0 : 1.0 - r;
}

double auglag_term(double g, double mu, double gamma) {
  if (mu + gamma * g > 0.0) return mu * g + 0.5 * gamma * g * g;
  return 0.5 * mu * mu / gamma;
}

double update_multiplier(double mu, double gamma, double g) { return std::max(mu + gamma * g, 0.0); }

double update_penalty(double gamma, double g, double g_prev, double varsigma, double eta, int k) {
  if (std::min(g, 0.0) <= varsigma * std::min(g_prev, 0.0)) return gamma;
  return std::max(eta * gamma, double(k) * double(k));
}

double constraint_weight(double g, double mu, double gamma) { return std::max(mu + gamma * g, 0.0); }

const char* to_string(StepOutcome outcome) {
  switch (outcome) {
    case StepOutcome::Baseline: return "baseline";
    case StepOutcome::Accepted: return "accepted";
    case StepOutcome::HardViolation: return "hard_violation";
    case StepOutcome::InnerNotConverged: return "inner_not_converged";
  }
  return "unknown";
}

const char* to_string(Termination reason) {
  switch (reason) {
    case Termination::StepCollapsed: return "step_collapsed";
    case Termination::InfeasibleAtFirstLevel: return "infeasible_at_first_level";
    case Termination::MinimumVolume: return "minimum_volume";
    case Termination::IterationLimit: return "iteration_limit";
    case Termination::Cancelled: return "cancelled";
  }
  return "unknown";
}

std::vector<double> evaluate_constraints(const Problem& problem, const Evaluation& evaluation,
                                         const std::vector<double>& q0) {
  if (evaluation.constraints.size() != problem.constraints.size() || q0.size() != problem.constraints.size())
    throw Error(ErrorCode::MissingAnalysis, "evaluation does not cover every constraint");
  std::vector<double> g(problem.constraints.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& c = problem.constraints[i];
    g[i] = normalized_violation(evaluation.constraints[i].q, q0[i], c.alpha, c.sense);
  }
  return g;
}

CombinedLevelSet build_level_set(const Problem& problem, const Evaluation& evaluation,
                                 const std::vector<double>& g, const LagrangianState& state) {
  std::vector<ScalarField> fields;
  std::vector<double> weights;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    fields.push_back(evaluation.constraints[i].field);
    weights.push_back(constraint_weight(g[i], state.mu[i], state.gamma[i]));
    ids.push_back(problem.constraints[i].id);
  }
  try {
    return combine(fields, weights, ids);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllWeightsZero) throw;
    log_info("all constraint weights are zero; steering by the compliance field of load case '" +
             evaluation.cases.front().id + "'");
    return combine({evaluation.cases.front().compliance_field}, {1.0}, {"compliance:" + evaluation.cases.front().id});
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Driver {
  const Problem& problem;
  const OptimizerConfig& config;
  const std::optional<CastingSpec>& casting;
  const RunCallbacks& callbacks;
  Analyzer analyzer;
  RunResult result;

  Driver(const Problem& p, const OptimizerConfig& c, const std::optional<CastingSpec>& cast, const RunCallbacks& cb)
      : problem(p), config(c), casting(cast), callbacks(cb), analyzer(p) {}

  IterationRecord record(int k, double dv, StepOutcome outcome, const Evaluation& ev, const std::vector<double>& g,
                         int inner) const {
    IterationRecord r;
    r.k = k;
    r.v = ev.topology.volume_fraction();
    r.dv = dv;
    r.outcome = outcome;
    r.accepted = outcome == StepOutcome::Baseline || outcome == StepOutcome::Accepted;
    r.J = ev.total_compliance;
    r.inner_iterations = inner;
    const auto& s = result.state;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ConstraintRecord c;
      c.q = ev.constraints[i].q;
      c.q_over_q0 = c.q / s.q0[i];
      c.g = g[i];
      c.mu = s.mu[i];
      c.gamma = s.gamma[i];
      c.hard_violated = !problem.constraints[i].soft && g[i] > config.feasibility_tol;
      r.constraints.push_back(c);
    }
    return r;
  }

  void emit(IterationRecord r, const Evaluation& ev) {
    std::ostringstream msg;
    msg << "k=" << r.k << " v=" << r.v << " dv=" << r.dv << " " << to_string(r.outcome) << " inner=" << r.inner_iterations;
    for (std::size_t i = 0; i < r.constraints.size(); ++i)
      msg << " " << problem.constraints[i].id << ":q/q0=" << r.constraints[i].q_over_q0 << ",g=" << r.constraints[i].g;
    log_info(msg.str());
    result.history.push_back(std::move(r));
    if (callbacks.on_iteration) callbacks.on_iteration(result.history.back(), ev);
  }

  void baseline() {
    auto base = std::make_shared<const Evaluation>(analyzer.evaluate(Topology(problem.domain)));
    auto& s = result.state;
    for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
      const double q0 = base->constraints[i].q;
      if (!std::isfinite(q0) || !(q0 > 0.0)) {
        std::ostringstream msg;
        msg << "constraint '" << problem.constraints[i].id << "': baseline value " << q0
            << " is not a positive finite number, so it cannot be normalized";
        if (problem.constraints[i].kind == ConstraintKind::Buckling)
          msg << " (the full design is not compressed by load case '" << problem.constraints[i].load_case << "')";
        throw Error(ErrorCode::PreconditionViolated, msg.str());
      }
      s.q0.push_back(q0);
    }
    s.mu.assign(problem.constraints.size(), config.mu0);
    s.gamma.assign(problem.constraints.size(), config.gamma0);
    s.g = evaluate_constraints(problem, *base, s.q0);
    s.g_prev = s.g;
    result.topology = base->topology;
    result.evaluation = base;
    emit(record(0, 0.0, StepOutcome::Baseline, *base, s.g, 0), *base);
  }

  void loop() {
    const auto& domain = problem.domain;
    auto& s = result.state;
    double dv = config.dv0;
    int streak = 0;
    bool hard_rejection_at_level = false;
    std::shared_ptr<const Evaluation> current = result.evaluation;

    for (int k = 1;; ++k) {
      if (callbacks.cancelled && callbacks.cancelled()) {
        result.termination = Termination::Cancelled;
        return;
      }
      if (k > config.max_iterations) {
        result.termination = Termination::IterationLimit;
        return;
      }
      const auto& accepted = *result.evaluation;
      const std::size_t have = accepted.topology.solid_count();
      if (have <= 1) {
        result.termination = Termination::MinimumVolume;
        return;
      }
      const double target = accepted.topology.volume_fraction() - dv;
      std::size_t count = target > 0.0 ? target_count(domain, std::min(target, 1.0)) : 1;
      count = std::clamp<std::size_t>(count, 1, have - 1);

      current = result.evaluation;
      FixedPointHooks hooks;
      int analyses = 0;  // the first one is the start topology
      hooks.analyze = [&](const Topology& t) {
        ++analyses;
        if (t.solid_flags() != current->topology.solid_flags())
          current = std::make_shared<const Evaluation>(analyzer.evaluate(t, current.get()));
        std::vector<double> c;
        for (const auto& cs : current->cases) c.push_back(cs.compliance);
        return c;
      };
      hooks.level_set = [&] {
        const auto g = evaluate_constraints(problem, *current, s.q0);
        return build_level_set(problem, *current, g, s).values;
      };
      // a trial topology the solver cannot handle (nearly disconnected) counts as a diverged inner loop
      FixedPointResult fp;
      try {
        fp = fixed_point(domain, result.topology, count, hooks, config.inner, casting);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConvergence) throw;
        log_warning(std::string("inner iterate abandoned: ") + e.what());
        fp.converged = false;
        fp.iterations = std::max(analyses - 1, 1);
      }

      const auto g = evaluate_constraints(problem, *current, s.q0);
      bool hard = false;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!problem.constraints[i].soft && g[i] > config.feasibility_tol) hard = true;

      if (hard || !fp.converged) {
        emit(record(k, dv, hard ? StepOutcome::HardViolation : StepOutcome::InnerNotConverged, *current, g,
                    fp.iterations),
             *current);
        hard_rejection_at_level = hard_rejection_at_level || hard;
        streak = 0;
        dv *= 0.5;
        if (dv < config.dv_min) {
          result.termination = (result.accepted_steps == 0 && hard_rejection_at_level)
                                   ? Termination::InfeasibleAtFirstLevel
                                   : Termination::StepCollapsed;
          return;
        }
        continue;
      }

      for (std::size_t i = 0; i < g.size(); ++i) {
        s.mu[i] = update_multiplier(s.mu[i], s.gamma[i], g[i]);
        s.gamma[i] = update_penalty(s.gamma[i], g[i], s.g_prev[i], config.varsigma, config.eta, k);
        s.g_prev[i] = g[i];
      }
      s.g = g;
      result.topology = current->topology;
      result.evaluation = current;
      ++result.accepted_steps;
      hard_rejection_at_level = false;
      emit(record(k, dv, StepOutcome::Accepted, *current, g, fp.iterations), *current);
      if (++streak >= config.growth_after) {
        dv = std::min(dv * config.dv_growth, config.dv0);
        streak = 0;
      }
    }
  }
};

}  // namespace

RunResult run(const Problem& problem, const OptimizerConfig& config, const std::optional<CastingSpec>& casting,
              const RunCallbacks& callbacks) {
  validate(config);
  if (casting) validate_casting(problem.domain, *casting);
  Driver d(problem, config, casting, callbacks);
  d.baseline();
  d.loop();
  d.result.level_set = build_level_set(problem, *d.result.evaluation, d.result.state.g, d.result.state);
  std::ostringstream msg;
  msg << "terminated: " << to_string(d.result.termination) << " at v=" << d.result.topology.volume_fraction()
      << " after " << d.result.history.size() - 1 << " outer iterations";
  log_info(msg.str());
  return std::move(d.result);
}

}  // namespace atls
