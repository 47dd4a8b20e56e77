#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "level_set.hpp"

namespace atls {

struct OptimizerConfig {
  double mu0 = 100.0;
  double gamma0 = 10.0;
  double varsigma = 0.25;
  double eta = 10.0;
  double dv0 = 0.025;
  double dv_min = 0.005;
  double dv_growth = 1.1;
  int growth_after = 3;  // consecutive accepted steps before dv grows
  double feasibility_tol = 1e-6;
  int max_iterations = 1000;  // outer, accepted and rejected
  FixedPointOptions inner;
};

// Throws SemanticError.
void validate(const OptimizerConfig& config);

// g <= 0 means satisfied for either sense.
double normalized_violation(double q, double q0, double alpha, Sense sense);

// mu g + gamma g^2 / 2 when mu + gamma g > 0, else mu^2 / (2 gamma).
double auglag_term(double g, double mu, double gamma);

double update_multiplier(double mu, double gamma, double g);

// Keeps gamma when min(g, 0) <= varsigma * min(g_prev, 0), else max(eta gamma, k^2).
double update_penalty(double gamma, double g, double g_prev, double varsigma, double eta, int k);

// Level-set weight max(mu + gamma g, 0).
double constraint_weight(double g, double mu, double gamma);

struct LagrangianState {
  std::vector<double> q0;
  std::vector<double> mu, gamma;
  std::vector<double> g, g_prev;
};

// g for every constraint of `problem` at `evaluation`. Throws MissingAnalysis
// when the evaluation lacks a constraint.
std::vector<double> evaluate_constraints(const Problem& problem, const Evaluation& evaluation,
                                         const std::vector<double>& q0);

// Weighted combination of the constraint fields. When every weight is zero the
// first load case's compliance field is used with unit weight.
CombinedLevelSet build_level_set(const Problem& problem, const Evaluation& evaluation,
                                 const std::vector<double>& g, const LagrangianState& state);

struct ConstraintRecord {
  double q = 0.0;
  double q_over_q0 = 0.0;
  double g = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  bool hard_violated = false;
};

enum class StepOutcome { Baseline, Accepted, HardViolation, InnerNotConverged };
const char* to_string(StepOutcome outcome);

struct IterationRecord {
  int k = 0;
  double v = 1.0;   // volume fraction of the iterate
  double dv = 0.0;  // decrement attempted
  bool accepted = true;
  StepOutcome outcome = StepOutcome::Baseline;
  std::vector<ConstraintRecord> constraints;
  double J = 0.0;  // compliance summed over load cases
  int inner_iterations = 0;
};

enum class Termination { StepCollapsed, InfeasibleAtFirstLevel, MinimumVolume, IterationLimit, Cancelled };
const char* to_string(Termination reason);

struct RunCallbacks {
  std::function<void(const IterationRecord&, const Evaluation&)> on_iteration;
  std::function<bool()> cancelled;
};

struct RunResult {
  Topology topology;
  std::shared_ptr<const Evaluation> evaluation;  // of `topology`
  CombinedLevelSet level_set;                    // at `topology`, final weights
  std::vector<IterationRecord> history;
  Termination termination = Termination::StepCollapsed;
  LagrangianState state;
  int accepted_steps = 0;
};

RunResult run(const Problem& problem, const OptimizerConfig& config,
              const std::optional<CastingSpec>& casting = std::nullopt, const RunCallbacks& callbacks = {});

}  // namespace atls
