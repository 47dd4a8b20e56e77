#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "error.hpp"

namespace atls {

namespace {

// Re-raises solver failures with the analysis they belong to.
template <class F>
auto with_context(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(what + ": " + e.what(), e.residual(), e.iterations());
  } catch (const Error& e) {
    throw Error(e.code(), what + ": " + e.what());
  }
}

}  // namespace

Sense natural_sense(ConstraintKind kind) {
  return (kind == ConstraintKind::Compliance || kind == ConstraintKind::PNormStress) ? Sense::Upper : Sense::Lower;
}

const char* to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Compliance: return "compliance";
    case ConstraintKind::PNormStress: return "pnorm_stress";
    case ConstraintKind::Eigenvalue: return "eigenvalue";
    case ConstraintKind::Buckling: return "buckling";
  }
  return "unknown";
}

const char* to_string(Sense sense) { return sense == Sense::Upper ? "upper" : "lower"; }

void validate_constraint(const ConstraintSpec& c) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::SemanticError, "constraint '" + c.id + "': " + why);
  };
  if (c.id.empty()) throw Error(ErrorCode::SemanticError, "constraint id must not be empty");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) fail("alpha must be a positive finite number");
  if (c.sense != natural_sense(c.kind)) {
    std::ostringstream msg;
    msg << to_string(c.kind) << " constraints are " << to_string(natural_sense(c.kind)) << "-bounded";
    fail(msg.str());
  }
  if (c.kind == ConstraintKind::PNormStress && (c.p < 2 || c.p % 2 != 0)) fail("p must be an even integer >= 2");
  if (c.kind == ConstraintKind::Eigenvalue && c.mode < 1) fail("mode must be >= 1");
  if (c.sense == Sense::Lower && !c.soft && c.alpha >= 1.0 && !c.allow_infeasible_start) {
    std::ostringstream msg;
    msg << "hard lower bound with alpha = " << c.alpha
        << " >= 1: removing material only lowers this quantity, so the bound is violated by the first volume "
           "step and the algorithm will terminate at the first iteration. Make it soft, lower alpha below 1, or "
           "set allow_infeasible_start";
    fail(msg.str());
  }
}

void validate_problem(const Problem& problem) {
  problem.material.validate();
  if (problem.load_cases.empty()) throw Error(ErrorCode::SemanticError, "at least one load case is required");
  std::set<std::string> ids;
  for (const auto& lc : problem.load_cases) {
    if (!ids.insert(lc.id).second) throw Error(ErrorCode::SemanticError, "duplicate load case id '" + lc.id + "'");
    check_supports(problem.domain, lc);
  }
  std::set<std::string> cids;
  for (const auto& c : problem.constraints) {
    validate_constraint(c);
    if (!cids.insert(c.id).second) throw Error(ErrorCode::SemanticError, "duplicate constraint id '" + c.id + "'");
    const auto it = std::find_if(problem.load_cases.begin(), problem.load_cases.end(),
                                 [&](const LoadCase& lc) { return lc.id == c.load_case; });
    if (it == problem.load_cases.end())
      throw Error(ErrorCode::SemanticError, "constraint '" + c.id + "' refers to unknown load case '" + c.load_case + "'");
    if (c.kind != ConstraintKind::Eigenvalue && it->loads.empty())
      throw Error(ErrorCode::SemanticError, "constraint '" + c.id + "' needs a loaded case; '" + c.load_case + "' has no loads");
  }
}

// ---------------------------------------------------------------------------

Analyzer::Analyzer(const Problem& problem) : problem_(&problem) {
  validate_problem(problem);
  for (const auto& lc : problem.load_cases) {
    constrained_.push_back(constrained_dofs(problem.domain, lc));
    forces_.push_back(assemble_force(problem.domain, lc));
  }
}

std::size_t Analyzer::case_index(const std::string& id) const {
  for (std::size_t i = 0; i < problem_->load_cases.size(); ++i)
    if (problem_->load_cases[i].id == id) return i;
  throw Error(ErrorCode::MissingAnalysis, "no load case '" + id + "'");
}

Evaluation Analyzer::evaluate(const Topology& topology, const Evaluation* warm) const {
  const auto& pb = *problem_;
  const auto& domain = pb.domain;
  if (topology.solid_flags().size() != domain.element_count())
    throw Error(ErrorCode::DimensionMismatch, "topology does not match the domain");
  if (warm && warm->cases.size() != pb.load_cases.size()) warm = nullptr;

  Evaluation ev;
  ev.topology = topology;
  ev.von_mises.assign(domain.element_count(), 0.0);
  std::vector<std::unique_ptr<StiffnessOperator>> ops;
  std::vector<DeflationSpace> deflations(pb.load_cases.size());
  for (std::size_t c = 0; c < pb.load_cases.size(); ++c) {
    auto k = std::make_unique<StiffnessOperator>(domain, topology, pb.material, constrained_[c], pb.solver.threads);
    if (pb.solver.deflation) deflations[c] = DeflationSpace::build(domain, topology, *k, pb.solver.block);
    std::span<const double> x0;
    if (warm) x0 = warm->cases[c].u;
    auto sol = with_context("load case '" + pb.load_cases[c].id + "' static solve", [&] {
      return solve_static(*k, forces_[c], pb.solver, pb.solver.deflation ? &deflations[c] : nullptr, x0);
    });
    CaseResult cr;
    cr.id = pb.load_cases[c].id;
    cr.compliance = dot(forces_[c], sol.x);
    cr.iterations = sol.iterations;
    cr.u = std::move(sol.x);
    cr.compliance_field = compliance_sensitivity(*k, cr.u);
    const auto vm = von_mises_field(*k, cr.u);
    for (std::size_t e = 0; e < vm.size(); ++e) ev.von_mises[e] = std::max(ev.von_mises[e], vm[e]);
    ev.total_compliance += cr.compliance;
    ev.cg_iterations += cr.iterations;
    ev.cases.push_back(std::move(cr));
    ops.push_back(std::move(k));
  }

  const bool warm_constraints = warm && warm->constraints.size() == pb.constraints.size();
  for (std::size_t i = 0; i < pb.constraints.size(); ++i) {
    const auto& spec = pb.constraints[i];
    const RitzBlock* start = warm_constraints ? &warm->constraints[i].block : nullptr;
    const std::size_t c = case_index(spec.load_case);
    const auto& k = *ops[c];
    const auto& u = ev.cases[c].u;
    ConstraintResult r;
    const std::string what = "constraint '" + spec.id + "'";
    switch (spec.kind) {
      case ConstraintKind::Compliance:
        r.q = ev.cases[c].compliance;
        r.field = ev.cases[c].compliance_field;
        break;
      case ConstraintKind::PNormStress: {
        r.q = pnorm_stress(k, u, spec.p);
        std::span<const double> x0;
        if (warm_constraints) x0 = warm->constraints[i].state;
        auto adj = with_context(what + " adjoint solve", [&] {
          return stress_adjoint(k, u, spec.p, pb.solver, pb.solver.deflation ? &deflations[c] : nullptr, x0);
        });
        r.field = stress_sensitivity(k, u, adj.x);
        r.state = std::move(adj.x);
        break;
      }
      case ConstraintKind::Eigenvalue: {
        EigenOptions eo = pb.eigen;
        eo.count = std::max(eo.count, spec.mode);
        const MassOperator mass(k);
        auto res = with_context(what + " modal solve", [&] { return solve_modal(k, mass, eo, pb.solver, start); });
        const auto n = std::size_t(std::min<int>(spec.mode, int(res.values.size())) - 1);
        r.q = res.values[n];
        r.field = eigen_sensitivity(k, res.vectors[n], r.q);
        r.state = std::move(res.vectors[n]);
        r.block = std::move(res.block);
        break;
      }
      case ConstraintKind::Buckling: {
        const auto g = geometric_stiffness(k, u);
        EigenOptions eo = pb.eigen;
        eo.count = 1;
        auto res = with_context(what + " buckling solve", [&] { return solve_buckling(k, g, eo, pb.solver, start); });
        r.q = res.values[0];
        if (res.no_positive_factor) {
          r.field.assign(domain.element_count(), 0.0);
        } else {
          r.field = buckling_sensitivity(k, g, res.vectors[0], r.q);
          r.state = std::move(res.vectors[0]);
        }
        r.block = std::move(res.block);
        break;
      }
    }
    ev.constraints.push_back(std::move(r));
  }
  return ev;
}

}  // namespace atls
