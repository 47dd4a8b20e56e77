#pragma once

#include <memory>
#include <string>
#include <vector>

#include "eigen_buckling.hpp"
#include "fea.hpp"
#include "sensitivity.hpp"
#include "voxel_mesh.hpp"

namespace atls {

enum class ConstraintKind { Compliance, PNormStress, Eigenvalue, Buckling };
enum class Sense { Upper, Lower };

// Compliance and stress are bounded above, eigenvalue and buckling below.
Sense natural_sense(ConstraintKind kind);
const char* to_string(ConstraintKind kind);
const char* to_string(Sense sense);

struct ConstraintSpec {
  std::string id;
  ConstraintKind kind = ConstraintKind::Compliance;
  double alpha = 1.0;  // bound is alpha * baseline value
  Sense sense = Sense::Upper;
  bool soft = false;
  std::string load_case;
  int p = 6;     // p-norm exponent
  int mode = 1;  // eigenvalue index, 1 = fundamental
  // Accept a hard lower bound with alpha >= 1 (fails at the first volume step).
  bool allow_infeasible_start = false;
};

// Throws SemanticError on a broken constraint.
void validate_constraint(const ConstraintSpec& spec);

struct Problem {
  Domain domain;
  Material material;
  std::vector<LoadCase> load_cases;
  std::vector<ConstraintSpec> constraints;
  SolverOptions solver;
  EigenOptions eigen;
};

// Checks cross references (constraint -> load case), supports and loads.
void validate_problem(const Problem& problem);

struct CaseResult {
  std::string id;
  std::vector<double> u;
  double compliance = 0.0;
  int iterations = 0;
  ScalarField compliance_field;
};

struct ConstraintResult {
  double q = 0.0;
  ScalarField field;
  std::vector<double> state;  // adjoint (stress) or mode (eigen, buckling)
  RitzBlock block;            // eigen and buckling: warm start for the next topology
};

// Everything computed for one topology.
struct Evaluation {
  Topology topology;
  std::vector<CaseResult> cases;
  std::vector<ConstraintResult> constraints;
  ScalarField von_mises;  // max over load cases
  double total_compliance = 0.0;
  int cg_iterations = 0;
};

class Analyzer {
 public:
  explicit Analyzer(const Problem& problem);

  // Static solves for every load case plus whatever the constraints need.
  // `warm` (a nearby topology's evaluation) seeds the iterative solvers.
  Evaluation evaluate(const Topology& topology, const Evaluation* warm = nullptr) const;

  const Problem& problem() const { return *problem_; }
  std::size_t case_index(const std::string& id) const;

 private:
  const Problem* problem_;
  std::vector<std::vector<std::uint8_t>> constrained_;
  std::vector<std::vector<double>> forces_;
};

}  // namespace atls
