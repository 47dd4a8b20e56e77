#include "level_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace atls {

ScalarField normalize_field(const ScalarField& field) {
  double peak = 0.0;
  for (double v : field) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return field;
  ScalarField out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i] / peak;
  return out;
}

CombinedLevelSet combine(const std::vector<ScalarField>& fields, const std::vector<double>& weights,
                         const std::vector<std::string>& ids) {
  if (fields.size() != weights.size() || ids.size() != weights.size())
    throw Error(ErrorCode::DimensionMismatch, "one weight and id per field is required");
  CombinedLevelSet out;
  bool any = false;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out.provenance.emplace_back(ids[i], weights[i]);
    if (!(weights[i] > 0.0)) continue;
    const auto n = normalize_field(fields[i]);
    if (out.values.empty()) out.values.assign(n.size(), 0.0);
    if (n.size() != out.values.size()) throw Error(ErrorCode::DimensionMismatch, "fields differ in length");
    for (std::size_t e = 0; e < n.size(); ++e) out.values[e] += weights[i] * n[e];
    any = true;
  }
  if (!any) throw Error(ErrorCode::AllWeightsZero, "every constraint weight is zero; the level set is empty");
  return out;
}

// ---------------------------------------------------------------------------
// Casting
// ---------------------------------------------------------------------------

namespace {

struct ColumnGeometry {
  int axis;
  int length;   // cells along the axis
  int plane;    // node layer separating the two sides
  int across[2];
};

ColumnGeometry column_geometry(const Domain& d, const CastingSpec& spec) {
  const int n[3] = {d.nx(), d.ny(), d.nz()};
  ColumnGeometry g{};
  g.axis = int(spec.axis);
  g.length = n[g.axis];
  g.plane = spec.two_sided ? spec.parting_plane : (spec.positive ? 0 : g.length);
  g.across[0] = n[(g.axis + 1) % 3];
  g.across[1] = n[(g.axis + 2) % 3];
  return g;
}

int cell(const Domain& d, const ColumnGeometry& g, int a, int b, int t) {
  int ijk[3];
  ijk[g.axis] = t;
  ijk[(g.axis + 1) % 3] = a;
  ijk[(g.axis + 2) % 3] = b;
  return d.element_index(ijk[0], ijk[1], ijk[2]);
}

// Visits the design cells of each column side, ordered away from the plane.
template <class F>
void for_each_column_side(const Domain& d, const ColumnGeometry& g, F&& f) {
  std::vector<int> run;
  for (int b = 0; b < g.across[1]; ++b)
    for (int a = 0; a < g.across[0]; ++a) {
      run.clear();
      for (int t = g.plane; t < g.length; ++t) {
        const int e = cell(d, g, a, b, t);
        if (d.in_design(e)) run.push_back(e);
      }
      f(run);
      run.clear();
      for (int t = g.plane - 1; t >= 0; --t) {
        const int e = cell(d, g, a, b, t);
        if (d.in_design(e)) run.push_back(e);
      }
      f(run);
    }
}

std::vector<int> plane_distance(const Domain& d, const CastingSpec& spec) {
  const auto g = column_geometry(d, spec);
  std::vector<int> dist(d.element_count(), 0);
  for_each_column_side(d, g, [&](const std::vector<int>& run) {
    for (std::size_t i = 0; i < run.size(); ++i) dist[std::size_t(run[i])] = int(i);
  });
  return dist;
}

}  // namespace

void validate_casting(const Domain& domain, const CastingSpec& spec) {
  const int n[3] = {domain.nx(), domain.ny(), domain.nz()};
  if (spec.two_sided && (spec.parting_plane < 0 || spec.parting_plane > n[int(spec.axis)])) {
    std::ostringstream msg;
    msg << "parting plane " << spec.parting_plane << " outside [0, " << n[int(spec.axis)] << "]";
    throw Error(ErrorCode::BadDimension, msg.str());
  }
}

ScalarField casting_project(const Domain& domain, const ScalarField& field, const CastingSpec& spec) {
  validate_casting(domain, spec);
  if (field.size() != domain.element_count()) throw Error(ErrorCode::DimensionMismatch, "field length mismatch");
  ScalarField out = field;
  for_each_column_side(domain, column_geometry(domain, spec), [&](const std::vector<int>& run) {
    for (std::size_t i = 1; i < run.size(); ++i) {
      const auto e = std::size_t(run[i]), prev = std::size_t(run[i - 1]);
      out[e] = std::min(out[e], out[prev]);
    }
  });
  return out;
}

std::size_t undercut_violations(const Domain& domain, const Topology& topology, const CastingSpec& spec) {
  validate_casting(domain, spec);
  std::size_t bad = 0;
  for_each_column_side(domain, column_geometry(domain, spec), [&](const std::vector<int>& run) {
    bool gap = false;
    for (int e : run) {
      if (!topology.solid(e)) gap = true;
      else if (gap) {
        ++bad;
        return;
      }
    }
  });
  return bad;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

std::size_t target_count(const Domain& domain, double target_vf) {
  if (!(target_vf > 0.0 && target_vf <= 1.0))
    throw Error(ErrorCode::PreconditionViolated, "target volume fraction must lie in (0, 1]");
  const auto n = double(domain.design_count());
  return std::max<std::size_t>(1, std::size_t(std::llround(target_vf * n)));
}

Topology extract(const Domain& domain, const ScalarField& levelset, std::size_t count,
                 const std::optional<CastingSpec>& casting) {
  if (levelset.size() != domain.element_count()) throw Error(ErrorCode::DimensionMismatch, "level set length mismatch");
  const ScalarField values = casting ? casting_project(domain, levelset, *casting) : levelset;
  std::vector<int> dist;
  if (casting) dist = plane_distance(domain, *casting);
  std::vector<int> ids;
  ids.reserve(domain.design_count());
  for (std::size_t e = 0; e < domain.element_count(); ++e) {
    if (!domain.in_design(int(e))) continue;
    if (!std::isfinite(values[e])) throw Error(ErrorCode::PreconditionViolated, "level set is not finite");
    ids.push_back(int(e));
  }
  count = std::min(count, ids.size());
  auto before = [&](int a, int b) {
    const double va = values[std::size_t(a)], vb = values[std::size_t(b)];
    if (va != vb) return va > vb;
    if (!dist.empty() && dist[std::size_t(a)] != dist[std::size_t(b)])
      return dist[std::size_t(a)] < dist[std::size_t(b)];
    return a < b;
  };
  if (count < ids.size()) std::nth_element(ids.begin(), ids.begin() + std::ptrdiff_t(count), ids.end(), before);
  std::vector<std::uint8_t> solid(domain.element_count(), 0);
  for (std::size_t i = 0; i < count; ++i) solid[std::size_t(ids[i])] = 1;
  return Topology(domain, std::move(solid));
}

Topology extract(const Domain& domain, const ScalarField& levelset, double target_vf,
                 const std::optional<CastingSpec>& casting) {
  return extract(domain, levelset, target_count(domain, target_vf), casting);
}

// ---------------------------------------------------------------------------
// Fixed point
// ---------------------------------------------------------------------------

namespace {

double relative_change(const std::vector<double>& now, const std::vector<double>& before) {
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size() && i < before.size(); ++i) {
    if (before[i] == 0.0) {
      if (now[i] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, std::abs(now[i] - before[i]) / std::abs(before[i]));
  }
  return worst;
}

}  // namespace

FixedPointResult fixed_point(const Domain& domain, const Topology& start, std::size_t count,
                             const FixedPointHooks& hooks, const FixedPointOptions& options,
                             const std::optional<CastingSpec>& casting) {
  if (options.max_iterations < 1) throw Error(ErrorCode::PreconditionViolated, "inner iteration cap must be >= 1");
  FixedPointResult r;
  r.topology = start;
  auto c = hooks.analyze(start);
  if (count == start.solid_count()) {
    r.converged = true;
    r.iterations = 1;
    r.compliance.push_back(c);
    r.changed.push_back(0);
    return r;
  }
  const double n = double(domain.design_count());
  for (int it = 1; it <= options.max_iterations; ++it) {
    Topology next = extract(domain, hooks.level_set(), count, casting);
    const std::size_t changed = symmetric_difference(next, r.topology);
    auto c_next = hooks.analyze(next);
    r.iterations = it;
    r.compliance.push_back(c_next);
    r.changed.push_back(changed);
    r.topology = std::move(next);
    if (it >= 2 && (relative_change(c_next, c) < options.compliance_tol || double(changed) < options.topology_tol * n)) {
      r.converged = true;
      break;
    }
    c = std::move(c_next);
  }
  return r;
}

}  // namespace atls
