#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "error.hpp"
#include "fixtures.hpp"
#include "log.hpp"
#include "voxel_mesh.hpp"

using namespace atls;
using atls::testing::box_nodes;
using atls::testing::grid;

TEST(BuildDomain, CountsElementsNodesDofs) {
  const auto d = Domain::build(grid(2, 1, 1));
  EXPECT_EQ(d.element_count(), 2u);
  EXPECT_EQ(d.node_count(), 12u);
  EXPECT_EQ(d.dof_count(), 36u);
  EXPECT_EQ(d.design_count(), 2u);
}

TEST(BuildDomain, RejectsBadDimensions) {
  auto c = grid(0, 1, 1);
  try {
    Domain::build(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadDimension);
  }
  c = grid(1, 1, 1, -1.0);
  EXPECT_THROW(Domain::build(c), Error);
}

TEST(BuildDomain, SubtractingEverythingIsEmpty) {
  auto c = grid(3, 3, 1);
  c.mask.push_back({CsgOp::Subtract, BoxShape{{-10, -10, -10}, {10, 10, 10}}});
  try {
    Domain::build(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDomain);
  }
}

// Centroid-inclusion oracle: the L footprint covers 64% of a 25x25 grid; the
// masked count must agree with area fraction times grid size within one
// boundary layer of elements.
TEST(BuildDomain, LBracketCountMatchesAreaFraction) {
  auto c = grid(25, 25, 2, 1.0);
  c.mask.push_back({CsgOp::Subtract, BoxShape{{10, 10, -1}, {30, 30, 5}}});
  c.mask.push_back({CsgOp::Add, CylinderShape{Axis::Z, {10.0, 10.0}, 1.7, -1, 5}});
  const auto d = Domain::build(c);

  std::size_t brute = 0;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 25; ++j)
      for (int i = 0; i < 25; ++i) {
        const double x = i + 0.5, y = j + 0.5;
        const bool arm = x <= 10 || y <= 10;
        const bool fillet = (x - 10) * (x - 10) + (y - 10) * (y - 10) <= 1.7 * 1.7;
        brute += (arm || fillet) ? 1 : 0;
      }
  EXPECT_EQ(d.design_count(), brute);

  const double area_fraction = 1.0 - (15.0 * 15.0) / (25.0 * 25.0);
  const double expected = area_fraction * double(d.element_count());
  const double layer = 2.0 * (15 + 15) * 2;  // one element layer along the cut, both z layers
  EXPECT_LE(std::abs(double(d.design_count()) - expected), layer);
}

TEST(BuildDomain, InactiveNodesOnlyOutsideDesign) {
  auto c = grid(4, 1, 1);
  c.mask.push_back({CsgOp::Subtract, BoxShape{{2, -1, -1}, {5, 2, 2}}});
  const auto d = Domain::build(c);
  EXPECT_EQ(d.design_count(), 2u);
  EXPECT_TRUE(d.node_active(d.node_index(2, 0, 0)));
  EXPECT_FALSE(d.node_active(d.node_index(3, 0, 0)));
  EXPECT_FALSE(d.node_active(d.node_index(4, 1, 1)));
}

TEST(Select, WholeDomainBoxSelectsAllNodes) {
  const auto d = Domain::build(grid(2, 1, 1));
  const auto ids = select(d, box_nodes({-1, -1, -1}, {3, 2, 2}));
  ASSERT_EQ(ids.size(), d.node_count());
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], int(i));
}

TEST(Select, ThinBoxAtFaceSelectsFourNodes) {
  const auto d = Domain::build(grid(2, 1, 1));
  const auto ids = select(d, box_nodes({0, -1, -1}, {0, 2, 2}));
  EXPECT_EQ(ids.size(), 4u);
  for (int n : ids) EXPECT_EQ(d.node_ijk(n)[0], 0);
}

TEST(Select, ZeroRadiusSphereAtNode) {
  const auto d = Domain::build(grid(2, 1, 1));
  const int target = d.node_index(1, 1, 0);
  RegionSelector s{SphereShape{d.node_position(target), 0.0}, SelectTarget::Nodes};
  const auto ids = select(d, s);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], target);
}

TEST(Select, DisjointFromDomainIsEmpty) {
  const auto d = Domain::build(grid(2, 1, 1));
  EXPECT_TRUE(select(d, box_nodes({10, 10, 10}, {11, 11, 11})).empty());
}

TEST(Select, IdListSortedUniqueAndInRange) {
  const auto d = Domain::build(grid(2, 1, 1));
  RegionSelector s{IdList{{5, 1, 5, 99, -3, 0}}, SelectTarget::Elements};
  EXPECT_EQ(select(d, s), (std::vector<int>{0, 1}));
  s.target = SelectTarget::Nodes;
  EXPECT_EQ(select(d, s), (std::vector<int>{0, 1, 5}));
}

TEST(Select, ElementTargetUsesCentroids) {
  const auto d = Domain::build(grid(4, 2, 1));
  RegionSelector s{BoxShape{{0, 0, 0}, {2, 2, 1}}, SelectTarget::Elements};
  EXPECT_EQ(select(d, s), (std::vector<int>{0, 1, 4, 5}));
}

TEST(SelectProperties, IdempotentAndPartitionUnion) {
  const auto d = Domain::build(grid(5, 4, 3));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 5.5);
  for (int t = 0; t < 20; ++t) {
    const double cut = u(rng);
    const auto a = select(d, box_nodes({-1, -1, -1}, {cut, 10, 10}));
    const auto b = select(d, box_nodes({cut + 1e-3, -1, -1}, {10, 10, 10}));
    EXPECT_EQ(a, select(d, box_nodes({-1, -1, -1}, {cut, 10, 10})));
    std::vector<int> all(a);
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    EXPECT_EQ(all.size(), d.node_count());
  }
}

TEST(DofNumbering, IsBijection) {
  const auto d = Domain::build(grid(3, 2, 2));
  std::set<int> seen;
  for (std::size_t n = 0; n < d.node_count(); ++n)
    for (int a = 0; a < 3; ++a) {
      const int dof = dof_index(int(n), a);
      EXPECT_EQ(dof / 3, int(n));
      EXPECT_EQ(dof % 3, a);
      seen.insert(dof);
    }
  EXPECT_EQ(seen.size(), d.dof_count());
  EXPECT_EQ(*seen.rbegin(), int(d.dof_count()) - 1);
}

namespace {

LoadCase clamp_x0(const Domain& d) {
  LoadCase lc;
  lc.id = "c";
  lc.dirichlet.push_back({atls::testing::x_face(d, 0.0), {true, true, true}});
  return lc;
}

}  // namespace

TEST(AssembleForce, TotalSplitsEqually) {
  const auto d = Domain::build(grid(2, 1, 1));
  auto lc = clamp_x0(d);
  lc.loads.push_back({atls::testing::x_face(d, 2.0), {0, 0, -100}, LoadDistribution::Total});
  const auto f = assemble_force(d, lc);
  for (int n : select(d, atls::testing::x_face(d, 2.0))) {
    EXPECT_DOUBLE_EQ(f[std::size_t(dof_index(n, 2))], -25.0);
    EXPECT_DOUBLE_EQ(f[std::size_t(dof_index(n, 0))], 0.0);
  }
}

TEST(AssembleForce, PerNodeResultant) {
  const auto d = Domain::build(grid(2, 1, 1));
  auto lc = clamp_x0(d);
  RegionSelector three{IdList{{d.node_index(2, 0, 0), d.node_index(2, 1, 0), d.node_index(1, 1, 1)}},
                       SelectTarget::Nodes};
  lc.loads.push_back({three, {1, 0, 0}, LoadDistribution::PerNode});
  const auto f = assemble_force(d, lc);
  double rx = 0, ry = 0;
  for (std::size_t n = 0; n < d.node_count(); ++n) {
    rx += f[3 * n];
    ry += f[3 * n + 1];
  }
  EXPECT_DOUBLE_EQ(rx, 3.0);
  EXPECT_DOUBLE_EQ(ry, 0.0);
}

TEST(AssembleForce, LoadInsideSupportCancelsWithWarning) {
  const auto d = Domain::build(grid(2, 1, 1));
  auto lc = clamp_x0(d);
  lc.loads.push_back({atls::testing::x_face(d, 0.0), {5, 5, 5}, LoadDistribution::Total});
  std::vector<std::string> warnings;
  auto previous = set_log_sink([&](LogLevel level, const std::string& m) {
    if (level == LogLevel::Warning) warnings.push_back(m);
  });
  const auto f = assemble_force(d, lc);
  set_log_sink(previous);
  EXPECT_TRUE(std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; }));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(AssembleForce, EmptyLoadRegionThrows) {
  const auto d = Domain::build(grid(2, 1, 1));
  auto lc = clamp_x0(d);
  lc.loads.push_back({box_nodes({9, 9, 9}, {10, 10, 10}), {1, 0, 0}, LoadDistribution::Total});
  try {
    assemble_force(d, lc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLoadRegion);
  }
}

TEST(AssembleForce, LinearInLoadMagnitude) {
  const auto d = Domain::build(grid(3, 2, 2));
  auto lc = clamp_x0(d);
  lc.loads.push_back({atls::testing::x_face(d, 3.0), {0.3, -1.7, 2.9}, LoadDistribution::Total});
  lc.loads.push_back({box_nodes({1, 0, 2}, {2, 2, 2}), {1.1, 0, -0.4}, LoadDistribution::PerNode});
  const auto f1 = assemble_force(d, lc);
  const double c = 3.75;
  for (auto& l : lc.loads)
    for (auto& v : l.force) v *= c;
  const auto fc = assemble_force(d, lc);
  for (std::size_t i = 0; i < f1.size(); ++i) EXPECT_EQ(fc[i], c * f1[i]);
}

TEST(Supports, CollinearSupportIsRejected) {
  const auto d = Domain::build(grid(3, 1, 1));
  LoadCase lc;
  lc.id = "line";
  lc.dirichlet.push_back({box_nodes({0, 0, 0}, {3, 0, 0}), {true, true, true}});
  EXPECT_THROW(check_supports(d, lc), Error);
  lc.dirichlet.push_back({box_nodes({0, 1, 0}, {0, 1, 0}), {true, false, false}});
  EXPECT_NO_THROW(check_supports(d, lc));
}

TEST(TopologyBasics, VolumeFractionTracksMutations) {
  const auto d = Domain::build(grid(4, 1, 1));
  Topology t(d);
  EXPECT_DOUBLE_EQ(volume_fraction(t), 1.0);
  t.set_solid(d, 0, false);
  t.set_solid(d, 3, false);
  EXPECT_DOUBLE_EQ(volume_fraction(t), 0.5);
  EXPECT_DOUBLE_EQ(t.occupancy(0), kVoidOccupancy);
  EXPECT_DOUBLE_EQ(t.occupancy(1), 1.0);
  t.set_solid(d, 3, false);
  EXPECT_EQ(t.solid_count(), 2u);
}

TEST(TopologyBasics, NonDesignElementsStayVoid) {
  auto c = grid(4, 1, 1);
  c.mask.push_back({CsgOp::Subtract, BoxShape{{3, -1, -1}, {5, 2, 2}}});
  const auto d = Domain::build(c);
  Topology t(d);
  EXPECT_FALSE(t.solid(3));
  EXPECT_DOUBLE_EQ(t.volume_fraction(), 1.0);
  EXPECT_THROW(t.set_solid(d, 3, true), Error);
}
