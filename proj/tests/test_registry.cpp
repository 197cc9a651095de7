#include "qhpc/registry.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "qhpc/errors.hpp"
#include "testutil.hpp"

namespace qhpc {
namespace {

using testutil::r1;
using testutil::r2;
using testutil::r3;
using testutil::r4;

TEST(Registry, TierInvariants) {
  EXPECT_NO_THROW(validate_record(r1("a", 16)));
  EXPECT_NO_THROW(validate_record(r2("b", 16, 2)));
  EXPECT_NO_THROW(validate_record(
      r3("c", Modality::superconducting, 16, Connectivity::grid, 0.99)));
  EXPECT_NO_THROW(validate_record(
      r4("d", Modality::trapped_ion, 32, Connectivity::all_to_all, 0.99)));

  ResourceRecord bad = r1("x", 8);
  bad.gpu_count = 1;
  EXPECT_THROW(validate_record(bad), ValidationError);  // R1 with GPUs

  bad = r2("x", 8, 0);
  EXPECT_THROW(validate_record(bad), ValidationError);  // R2 without GPUs

  bad = r1("x", 8);
  bad.qpu = QpuProfile{};
  EXPECT_THROW(validate_record(bad), ValidationError);  // R1 with a QPU

  bad = r3("x", Modality::superconducting, 16, Connectivity::grid, 0.99);
  bad.qpu.reset();
  EXPECT_THROW(validate_record(bad), ValidationError);  // R3 without a QPU

  bad = r3("x", Modality::superconducting, 16, Connectivity::grid, 0.99);
  bad.access_latency_class = LinkKind::wan;
  EXPECT_THROW(validate_record(bad), ValidationError);  // R3 must be intra_node

  bad = r4("x", Modality::superconducting, 16, Connectivity::grid, 0.99);
  bad.access_latency_class = LinkKind::intra_node;
  EXPECT_THROW(validate_record(bad), ValidationError);  // R4 must be wan

  bad = r3("x", Modality::superconducting, 0, Connectivity::grid, 0.99);
  EXPECT_THROW(validate_record(bad), ValidationError);  // qubit_count >= 1

  bad = r3("x", Modality::superconducting, 16, Connectivity::grid, 1.5);
  EXPECT_THROW(validate_record(bad), ValidationError);  // fidelity in (0,1]
}

TEST(Registry, ConnectivityTable) {
  using C = Connectivity;
  struct Row {
    C request;
    bool on_linear, on_ring, on_grid, on_heavy_hex, on_all;
  };
  // linear < {ring, heavy_hex} < grid < all_to_all
  const Row rows[] = {
      {C::linear, true, true, true, true, true},
      {C::ring, false, true, true, false, true},
      {C::heavy_hex, false, false, true, true, true},
      {C::grid, false, false, true, false, true},
      {C::all_to_all, false, false, false, false, true},
  };
  for (const Row& row : rows) {
    EXPECT_EQ(connectivity_satisfiable(row.request, C::linear), row.on_linear);
    EXPECT_EQ(connectivity_satisfiable(row.request, C::ring), row.on_ring);
    EXPECT_EQ(connectivity_satisfiable(row.request, C::grid), row.on_grid);
    EXPECT_EQ(connectivity_satisfiable(row.request, C::heavy_hex), row.on_heavy_hex);
    EXPECT_EQ(connectivity_satisfiable(row.request, C::all_to_all), row.on_all);
  }
}

TEST(Registry, ZeroSigmaWalkIsConstant) {
  DriftConfig drift;
  drift.step_sigma = 0.0;
  CalibrationWalk walk(99, drift);
  CalibrationProfile p;
  p.two_qubit_fidelity = 0.987;
  p.nominal_fidelity = 0.987;
  for (int i = 1; i <= 20; ++i) {
    p = walk.step(p, 900.0 * i).profile;
    EXPECT_DOUBLE_EQ(p.two_qubit_fidelity, 0.987);
    EXPECT_DOUBLE_EQ(p.timestamp_s, 900.0 * i);
  }
}

// Golden trajectory: recorded once from the seeded walk and pinned.
TEST(Registry, GoldenDriftTrajectory) {
  const double kGolden[10] = {
      0.98759391150099074, 0.99006683078216684, 0.99193960212641596,
      0.98826732195120637, 0.9820582745390114,  0.96740436239372984,
      0.96457780557630812, 0.96748613134925376, 0.96391406931451729,
      0.97528190185023222,
  };
  DriftConfig drift;
  drift.step_sigma = 0.005;
  CalibrationWalk walk(42, drift);
  CalibrationProfile p;
  p.two_qubit_fidelity = 0.99;
  p.nominal_fidelity = 0.99;
  for (int i = 0; i < 10; ++i) {
    p = walk.step(p, 900.0 * (i + 1)).profile;
    EXPECT_DOUBLE_EQ(p.two_qubit_fidelity, kGolden[i]) << "poll " << i;
  }
}

TEST(Registry, SameSeedSameTrajectory) {
  DriftConfig drift;
  drift.step_sigma = 0.01;
  for (std::uint64_t seed : {1ull, 7ull, 123456789ull}) {
    CalibrationWalk a(seed, drift), b(seed, drift);
    CalibrationProfile pa, pb;
    for (int i = 1; i <= 50; ++i) {
      pa = a.step(pa, 900.0 * i).profile;
      pb = b.step(pb, 900.0 * i).profile;
      ASSERT_EQ(pa.two_qubit_fidelity, pb.two_qubit_fidelity);
    }
  }
}

TEST(Registry, RecalibrationResetMonteCarlo) {
  // A poll crossing a recalibration boundary restores nominal before noise:
  // the result stays within 4 sigma of nominal essentially always.
  DriftConfig drift;
  drift.step_sigma = 0.005;
  drift.recalibration_period_s = 86400;
  int within = 0;
  const int kTrials = 1000;
  for (int seed = 0; seed < kTrials; ++seed) {
    CalibrationWalk walk(static_cast<std::uint64_t>(seed), drift);
    CalibrationProfile p;
    p.two_qubit_fidelity = 0.6;  // far from nominal
    p.nominal_fidelity = 0.99;
    p.timestamp_s = 86400.0 - 900.0;
    CalibrationWalk::StepResult r = walk.step(p, 86400.0);
    EXPECT_TRUE(r.recalibrated);
    if (std::abs(r.profile.two_qubit_fidelity - 0.99) <= 4 * 0.005) ++within;
  }
  EXPECT_GE(within, 998);
}

TEST(Registry, NoResetInsidePeriod) {
  DriftConfig drift;
  drift.step_sigma = 0.0;
  CalibrationWalk walk(1, drift);
  CalibrationProfile p;
  p.two_qubit_fidelity = 0.7;
  p.nominal_fidelity = 0.99;
  p.timestamp_s = 1800;
  CalibrationWalk::StepResult r = walk.step(p, 2700);
  EXPECT_FALSE(r.recalibrated);
  EXPECT_DOUBLE_EQ(r.profile.two_qubit_fidelity, 0.7);
}

TEST(Registry, FidelityClampedToFloorAndOne) {
  DriftConfig drift;
  drift.step_sigma = 5.0;  // huge steps force clamping
  drift.fidelity_floor = 0.5;
  CalibrationWalk walk(4, drift);
  CalibrationProfile p;
  p.two_qubit_fidelity = 0.9;
  p.nominal_fidelity = 0.9;
  for (int i = 1; i <= 100; ++i) {
    p = walk.step(p, 900.0 * i).profile;
    EXPECT_GE(p.two_qubit_fidelity, 0.5);
    EXPECT_LE(p.two_qubit_fidelity, 1.0);
  }
}

TEST(Registry, StaleClockRejected) {
  CalibrationWalk walk(1, DriftConfig{});
  CalibrationProfile p;
  p.timestamp_s = 1000;
  EXPECT_THROW(walk.step(p, 999), StaleClockError);
}

TEST(Registry, PollAllOrderAndStaleness) {
  std::vector<ResourceRecord> records = {
      r3("qpu-b", Modality::superconducting, 16, Connectivity::grid, 0.99),
      r3("qpu-a", Modality::trapped_ion, 32, Connectivity::all_to_all, 0.995),
      r1("cpu", 8),
  };
  DriftConfig drift;
  drift.step_sigma = 0.001;
  ResourceRegistry reg(records, 13, drift);
  std::vector<PollResult> polls = reg.poll_all(900);
  ASSERT_EQ(polls.size(), 2u);
  EXPECT_EQ(polls[0].resource_id, "qpu-a");  // id order
  EXPECT_EQ(polls[1].resource_id, "qpu-b");
  for (const ResourceRecord& r : reg.records()) {
    if (r.qpu) {
      EXPECT_DOUBLE_EQ(r.qpu->calibration.timestamp_s, 900.0);
    }
  }
}

TEST(Registry, QueryEmptyRegistry) {
  ResourceRegistry reg({}, 0, DriftConfig{});
  EXPECT_TRUE(reg.query(QueryPredicate{}).empty());
}

TEST(Registry, QueryConnectivityEmbedding) {
  ResourceRegistry reg(
      {r3("hh", Modality::superconducting, 127, Connectivity::heavy_hex, 0.99)},
      0, DriftConfig{});
  QueryPredicate all_to_all;
  all_to_all.connectivity = Connectivity::all_to_all;
  EXPECT_TRUE(reg.query(all_to_all).empty());
  QueryPredicate lin;
  lin.connectivity = Connectivity::linear;
  EXPECT_EQ(reg.query(lin).size(), 1u);
}

TEST(Registry, QueryBruteForceOracle) {
  std::vector<ResourceRecord> records = {
      r1("cpu0", 64),
      r2("gpu0", 32, 4),
      r3("qpu0", Modality::superconducting, 40, Connectivity::heavy_hex, 0.99),
      r3("qpu1", Modality::trapped_ion, 56, Connectivity::all_to_all, 0.995),
      r4("cloud0", Modality::superconducting, 127, Connectivity::heavy_hex, 0.985),
  };
  ResourceRegistry reg(records, 0, DriftConfig{});

  std::vector<QueryPredicate> predicates;
  QueryPredicate p;
  p.min_qubits = 50;
  p.tier_set = {Tier::r3, Tier::r4};
  predicates.push_back(p);
  p = QueryPredicate{};
  p.modalities = {Modality::trapped_ion};
  predicates.push_back(p);
  p = QueryPredicate{};
  p.connectivity = Connectivity::grid;
  predicates.push_back(p);
  p = QueryPredicate{};
  p.tier_set = {Tier::r1, Tier::r2};
  predicates.push_back(p);

  for (const QueryPredicate& pred : predicates) {
    // oracle: exhaustive filter over the raw record list
    std::vector<std::string> expected;
    for (const ResourceRecord& r : records) {
      if (!pred.tier_set.empty() && !pred.tier_set.contains(r.tier)) continue;
      if (pred.min_qubits > 0 && (!r.qpu || r.qpu->qubit_count < pred.min_qubits))
        continue;
      if (pred.connectivity &&
          (!r.qpu ||
           !testutil::oracle_satisfiable(*pred.connectivity, r.qpu->connectivity)))
        continue;
      if (!pred.modalities.empty() &&
          std::find(pred.modalities.begin(), pred.modalities.end(),
                    Modality::best_available) == pred.modalities.end()) {
        if (!r.qpu || std::find(pred.modalities.begin(), pred.modalities.end(),
                                r.qpu->modality) == pred.modalities.end())
          continue;
      }
      expected.push_back(r.resource_id);
    }
    std::sort(expected.begin(), expected.end());

    std::vector<std::string> got;
    for (const ResourceRecord& r : reg.query(pred)) got.push_back(r.resource_id);
    EXPECT_EQ(got, expected);
  }
}

TEST(Registry, DuplicateIdsRejected) {
  EXPECT_THROW(ResourceRegistry({r1("a", 8), r1("a", 16)}, 0, DriftConfig{}),
               ValidationError);
}

TEST(Registry, SnapshotTextShape) {
  ResourceRegistry reg(
      {r3("q", Modality::photonic, 8, Connectivity::linear, 0.95), r1("c", 4)}, 0,
      DriftConfig{});
  std::string snap = reg.snapshot_text();
  EXPECT_NE(snap.find("resource c R1 4 0"), std::string::npos);
  EXPECT_NE(snap.find("resource q R3"), std::string::npos);
  EXPECT_NE(snap.find("qpu photonic 8 linear"), std::string::npos);
}

}  // namespace
}  // namespace qhpc
