#include "qhpc/fabric.hpp"

#include <gtest/gtest.h>

#include <random>

#include "qhpc/errors.hpp"

namespace qhpc {
namespace {

const FabricConfig kFabric{};

TEST(Fabric, PayloadBytesExact) {
  EXPECT_EQ(make_qrtp_payload(1000000, 16).bytes, 2000000);
  EXPECT_EQ(make_qrtp_payload(1024, 8).bytes, 1024);
  EXPECT_EQ(make_qrtp_payload(10, 9).bytes, 20);  // 9 qubits pack into 2 bytes
  EXPECT_EQ(make_qrtp_payload(0, 16).bytes, 0);
}

TEST(Fabric, ZeroPayloadIsPureRtt) {
  EXPECT_EQ(transfer_time_s(0, kFabric.intra_node), 4e-6);
  EXPECT_EQ(transfer_time_s(0, kFabric.wan), 0.05);
}

TEST(Fabric, TransferWorkedExamples) {
  // 10^6 shots x 16 qubits = 2,000,000 bytes.
  double intra = transfer_time_s(2000000, kFabric.intra_node);
  EXPECT_DOUBLE_EQ(intra, 4e-6 + 2000000.0 / 8e9);
  EXPECT_NEAR(intra, 2.54e-4, 1e-9);

  double wan = transfer_time_s(2000000, kFabric.wan);
  EXPECT_DOUBLE_EQ(wan, 0.05 + 2000000.0 / 1.25e8);
  EXPECT_NEAR(wan, 0.066, 1e-12);
}

TEST(Fabric, QpuExecTimeWorkedExamples) {
  FabricConfig no_overhead = kFabric;
  no_overhead.per_shot_overhead_s = 0.0;
  EXPECT_DOUBLE_EQ(qpu_exec_time_s(1, 1, Modality::superconducting, no_overhead),
                   5e-8);

  double t = qpu_exec_time_s(1024, 100, Modality::superconducting, kFabric);
  EXPECT_DOUBLE_EQ(t, 1024.0 * 100.0 * 5e-8 + 1024.0 * 1e-3);
  EXPECT_NEAR(t, 1.029, 5e-4);

  double ion = qpu_exec_time_s(500, 40, Modality::trapped_ion, no_overhead);
  double sc = qpu_exec_time_s(500, 40, Modality::superconducting, no_overhead);
  EXPECT_DOUBLE_EQ(ion / sc, 200.0);
}

TEST(Fabric, FeedbackRttTierRouting) {
  QrtpPayload p = make_qrtp_payload(1024, 8);
  double co = feedback_rtt_s(Tier::r3, p, kFabric);
  EXPECT_DOUBLE_EQ(co, 4e-6 + 1024.0 / 8e9);
  EXPECT_LT(co, 1e-3);

  double wan = feedback_rtt_s(Tier::r4, p, kFabric);
  EXPECT_GE(wan, 0.05);
  EXPECT_GT(wan, 1e-3);

  QrtpPayload empty = make_qrtp_payload(0, 8);
  EXPECT_EQ(feedback_rtt_s(Tier::r3, empty, kFabric), 4e-6);

  EXPECT_THROW(feedback_rtt_s(Tier::r1, p, kFabric), DomainError);
}

TEST(Fabric, TransferMonotonicity) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::int64_t> bytes(0, 1 << 30);
  for (int i = 0; i < 200; ++i) {
    std::int64_t b = bytes(gen);
    std::int64_t more = b + 1 + bytes(gen) % 1024;
    // nondecreasing in payload
    EXPECT_LE(transfer_time_s(b, kFabric.intra_node),
              transfer_time_s(more, kFabric.intra_node));
    // nondecreasing in rtt, nonincreasing in bandwidth
    LinkClass slow = kFabric.intra_node;
    slow.rtt_s *= 3;
    EXPECT_LE(transfer_time_s(b, kFabric.intra_node), transfer_time_s(b, slow));
    LinkClass fat = kFabric.intra_node;
    fat.bandwidth_bytes_per_s *= 4;
    EXPECT_GE(transfer_time_s(b, kFabric.intra_node), transfer_time_s(b, fat));
  }
}

TEST(Fabric, TierOrderingForEveryPayload) {
  std::mt19937_64 gen(6);
  std::uniform_int_distribution<std::int64_t> shots(0, 1000000);
  for (int i = 0; i < 200; ++i) {
    QrtpPayload p = make_qrtp_payload(shots(gen), 1 + static_cast<int>(gen() % 64));
    EXPECT_LT(feedback_rtt_s(Tier::r3, p, kFabric),
              feedback_rtt_s(Tier::r4, p, kFabric));
  }
}

TEST(Fabric, SubMillisecondBudgetCoLocated) {
  for (std::int64_t bytes : {0L, 1L, 512L, 4096L, 100000L, 999999L, 1000000L}) {
    EXPECT_LT(transfer_time_s(bytes, kFabric.intra_node), 1e-3) << bytes;
  }
}

TEST(Fabric, LinkDefaultsOrdered) {
  EXPECT_LT(kFabric.intra_node.rtt_s, kFabric.inter_node.rtt_s);
  EXPECT_LT(kFabric.inter_node.rtt_s, kFabric.wan.rtt_s);
}

}  // namespace
}  // namespace qhpc
