#include <gtest/gtest.h>

#include "pomp/errors.hpp"
#include "pomp/extract.hpp"

namespace pomp {
namespace {

ProgramMachinePolicy RandomPolicy(const ModeSet& modes, std::uint64_t seed, double scale) {
  ProgramMachinePolicy p(modes, ProgramMachinePolicy::DefaultNet(modes.size(), 8, 8),
                         MachineKind::kPomp);
  Rng rng(seed);
  p.net().Initialize(rng);
  p.net().params() *= scale;
  return p;
}

// Every weight zero, so the output is the policy-head bias alone.
ProgramMachinePolicy ConstantPolicy(const ModeSet& modes, int choice) {
  ProgramMachinePolicy p(modes, ProgramMachinePolicy::DefaultNet(modes.size(), 8, 8),
                         MachineKind::kPomp);
  p.net().params().setZero();
  const LayerInfo& head = p.net().manifest()[4];
  p.net().params()(head.offset + static_cast<long>(head.rows) * head.cols + choice) = 1.0;
  return p;
}

std::vector<std::uint64_t> Seeds(std::uint64_t first, int n) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
  return s;
}

RolloutOptions Short() {
  RolloutOptions o;
  o.max_programs = 40;
  return o;
}

std::vector<Eigen::VectorXd> RandomFeatures(int n, Rng& rng) {
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd f(32);
    for (int j = 0; j < 32; ++j) f(j) = std::max(0.0, rng.Normal(1.0) + 0.1 * j);
    out.push_back(f);
  }
  return out;
}

TEST(QuantizerTest, ZeroFeaturesQuantizeToZero) {
  Rng rng(1);
  const Quantizer q = Quantizer::Calibrate(RandomFeatures(200, rng), 8);
  EXPECT_EQ(q.Quantize(Eigen::VectorXd::Zero(32)), QuantizedObservation(8, 0));
}

TEST(QuantizerTest, RepresentativeIsIdempotent) {
  Rng rng(2);
  const auto features = RandomFeatures(300, rng);
  const Quantizer q = Quantizer::Calibrate(features, 6);
  for (const auto& f : features) {
    const QuantizedObservation bucket = q.Quantize(f);
    EXPECT_EQ(q.Quantize(q.Representative(bucket)), bucket);
  }
}

TEST(QuantizerTest, ProjectionIsOrthonormal) {
  Rng rng(3);
  const Quantizer q = Quantizer::Calibrate(RandomFeatures(100, rng), 8);
  EXPECT_LT((q.projection().transpose() * q.projection() - Eigen::MatrixXd::Identity(8, 8)).norm(),
            1e-9);
}

TEST(QuantizerTest, UncalibratedThrows) {
  const Quantizer q;
  EXPECT_THROW(q.Quantize(Eigen::VectorXd::Zero(32)), NotCalibrated);
  EXPECT_THROW(Quantizer::Calibrate({}, 4), NotCalibrated);
}

TEST(ExtractTest, CalibrationFidelityIsOneWithoutConflicts) {
  const ModeSet modes = PsmpModes(TaskId::kHarvester);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const ProgramMachinePolicy p = RandomPolicy(modes, s, 4.0);
    const auto episodes =
        CollectDecisions(p, MakeFactory(TaskId::kHarvester), Seeds(10, 8), Short());
    const ExtractedMachine m = BuildTable(p, episodes, 16);
    const FidelityReport r = Fidelity(m, episodes);
    if (m.conflicts() == 0) EXPECT_EQ(r.agree, r.total);
    EXPECT_LE(m.state_count(), m.raw_state_count());
  }
}

TEST(ExtractTest, MinimizationPreservesBehavior) {
  const ModeSet modes = PsmpModes(TaskId::kSeeder);
  const ProgramMachinePolicy p = RandomPolicy(modes, 7, 3.0);
  const auto episodes = CollectDecisions(p, MakeFactory(TaskId::kSeeder), Seeds(0, 8), Short());
  const ExtractedMachine m = BuildTable(p, episodes, 8);
  for (const auto& ep : episodes)
    for (const auto& d : ep)
      EXPECT_EQ(m.Predict(d.current_mode, d.features), m.PredictRaw(d.current_mode, d.features));
}

TEST(ExtractTest, ObservationBlindPolicyCollapses) {
  const ModeSet modes = PsmpModes(TaskId::kHarvester);
  const ProgramMachinePolicy p = ConstantPolicy(modes, 1);
  const auto cal = CollectDecisions(p, MakeFactory(TaskId::kHarvester), Seeds(0, 4), Short());
  const ExtractedMachine m = BuildTable(p, cal, 8);
  EXPECT_EQ(m.classes().size(), 1u);
  EXPECT_LE(m.state_count(), modes.size() + 1);
  // init and mode 2 share the row {O1 -> mode 2}; unvisited modes form the
  // other block.
  EXPECT_EQ(m.state_count(), 2);
  EXPECT_EQ(m.BlockOf(kInitMode), m.BlockOf(1));
  const auto held = CollectDecisions(p, MakeFactory(TaskId::kHarvester), Seeds(100, 4), Short());
  EXPECT_EQ(Fidelity(m, held).rate, 1.0);
}

TEST(ExtractTest, Deterministic) {
  const ModeSet modes = PsmpModes(TaskId::kMaze);
  const ProgramMachinePolicy p = RandomPolicy(modes, 9, 3.0);
  const auto a = CollectDecisions(p, MakeFactory(TaskId::kMaze), Seeds(0, 6), Short(),
                                  ExecPolicy::kSerial);
  const auto b = CollectDecisions(p, MakeFactory(TaskId::kMaze), Seeds(0, 6), Short(),
                                  ExecPolicy::kParallel);
  const ExtractedMachine ma = BuildTable(p, a, 8);
  const ExtractedMachine mb = BuildTable(p, b, 8);
  EXPECT_TRUE(ma == mb);
  EXPECT_EQ(ma.ToJson(), mb.ToJson());
  EXPECT_EQ(ma.ToDot(), mb.ToDot());
}

TEST(ExtractTest, SmallHBoundsClasses) {
  const ModeSet modes = PsmpModes(TaskId::kHarvester);
  const ProgramMachinePolicy p = RandomPolicy(modes, 5, 3.0);
  const auto cal = CollectDecisions(p, MakeFactory(TaskId::kHarvester), Seeds(0, 8), Short());
  EXPECT_LE(BuildTable(p, cal, 1).classes().size(), 3u);
  EXPECT_LE(BuildTable(p, cal, 2).classes().size(), 9u);
}

TEST(ExtractTest, DotExport) {
  const ModeSet modes = PsmpModes(TaskId::kHarvester);
  const ProgramMachinePolicy p = ConstantPolicy(modes, 0);
  const auto cal = CollectDecisions(p, MakeFactory(TaskId::kHarvester), Seeds(0, 2), Short());
  const std::string dot = BuildTable(p, cal, 4).ToDot();
  EXPECT_NE(dot.find("digraph machine"), std::string::npos);
  EXPECT_NE(dot.find("label=\"O1\""), std::string::npos);
  EXPECT_NE(dot.find("init,M1"), std::string::npos);
}

TEST(FidelityTest, WilsonInterval) {
  // Wilson 95% for 95 of 100.
  const auto [lo, hi] = WilsonInterval(95, 100);
  EXPECT_NEAR(lo, 0.888250, 1e-5);
  EXPECT_NEAR(hi, 0.978457, 1e-5);
  const auto [lo1, hi1] = WilsonInterval(50, 50);
  EXPECT_EQ(hi1, 1.0);
  EXPECT_GT(lo1, 0.92);
}

}  // namespace
}  // namespace pomp
