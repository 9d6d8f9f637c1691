#include <gtest/gtest.h>

#include "dmef/disturbance.hpp"
#include "dmef/error.hpp"
#include "dmef/sim.hpp"

using namespace dmef;

namespace {

Network chua() { return make_chua_scenario(1).network; }

}  // namespace

TEST(Disturbance, CanonicalChannelOrder) {
  const Network net = chua();
  const ChannelLayout layout(net);
  ASSERT_EQ(layout.size(), 1u + 5u + 8u);
  EXPECT_EQ(layout.id(0).name(), "w");
  EXPECT_EQ(layout.id(layout.measurement(4)).name(), "v4");
  EXPECT_EQ(layout.id(layout.communication(3, 2)).name(), "eps3_2");
  EXPECT_EQ(layout.dim(layout.measurement(1)), 1);
  EXPECT_EQ(layout.dim(layout.communication(1, 3)), 3);
  EXPECT_THROW(layout.communication(1, 2), Error);
}

TEST(Disturbance, PulseIsOneSidedAtItsEdges) {
  const Network net = chua();
  const std::vector<DisturbanceSpec> specs{{{Channel::model, 0, 0}, Pulse{Vector::Constant(1, 2.0), 0.5, 1.0}}};
  const DisturbanceField f(net, specs, TimeGrid::over(2.0, 0.1), 0);
  EXPECT_EQ(f.at(0.5, StageSide::left)[0].norm(), 0.0);
  EXPECT_EQ(f.at(0.5, StageSide::right)[0], Vector::Constant(3, 2.0));
  EXPECT_EQ(f.at(1.5, StageSide::left)[0], Vector::Constant(3, 2.0));
  EXPECT_EQ(f.at(1.5, StageSide::right)[0].norm(), 0.0);
  EXPECT_EQ(f.at(1.0, StageSide::interior)[0], Vector::Constant(3, 2.0));
  EXPECT_DOUBLE_EQ(f.l2_squared(0), 3 * 4.0 * 1.0);
  EXPECT_TRUE(f.warnings().empty());
}

TEST(Disturbance, TargetsSelectChannels) {
  const Network net = chua();
  const Pulse unit{Vector::Constant(1, 1.0), 0.0, 1.0};
  const std::vector<DisturbanceSpec> specs{
      {{Channel::measurement, 2, 0}, unit},
      {{Channel::communication, 3, 0}, unit},
  };
  const DisturbanceField f(net, specs, TimeGrid::over(2.0, 0.1), 0);
  const ChannelLayout& l = f.layout();
  EXPECT_DOUBLE_EQ(f.l2_squared(l.measurement(2)), 1.0);
  EXPECT_DOUBLE_EQ(f.l2_squared(l.measurement(1)), 0.0);
  EXPECT_DOUBLE_EQ(f.l2_squared(l.communication(3, 1)), 3.0);
  EXPECT_DOUBLE_EQ(f.l2_squared(l.communication(3, 4)), 3.0);
  EXPECT_DOUBLE_EQ(f.l2_squared(l.communication(1, 3)), 0.0);
}

TEST(Disturbance, MisalignedEdgesAreSnappedWithWarning) {
  const Network net = chua();
  const std::vector<DisturbanceSpec> specs{{{Channel::model, 0, 0}, Pulse{Vector::Constant(1, 1.0), 0.04, 1.0}}};
  const DisturbanceField f(net, specs, TimeGrid::over(2.0, 0.1), 0);
  EXPECT_FALSE(f.warnings().empty());
  EXPECT_NEAR(f.l2_squared(0), 3.0, 1e-12);
}

TEST(Disturbance, HeldGaussianIsDeterministicAndTruncated) {
  const Network net = chua();
  const std::vector<DisturbanceSpec> specs{{{Channel::communication, 0, 0}, HeldGaussian{0.0, 1.0, 0.3, 9, 0.0, -1.0}}};
  const TimeGrid grid = TimeGrid::over(2.0, 0.1);
  const DisturbanceField a(net, specs, grid, 42), b(net, specs, grid, 42), c(net, specs, grid, 43);
  bool differs = false;
  for (double t = 0.0; t < 2.0; t += 0.05) {
    const auto va = a.at(t, StageSide::interior);
    const auto vb = b.at(t, StageSide::interior);
    const auto vc = c.at(t, StageSide::interior);
    for (std::size_t k = 0; k < va.size(); ++k) {
      EXPECT_EQ(va[k], vb[k]);
      differs = differs || va[k] != vc[k];
    }
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.at(2.0, StageSide::right)[9].norm(), 0.0);
  // held values are constant over each hold interval
  EXPECT_EQ(a.at(0.05, StageSide::interior)[9], a.at(0.25, StageSide::interior)[9]);
}

TEST(Disturbance, RecordTrapezoidIsExactForGridAlignedPulses) {
  DisturbanceRecord rec;
  rec.grid = TimeGrid::over(1.0, 0.25);
  ChannelRecord ch;
  ch.begin = Matrix::Zero(1, 4);
  ch.end = Matrix::Zero(1, 4);
  ch.begin(0, 1) = ch.end(0, 1) = 3.0;  // pulse of height 3 on [0.25, 0.5)
  rec.channels.push_back(ch);
  EXPECT_DOUBLE_EQ(rec.l2_squared(0), 9.0 * 0.25);
}
