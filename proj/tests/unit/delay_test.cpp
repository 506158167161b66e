// Copyright 2026 The delaysnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "delaysnn/delay.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace delaysnn {
namespace {

// Direct transcription of the triangle, used as the reference.
double triangle(int tau, double d, double sigma) {
  return std::max(0.0, (1.0 + sigma - std::abs(tau - (1.0 + d))) / ((1.0 + sigma) * (1.0 + sigma)));
}

TEST(Spread, IntegerDelayAtZeroWidth) {
  EXPECT_EQ(spread(4, 3.0, 0.0), 1.0);
  for (int tau = -5; tau < 20; ++tau) {
    if (tau != 4) EXPECT_EQ(spread(tau, 3.0, 0.0), 0.0) << tau;
  }
}

TEST(Spread, FractionalDelayAtZeroWidth) {
  EXPECT_NEAR(spread(3, 2.3, 0.0), 0.7, 1e-12);
  EXPECT_NEAR(spread(4, 2.3, 0.0), 0.3, 1e-12);
  EXPECT_NEAR(spread(3, 2.3, 0.0) + spread(4, 2.3, 0.0), 1.0, 1e-12);
}

TEST(Spread, UnitWidth) {
  EXPECT_EQ(spread(2, 2.0, 1.0), 0.25);
  EXPECT_EQ(spread(3, 2.0, 1.0), 0.5);
  EXPECT_EQ(spread(4, 2.0, 1.0), 0.25);
  EXPECT_EQ(spread(1, 2.0, 1.0), 0.0);
  EXPECT_EQ(spread(5, 2.0, 1.0), 0.0);
}

TEST(Spread, NormalizedAtZeroWidth) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 64.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng);
    double sum = 0.0;
    for (int tau = -2; tau < 70; ++tau) sum += spread(tau, d, 0.0);
    EXPECT_NEAR(sum, 1.0, 1e-12) << d;
  }
}

TEST(Spread, MatchesReferenceSupportAndApex) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ud(0.0, 30.0);
  std::uniform_real_distribution<double> us(0.0, 8.0);
  for (int i = 0; i < 500; ++i) {
    const double d = ud(rng);
    const double sigma = us(rng);
    const auto range = spread_support(d, sigma);
    for (int tau = -15; tau < 50; ++tau) {
      const double h = spread(tau, d, sigma);
      EXPECT_NEAR(h, triangle(tau, d, sigma), 1e-15);
      EXPECT_GE(h, 0.0);
      if (std::abs(tau - (1.0 + d)) >= 1.0 + sigma) EXPECT_EQ(h, 0.0);
      if (h > 0.0) {
        EXPECT_GE(tau, range.first);
        EXPECT_LE(tau, range.last);
      }
      // Nothing beats the apex value 1 / (1 + sigma).
      EXPECT_LE(h, 1.0 / (1.0 + sigma) + 1e-15);
    }
    // The integer nearest to 1 + d holds the largest sample.
    const int nearest = static_cast<int>(std::floor(1.0 + d + 0.5));
    for (int tau = -15; tau < 50; ++tau) EXPECT_LE(spread(tau, d, sigma), spread(nearest, d, sigma) + 1e-15);
  }
}

TEST(SpreadGrad, WorkedValues) {
  EXPECT_EQ(spread_grad_d(3, 2.3, 0.0), -1.0);
  EXPECT_EQ(spread_grad_d(4, 2.0, 1.0), 0.25);
  EXPECT_EQ(spread_grad_d(40, 2.0, 1.0), 0.0);
  // apex and support edge are kinks
  EXPECT_EQ(spread_grad_d(3, 2.0, 1.0), 0.0);
  EXPECT_EQ(spread_grad_d(5, 2.0, 1.0), 0.0);
}

TEST(SpreadGrad, MatchesFiniteDifferencesAwayFromKinks) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(0.0, 20.0);
  std::uniform_real_distribution<double> us(0.0, 5.0);
  const double eps = 1e-6;
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double d = ud(rng);
    const double sigma = us(rng);
    if (distance_to_kink(d, sigma) < 1e-3) continue;
    for (int tau = 0; tau < 30; ++tau) {
      const double fd = (spread(tau, d + eps, sigma) - spread(tau, d - eps, sigma)) / (2 * eps);
      EXPECT_NEAR(spread_grad_d(tau, d, sigma), fd, 1e-8);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(Rounding, HalfUp) {
  DelayVector v;
  v.d = Vector(4);
  v.d << 2.3, 2.5, 4.0, 0.49;
  const DelayVector r = round_for_inference(v);
  EXPECT_EQ(r.d[0], 2.0);
  EXPECT_EQ(r.d[1], 3.0);
  EXPECT_EQ(r.d[2], 4.0);
  EXPECT_EQ(r.d[3], 0.0);
  EXPECT_FALSE(r.trainable);
}

TEST(DelayStatsTest, Values) {
  DelayVector v;
  v.d = Vector::Constant(6, 5.0);
  DelayStats s = delay_stats(v);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.std, 0.0);
  EXPECT_EQ(s.min, 5);
  EXPECT_EQ(s.max, 5);
  v.d = Vector(2);
  v.d << 0.0, 10.0;
  s = delay_stats(v);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.std, 5.0);
  EXPECT_EQ(s.min, 0);
  EXPECT_EQ(s.max, 10);
  v.d = Vector(0);
  EXPECT_THROW(delay_stats(v), Error);
}

TEST(Anneal, PresetProducts) {
  SpreadConfig ssc{10.0, 10.0, 0.95, 0.01};
  EXPECT_NEAR(anneal(ssc).sigma, 9.5, 1e-12);
  SpreadConfig shd{10.36, 10.36, 0.971, 0.01};
  EXPECT_NEAR(anneal(shd).sigma, 10.36 * 0.971, 1e-12);
  EXPECT_NEAR(anneal(shd).sigma, 10.06, 5e-3);
}

TEST(Anneal, MonotoneGeometricThenZero) {
  SpreadConfig c{10.36, 10.36, 0.971, 0.01};
  double expect = c.sigma_init;
  int epochs = 0;
  while (c.sigma > 0.0) {
    const SpreadConfig next = anneal(c);
    EXPECT_LE(next.sigma, c.sigma);
    expect *= c.sigma_decay;
    if (expect >= c.sigma_floor) {
      EXPECT_NEAR(next.sigma, expect, 1e-12 * c.sigma_init);
    } else {
      EXPECT_EQ(next.sigma, 0.0);
    }
    c = next;
    ASSERT_LT(++epochs, 10000);
  }
  EXPECT_EQ(anneal(c).sigma, 0.0);
  SpreadConfig below{0.009, 10.0, 0.95, 0.01};
  EXPECT_EQ(anneal(below).sigma, 0.0);
}

TEST(InitDelays, RangeAndDeterminism) {
  for (const auto init : {DelayInit::kHalfNormal, DelayInit::kUniform}) {
    std::mt19937_64 a(7);
    std::mt19937_64 b(7);
    const DelayVector x = init_delays(500, 64, init, a);
    const DelayVector y = init_delays(500, 64, init, b);
    EXPECT_EQ(x.d, y.d);
    EXPECT_GE(x.d.minCoeff(), 0.0);
    EXPECT_LE(x.d.maxCoeff(), 64.0);
  }
  std::mt19937_64 rng(8);
  const DelayVector hn = init_delays(20000, 64, DelayInit::kHalfNormal, rng);
  // E|N(0, s)| = s sqrt(2 / pi), s = 16
  EXPECT_NEAR(hn.d.mean(), 16.0 * std::sqrt(2.0 / 3.141592653589793), 0.3);
}

TEST(Buffer, Sizing) {
  EXPECT_EQ(SchedulingBuffer::required_length(64, 10.36), static_cast<std::size_t>(std::ceil(64 + 10.36 + 2)) + 1);
  EXPECT_EQ(SchedulingBuffer::required_length(0, 0.0), 3u);
}

DelayVector delays_of(std::initializer_list<double> d) {
  DelayVector v;
  v.d = Vector(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v.d[i++] = x;
  return v;
}

TEST(Buffer, PopExamples) {
  SchedulingBuffer buf(1, 1, 8);
  EXPECT_TRUE(buf.pop_current().isZero(0.0));

  buf.schedule(Matrix::Ones(1, 1), delays_of({0.0}), 0.0);
  EXPECT_EQ(buf.pop_current()(0, 0), 1.0);
  EXPECT_EQ(buf.pop_current()(0, 0), 0.0);

  buf.schedule(Matrix::Ones(1, 1), delays_of({1.0}), 0.0);
  EXPECT_EQ(buf.pop_current()(0, 0), 0.0);
  EXPECT_EQ(buf.pop_current()(0, 0), 1.0);
}

TEST(Buffer, FractionalDelaySplitsAcrossTwoSlots) {
  SchedulingBuffer buf(1, 1, 8);
  buf.schedule(Matrix::Ones(1, 1), delays_of({2.3}), 0.0);
  EXPECT_NEAR(buf.peek(3)(0, 0), 0.7, 1e-12);
  EXPECT_NEAR(buf.peek(4)(0, 0), 0.3, 1e-12);
  std::vector<double> popped;
  for (int i = 0; i < 6; ++i) popped.push_back(buf.pop_current()(0, 0));
  EXPECT_EQ(popped[0], 0.0);
  EXPECT_EQ(popped[1], 0.0);
  EXPECT_NEAR(popped[2], 0.7, 1e-12);
  EXPECT_NEAR(popped[3], 0.3, 1e-12);
  EXPECT_EQ(popped[4], 0.0);
}

TEST(Buffer, ZeroSpikesLeaveBufferUnchanged) {
  SchedulingBuffer buf(2, 3, 6);
  buf.schedule(Matrix::Constant(2, 3, 0.5), delays_of({0.0, 1.0, 2.0}), 0.0);
  std::vector<Matrix> before;
  for (int tau = 1; tau <= 6; ++tau) before.push_back(buf.peek(tau));
  buf.schedule(Matrix::Zero(2, 3), delays_of({0.0, 1.0, 2.0}), 1.0);
  for (int tau = 1; tau <= 6; ++tau) EXPECT_EQ(buf.peek(tau), before[static_cast<std::size_t>(tau - 1)]);
}

TEST(Buffer, PoppedSlotIsZeroedAndHeadWraps) {
  SchedulingBuffer buf(1, 2, 3);
  for (int round = 0; round < 7; ++round) {
    buf.add_at_offset(1, Matrix::Constant(1, 2, 2.0));
    EXPECT_EQ(buf.pop_current()(0, 1), 2.0);
    EXPECT_EQ(buf.head(), static_cast<std::size_t>((round + 1) % 3));
    for (int tau = 1; tau <= 3; ++tau) EXPECT_TRUE(buf.peek(tau).isZero(0.0));
  }
}

TEST(Buffer, SupportBeyondLengthIsASizingError) {
  SchedulingBuffer buf(1, 1, 4);
  EXPECT_THROW(buf.schedule(Matrix::Ones(1, 1), delays_of({5.0}), 0.0), SizingError);
  EXPECT_THROW(buf.add_at_offset(0, Matrix::Ones(1, 1)), SizingError);
}

// Brute force: input at t is sum over s < t with t = s + 1 + d_j of the
// value scheduled by neuron j at s.
Matrix naive_arrivals(const std::vector<Matrix>& values, const std::vector<int>& d, std::size_t t, Eigen::Index rows) {
  Matrix out = Matrix::Zero(rows, static_cast<Eigen::Index>(d.size()));
  for (std::size_t s = 0; s < t; ++s) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (s + 1 + static_cast<std::size_t>(d[static_cast<std::size_t>(j)]) == t) out.col(j) += values[s].col(j);
    }
  }
  return out;
}

TEST(Buffer, MatchesFullHistoryForIntegerDelays) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 16);
    const std::size_t steps = 1 + rng() % 80;
    const int d_max = static_cast<int>(rng() % 20);
    const std::size_t extra = rng() % 5;  // any length meeting the invariant
    DelayVector dv;
    dv.d = Vector(n);
    std::vector<int> d(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      d[static_cast<std::size_t>(j)] = static_cast<int>(rng() % static_cast<std::uint64_t>(d_max + 1));
      dv.d[j] = d[static_cast<std::size_t>(j)];
    }
    SchedulingBuffer buf(2, n, SchedulingBuffer::required_length(d_max, 0.0) + extra);
    std::vector<Matrix> values;
    for (std::size_t t = 0; t < steps; ++t) {
      const Matrix popped = buf.pop_current();
      ASSERT_EQ(popped, naive_arrivals(values, d, t, 2)) << "trial " << trial << " t " << t;
      Matrix v(2, n);
      for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = (rng() % 3 == 0) ? static_cast<double>(rng() % 5) : 0.0;
      buf.schedule(v, dv, 0.0);
      values.push_back(v);
    }
  }
}

TEST(SpreadTableTest, DropsPastOffsetsAndMatchesSpread) {
  Vector d(3);
  d << 0.0, 2.4, 5.0;
  const SpreadTable table = build_spread_table(d, 1.5);
  for (int tau = 1; tau <= table.max_offset; ++tau) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_EQ(table.weight[static_cast<std::size_t>(tau)][j], spread(tau, d[j], 1.5));
      EXPECT_EQ(table.grad[static_cast<std::size_t>(tau)][j], spread_grad_d(tau, d[j], 1.5));
    }
  }
  EXPECT_EQ(table.active.front(), 1);
  EXPECT_EQ(table.max_offset, spread_support(5.0, 1.5).last);
  for (int tau : table.active) EXPECT_GT(table.weight[static_cast<std::size_t>(tau)].maxCoeff(), 0.0);
}

TEST(DelayVectorTest, Clamp) {
  DelayVector v = delays_of({-1.0, 3.0, 99.0});
  v.d_max = 10;
  v.clamp();
  EXPECT_EQ(v.d[0], 0.0);
  EXPECT_EQ(v.d[1], 3.0);
  EXPECT_EQ(v.d[2], 10.0);
}

TEST(SpreadConfigTest, Validation) {
  EXPECT_THROW((SpreadConfig{-1.0, 1.0, 0.9, 0.01}).validate(), ConfigError);
  EXPECT_THROW((SpreadConfig{1.0, 1.0, 1.0, 0.01}).validate(), ConfigError);
  EXPECT_NO_THROW((SpreadConfig{1.0, 1.0, 0.9, 0.01}).validate());
}

}  // namespace
}  // namespace delaysnn
