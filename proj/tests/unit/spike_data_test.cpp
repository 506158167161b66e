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

#include "delaysnn/spike_data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

namespace delaysnn {
namespace {

// Little-endian writer used to hand-build files independently of the encoder.
struct Bytes {
  std::vector<std::uint8_t> b;
  template <typename T>
  Bytes& put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) b.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    return *this;
  }
  Bytes& magic() {
    for (char c : std::string("SPKE")) b.push_back(static_cast<std::uint8_t>(c));
    return *this;
  }
};

Bytes header(std::uint32_t c_raw, std::uint32_t n_c, std::uint32_t n) {
  Bytes h;
  h.magic().put<std::uint16_t>(1).put<std::uint32_t>(c_raw).put<std::uint32_t>(n_c).put<std::uint32_t>(n);
  return h;
}

DatasetSplit random_split(std::uint64_t seed, std::uint32_t c_raw, std::uint32_t n_c, std::size_t n) {
  std::mt19937_64 rng(seed);
  DatasetSplit s;
  s.raw_channels = c_raw;
  s.num_classes = n_c;
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord r;
    r.label = static_cast<std::uint32_t>(rng() % n_c);
    r.duration_us = 1 + rng() % 1000000;
    const std::size_t events = rng() % 50;
    for (std::size_t e = 0; e < events; ++e) {
      r.events.push_back({rng() % (r.duration_us + 1), static_cast<std::uint32_t>(rng() % c_raw)});
    }
    std::sort(r.events.begin(), r.events.end(),
              [](const SpikeEvent& a, const SpikeEvent& b) { return a.time_us < b.time_us; });
    s.records.push_back(std::move(r));
  }
  return s;
}

TEST(EventFile, OneEmptySample) {
  Bytes f = header(4, 2, 1);
  f.put<std::uint32_t>(0).put<std::uint64_t>(1000).put<std::uint32_t>(0);
  const DatasetSplit s = decode_event_file(f.b);
  ASSERT_EQ(s.records.size(), 1u);
  EXPECT_EQ(s.records[0].label, 0u);
  EXPECT_TRUE(s.records[0].events.empty());
}

TEST(EventFile, HeaderValuesExposed) {
  Bytes f = header(700, 20, 0);
  const DatasetSplit s = decode_event_file(f.b);
  EXPECT_EQ(s.raw_channels, 700u);
  EXPECT_EQ(s.num_classes, 20u);
  EXPECT_TRUE(s.records.empty());
}

TEST(EventFile, HandBuiltLayoutMatchesEncoder) {
  DatasetSplit s;
  s.raw_channels = 8;
  s.num_classes = 3;
  s.records.push_back({2, 500, {{0, 1}, {10, 7}, {10, 0}}});
  Bytes f = header(8, 3, 1);
  f.put<std::uint32_t>(2).put<std::uint64_t>(500).put<std::uint32_t>(3);
  f.put<std::uint64_t>(0).put<std::uint32_t>(1);
  f.put<std::uint64_t>(10).put<std::uint32_t>(7);
  f.put<std::uint64_t>(10).put<std::uint32_t>(0);
  EXPECT_EQ(encode_event_file(s), f.b);
}

TEST(EventFile, NonMonotoneTimesRejectedWithOffset) {
  Bytes f = header(4, 2, 1);
  f.put<std::uint32_t>(0).put<std::uint64_t>(100).put<std::uint32_t>(2);
  f.put<std::uint64_t>(50).put<std::uint32_t>(0);
  f.put<std::uint64_t>(40).put<std::uint32_t>(1);  // second event starts at byte 18 + 16 + 12 = 46
  try {
    decode_event_file(f.b);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 46u);
  }
}

TEST(EventFile, MalformedInputs) {
  {
    Bytes f = header(4, 2, 0);
    f.b[0] = 'X';
    try {
      decode_event_file(f.b);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), 0u);
    }
  }
  {
    Bytes f;
    f.magic().put<std::uint16_t>(2).put<std::uint32_t>(4).put<std::uint32_t>(2).put<std::uint32_t>(0);
    try {
      decode_event_file(f.b);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), 4u);
    }
  }
  {
    Bytes f = header(4, 2, 1);
    f.put<std::uint32_t>(0).put<std::uint64_t>(100).put<std::uint32_t>(1);
    f.put<std::uint64_t>(5).put<std::uint32_t>(4);  // channel == C_raw
    try {
      decode_event_file(f.b);
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), 18u + 16u + 8u);
    }
  }
  {
    Bytes f = header(4, 2, 1);
    f.put<std::uint32_t>(2).put<std::uint64_t>(100).put<std::uint32_t>(0);  // label == N_c
    EXPECT_THROW(decode_event_file(f.b), ParseError);
  }
  {
    Bytes f = header(4, 2, 1);
    f.put<std::uint32_t>(0).put<std::uint64_t>(100).put<std::uint32_t>(1);
    f.put<std::uint64_t>(101).put<std::uint32_t>(0);  // past duration
    EXPECT_THROW(decode_event_file(f.b), ParseError);
  }
  {
    Bytes f = header(4, 2, 2);  // second sample missing
    f.put<std::uint32_t>(0).put<std::uint64_t>(100).put<std::uint32_t>(0);
    EXPECT_THROW(decode_event_file(f.b), ParseError);
  }
  {
    Bytes f = header(4, 2, 0);
    f.put<std::uint8_t>(0);
    EXPECT_THROW(decode_event_file(f.b), ParseError);
  }
  {
    Bytes f = header(4, 2, 1);
    f.put<std::uint32_t>(0).put<std::uint64_t>(0).put<std::uint32_t>(0);
    EXPECT_THROW(decode_event_file(f.b), ParseError);
  }
}

TEST(EventFile, RoundTripRandomSplits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DatasetSplit s = random_split(seed, 700, 20, 12);
    EXPECT_EQ(decode_event_file(encode_event_file(s)), s);
  }
}

TEST(EventFile, RoundTripThroughDisk) {
  const auto path = std::filesystem::temp_directory_path() / "delaysnn_roundtrip.spke";
  const DatasetSplit s = random_split(7, 16, 4, 30);
  write_event_file(path, s);
  EXPECT_EQ(read_event_file(path), s);
  std::filesystem::remove(path);
  EXPECT_THROW(read_event_file(path), Error);
}

TEST(Binning, ChannelCountFromBinFactor) {
  SampleRecord r{0, 1000, {}};
  const SpikeTensor x = bin_sample(r, 700, {100, 5, false, ChannelPool::kSum});
  EXPECT_EQ(x.channels(), 140u);
  EXPECT_EQ(x.steps(), 100u);
  EXPECT_THROW(bin_sample(r, 700, {100, 3, false, ChannelPool::kSum}), ConfigError);
}

TEST(Binning, SingleEventAtOrigin) {
  SampleRecord r{0, 1000, {{0, 0}}};
  const SpikeTensor x = bin_sample(r, 700, {10, 5, false, ChannelPool::kSum});
  EXPECT_EQ(std::accumulate(x.data().begin(), x.data().end(), 0.0), 1.0);
  EXPECT_EQ(x.at(0, 0, 0), 1.0);
}

TEST(Binning, CountsAndBinarize) {
  SampleRecord r{0, 1000, {{10, 0}, {20, 3}}};  // both in time bin 0, channel bin 0
  EXPECT_EQ(bin_sample(r, 8, {10, 4, false, ChannelPool::kSum}).at(0, 0, 0), 2.0);
  EXPECT_EQ(bin_sample(r, 8, {10, 4, true, ChannelPool::kSum}).at(0, 0, 0), 1.0);
  // max pooling counts per raw channel first, then takes the largest
  SampleRecord m{0, 1000, {{10, 0}, {20, 0}, {30, 3}}};
  EXPECT_EQ(bin_sample(m, 8, {10, 4, false, ChannelPool::kMax}).at(0, 0, 0), 2.0);
  EXPECT_EQ(bin_sample(m, 8, {10, 4, false, ChannelPool::kSum}).at(0, 0, 0), 3.0);
}

TEST(Binning, BoundaryEventLandsInLastBin) {
  SampleRecord r{0, 1000, {{1000, 2}}};
  const SpikeTensor x = bin_sample(r, 4, {7, 1, false, ChannelPool::kSum});
  EXPECT_EQ(x.at(0, 6, 2), 1.0);
}

TEST(Binning, PreservesEventCountAndMatchesFormula) {
  const DatasetSplit s = random_split(3, 40, 5, 25);
  const BinOptions opt{13, 4, false, ChannelPool::kSum};
  const SpikeTensor all = bin_split(s, opt);
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    std::vector<double> expect(13 * 10, 0.0);
    for (const auto& e : r.events) {
      std::size_t t = static_cast<std::size_t>(e.time_us * 13 / r.duration_us);
      t = std::min<std::size_t>(t, 12);
      expect[t * 10 + e.channel / 4] += 1.0;
    }
    double total = 0.0;
    for (std::size_t t = 0; t < 13; ++t) {
      for (std::size_t c = 0; c < 10; ++c) {
        EXPECT_EQ(all.at(i, t, c), expect[t * 10 + c]);
        total += all.at(i, t, c);
      }
    }
    EXPECT_EQ(total, static_cast<double>(r.events.size()));
  }
}

TEST(SpikeTensorLayout, TimeMajorRoundTrip) {
  SpikeTensor x(3, 4, 2);
  for (std::size_t i = 0; i < x.data().size(); ++i) x.data()[i] = static_cast<double>(i);
  const Matrix tm = x.to_time_major();
  EXPECT_EQ(tm.rows(), 12);
  EXPECT_EQ(tm(2 * 3 + 1, 1), x.at(1, 2, 1));
  const SpikeTensor back = SpikeTensor::from_time_major(tm, 3);
  EXPECT_EQ(back.data(), x.data());
  const SpikeTensor g = x.gather({2, 0});
  EXPECT_EQ(g.at(0, 3, 1), x.at(2, 3, 1));
  EXPECT_EQ(g.at(1, 0, 0), x.at(0, 0, 0));
}

IntervalTaskParams interval(std::size_t n, std::uint64_t seed) {
  IntervalTaskParams p;
  p.n_samples = n;
  p.seed = seed;
  return p;
}

TEST(IntervalTask, EmptyAndDeterministic) {
  EXPECT_TRUE(make_interval_task(interval(0, 1)).records.empty());
  EXPECT_EQ(encode_event_file(make_interval_task(interval(64, 5))),
            encode_event_file(make_interval_task(interval(64, 5))));
  EXPECT_NE(encode_event_file(make_interval_task(interval(64, 5))),
            encode_event_file(make_interval_task(interval(64, 6))));
}

TEST(IntervalTask, ParameterErrors) {
  IntervalTaskParams p = interval(4, 0);
  p.lag_b = 50;
  EXPECT_THROW(make_interval_task(p), ConfigError);
  p = interval(4, 0);
  p.lag_a = 12;
  EXPECT_THROW(make_interval_task(p), ConfigError);
}

TEST(IntervalTask, EchoOffsetMatchesLabel) {
  const IntervalTaskParams p = interval(300, 11);
  const DatasetSplit s = make_interval_task(p);
  const BinOptions opt{p.time_steps, 1, false, ChannelPool::kSum};
  for (const auto& r : s.records) {
    const SpikeTensor x = bin_sample(r, s.raw_channels, opt);
    std::vector<std::size_t> active;
    for (std::size_t t = 0; t < p.time_steps; ++t) {
      double sum = 0.0;
      for (std::size_t c = 0; c < p.channels; ++c) sum += x.at(0, t, c);
      if (sum > 0.0) {
        EXPECT_EQ(sum, static_cast<double>(p.band_width));
        active.push_back(t);
      }
    }
    ASSERT_EQ(active.size(), 2 * p.burst_width);
    const std::size_t lag = active[p.burst_width] - active[0];
    EXPECT_EQ(lag, r.label == 0 ? p.lag_a : p.lag_b);
  }
}

TEST(IntervalTask, ClassesShareCountsAndMarginals) {
  const IntervalTaskParams p = interval(2000, 3);
  const DatasetSplit s = make_interval_task(p);
  std::array<double, 2> n{0, 0};
  std::array<double, 2> count{0, 0};
  std::array<std::vector<double>, 2> channel{std::vector<double>(p.channels, 0.0), std::vector<double>(p.channels, 0.0)};
  for (const auto& r : s.records) {
    n[r.label] += 1;
    count[r.label] += static_cast<double>(r.events.size());
    for (const auto& e : r.events) channel[r.label][e.channel] += 1;
  }
  EXPECT_EQ(n[0], 1000);
  EXPECT_EQ(n[1], 1000);
  // Every sample carries 2 bursts x 2 steps x 4 channels.
  EXPECT_EQ(count[0] / n[0], 16.0);
  EXPECT_EQ(count[1] / n[1], 16.0);
  // Channel marginals agree within sampling noise: per-channel share of
  // events has std about sqrt(p (1 - p) / n_bands) with n_bands = 1000.
  for (std::size_t c = 0; c < p.channels; ++c) {
    const double a = channel[0][c] / count[0];
    const double b = channel[1][c] / count[1];
    EXPECT_NEAR(a, b, 0.03) << "channel " << c;
  }
}

TEST(IntervalTask, RequestedClassProportion) {
  IntervalTaskParams p = interval(100, 2);
  p.class1_fraction = 0.3;
  const auto labels = labels_of(make_interval_task(p));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1u), 30);
}

TEST(Batching, SizesAndCoverage) {
  const auto b = batch_order(10, 4, false, 0);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 4u);
  EXPECT_EQ(b[2].size(), 2u);
  std::vector<std::size_t> flat;
  for (const auto& x : b) flat.insert(flat.end(), x.begin(), x.end());
  std::vector<std::size_t> expect(10);
  std::iota(expect.begin(), expect.end(), 0u);
  EXPECT_EQ(flat, expect);
}

TEST(Batching, ShuffleDeterministicAndComplete) {
  const auto a = batch_order(97, 8, true, 42);
  EXPECT_EQ(a, batch_order(97, 8, true, 42));
  EXPECT_NE(a, batch_order(97, 8, true, 43));
  std::set<std::size_t> seen;
  for (const auto& x : a) seen.insert(x.begin(), x.end());
  EXPECT_EQ(seen.size(), 97u);
  EXPECT_THROW(batch_order(3, 0, false, 0), ConfigError);
}

TEST(Batching, IteratorYieldsBinnedBatches) {
  const DatasetSplit s = make_interval_task(interval(10, 1));
  BatchIterator it(s, {50, 1, false, ChannelPool::kSum}, 4, false, 0);
  EXPECT_EQ(it.num_batches(), 3u);
  Batch batch;
  std::size_t seen = 0;
  while (it.next(batch)) {
    EXPECT_EQ(batch.spikes.batch(), batch.labels.size());
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
      EXPECT_EQ(batch.labels[i], s.records[batch.indices[i]].label);
    }
    seen += batch.labels.size();
  }
  EXPECT_EQ(seen, 10u);
}

}  // namespace
}  // namespace delaysnn
