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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "delaysnn/common.hpp"

namespace delaysnn {

struct SpikeEvent {
  std::uint64_t time_us = 0;
  std::uint32_t channel = 0;

  friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

struct SampleRecord {
  std::uint32_t label = 0;
  std::uint64_t duration_us = 1;
  std::vector<SpikeEvent> events;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetSplit {
  std::string name = "train";
  std::uint32_t raw_channels = 0;  // C_raw
  std::uint32_t num_classes = 0;   // N_c
  std::vector<SampleRecord> records;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

// Dense binned activity, logically (B, T, C), stored batch-major.
class SpikeTensor {
 public:
  SpikeTensor() = default;
  SpikeTensor(std::size_t batch, std::size_t steps, std::size_t channels, bool binarized = false)
      : batch_(batch), steps_(steps), channels_(channels), binarized_(binarized),
        data_(batch * steps * channels, 0.0) {}

  std::size_t batch() const { return batch_; }
  std::size_t steps() const { return steps_; }
  std::size_t channels() const { return channels_; }
  bool binarized() const { return binarized_; }

  double& at(std::size_t b, std::size_t t, std::size_t c) {
    return data_[(b * steps_ + t) * channels_ + c];
  }
  double at(std::size_t b, std::size_t t, std::size_t c) const {
    return data_[(b * steps_ + t) * channels_ + c];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  // (T * B, C) time-major layout consumed by the network.
  Matrix to_time_major() const;
  static SpikeTensor from_time_major(const Matrix& seq, std::size_t batch);

  // Rows `indices` of this tensor, in the given order.
  SpikeTensor gather(const std::vector<std::size_t>& indices) const;

 private:
  std::size_t batch_ = 0;
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  bool binarized_ = false;
  std::vector<double> data_;
};

enum class ChannelPool { kSum, kMax };

struct BinOptions {
  std::size_t time_steps = 100;
  std::uint32_t bin_factor = 5;
  bool binarize = false;
  ChannelPool pool = ChannelPool::kSum;
};

inline constexpr std::uint16_t kEventFileVersion = 1;

DatasetSplit read_event_file(const std::filesystem::path& path, const std::string& split_name = "train");
void write_event_file(const std::filesystem::path& path, const DatasetSplit& split);

// Byte-level codec behind the file functions.
std::vector<std::uint8_t> encode_event_file(const DatasetSplit& split);
DatasetSplit decode_event_file(const std::vector<std::uint8_t>& bytes, const std::string& split_name = "train");

// Bins one sample into a (1, T, C_raw / bin_factor) tensor.
SpikeTensor bin_sample(const SampleRecord& sample, std::uint32_t raw_channels, const BinOptions& options);

// Bins every record of a split into an (n, T, C) tensor.
SpikeTensor bin_split(const DatasetSplit& split, const BinOptions& options);

std::vector<std::uint32_t> labels_of(const DatasetSplit& split);

struct IntervalTaskParams {
  std::size_t n_samples = 512;
  std::size_t time_steps = 50;
  std::uint32_t channels = 16;
  std::size_t lag_a = 3;
  std::size_t lag_b = 12;
  std::uint64_t seed = 0;
  double class1_fraction = 0.5;
  std::size_t burst_width = 2;
  std::uint32_t band_width = 4;
  std::uint64_t step_us = 1000;
};

// Two-class timing task: a reference burst at a random onset and an echo of
// the same channel band lag_a (class 0) or lag_b (class 1) steps later.
// Events are placed at the centre of their time step so that binning with
// T = time_steps and bin_factor = 1 recovers the step indices exactly.
DatasetSplit make_interval_task(const IntervalTaskParams& params);

// Sample indices grouped into batches covering [0, n) exactly once.
std::vector<std::vector<std::size_t>> batch_order(std::size_t n, std::size_t batch_size, bool shuffle,
                                                  std::uint64_t seed);

struct Batch {
  SpikeTensor spikes;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> indices;
};

class BatchIterator {
 public:
  BatchIterator(const DatasetSplit& split, const BinOptions& options, std::size_t batch_size, bool shuffle,
                std::uint64_t seed);

  bool next(Batch& out);
  std::size_t num_batches() const { return order_.size(); }

 private:
  const DatasetSplit* split_;
  BinOptions options_;
  std::vector<std::vector<std::size_t>> order_;
  std::size_t cursor_ = 0;
};

}  // namespace delaysnn
