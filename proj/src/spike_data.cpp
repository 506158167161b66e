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

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace delaysnn {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'P', 'K', 'E'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw ParseError(std::string("truncated file while reading ") + what, pos_);
    }
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(value);
  }

  std::uint64_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_ = 0;
};

}  // namespace

Matrix SpikeTensor::to_time_major() const {
  Matrix seq(static_cast<Eigen::Index>(steps_ * batch_), static_cast<Eigen::Index>(channels_));
  for (std::size_t b = 0; b < batch_; ++b) {
    for (std::size_t t = 0; t < steps_; ++t) {
      for (std::size_t c = 0; c < channels_; ++c) {
        seq(static_cast<Eigen::Index>(t * batch_ + b), static_cast<Eigen::Index>(c)) = at(b, t, c);
      }
    }
  }
  return seq;
}

SpikeTensor SpikeTensor::from_time_major(const Matrix& seq, std::size_t batch) {
  if (batch == 0 || seq.rows() % static_cast<Eigen::Index>(batch) != 0) {
    throw ShapeError("time-major sequence rows not divisible by batch size");
  }
  const std::size_t steps = static_cast<std::size_t>(seq.rows()) / batch;
  SpikeTensor out(batch, steps, static_cast<std::size_t>(seq.cols()));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < out.channels(); ++c) {
        out.at(b, t, c) = seq(static_cast<Eigen::Index>(t * batch + b), static_cast<Eigen::Index>(c));
      }
    }
  }
  return out;
}

SpikeTensor SpikeTensor::gather(const std::vector<std::size_t>& indices) const {
  SpikeTensor out(indices.size(), steps_, channels_, binarized_);
  const std::size_t stride = steps_ * channels_;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= batch_) throw ShapeError("gather index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[i] * stride), stride,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

std::vector<std::uint8_t> encode_event_file(const DatasetSplit& split) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_le<std::uint16_t>(out, kEventFileVersion);
  put_le<std::uint32_t>(out, split.raw_channels);
  put_le<std::uint32_t>(out, split.num_classes);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(split.records.size()));
  for (const auto& rec : split.records) {
    put_le<std::uint32_t>(out, rec.label);
    put_le<std::uint64_t>(out, rec.duration_us);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.events.size()));
    for (const auto& ev : rec.events) {
      put_le<std::uint64_t>(out, ev.time_us);
      put_le<std::uint32_t>(out, ev.channel);
    }
  }
  return out;
}

DatasetSplit decode_event_file(const std::vector<std::uint8_t>& bytes, const std::string& split_name) {
  Reader in(bytes);
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (in.get<std::uint8_t>("magic") != kMagic[i]) throw ParseError("bad magic, expected SPKE", i);
  }
  const auto version_at = in.pos();
  if (in.get<std::uint16_t>("version") != kEventFileVersion) {
    throw ParseError("unsupported event file version", version_at);
  }
  DatasetSplit split;
  split.name = split_name;
  const auto channels_at = in.pos();
  split.raw_channels = in.get<std::uint32_t>("C_raw");
  if (split.raw_channels == 0) throw ParseError("header declares zero channels", channels_at);
  const auto classes_at = in.pos();
  split.num_classes = in.get<std::uint32_t>("N_c");
  if (split.num_classes == 0) throw ParseError("header declares zero classes", classes_at);
  const auto n_samples = in.get<std::uint32_t>("n_samples");
  split.records.reserve(std::min<std::size_t>(n_samples, bytes.size() / 16 + 1));

  for (std::uint32_t s = 0; s < n_samples; ++s) {
    SampleRecord rec;
    const auto label_at = in.pos();
    rec.label = in.get<std::uint32_t>("label");
    if (rec.label >= split.num_classes) throw ParseError("label out of range", label_at);
    const auto duration_at = in.pos();
    rec.duration_us = in.get<std::uint64_t>("duration_us");
    if (rec.duration_us == 0) throw ParseError("sample duration must be positive", duration_at);
    const auto n_events = in.get<std::uint32_t>("n_events");
    if (static_cast<std::uint64_t>(n_events) * 12 > bytes.size() - in.pos()) {
      throw ParseError("truncated file: event list shorter than declared", in.pos());
    }
    rec.events.resize(n_events);
    for (std::uint32_t e = 0; e < n_events; ++e) {
      const auto event_at = in.pos();
      auto& ev = rec.events[e];
      ev.time_us = in.get<std::uint64_t>("time_us");
      ev.channel = in.get<std::uint32_t>("channel");
      if (ev.channel >= split.raw_channels) throw ParseError("channel out of range", event_at + 8);
      if (e > 0 && ev.time_us < rec.events[e - 1].time_us) {
        throw ParseError("event times not monotone", event_at);
      }
      if (ev.time_us > rec.duration_us) throw ParseError("event time exceeds sample duration", event_at);
    }
    split.records.push_back(std::move(rec));
  }
  if (!in.at_end()) throw ParseError("trailing bytes after last sample", in.pos());
  return split;
}

DatasetSplit read_event_file(const std::filesystem::path& path, const std::string& split_name) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open event file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_event_file(bytes, split_name);
}

void write_event_file(const std::filesystem::path& path, const DatasetSplit& split) {
  const auto bytes = encode_event_file(split);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write event file " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SpikeTensor bin_sample(const SampleRecord& sample, std::uint32_t raw_channels, const BinOptions& options) {
  if (options.time_steps == 0) throw ConfigError("time_steps", "must be at least 1");
  if (options.bin_factor == 0 || raw_channels % options.bin_factor != 0) {
    throw ConfigError("bin_factor", "must divide the raw channel count " + std::to_string(raw_channels));
  }
  const std::size_t channels = raw_channels / options.bin_factor;
  const std::size_t steps = options.time_steps;
  SpikeTensor out(1, steps, channels, options.binarize);

  // Per raw channel counts are needed for max pooling; sum pooling can go straight to the bin.
  std::vector<double> raw;
  if (options.pool == ChannelPool::kMax) raw.assign(steps * raw_channels, 0.0);

  for (const auto& ev : sample.events) {
    if (ev.channel >= raw_channels) throw ShapeError("event channel out of range");
    const auto scaled = static_cast<unsigned __int128>(ev.time_us) * steps / sample.duration_us;
    const std::size_t t = static_cast<std::size_t>(std::min<unsigned __int128>(scaled, steps - 1));
    if (options.pool == ChannelPool::kSum) {
      out.at(0, t, ev.channel / options.bin_factor) += 1.0;
    } else {
      raw[t * raw_channels + ev.channel] += 1.0;
    }
  }
  if (options.pool == ChannelPool::kMax) {
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t c = 0; c < raw_channels; ++c) {
        double& cell = out.at(0, t, c / options.bin_factor);
        cell = std::max(cell, raw[t * raw_channels + c]);
      }
    }
  }
  if (options.binarize) {
    for (double& v : out.data()) v = v > 0.0 ? 1.0 : 0.0;
  }
  return out;
}

SpikeTensor bin_split(const DatasetSplit& split, const BinOptions& options) {
  if (options.bin_factor == 0 || split.raw_channels % options.bin_factor != 0) {
    throw ConfigError("bin_factor", "must divide the raw channel count " + std::to_string(split.raw_channels));
  }
  SpikeTensor out(split.records.size(), options.time_steps, split.raw_channels / options.bin_factor,
                  options.binarize);
  const std::size_t stride = options.time_steps * out.channels();
  for (std::size_t i = 0; i < split.records.size(); ++i) {
    const auto one = bin_sample(split.records[i], split.raw_channels, options);
    std::copy(one.data().begin(), one.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

std::vector<std::uint32_t> labels_of(const DatasetSplit& split) {
  std::vector<std::uint32_t> labels;
  labels.reserve(split.records.size());
  for (const auto& r : split.records) labels.push_back(r.label);
  return labels;
}

DatasetSplit make_interval_task(const IntervalTaskParams& p) {
  if (p.lag_a == 0 || p.lag_a >= p.lag_b) throw ConfigError("lag_a", "requires 0 < lag_a < lag_b");
  if (p.lag_b >= p.time_steps || p.lag_b + p.burst_width > p.time_steps) {
    throw ConfigError("lag_b", "echo burst does not fit in " + std::to_string(p.time_steps) + " steps");
  }
  if (p.burst_width == 0 || p.burst_width > p.lag_a) {
    throw ConfigError("burst_width", "must be in [1, lag_a] so that bursts do not overlap");
  }
  if (p.band_width == 0 || p.band_width > p.channels) throw ConfigError("band_width", "must be in [1, channels]");
  if (p.class1_fraction < 0.0 || p.class1_fraction > 1.0) {
    throw ConfigError("class1_fraction", "must be in [0, 1]");
  }

  std::mt19937_64 rng(p.seed);
  DatasetSplit split;
  split.raw_channels = p.channels;
  split.num_classes = 2;

  const auto n_class1 = static_cast<std::size_t>(std::llround(p.class1_fraction * static_cast<double>(p.n_samples)));
  std::vector<std::uint32_t> labels(p.n_samples, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_class1), 1u);
  std::shuffle(labels.begin(), labels.end(), rng);

  const std::size_t last_onset = p.time_steps - p.lag_b - p.burst_width;
  std::uniform_int_distribution<std::size_t> onset_dist(0, last_onset);
  std::uniform_int_distribution<std::uint32_t> band_dist(0, p.channels - p.band_width);

  for (const auto label : labels) {
    SampleRecord rec;
    rec.label = label;
    rec.duration_us = p.time_steps * p.step_us;
    const std::size_t onset = onset_dist(rng);
    const std::uint32_t band = band_dist(rng);
    const std::size_t lag = label == 0 ? p.lag_a : p.lag_b;
    for (const std::size_t start : {onset, onset + lag}) {
      for (std::size_t dt = 0; dt < p.burst_width; ++dt) {
        for (std::uint32_t c = 0; c < p.band_width; ++c) {
          rec.events.push_back({(start + dt) * p.step_us + p.step_us / 2, band + c});
        }
      }
    }
    split.records.push_back(std::move(rec));
  }
  return split;
}

std::vector<std::vector<std::size_t>> batch_order(std::size_t n, std::size_t batch_size, bool shuffle,
                                                  std::uint64_t seed) {
  if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                         idx.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

BatchIterator::BatchIterator(const DatasetSplit& split, const BinOptions& options, std::size_t batch_size,
                             bool shuffle, std::uint64_t seed)
    : split_(&split), options_(options), order_(batch_order(split.records.size(), batch_size, shuffle, seed)) {}

bool BatchIterator::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  const auto& idx = order_[cursor_++];
  const std::size_t channels = split_->raw_channels / options_.bin_factor;
  out.spikes = SpikeTensor(idx.size(), options_.time_steps, channels, options_.binarize);
  out.labels.clear();
  out.indices = idx;
  const std::size_t stride = options_.time_steps * channels;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& rec = split_->records[idx[i]];
    const auto one = bin_sample(rec, split_->raw_channels, options_);
    std::copy(one.data().begin(), one.data().end(),
              out.spikes.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
    out.labels.push_back(rec.label);
  }
  return true;
}

}  // namespace delaysnn
