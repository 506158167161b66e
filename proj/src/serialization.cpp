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

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <nlohmann/json.hpp>

#include "delaysnn/config.hpp"
#include "delaysnn/network.hpp"

namespace delaysnn {

namespace {

constexpr std::array<std::uint8_t, 4> kModelMagic = {'D', 'S', 'N', 'N'};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_f64(std::vector<std::uint8_t>& out, double value) { put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(value)); }

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64(const char* what) { return std::bit_cast<double>(get<std::uint64_t>(what)); }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::uint64_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) throw ParseError(std::string("truncated model file while reading ") + what, pos_);
  }
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_ = 0;
};

std::string header_text(const NetworkModel& model) {
  nlohmann::json trainable = nlohmann::json::array();
  for (const auto& l : model.layers()) trainable.push_back(l.delays.trainable);
  nlohmann::json j{{"network", to_json_value(model.config())},
                   {"mode", model.mode() == Mode::kTrain ? "train" : "eval"},
                   {"delays_trainable", trainable}};
  return j.dump();
}

}  // namespace

std::vector<std::uint8_t> encode_model(const NetworkModel& model) {
  NetworkModel copy = model;
  const std::string text = header_text(model);
  std::vector<std::uint8_t> out(kModelMagic.begin(), kModelMagic.end());
  put<std::uint16_t>(out, kModelFileVersion);
  put<std::uint64_t>(out, fnv1a(text));
  put_bytes(out, text);
  const auto blocks = copy.state_blocks();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    put_bytes(out, b.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.shape.size()));
    for (const auto d : b.shape) put<std::uint64_t>(out, d);
    for (const double v : b.values) put_f64(out, v);
  }
  return out;
}

NetworkModel decode_model(const std::vector<std::uint8_t>& bytes, bool round_delays) {
  Cursor in(bytes);
  for (std::size_t i = 0; i < kModelMagic.size(); ++i) {
    if (in.get<std::uint8_t>("magic") != kModelMagic[i]) throw ParseError("bad magic, expected DSNN", i);
  }
  const auto version_at = in.pos();
  const auto version = in.get<std::uint16_t>("version");
  if (version != kModelFileVersion) {
    throw ParseError("model file version " + std::to_string(version) + " is not supported", version_at);
  }
  const auto digest = in.get<std::uint64_t>("config digest");
  const auto text_at = in.pos();
  const std::string text = in.get_string("config");
  if (fnv1a(text) != digest) throw ParseError("config digest mismatch", text_at);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("embedded config is not valid JSON: ") + e.what(), text_at);
  }
  NetworkModel model = NetworkModel::create(network_config_from_json(header.at("network")), 0);
  model.set_mode(header.value("mode", "train") == "eval" ? Mode::kEval : Mode::kTrain);
  if (header.contains("delays_trainable")) {
    const auto& flags = header.at("delays_trainable");
    for (std::size_t i = 0; i < model.layers().size() && i < flags.size(); ++i) {
      model.layers()[i].delays.trainable = flags[i].get<bool>();
    }
  }

  auto blocks = model.state_blocks();
  std::map<std::string, ParamView*> by_name;
  for (auto& b : blocks) by_name[b.name] = &b;
  const auto n_blocks = in.get<std::uint32_t>("block count");
  std::size_t filled = 0;
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    const auto name_at = in.pos();
    const std::string name = in.get_string("block name");
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("unexpected parameter block " + name, name_at);
    const auto ndim = in.get<std::uint32_t>("block rank");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>("block shape"));
    if (shape != it->second->shape) throw ParseError("shape mismatch for block " + name, name_at);
    for (double& v : it->second->values) v = in.get_f64("block values");
    ++filled;
  }
  if (filled != blocks.size()) throw ParseError("model file is missing parameter blocks", in.pos());
  if (!in.at_end()) throw ParseError("trailing bytes after last block", in.pos());

  if (round_delays) {
    for (auto& l : model.layers()) l.delays = round_for_inference(l.delays);
    model.set_mode(Mode::kEval);
  }
  return model;
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NetworkModel load_model(const std::filesystem::path& path, bool round_delays) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model(bytes, round_delays);
}

}  // namespace delaysnn
