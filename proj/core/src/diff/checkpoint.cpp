// Copyright 2026 The Declutter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "declutter/diff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace declutter::diff {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void put(std::vector<std::uint8_t>& out, U value) {
  std::uint8_t raw[sizeof(U)];
  std::memcpy(raw, &value, sizeof(U));
  out.insert(out.end(), raw, raw + sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return value;
  }

  std::string string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void floats(float* dst, std::size_t n) {
    need(n * sizeof(float));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const TensorMap& tensors) {
  std::vector<std::uint8_t> out = {'D', 'C', 'L', 'T'};
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw Error("tensor name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (int d : t.dims()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data());
    out.insert(out.end(), raw, raw + t.size() * sizeof(float));
  }
  return out;
}

TensorMap decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.string(4) != "DCLT") throw Error("not a checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint16_t>();
    std::string name = in.string(name_len);
    const auto rank = in.get<std::uint8_t>();
    Shape dims(rank);
    for (auto& d : dims) d = static_cast<int>(in.get<std::uint32_t>());
    Tensor t(dims);
    in.floats(t.data(), t.size());
    if (!tensors.emplace(std::move(name), std::move(t)).second) throw Error("duplicate tensor in checkpoint");
  }
  if (!in.done()) throw Error("trailing bytes after checkpoint");
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors) {
  const auto bytes = encode_checkpoint(tensors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

TensorMap load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace declutter::diff
