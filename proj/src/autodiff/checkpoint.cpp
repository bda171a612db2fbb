/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <bit>
#include <cstring>
#include <fstream>

#include "sms/autodiff.hpp"
#include "sms/binary_io.hpp"

namespace sms::ad {
namespace {

constexpr char kMagic[4] = {'S', 'M', 'S', '1'};

std::string read_header(io::Reader& in, std::uint32_t& count) {
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError(in.path() + ": not an SMS1 checkpoint");
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(in.path() + ": unsupported checkpoint version " + std::to_string(version));
  }
  count = in.u32();
  return in.str();
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const ParameterStore<T>& params,
                     const std::string& metadata) {
  io::Writer out(path);
  out.bytes(kMagic, 4);
  out.u32(kCheckpointVersion);
  out.u32(static_cast<std::uint32_t>(params.size()));
  out.str(metadata);
  for (const auto& p : params.all()) {
    out.str(p.name);
    out.u32(static_cast<std::uint32_t>(p.shape.size()));
    for (auto s : p.shape) out.u32(static_cast<std::uint32_t>(s));
    for (T v : p.value) out.f32(static_cast<float>(v));
  }
  out.close();
}

template <typename T>
std::string load_checkpoint(const std::string& path, ParameterStore<T>& params) {
  io::Reader in(path);
  std::uint32_t count = 0;
  std::string metadata = read_header(in, count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = in.str();
    const auto rank = in.u32();
    Shape shape(rank);
    for (auto& s : shape) s = in.u32();
    auto& p = params.get(name);
    if (p.shape != shape) {
      throw ConfigError(path + ": parameter " + name + " stored as " + to_string(shape) +
                        " but model expects " + to_string(p.shape));
    }
    for (auto& v : p.value) v = static_cast<T>(in.f32());
  }
  return metadata;
}

std::string read_checkpoint_metadata(const std::string& path) {
  io::Reader in(path);
  std::uint32_t count = 0;
  return read_header(in, count);
}

template void save_checkpoint(const std::string&, const ParameterStore<float>&, const std::string&);
template void save_checkpoint(const std::string&, const ParameterStore<double>&, const std::string&);
template std::string load_checkpoint(const std::string&, ParameterStore<float>&);
template std::string load_checkpoint(const std::string&, ParameterStore<double>&);

}  // namespace sms::ad
