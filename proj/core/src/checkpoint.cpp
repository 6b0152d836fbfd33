// Copyright 2026 The Perimid Authors
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

#include "perimid/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "perimid/errors.hpp"

namespace perimid {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'M', 'F', '1'};
constexpr int kFormatVersion = 1;

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const PeriMidFormer& model, const std::filesystem::path& path) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const Parameter& p : model.parameters().all()) {
    blocks.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  }
  const nlohmann::json header{
      {"format", kFormatVersion}, {"model", to_json(model.config())}, {"blocks", blocks}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Parameter& p : model.parameters().all()) {
    for (double v : p.value.data()) write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw Error("checkpoint: write to " + path.string() + " failed");
}

PeriMidFormer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError("checkpoint: bad magic in " + path.string());
  const std::uint64_t header_len = read_u64(in);
  if (header_len > (1u << 26)) throw DataError("checkpoint: implausible header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DataError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  if (header.value("format", 0) != kFormatVersion) {
    throw DataError("checkpoint: unsupported format version");
  }
  PeriMidFormer model(model_config_from_json(header.at("model")));
  const auto& blocks = header.at("blocks");
  ParameterStore& store = model.parameters();
  if (blocks.size() != store.size()) {
    throw DataError("checkpoint: block count " + std::to_string(blocks.size()) +
                    " does not match the model's " + std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto name = blocks[i].at("name").get<std::string>();
    const auto shape = blocks[i].at("shape").get<Shape>();
    if (name != store[i].name || shape != store[i].value.shape()) {
      throw DataError("checkpoint: block " + std::to_string(i) + " ('" + name +
                      "') does not match the model layout");
    }
    for (double& v : store.value(i).data()) v = std::bit_cast<double>(read_u64(in));
  }
  return model;
}

}  // namespace perimid
