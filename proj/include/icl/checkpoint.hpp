// Copyright 2026 The ICL Authors.
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

// Checkpoint files.
//
//   line 1: "icl-ckpt-v1"
//   line 2: JSON manifest {format, config, tokenizer, vocab, tensors[{name, shape, offset}], data_bytes, meta}
//   rest:   tensor values as little-endian IEEE-754 doubles; offsets are bytes
//           from the first byte after the manifest line.

#pragma once

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "icl/data.hpp"
#include "icl/model.hpp"

namespace icl {

inline constexpr const char* kCheckpointFormat = "icl-ckpt-v1";

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  TokenizerMode tokenizer = TokenizerMode::whitespace;
  nlohmann::json meta = nlohmann::json::object();
};

namespace detail {
inline std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  std::uint64_t y = 0;
  for (int i = 0; i < 8; ++i) y = (y << 8) | ((x >> (8 * i)) & 0xff);
  return y;
}
}  // namespace detail

inline nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim},
          {"layers", c.layers}, {"seed", c.seed}};
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["config"] = model_config_json(ckpt.params.config);
  manifest["tokenizer"] = to_string(ckpt.tokenizer);
  manifest["vocab"] = ckpt.vocab.tokens();
  manifest["meta"] = ckpt.meta;
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params.tensors) {
    tensors.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  }
  manifest["tensors"] = tensors;
  manifest["data_bytes"] = offset;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << kCheckpointFormat << '\n' << manifest.dump() << '\n';
  for (const auto& [_, t] : ckpt.params.tensors) {
    for (double v : t.values) {
      const std::uint64_t bits = detail::to_little(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.write(buf, 8);
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::string tag, line;
  std::getline(in, tag);
  if (tag != kCheckpointFormat) throw Error(path + ": not an " + std::string(kCheckpointFormat) + " checkpoint");
  std::getline(in, line);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": malformed manifest (" + e.what() + ")");
  }
  std::vector<char> data(std::istreambuf_iterator<char>(in), {});

  Checkpoint ckpt;
  try {
    const auto& c = manifest.at("config");
    ckpt.params.config = {c.at("vocab_size").get<std::size_t>(), c.at("embed_dim").get<std::size_t>(),
                          c.at("hidden_dim").get<std::size_t>(), c.at("layers").get<std::size_t>(),
                          c.at("seed").get<std::uint64_t>()};
    ckpt.params.config.validate();
    ckpt.tokenizer = parse_tokenizer_mode(manifest.at("tokenizer").get<std::string>());
    ckpt.vocab = Vocabulary::from_tokens(manifest.at("vocab").get<std::vector<std::string>>());
    ckpt.meta = manifest.value("meta", nlohmann::json::object());
    if (manifest.at("data_bytes").get<std::size_t>() != data.size()) throw Error(path + ": truncated tensor data");
    const auto shapes = detail::parameter_shapes(ckpt.params.config);
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto expected = shapes.find(name);
      if (expected == shapes.end() || expected->second != shape) {
        throw Error(path + ": unexpected tensor '" + name + "' " + shape_str(shape));
      }
      Tensor t(shape);
      if (offset + t.size() * 8 > data.size()) throw Error(path + ": tensor '" + name + "' out of bounds");
      for (std::size_t i = 0; i < t.size(); ++i) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, data.data() + offset + 8 * i, 8);
        t.values[i] = std::bit_cast<double>(detail::to_little(bits));
      }
      ckpt.params.tensors.emplace(name, std::move(t));
    }
    if (ckpt.params.tensors.size() != shapes.size()) throw Error(path + ": missing tensors");
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid manifest (" + e.what() + ")");
  }
  if (ckpt.vocab.size() != ckpt.params.config.vocab_size) throw Error(path + ": vocabulary size mismatch");
  return ckpt;
}

}  // namespace icl
