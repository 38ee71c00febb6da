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

// Run configuration: a two-level JSON tree tagged "icl-config-v1".
// Comments are allowed; unknown sections or keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/common.hpp"
#include "icl/curriculum.hpp"
#include "icl/data.hpp"
#include "icl/decoding.hpp"
#include "icl/loss.hpp"
#include "icl/metrics.hpp"
#include "icl/model.hpp"
#include "icl/ranking.hpp"

namespace icl {

inline constexpr const char* kConfigVersion = "icl-config-v1";

enum class Algorithm { none, icl, tcl };

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "none") return Algorithm::none;
  if (s == "icl" || s == "ICL") return Algorithm::icl;
  if (s == "tcl" || s == "TCL") return Algorithm::tcl;
  throw Error("unknown curriculum algorithm '" + std::string(s) + "' (expected none|icl|tcl)");
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::none: return "none";
    case Algorithm::icl: return "icl";
    case Algorithm::tcl: return "tcl";
  }
  return "?";
}

struct DataConfig {
  std::string source = "synthetic";  // synthetic | jsonl
  SyntheticTask task = SyntheticTask::reverse;
  std::size_t train_count = 2000;
  std::size_t val_count = 200;
  std::size_t test_count = 200;
  std::size_t min_len = 5;
  std::size_t max_len = 20;
  std::size_t symbols = 8;
  std::uint64_t seed = 42;
  std::string train, val, test;  // jsonl paths
  TokenizerMode tokenizer = TokenizerMode::whitespace;
};

struct OptimConfig {
  double lr = 5e-3;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_decay = 1.0;     // lr multiplier applied after every epoch
  double clip_norm = 0.0;    // global gradient-norm clip, 0 = off
  std::size_t bucket = 256;  // length-bucketing window for shuffled epochs, 0 = off
};

struct CurriculumConfig {
  Algorithm algorithm = Algorithm::none;
  Criterion criterion = Criterion::sc;
  double p_start = 0.5;
  double stride = 0.5;
  Strategy strategy = Strategy::decrease;
  int patience = 3;
  long tcl_steps = 0;  // 0 = two epochs
  double f0 = 0.1;
  Weighting weighting = Weighting::hard;
  double ramp = 0.5;
  std::string random_granularity = "epoch";  // epoch | batch
  // Soft-weighting hyper-parameters of the token-wise baseline. Recorded only.
  nlohmann::json gamma0, alpha0, lambda0;
};

struct RankingConfig {
  std::optional<RankStrategy> strategy;
  std::size_t sorted_epochs = 1;
};

struct ValidationConfig {
  std::string every = "epoch";  // epoch | steps
  std::size_t interval = 1;
  std::string metric = "loss";
  std::optional<Direction> direction;  // unset: the metric's natural direction

  Direction resolved_direction() const { return direction ? *direction : metric_direction(metric); }
};

struct CompareConfig {
  std::vector<std::string> variants{"w/o CL", "TCL-SG", "TCL-SC", "ICL-SG", "ICL-SC"};
  std::vector<std::uint64_t> seeds{42};
  std::size_t jobs = 1;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model{0, 32, 64, 1, 0};
  OptimConfig optim;
  CurriculumConfig curriculum;
  RankingConfig ranking;
  ValidationConfig validation;
  DecodeConfig decode;
  std::uint64_t seed = 42;
  std::size_t max_epochs = 50;
  CompareConfig compare;

  void validate() const;
};

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  const auto& d = c.data;
  const auto& cu = c.curriculum;
  return json{
      {"version", kConfigVersion},
      {"data",
       {{"source", d.source}, {"task", to_string(d.task)}, {"train_count", d.train_count},
        {"val_count", d.val_count}, {"test_count", d.test_count}, {"min_len", d.min_len}, {"max_len", d.max_len},
        {"symbols", d.symbols}, {"seed", d.seed}, {"train", d.train}, {"val", d.val}, {"test", d.test},
        {"tokenizer", to_string(d.tokenizer)}}},
      {"model", {{"embed_dim", c.model.embed_dim}, {"hidden_dim", c.model.hidden_dim}, {"layers", c.model.layers}}},
      {"optim",
       {{"lr", c.optim.lr}, {"batch_size", c.optim.batch_size}, {"beta1", c.optim.beta1}, {"beta2", c.optim.beta2},
        {"eps", c.optim.eps}, {"lr_decay", c.optim.lr_decay}, {"clip_norm", c.optim.clip_norm}, {"bucket", c.optim.bucket}}},
      {"curriculum",
       {{"algorithm", to_string(cu.algorithm)}, {"criterion", to_string(cu.criterion)}, {"p_start", cu.p_start},
        {"stride", cu.stride}, {"strategy", to_string(cu.strategy)}, {"patience", cu.patience},
        {"tcl_steps", cu.tcl_steps}, {"f0", cu.f0}, {"weighting", to_string(cu.weighting)}, {"ramp", cu.ramp},
        {"random_granularity", cu.random_granularity}, {"gamma0", cu.gamma0}, {"alpha0", cu.alpha0},
        {"lambda0", cu.lambda0}}},
      {"ranking",
       {{"strategy", c.ranking.strategy ? to_string(*c.ranking.strategy) : "none"},
        {"sorted_epochs", c.ranking.sorted_epochs}}},
      {"validation",
       {{"every", c.validation.every}, {"interval", c.validation.interval}, {"metric", c.validation.metric},
        {"direction", c.validation.direction ? to_string(*c.validation.direction) : "auto"}}},
      {"decode",
       {{"num_beams", c.decode.num_beams}, {"length_penalty", c.decode.length_penalty},
        {"no_repeat_ngram", c.decode.no_repeat_ngram_size}, {"min_len", c.decode.min_len},
        {"max_len", c.decode.max_len}}},
      {"train", {{"seed", c.seed}, {"max_epochs", c.max_epochs}}},
      {"compare", {{"variants", c.compare.variants}, {"seeds", c.compare.seeds}, {"jobs", c.compare.jobs}}},
  };
}

namespace detail {

template <class T>
T get_field(const nlohmann::json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("config: bad value for ") + section + "." + key + ": " + j.at(section).at(key).dump());
  }
}

}  // namespace detail

// `j` must already contain every key (see merge_config).
inline RunConfig from_json(const nlohmann::json& j) {
  using detail::get_field;
  RunConfig c;
  auto& d = c.data;
  d.source = get_field<std::string>(j, "data", "source");
  d.task = parse_synthetic_task(get_field<std::string>(j, "data", "task"));
  d.train_count = get_field<std::size_t>(j, "data", "train_count");
  d.val_count = get_field<std::size_t>(j, "data", "val_count");
  d.test_count = get_field<std::size_t>(j, "data", "test_count");
  d.min_len = get_field<std::size_t>(j, "data", "min_len");
  d.max_len = get_field<std::size_t>(j, "data", "max_len");
  d.symbols = get_field<std::size_t>(j, "data", "symbols");
  d.seed = get_field<std::uint64_t>(j, "data", "seed");
  d.train = get_field<std::string>(j, "data", "train");
  d.val = get_field<std::string>(j, "data", "val");
  d.test = get_field<std::string>(j, "data", "test");
  d.tokenizer = parse_tokenizer_mode(get_field<std::string>(j, "data", "tokenizer"));

  c.model.embed_dim = get_field<std::size_t>(j, "model", "embed_dim");
  c.model.hidden_dim = get_field<std::size_t>(j, "model", "hidden_dim");
  c.model.layers = get_field<std::size_t>(j, "model", "layers");

  c.optim.lr = get_field<double>(j, "optim", "lr");
  c.optim.batch_size = get_field<std::size_t>(j, "optim", "batch_size");
  c.optim.beta1 = get_field<double>(j, "optim", "beta1");
  c.optim.beta2 = get_field<double>(j, "optim", "beta2");
  c.optim.eps = get_field<double>(j, "optim", "eps");
  c.optim.lr_decay = get_field<double>(j, "optim", "lr_decay");
  c.optim.clip_norm = get_field<double>(j, "optim", "clip_norm");
  c.optim.bucket = get_field<std::size_t>(j, "optim", "bucket");

  auto& cu = c.curriculum;
  cu.algorithm = parse_algorithm(get_field<std::string>(j, "curriculum", "algorithm"));
  cu.criterion = parse_criterion(get_field<std::string>(j, "curriculum", "criterion"));
  cu.p_start = get_field<double>(j, "curriculum", "p_start");
  cu.stride = get_field<double>(j, "curriculum", "stride");
  cu.strategy = parse_strategy(get_field<std::string>(j, "curriculum", "strategy"));
  cu.patience = get_field<int>(j, "curriculum", "patience");
  cu.tcl_steps = get_field<long>(j, "curriculum", "tcl_steps");
  cu.f0 = get_field<double>(j, "curriculum", "f0");
  cu.weighting = parse_weighting(get_field<std::string>(j, "curriculum", "weighting"));
  cu.ramp = get_field<double>(j, "curriculum", "ramp");
  cu.random_granularity = get_field<std::string>(j, "curriculum", "random_granularity");
  cu.gamma0 = j.at("curriculum").at("gamma0");
  cu.alpha0 = j.at("curriculum").at("alpha0");
  cu.lambda0 = j.at("curriculum").at("lambda0");

  const auto rank = get_field<std::string>(j, "ranking", "strategy");
  if (rank != "none") c.ranking.strategy = parse_rank_strategy(rank);
  c.ranking.sorted_epochs = get_field<std::size_t>(j, "ranking", "sorted_epochs");

  c.validation.every = get_field<std::string>(j, "validation", "every");
  c.validation.interval = get_field<std::size_t>(j, "validation", "interval");
  c.validation.metric = get_field<std::string>(j, "validation", "metric");
  const auto dir = get_field<std::string>(j, "validation", "direction");
  if (dir != "auto") c.validation.direction = parse_direction(dir);

  c.decode.num_beams = get_field<std::size_t>(j, "decode", "num_beams");
  c.decode.length_penalty = get_field<double>(j, "decode", "length_penalty");
  c.decode.no_repeat_ngram_size = get_field<std::size_t>(j, "decode", "no_repeat_ngram");
  c.decode.min_len = get_field<std::size_t>(j, "decode", "min_len");
  c.decode.max_len = get_field<std::size_t>(j, "decode", "max_len");

  c.seed = get_field<std::uint64_t>(j, "train", "seed");
  c.max_epochs = get_field<std::size_t>(j, "train", "max_epochs");

  c.compare.variants = get_field<std::vector<std::string>>(j, "compare", "variants");
  c.compare.seeds = get_field<std::vector<std::uint64_t>>(j, "compare", "seeds");
  c.compare.jobs = get_field<std::size_t>(j, "compare", "jobs");
  return c;
}

// Overlays `user` on the defaults; every section and key must already exist.
inline nlohmann::json merge_config(const nlohmann::json& defaults, const nlohmann::json& user) {
  if (!user.is_object()) throw Error("config: top level must be an object");
  nlohmann::json out = defaults;
  if (!user.contains("version")) throw Error(std::string("config: missing version (expected ") + kConfigVersion + ")");
  if (user.at("version") != kConfigVersion) {
    throw Error("config: unsupported version " + user.at("version").dump() + " (expected " + kConfigVersion + ")");
  }
  for (const auto& [section, body] : user.items()) {
    if (section == "version") continue;
    if (!defaults.contains(section)) throw Error("config: unknown section '" + section + "'");
    if (!body.is_object()) throw Error("config: section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!defaults.at(section).contains(key)) throw Error("config: unknown key '" + section + "." + key + "'");
      out[section][key] = value;
    }
  }
  return out;
}

inline void RunConfig::validate() const {
  if (data.source != "synthetic" && data.source != "jsonl") {
    throw Error("config: data.source must be synthetic or jsonl");
  }
  if (data.source == "jsonl" && (data.train.empty() || data.val.empty())) {
    throw Error("config: jsonl source needs data.train and data.val");
  }
  if (data.source == "synthetic") {
    if (data.train_count == 0) throw Error("config: data.train_count must be >= 1");
    if (data.val_count == 0) throw Error("config: empty validation set (data.val_count = 0)");
  }
  if (model.embed_dim < 1 || model.hidden_dim < 1 || model.layers < 1) throw Error("config: model dims must be >= 1");
  if (!(optim.lr > 0.0)) throw Error("config: optim.lr must be positive");
  if (!(optim.lr_decay > 0.0 && optim.lr_decay <= 1.0)) throw Error("config: optim.lr_decay must lie in (0, 1]");
  if (optim.batch_size < 1) throw Error("config: optim.batch_size must be >= 1");
  const auto& cu = curriculum;
  if (cu.algorithm == Algorithm::icl) make_phase_set(cu.p_start, cu.stride);
  if (cu.patience < 1) throw Error("config: curriculum.patience must be >= 1");
  if (cu.tcl_steps < 0) throw Error("config: curriculum.tcl_steps must be >= 0");
  if (!(cu.f0 > 0.0 && cu.f0 <= 1.0)) throw Error("config: curriculum.f0 must lie in (0, 1]");
  if (cu.random_granularity != "epoch" && cu.random_granularity != "batch") {
    throw Error("config: curriculum.random_granularity must be epoch or batch");
  }
  if (validation.every != "epoch" && validation.every != "steps") {
    throw Error("config: validation.every must be epoch or steps");
  }
  if (validation.interval < 1) throw Error("config: validation.interval must be >= 1");
  metric_direction(validation.metric);
  decode.validate();
  if (max_epochs < 1) throw Error("config: train.max_epochs must be >= 1");
  if (compare.seeds.empty()) throw Error("config: compare.seeds must not be empty");
}

inline nlohmann::json default_config_json() { return to_json(RunConfig{}); }

// Parses config text; relative jsonl paths are resolved against `base_dir`.
inline RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json user;
  try {
    user = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  RunConfig c = from_json(merge_config(default_config_json(), user));
  for (std::string* p : {&c.data.train, &c.data.val, &c.data.test}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative() && !base_dir.empty()) {
      *p = (base_dir / *p).lexically_normal().string();
    }
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path());
}

// "section.key=value" override; value is parsed as JSON, else taken as a string.
inline RunConfig apply_override(const RunConfig& c, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw Error("override must look like section.key=value: " + std::string(assignment));
  }
  const std::string section(assignment.substr(0, dot));
  const std::string key(assignment.substr(dot + 1, eq - dot - 1));
  const std::string raw(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json user = {{"version", kConfigVersion}, {section, {{key, value}}}};
  RunConfig out = from_json(merge_config(to_json(c), user));
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Variants: base[+Ranking][@strategy][:p_start/stride]
//
// Bases: "w/o CL" (also "none", "baseline"), TCL-SG, TCL-SC, ICL-SG, ICL-SC.
// A bare ranking name ("InLen") means no in-sample curriculum plus that ranking.

inline RunConfig apply_variant(RunConfig c, std::string_view variant) {
  std::string v(variant);
  auto take_suffix = [&](char sep) -> std::optional<std::string> {
    const auto pos = v.rfind(sep);
    if (pos == std::string::npos) return std::nullopt;
    std::string tail = v.substr(pos + 1);
    v.erase(pos);
    return tail;
  };
  const auto params = take_suffix(':');
  const auto strategy = take_suffix('@');
  const auto ranking = take_suffix('+');

  c.ranking.strategy.reset();
  auto& cu = c.curriculum;
  if (v == "w/o CL" || v == "none" || v == "baseline") {
    cu.algorithm = Algorithm::none;
  } else if (v == "TCL-SG" || v == "TCL-SC" || v == "ICL-SG" || v == "ICL-SC") {
    cu.algorithm = v[0] == 'T' ? Algorithm::tcl : Algorithm::icl;
    cu.criterion = v.substr(4) == "SG" ? Criterion::sg : Criterion::sc;
  } else {
    try {
      c.ranking.strategy = parse_rank_strategy(v);
      cu.algorithm = Algorithm::none;
    } catch (const Error&) {
      throw Error("unknown variant '" + std::string(variant) + "'");
    }
  }
  if (ranking) c.ranking.strategy = parse_rank_strategy(*ranking);
  if (strategy) cu.strategy = parse_strategy(*strategy);
  if (params) {
    const auto slash = params->find('/');
    if (slash == std::string::npos) throw Error("variant parameters must be p_start/stride: " + *params);
    try {
      cu.p_start = std::stod(params->substr(0, slash));
      cu.stride = std::stod(params->substr(slash + 1));
    } catch (const std::exception&) {
      throw Error("variant parameters must be p_start/stride: " + *params);
    }
  }
  c.validate();
  return c;
}

}  // namespace icl
