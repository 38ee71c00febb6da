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

// Desk-scale experiment presets. Each one is a config, a variant list and a
// pinned seed list, sized to finish in well under a minute on one core.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/compare.hpp"
#include "icl/config.hpp"

namespace icl {

struct ExperimentPreset {
  std::string name;
  std::string description;
  RunConfig config;
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts{"report.json", "table.csv"};
};

namespace detail {
inline RunConfig small_reverse() {
  RunConfig c;
  c.data.task = SyntheticTask::reverse;
  c.data.train_count = 600;
  c.data.val_count = 60;
  c.data.test_count = 60;
  c.data.min_len = 3;
  c.data.max_len = 8;
  c.data.symbols = 6;
  c.data.seed = 7;
  c.optim.lr = 5e-3;
  c.optim.lr_decay = 0.95;
  c.optim.batch_size = 16;
  c.optim.bucket = 64;
  c.max_epochs = 20;
  c.decode.max_len = 24;
  return c;
}
}  // namespace detail

inline std::vector<ExperimentPreset> preset_list() {
  std::vector<ExperimentPreset> out;
  {
    ExperimentPreset p{"variant-matrix", "baseline plus the four criterion/algorithm combinations", detail::small_reverse(),
                       {"w/o CL", "TCL-SG", "TCL-SC", "ICL-SG", "ICL-SC"}, {42, 43, 44}};
    out.push_back(p);
  }
  {
    ExperimentPreset p{"strategy-ablation", "Decrease / Increase / Random at p_start 0.6, stride 0.3",
                       detail::small_reverse(),
                       {"ICL-SC@decrease:0.6/0.3", "ICL-SC@increase:0.6/0.3", "ICL-SC@random:0.6/0.3"}, {42, 43, 44}};
    out.push_back(p);
  }
  {
    ExperimentPreset p{"param-sweep", "ICL-SC over p_start x stride", detail::small_reverse(), {}, {42, 43, 44}};
    for (const char* ps : {"0.3", "0.5", "0.6", "0.9"}) {
      for (const char* s : {"0.1", "0.3", "0.5", "0.6"}) p.variants.push_back(std::string("ICL-SC:") + ps + "/" + s);
    }
    out.push_back(p);
  }
  {
    ExperimentPreset p{"ranking-combos", "sample-wise orderings alone and combined with ICL-SC", detail::small_reverse(),
                       {"w/o CL", "InLen", "OutLen", "CompR", "Abstr", "ICL-SC", "ICL-SC+InLen", "ICL-SC+OutLen",
                        "ICL-SC+CompR", "ICL-SC+Abstr"},
                       {42, 43, 44}};
    p.config.data.task = SyntheticTask::add;
    p.config.data.min_len = 1;
    p.config.data.max_len = 3;
    out.push_back(p);
  }
  return out;
}

inline ExperimentPreset find_preset(const std::string& name) {
  for (auto& p : preset_list()) {
    if (p.name == name) return p;
  }
  throw Error("unknown preset '" + name + "'");
}

struct PresetResult {
  nlohmann::json report;
  std::string table;
  std::vector<CompareRow> rows;
};

inline PresetResult run_preset(const ExperimentPreset& p, std::size_t jobs = 1) {
  const Dataset data = load_dataset(p.config.data);
  CompareOptions opts;
  opts.jobs = jobs;
  PresetResult r;
  r.rows = run_compare(p.config, p.variants, p.seeds, data, opts);
  r.report = compare_json(r.rows);
  r.report["preset"] = p.name;
  r.report["config"] = to_json(p.config);
  r.table = compare_csv(r.rows);
  return r;
}

inline std::string preset_report_text(const PresetResult& r) { return r.report.dump(2) + "\n"; }

// Writes report.json and table.csv into `dir`.
inline void write_preset(const std::filesystem::path& dir, const PresetResult& r) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", preset_report_text(r));
  write_text(dir / "table.csv", r.table);
}

}  // namespace icl
