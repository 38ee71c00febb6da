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

// Variant x seed comparison matrix.

#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/config.hpp"
#include "icl/trainer.hpp"

namespace icl {

struct CompareRow {
  std::string variant;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "error: ..."
  std::optional<TrainReport> report;
};

struct CompareOptions {
  std::size_t jobs = 1;
  std::filesystem::path out_dir;  // per-row run outputs when non-empty
  std::function<void(const CompareRow&)> on_row;
};

inline std::string row_dir_name(const std::string& variant, std::uint64_t seed) {
  std::string s;
  for (char ch : variant) s += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' ? ch : '_';
  return s + "_seed" + std::to_string(seed);
}

// Every (variant, seed) pair trains from the same data. A failing row is
// reported with its error and does not stop the others.
inline std::vector<CompareRow> run_compare(const RunConfig& base, const std::vector<std::string>& variants,
                                           const std::vector<std::uint64_t>& seeds, const Dataset& data,
                                           const CompareOptions& opts = {}) {
  std::vector<CompareRow> rows;
  for (const auto& v : variants) {
    for (auto s : seeds) rows.push_back({v, s, "ok", std::nullopt});
  }
  std::mutex mu;
  auto run_row = [&](CompareRow& row) {
    try {
      RunConfig cfg = apply_variant(base, row.variant);
      cfg.seed = row.seed;
      TrainResult r = train(cfg, data, {}, row.variant);
      if (!opts.out_dir.empty()) write_run(opts.out_dir / "runs" / row_dir_name(row.variant, row.seed), r, data);
      row.report = std::move(r.report);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    if (opts.on_row) {
      std::lock_guard<std::mutex> lock(mu);
      opts.on_row(row);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, rows.size()));
  if (jobs == 1) {
    for (auto& row : rows) run_row(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_row(rows[i]);
      });
    }
    for (auto& t : pool) t.join();
  }
  return rows;
}

inline nlohmann::json compare_row_json(const CompareRow& row) {
  nlohmann::json j{{"variant", row.variant}, {"seed", row.seed}, {"status", row.status}};
  if (!row.report) return j;
  const TrainReport& r = *row.report;
  if (r.test) {
    j["exact_match"] = r.test->scores.exact_match;
    j["bleu4"] = r.test->scores.bleu[3];
    j["rougeL"] = r.test->scores.rougeL_f1;
  }
  j["val_loss"] = r.best_val_loss;
  j["epochs"] = r.epochs;
  j["steps"] = r.steps;
  j["stop_reason"] = r.stop_reason;
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : r.epoch_p) ep.push_back(e.p);
  j["epoch_p"] = ep;
  return j;
}

// Per-variant means over the seeds that finished.
struct VariantSummary {
  std::string variant;
  std::size_t runs = 0;
  std::size_t ok = 0;
  double exact_match = 0, bleu4 = 0, rougeL = 0, val_loss = 0, epochs = 0, steps = 0;
};

inline std::vector<VariantSummary> compare_summary(const std::vector<CompareRow>& rows) {
  std::vector<VariantSummary> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const VariantSummary& s) { return s.variant == row.variant; });
    if (it == out.end()) {
      out.push_back({row.variant});
      it = out.end() - 1;
    }
    ++it->runs;
    if (!row.report) continue;
    const TrainReport& r = *row.report;
    ++it->ok;
    if (r.test) {
      it->exact_match += r.test->scores.exact_match;
      it->bleu4 += r.test->scores.bleu[3];
      it->rougeL += r.test->scores.rougeL_f1;
    }
    it->val_loss += r.best_val_loss;
    it->epochs += static_cast<double>(r.epochs);
    it->steps += static_cast<double>(r.steps);
  }
  for (auto& s : out) {
    if (s.ok == 0) continue;
    const double k = static_cast<double>(s.ok);
    s.exact_match /= k;
    s.bleu4 /= k;
    s.rougeL /= k;
    s.val_loss /= k;
    s.epochs /= k;
    s.steps /= k;
  }
  return out;
}

inline nlohmann::json compare_json(const std::vector<CompareRow>& rows) {
  nlohmann::json out{{"format", "icl-compare-v1"}, {"rows", nlohmann::json::array()},
                     {"summary", nlohmann::json::array()}};
  for (const auto& r : rows) out["rows"].push_back(compare_row_json(r));
  for (const auto& s : compare_summary(rows)) {
    nlohmann::json j{{"variant", s.variant}, {"runs", s.runs}, {"ok", s.ok}};
    if (s.ok > 0) {
      j["exact_match"] = s.exact_match;
      j["bleu4"] = s.bleu4;
      j["rougeL"] = s.rougeL;
      j["val_loss"] = s.val_loss;
      j["epochs"] = s.epochs;
      j["steps"] = s.steps;
    }
    out["summary"].push_back(j);
  }
  return out;
}

inline std::string summary_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "variant,runs,ok,exact_match,bleu4,rougeL,val_loss,epochs,steps\n";
  for (const auto& s : compare_summary(rows)) {
    os << '"' << s.variant << "\"," << s.runs << ',' << s.ok << ',';
    if (s.ok > 0) {
      os << s.exact_match << ',' << s.bleu4 << ',' << s.rougeL << ',' << s.val_loss << ',' << s.epochs << ',' << s.steps;
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
  return os.str();
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << "variant,seed,exact_match,bleu4,rougeL,val_loss,epochs,steps,status\n";
  for (const auto& row : rows) {
    os << '"' << row.variant << "\"," << row.seed << ',';
    if (row.report && row.report->test) {
      const auto& t = row.report->test->scores;
      os << t.exact_match << ',' << t.bleu[3] << ',' << t.rougeL_f1 << ',';
    } else {
      os << ",,,";
    }
    if (row.report) {
      os << row.report->best_val_loss << ',' << row.report->epochs << ',' << row.report->steps << ',';
    } else {
      os << ",,,";
    }
    os << '"' << row.status << "\"\n";
  }
  return os.str();
}

}  // namespace icl
