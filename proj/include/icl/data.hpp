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

// Tokenization, vocabulary, corpora (synthetic and JSONL) and statistics.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icl/common.hpp"

namespace icl {

enum class TokenizerMode { whitespace, chars };

inline std::string to_string(TokenizerMode m) { return m == TokenizerMode::whitespace ? "whitespace" : "char"; }

inline TokenizerMode parse_tokenizer_mode(std::string_view s) {
  if (s == "whitespace") return TokenizerMode::whitespace;
  if (s == "char") return TokenizerMode::chars;
  throw Error("unknown tokenizer mode '" + std::string(s) + "' (expected whitespace|char)");
}

inline bool is_blank(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}

inline std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode) {
  std::vector<std::string> out;
  if (mode == TokenizerMode::chars) {
    for (char ch : text)
      if (ch != ' ') out.emplace_back(1, ch);
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_blank(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_blank(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string detokenize(std::span<const std::string> tokens, TokenizerMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && mode == TokenizerMode::whitespace) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNumReserved = 4;

class Vocabulary {
 public:
  Vocabulary() {
    for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
  }

  // Rebuilds a vocabulary from its full token list (reserved tokens first).
  static Vocabulary from_tokens(std::span<const std::string> tokens) {
    Vocabulary v;
    if (tokens.size() < kNumReserved) throw Error("vocabulary: missing reserved tokens");
    for (std::size_t i = 0; i < kNumReserved; ++i) {
      if (tokens[i] != v.tokens_[i]) throw Error("vocabulary: reserved token mismatch at id " + std::to_string(i));
    }
    for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
      if (v.index_.contains(tokens[i])) throw Error("vocabulary: duplicate token '" + tokens[i] + "'");
      v.add(tokens[i]);
    }
    return v;
  }

  int add(const std::string& token) {
    auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int id(const std::string& token) const {
    const auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw Error("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  std::vector<int> encode(std::span<const std::string> tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::vector<std::string> decode(std::span<const int> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) out.push_back(token(i));
    return out;
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct TrainingSample {
  std::string input_text;
  std::string output_text;
  std::vector<int> input_ids;   // no BOS/EOS
  std::vector<int> output_ids;  // y_1..y_n, no BOS/EOS
  std::size_t source_line = 0;  // 1-based line in a JSONL file, 0 if generated

  bool operator==(const TrainingSample&) const = default;
};

enum class Split { train, val, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

struct Corpus {
  std::vector<TrainingSample> samples;
  Split split = Split::train;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool operator==(const Corpus&) const = default;
};

// Distinct tokens of both sides in first-occurrence order.
inline Vocabulary build_vocab(const Corpus& corpus, TokenizerMode mode) {
  if (corpus.empty()) throw Error("empty corpus");
  Vocabulary v;
  for (const auto& s : corpus.samples) {
    for (const auto& t : tokenize(s.input_text, mode)) v.add(t);
    for (const auto& t : tokenize(s.output_text, mode)) v.add(t);
  }
  return v;
}

// Fills input_ids/output_ids; unseen tokens map to UNK.
inline void encode_corpus(Corpus& corpus, const Vocabulary& vocab, TokenizerMode mode) {
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    auto& s = corpus.samples[i];
    s.input_ids = vocab.encode(tokenize(s.input_text, mode));
    s.output_ids = vocab.encode(tokenize(s.output_text, mode));
    if (s.output_ids.empty()) {
      const std::string where = s.source_line ? "line " + std::to_string(s.source_line) : "sample " + std::to_string(i);
      throw Error(to_string(corpus.split) + " corpus: " + where + " has an empty output");
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic tasks

enum class SyntheticTask { copy, reverse, sort, add };

inline SyntheticTask parse_synthetic_task(std::string_view s) {
  if (s == "copy") return SyntheticTask::copy;
  if (s == "reverse") return SyntheticTask::reverse;
  if (s == "sort") return SyntheticTask::sort;
  if (s == "add") return SyntheticTask::add;
  throw Error("unknown synthetic task '" + std::string(s) + "' (expected copy|reverse|sort|add)");
}

inline std::string to_string(SyntheticTask t) {
  switch (t) {
    case SyntheticTask::copy: return "copy";
    case SyntheticTask::reverse: return "reverse";
    case SyntheticTask::sort: return "sort";
    case SyntheticTask::add: return "add";
  }
  return "?";
}

struct SyntheticSpec {
  SyntheticTask task = SyntheticTask::reverse;
  std::size_t count = 1;
  std::size_t min_len = 1;
  std::size_t max_len = 1;
  std::size_t symbols = 8;  // alphabet size for copy/reverse
  std::uint64_t seed = 0;
};

namespace detail {
inline std::string symbol_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('a' + i));
  return "s" + std::to_string(i);
}

inline std::string join(const std::vector<std::string>& toks) {
  return detokenize(toks, TokenizerMode::whitespace);
}

// Decimal digits of a + b for equal-length digit vectors (most significant first).
inline std::vector<int> add_digits(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  int carry = 0;
  for (std::size_t i = a.size(); i-- > 0;) {
    const int s = a[i] + b[i] + carry;
    out.push_back(s % 10);
    carry = s / 10;
  }
  if (carry) out.push_back(carry);
  return {out.rbegin(), out.rend()};
}
}  // namespace detail

inline Corpus gen_synthetic(const SyntheticSpec& spec, Split split = Split::train) {
  if (spec.count < 1) throw Error("gen_synthetic: count must be >= 1");
  if (spec.min_len < 1 || spec.min_len > spec.max_len) {
    throw Error("gen_synthetic: invalid length range [" + std::to_string(spec.min_len) + ", " +
                std::to_string(spec.max_len) + "]");
  }
  if ((spec.task == SyntheticTask::copy || spec.task == SyntheticTask::reverse) && spec.symbols < 1) {
    throw Error("gen_synthetic: symbols must be >= 1");
  }
  Rng rng(spec.seed);
  Corpus corpus;
  corpus.split = split;
  corpus.samples.reserve(spec.count);
  const std::size_t span = spec.max_len - spec.min_len + 1;
  for (std::size_t k = 0; k < spec.count; ++k) {
    const std::size_t len = spec.min_len + uniform_index(rng, span);
    std::vector<std::string> in, out;
    switch (spec.task) {
      case SyntheticTask::copy:
      case SyntheticTask::reverse: {
        for (std::size_t i = 0; i < len; ++i) in.push_back(detail::symbol_name(uniform_index(rng, spec.symbols)));
        out = in;
        if (spec.task == SyntheticTask::reverse) std::reverse(out.begin(), out.end());
        break;
      }
      case SyntheticTask::sort: {
        std::vector<int> digits;
        for (std::size_t i = 0; i < len; ++i) digits.push_back(static_cast<int>(uniform_index(rng, 10)));
        for (int d : digits) in.push_back(std::to_string(d));
        std::sort(digits.begin(), digits.end());
        for (int d : digits) out.push_back(std::to_string(d));
        break;
      }
      case SyntheticTask::add: {
        auto number = [&] {
          std::vector<int> d;
          for (std::size_t i = 0; i < len; ++i) {
            const bool lead = i == 0 && len > 1;
            d.push_back(lead ? 1 + static_cast<int>(uniform_index(rng, 9)) : static_cast<int>(uniform_index(rng, 10)));
          }
          return d;
        };
        const auto a = number();
        const auto b = number();
        for (int d : a) in.push_back(std::to_string(d));
        in.push_back("+");
        for (int d : b) in.push_back(std::to_string(d));
        for (int d : detail::add_digits(a, b)) out.push_back(std::to_string(d));
        break;
      }
    }
    TrainingSample s;
    s.input_text = detail::join(in);
    s.output_text = detail::join(out);
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// JSONL

inline Corpus parse_jsonl(std::istream& in, const std::string& name, Split split = Split::train) {
  Corpus corpus;
  corpus.split = split;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(name + ":" + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw Error(name + ":" + std::to_string(lineno) + ": expected a JSON object");
    TrainingSample s;
    for (const char* key : {"input", "output"}) {
      const auto it = obj.find(key);
      if (it == obj.end()) throw Error(name + ":" + std::to_string(lineno) + ": missing field \"" + key + "\"");
      if (!it->is_string()) throw Error(name + ":" + std::to_string(lineno) + ": field \"" + key + "\" is not a string");
    }
    s.input_text = obj["input"].get<std::string>();
    s.output_text = obj["output"].get<std::string>();
    s.source_line = lineno;
    corpus.samples.push_back(std::move(s));
  }
  if (corpus.empty()) throw Error("empty corpus");
  return corpus;
}

inline Corpus load_jsonl(const std::string& path, Split split = Split::train) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_jsonl(in, path, split);
}

inline void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.samples) {
    out << nlohmann::json{{"input", s.input_text}, {"output", s.output_text}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Statistics

struct CorpusStats {
  std::size_t count = 0;
  double avg_out_len = 0.0;
  double std_out_len = 0.0;  // population standard deviation
  double avg_in_len = 0.0;
};

inline CorpusStats corpus_stats(const Corpus& corpus, TokenizerMode mode = TokenizerMode::whitespace) {
  if (corpus.empty()) throw Error("empty corpus");
  const double n = static_cast<double>(corpus.size());
  std::vector<double> out_lens;
  double in_sum = 0.0, out_sum = 0.0;
  for (const auto& s : corpus.samples) {
    out_lens.push_back(static_cast<double>(tokenize(s.output_text, mode).size()));
    out_sum += out_lens.back();
    in_sum += static_cast<double>(tokenize(s.input_text, mode).size());
  }
  CorpusStats st;
  st.count = corpus.size();
  st.avg_out_len = out_sum / n;
  st.avg_in_len = in_sum / n;
  double ss = 0.0;
  for (double l : out_lens) ss += (l - st.avg_out_len) * (l - st.avg_out_len);
  st.std_out_len = std::sqrt(ss / n);
  return st;
}

}  // namespace icl
