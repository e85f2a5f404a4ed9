// clsw/ngram.cc

// Copyright 2026  CLSW authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "clsw/ngram.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace clsw {

namespace {

std::vector<std::string> Tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

std::string JoinKey(std::span<const std::string> words) {
  std::string key;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) key.push_back(' ');
    key += words[i];
  }
  return key;
}

constexpr double kLn10 = 2.302585092994046;

}  // namespace

NGramModel NGramModel::Train(const std::vector<std::string>& lines, int order,
                             double discount) {
  CLSW_CHECK(order >= 1, "train_ngram: order must be >= 1, got ", order);
  CLSW_CHECK(discount > 0.0 && discount < 1.0, "train_ngram: discount must be in (0,1)");

  // Raw counts per order over each line's token stream.
  std::vector<std::map<std::string, int64_t>> counts(order);
  int64_t total_tokens = 0;
  bool any = false;
  for (const std::string& line : lines) {
    const std::vector<std::string> toks = Tokenize(line);
    if (!toks.empty()) any = true;
    total_tokens += static_cast<int64_t>(toks.size());
    for (int k = 1; k <= order; ++k) {
      for (size_t i = 0; i + k <= toks.size(); ++i) {
        counts[k - 1][JoinKey(std::span(toks).subspan(i, k))] += 1;
      }
    }
  }
  CLSW_CHECK_DATA(any && total_tokens > 0, "train_ngram: empty corpus");

  // Context statistics: c(h) (tokens observed after h) and N1+(h).
  std::vector<std::map<std::string, std::pair<int64_t, int64_t>>> ctx(order);  // k-gram h
  for (int k = 2; k <= order; ++k) {
    for (const auto& [key, c] : counts[k - 1]) {
      const size_t cut = key.rfind(' ');
      const std::string h = key.substr(0, cut);
      auto& [total, distinct] = ctx[k - 2][h];
      total += c;
      distinct += 1;
    }
  }

  NGramModel m;
  m.order_ = order;
  m.discount_ = discount;
  m.tables_.assign(order, {});

  // Unigrams: maximum-likelihood over the token stream.
  for (const auto& [word, c] : counts[0]) {
    Entry e;
    e.logp = std::log(static_cast<double>(c) / static_cast<double>(total_tokens));
    m.tables_[0][word] = e;
  }

  // Higher orders: interpolated absolute discounting, computed recursively so
  // stored probabilities are final.
  for (int k = 2; k <= order; ++k) {
    for (const auto& [key, c] : counts[k - 1]) {
      const size_t cut = key.rfind(' ');
      const std::string h = key.substr(0, cut);
      const std::string w = key.substr(cut + 1);
      const auto& [c_h, n1p] = ctx[k - 2].at(h);
      const double lambda = discount * static_cast<double>(n1p) / static_cast<double>(c_h);
      // Lower-order probability via the (already final) shorter tables.
      std::vector<std::string> hist = Tokenize(h);
      std::span<const std::string> shorter =
          std::span(hist).subspan(hist.size() >= 1 ? 1 : 0);
      // ScoreWord on the partially built model only touches orders < k.
      const double p_lower = std::exp(m.ScoreWord(shorter, w));
      const double p =
          std::max(static_cast<double>(c) - discount, 0.0) / static_cast<double>(c_h) +
          lambda * p_lower;
      Entry e;
      e.logp = std::log(p);
      m.tables_[k - 1][key] = e;
    }
  }

  // Backoff weights attach to observed contexts.
  for (int k = 2; k <= order; ++k) {
    for (const auto& [h, stats] : ctx[k - 2]) {
      const auto& [c_h, n1p] = stats;
      const double lambda = discount * static_cast<double>(n1p) / static_cast<double>(c_h);
      auto it = m.tables_[k - 2].find(h);
      if (it == m.tables_[k - 2].end()) {
        // Context exists only as a count pattern (contains rare boundary
        // cases for k-2 == 0); create a carrier entry with no probability.
        continue;
      }
      it->second.log_backoff = std::log(lambda);
      it->second.has_backoff = true;
    }
  }
  return m;
}

size_t NGramModel::VocabSize() const {
  return tables_.empty() ? 0 : tables_[0].size();
}

bool NGramModel::Known(const std::string& word) const {
  return !tables_.empty() && tables_[0].count(word) > 0;
}

double NGramModel::ScoreWord(std::span<const std::string> context,
                             const std::string& word) const {
  CLSW_CHECK(order_ >= 1, "lm_score: model not trained");
  if (!Known(word)) return unk_logprob_;
  size_t use = std::min(context.size(), static_cast<size_t>(order_ - 1));
  std::span<const std::string> h = context.subspan(context.size() - use, use);
  double backoff_acc = 0.0;
  while (true) {
    std::string key = JoinKey(h);
    if (!key.empty()) key.push_back(' ');
    key += word;
    const auto& table = tables_[h.size()];
    auto it = table.find(key);
    if (it != table.end()) return backoff_acc + it->second.logp;
    if (h.empty()) return backoff_acc + unk_logprob_;  // unreachable for known words
    // Accumulate the backoff weight of the failed context, if stored.
    const auto& ctx_table = tables_[h.size() - 1];
    auto ctx_it = ctx_table.find(JoinKey(h));
    if (ctx_it != ctx_table.end() && ctx_it->second.has_backoff)
      backoff_acc += ctx_it->second.log_backoff;
    h = h.subspan(1);
  }
}

double NGramModel::ScoreSequence(const std::vector<std::string>& words) const {
  // Sentence-start padding: "<s>" tokens are unseen contexts, so the first
  // words back off toward the unigram level, as intended.
  std::vector<std::string> ctx(static_cast<size_t>(order_ - 1), "<s>");
  double total = 0.0;
  for (const std::string& w : words) {
    total += ScoreWord(ctx, w);
    ctx.push_back(w);
  }
  // End-of-sequence term: the model is trained on token streams, so the end
  // event carries the unknown-mass floor.
  total += unk_logprob_;
  return total;
}

std::vector<std::string> NGramModel::VocabWords() const {
  std::vector<std::string> words;
  if (tables_.empty()) return words;
  words.reserve(tables_[0].size());
  for (const auto& [w, e] : tables_[0]) words.push_back(w);
  std::sort(words.begin(), words.end());
  return words;
}

void NGramModel::Save(const std::string& path) const {
  std::ofstream os(path, std::ios::trunc);
  CLSW_CHECK_DATA(os.good(), "ngram: cannot write '", path, "'");
  os << "\\data\\\n";
  for (int k = 1; k <= order_; ++k)
    os << "ngram " << k << "=" << tables_[k - 1].size() + (k == 1 ? 1 : 0) << "\n";
  os << "\n";
  os.precision(12);
  for (int k = 1; k <= order_; ++k) {
    os << "\\" << k << "-grams:\n";
    std::vector<std::string> keys;
    keys.reserve(tables_[k - 1].size());
    for (const auto& [key, e] : tables_[k - 1]) keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    if (k == 1) os << unk_logprob_ / kLn10 << "\t<unk>\n";
    for (const std::string& key : keys) {
      const Entry& e = tables_[k - 1].at(key);
      os << e.logp / kLn10 << "\t" << key;
      if (e.has_backoff) os << "\t" << e.log_backoff / kLn10;
      os << "\n";
    }
    os << "\n";
  }
  os << "\\end\\\n";
}

NGramModel NGramModel::Load(const std::string& path) {
  std::ifstream is(path);
  CLSW_CHECK_DATA(is.good(), "ngram: cannot open '", path, "'");
  NGramModel m;
  std::string line;
  int current_order = 0;
  int max_order = 0;
  // First pass header: \data\ section gives the order count.
  while (std::getline(is, line)) {
    if (line.rfind("ngram ", 0) == 0) {
      const int k = std::stoi(line.substr(6, line.find('=') - 6));
      max_order = std::max(max_order, k);
    } else if (line.rfind("\\1-grams:", 0) == 0) {
      current_order = 1;
      break;
    }
  }
  CLSW_CHECK_DATA(max_order >= 1 && current_order == 1, "ngram: malformed file '", path,
                  "' (missing \\data\\ or \\1-grams:)");
  m.order_ = max_order;
  m.tables_.assign(max_order, {});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '\\') {
      if (line == "\\end\\") break;
      current_order = std::stoi(line.substr(1, line.find('-') - 1));
      CLSW_CHECK_DATA(current_order >= 1 && current_order <= max_order,
                      "ngram: bad section in '", path, "'");
      continue;
    }
    std::vector<std::string> fields = SplitString(line, '\t');
    CLSW_CHECK_DATA(fields.size() == 2 || fields.size() == 3, "ngram: bad line '", line,
                    "'");
    Entry e;
    e.logp = std::stod(fields[0]) * kLn10;
    if (fields.size() == 3) {
      e.log_backoff = std::stod(fields[2]) * kLn10;
      e.has_backoff = true;
    }
    if (fields[1] == "<unk>" && current_order == 1) {
      m.unk_logprob_ = e.logp;
      continue;
    }
    m.tables_[current_order - 1][fields[1]] = e;
  }
  return m;
}

}  // namespace clsw
