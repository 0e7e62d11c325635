#include "sodmv/grammar.hpp"

#include <algorithm>
#include <cmath>

namespace sodmv {

namespace {

// Sum of exp over one conditional slice, flagging NaN.
double slice_mass(const std::vector<double>& t, size_t base, size_t stride,
                  int count, bool* nan) {
  double s = 0.0;
  for (int k = 0; k < count; ++k) {
    double x = t[base + static_cast<size_t>(k) * stride];
    if (std::isnan(x)) *nan = true;
    if (!is_log_zero(x)) s += std::exp(x);
  }
  return s;
}

}  // namespace

ValidationReport validate_rule_tables(const RuleTables& tables, double tol) {
  ValidationReport rep;
  int V = tables.vocab_size;
  int E = tables.extra_size;
  if (V <= 0) throw std::invalid_argument("empty rule tables");
  if ((tables.order == ModelOrder::First) != (E == 1))
    throw std::invalid_argument("extra axis inconsistent with declared order");
  if (tables.root.size() != static_cast<size_t>(V) ||
      tables.child.size() != static_cast<size_t>(V) * E * 4 * V ||
      tables.decision.size() != static_cast<size_t>(V) * E * 4 * 2)
    throw std::invalid_argument("rule table dimension mismatch");

  auto check = [&](const std::string& name, double mass, int p, int e, int d,
                   int v) {
    double dev = std::fabs(mass - 1.0);
    if (dev > rep.max_deviation) rep.max_deviation = dev;
    if (dev > tol) rep.failures.push_back({name, p, e, d, v, dev});
  };

  check("root", slice_mass(tables.root, 0, 1, V, &rep.has_nan), -1, -1, -1, -1);
  for (int p = 0; p < V; ++p)
    for (int e = 0; e < E; ++e)
      for (int d = 0; d < 2; ++d)
        for (int v = 0; v < 2; ++v) {
          check("child",
                slice_mass(tables.child, tables.child_index(p, e, d, v, 0), 1, V,
                           &rep.has_nan),
                p, e, d, v);
          check("decision",
                slice_mass(tables.decision,
                           tables.decision_index(p, e, d, v, 0), 1, 2,
                           &rep.has_nan),
                p, e, d, v);
        }
  rep.ok = !rep.has_nan && rep.failures.empty();
  return rep;
}

std::int64_t rule_count(int vocab_size, ModelOrder order) {
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  std::int64_t V = vocab_size;
  if (order == ModelOrder::First) return 4 * V * V + 4 * V + V;
  return 4 * V * V * V + 4 * V * V + V;
}

Vocab build_vocab(const std::vector<RawSentence>& corpus, VocabMode mode,
                  int min_freq) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");

  std::map<std::string, int> pos_freq;
  std::map<std::string, int> pair_freq;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) {
      pos_freq[t.pos]++;
      pair_freq[t.form + "/" + t.pos]++;
    }

  // deterministic ids: frequency descending, ties lexicographic
  auto ordered = [](const std::map<std::string, int>& freq) {
    std::vector<std::pair<std::string, int>> v(freq.begin(), freq.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return v;
  };

  Vocab vocab;
  vocab.mode = mode;
  vocab.min_freq = min_freq;
  vocab.n_pos = static_cast<int>(pos_freq.size());
  if (mode == VocabMode::Unlexicalized) {
    for (const auto& [sym, f] : ordered(pos_freq)) {
      vocab.symbol_to_id[sym] = static_cast<int>(vocab.symbols.size());
      vocab.symbols.push_back(sym);
    }
    return vocab;
  }

  // Lexicalized: POS-fallback symbols first (so every token always has a
  // mapping), then frequent word/POS pairs.
  std::map<std::string, int> pos_ids;
  for (const auto& [sym, f] : ordered(pos_freq)) {
    int id = static_cast<int>(vocab.symbols.size());
    vocab.symbol_to_id[sym] = id;
    vocab.symbols.push_back(sym);
    vocab.sym_pos.push_back(id);
    pos_ids[sym] = id;
  }
  for (const auto& [sym, f] : ordered(pair_freq)) {
    if (f < min_freq) continue;
    vocab.symbol_to_id[sym] = static_cast<int>(vocab.symbols.size());
    vocab.symbols.push_back(sym);
    vocab.sym_pos.push_back(pos_ids.at(sym.substr(sym.rfind('/') + 1)));
  }
  return vocab;
}

}  // namespace sodmv
