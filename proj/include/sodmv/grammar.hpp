#ifndef SODMV_GRAMMAR_HPP
#define SODMV_GRAMMAR_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sodmv {

// Log-probability sentinel for impossible events. Kept finite so that
// sums stay total; anything below kLogZeroGuard is treated as zero mass.
constexpr double kLogZero = -1e9;
constexpr double kLogZeroGuard = -5e8;

inline bool is_log_zero(double x) { return x <= kLogZeroGuard; }

// logsumexp accumulator with max-shift
inline double log_sum_exp(const std::vector<double>& xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  if (is_log_zero(m)) return kLogZero;
  double s = 0.0;
  for (double x : xs)
    if (!is_log_zero(x)) s += std::exp(x - m);
  return m + std::log(s);
}

inline double log_add(double a, double b) {
  if (is_log_zero(a)) return b;
  if (is_log_zero(b)) return a;
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

enum class Direction : int { Left = 0, Right = 1 };
enum class Valence : int { HasChild = 0, NoChild = 1 };
enum class Decision : int { Stop = 0, Continue = 1 };

constexpr int kLeft = 0;
constexpr int kRight = 1;
constexpr int kHasChild = 0;
constexpr int kNoChild = 1;
constexpr int kStop = 0;
constexpr int kContinue = 1;

enum class ModelOrder : int { First = 0, SecondSibling = 1, SecondGrand = 2 };
enum class ModelKind : int { First = 0, Sibling = 1, Grand = 2, Joint = 3 };

inline ModelOrder order_for_kind(ModelKind k) {
  switch (k) {
    case ModelKind::First: return ModelOrder::First;
    case ModelKind::Sibling: return ModelOrder::SecondSibling;
    case ModelKind::Grand: return ModelOrder::SecondGrand;
    case ModelKind::Joint: return ModelOrder::SecondSibling;
  }
  throw std::logic_error("bad kind");
}

enum class VocabMode : int { Unlexicalized = 0, Lexicalized = 1 };

// Extra-axis index 0 is reserved: NULL sibling for the sibling model,
// the imaginary root for the grand model.
constexpr int kNullExtra = 0;

struct Vocab {
  VocabMode mode = VocabMode::Unlexicalized;
  std::vector<std::string> symbols;         // id -> symbol string
  std::map<std::string, int> symbol_to_id;
  // lexicalized only: POS id of each lexical symbol (pos-fallback symbols
  // point at themselves in the POS vocab)
  std::vector<int> sym_pos;
  int n_pos = 0;     // size of the underlying POS tag set
  int min_freq = 1;

  int size() const { return static_cast<int>(symbols.size()); }
  int id_of(const std::string& s) const {
    auto it = symbol_to_id.find(s);
    return it == symbol_to_id.end() ? -1 : it->second;
  }
};

struct Sentence {
  std::vector<int> pos_ids;            // length n
  std::vector<int> lex_ids;            // empty or length n
  std::vector<int> gold_heads;         // empty or length n, 0 = imaginary root
  std::vector<std::string> forms;
  std::vector<std::string> pos_tags;
  std::vector<bool> is_punct;

  int size() const { return static_cast<int>(pos_ids.size()); }
  bool has_gold() const { return !gold_heads.empty(); }
};

struct RawToken {
  std::string form;
  std::string pos;
  int head = -1;
  bool punct = false;
};

struct RawSentence {
  std::vector<RawToken> tokens;
  int size() const { return static_cast<int>(tokens.size()); }
};

struct Corpus {
  std::vector<Sentence> sentences;
  Vocab vocab;
  std::string provenance;
};

// Log-probability tables for ROOT / CHILD / DECISION rules.
//
// child   : [parent V][extra E][dir 2][val 2][child V]
// decision: [parent V][extra E][dir 2][val 2][decision 2]
// root    : [child V]
// E = V+1 for second-order tables (extra 0 = NULL/ROOT), 1 for first-order.
struct RuleTables {
  ModelOrder order = ModelOrder::First;
  int vocab_size = 0;
  int extra_size = 1;
  std::vector<double> root;
  std::vector<double> child;
  std::vector<double> decision;

  RuleTables() = default;
  RuleTables(ModelOrder o, int v)
      : order(o),
        vocab_size(v),
        extra_size(o == ModelOrder::First ? 1 : v + 1),
        root(static_cast<size_t>(v), kLogZero),
        child(static_cast<size_t>(v) * extra_size * 4 * v, kLogZero),
        decision(static_cast<size_t>(v) * extra_size * 4 * 2, kLogZero) {}

  size_t child_index(int p, int e, int d, int v, int c) const {
    return ((((static_cast<size_t>(p) * extra_size + e) * 2 + d) * 2 + v) *
            vocab_size) + c;
  }
  size_t decision_index(int p, int e, int d, int v, int a) const {
    return ((((static_cast<size_t>(p) * extra_size + e) * 2 + d) * 2 + v) * 2) + a;
  }
  double& child_at(int p, int e, int d, int v, int c) {
    return child[child_index(p, e, d, v, c)];
  }
  double child_at(int p, int e, int d, int v, int c) const {
    return child[child_index(p, e, d, v, c)];
  }
  double& decision_at(int p, int e, int d, int v, int a) {
    return decision[decision_index(p, e, d, v, a)];
  }
  double decision_at(int p, int e, int d, int v, int a) const {
    return decision[decision_index(p, e, d, v, a)];
  }

  size_t total_entries() const {
    return root.size() + child.size() + decision.size();
  }

  void fill_uniform() {
    double lr = -std::log(static_cast<double>(vocab_size));
    for (auto& x : root) x = lr;
    for (auto& x : child) x = lr;
    double ld = -std::log(2.0);
    for (auto& x : decision) x = ld;
  }
};

// Per-rule expected usage counts, shape-congruent with RuleTables.
struct ExpectedCounts {
  ModelOrder order = ModelOrder::First;
  int vocab_size = 0;
  int extra_size = 1;
  std::vector<double> root;
  std::vector<double> child;
  std::vector<double> decision;

  ExpectedCounts() = default;
  explicit ExpectedCounts(const RuleTables& t)
      : order(t.order),
        vocab_size(t.vocab_size),
        extra_size(t.extra_size),
        root(t.root.size(), 0.0),
        child(t.child.size(), 0.0),
        decision(t.decision.size(), 0.0) {}

  void add_scaled(const ExpectedCounts& o, double s) {
    for (size_t i = 0; i < root.size(); ++i) root[i] += s * o.root[i];
    for (size_t i = 0; i < child.size(); ++i) child[i] += s * o.child[i];
    for (size_t i = 0; i < decision.size(); ++i) decision[i] += s * o.decision[i];
  }
  void scale(double s) {
    for (auto& x : root) x *= s;
    for (auto& x : child) x *= s;
    for (auto& x : decision) x *= s;
  }
  double root_sum() const {
    double s = 0;
    for (double x : root) s += x;
    return s;
  }
};

struct SliceDeviation {
  std::string table;   // "root" | "child" | "decision"
  int parent = -1, extra = -1, dir = -1, val = -1;
  double deviation = 0.0;
};

struct ValidationReport {
  bool ok = false;
  double max_deviation = 0.0;
  bool has_nan = false;
  std::vector<SliceDeviation> failures;   // slices exceeding tol
};

ValidationReport validate_rule_tables(const RuleTables& tables, double tol);

// Paper bookkeeping for the grammar size: 4|V|^3 + 4|V|^2 + |V| at second
// order, 4|V|^2 + 4|V| + |V| at first order. Note this differs from the
// allocated entry count (the middle term counts decision contexts, not
// decision entries); total_entries() reports the latter.
std::int64_t rule_count(int vocab_size, ModelOrder order);

Vocab build_vocab(const std::vector<RawSentence>& corpus, VocabMode mode,
                  int min_freq);

}  // namespace sodmv

#endif
