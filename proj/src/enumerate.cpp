#include "sodmv/enumerate.hpp"

#include <algorithm>
#include <cmath>

namespace sodmv {

namespace {

std::vector<std::vector<int>> children_of(const std::vector<int>& heads) {
  int n = static_cast<int>(heads.size());
  std::vector<std::vector<int>> ch(n + 1);
  for (int i = 1; i <= n; ++i) {
    int h = heads[i - 1];
    if (h < 0 || h > n) throw std::invalid_argument("head index out of range");
    ch[h].push_back(i);
  }
  return ch;
}

}  // namespace

void walk_tree_rules(const std::vector<int>& heads, const std::vector<int>& ids,
                     ModelOrder order,
                     const std::function<void(const RuleRef&)>& visit) {
  int n = static_cast<int>(heads.size());
  if (ids.size() != heads.size())
    throw std::invalid_argument("heads/ids length mismatch");
  auto ch = children_of(heads);
  if (ch[0].size() != 1)
    throw std::invalid_argument("tree must have exactly one root child");

  visit({RuleRef::Root, 0, 0, 0, 0, ids[ch[0][0] - 1]});

  for (int h = 1; h <= n; ++h) {
    int tok = ids[h - 1];
    // grand model: extra is the head's own parent for every rule of h
    int grand_extra = heads[h - 1] == 0 ? kNullExtra : ids[heads[h - 1] - 1] + 1;
    for (int d = 0; d < 2; ++d) {
      // outside-in generation order: farthest child first
      std::vector<int> seq;
      for (int c : ch[h])
        if ((d == kLeft && c < h) || (d == kRight && c > h)) seq.push_back(c);
      std::sort(seq.begin(), seq.end());
      if (d == kRight) std::reverse(seq.begin(), seq.end());

      int prev = 0;
      for (int c : seq) {
        int val = prev == 0 ? kNoChild : kHasChild;
        int extra;
        switch (order) {
          case ModelOrder::First: extra = 0; break;
          case ModelOrder::SecondSibling:
            extra = prev == 0 ? kNullExtra : ids[prev - 1] + 1;
            break;
          case ModelOrder::SecondGrand: extra = grand_extra; break;
        }
        visit({RuleRef::Decision, tok, extra, d, val, kContinue});
        visit({RuleRef::Child, tok, extra, d, val, ids[c - 1]});
        prev = c;
      }
      int val = prev == 0 ? kNoChild : kHasChild;
      int extra;
      switch (order) {
        case ModelOrder::First: extra = 0; break;
        case ModelOrder::SecondSibling:
          extra = prev == 0 ? kNullExtra : ids[prev - 1] + 1;
          break;
        case ModelOrder::SecondGrand: extra = grand_extra; break;
      }
      visit({RuleRef::Decision, tok, extra, d, val, kStop});
    }
  }
}

double tree_log_prob(const std::vector<int>& heads, const std::vector<int>& ids,
                     const RuleTables& tables) {
  double lp = 0.0;
  walk_tree_rules(heads, ids, tables.order, [&](const RuleRef& r) {
    switch (r.type) {
      case RuleRef::Root: lp += tables.root[r.outcome]; break;
      case RuleRef::Child:
        lp += tables.child_at(r.parent, r.extra, r.dir, r.val, r.outcome);
        break;
      case RuleRef::Decision:
        lp += tables.decision_at(r.parent, r.extra, r.dir, r.val, r.outcome);
        break;
    }
  });
  return lp;
}

void accumulate_tree_counts(const std::vector<int>& heads,
                            const std::vector<int>& ids, ModelOrder order,
                            double weight, ExpectedCounts* out) {
  walk_tree_rules(heads, ids, order, [&](const RuleRef& r) {
    switch (r.type) {
      case RuleRef::Root: out->root[r.outcome] += weight; break;
      case RuleRef::Child:
        out->child[((((static_cast<size_t>(r.parent) * out->extra_size + r.extra) *
                      2 + r.dir) * 2 + r.val) * out->vocab_size) + r.outcome] +=
            weight;
        break;
      case RuleRef::Decision:
        out->decision[((((static_cast<size_t>(r.parent) * out->extra_size +
                          r.extra) * 2 + r.dir) * 2 + r.val) * 2) + r.outcome] +=
            weight;
        break;
    }
  });
}

bool is_projective_single_root(const std::vector<int>& heads) {
  int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    int h = heads[i - 1];
    if (h < 0 || h > n || h == i) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  // acyclic: follow parents
  for (int i = 1; i <= n; ++i) {
    int steps = 0, cur = i;
    while (cur != 0 && ++steps <= n) cur = heads[cur - 1];
    if (cur != 0) return false;
  }
  // no crossing arcs; the root arc hangs from position 0
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      int hi = heads[i - 1], hj = heads[j - 1];
      int a1 = std::min(i, hi), b1 = std::max(i, hi);
      int a2 = std::min(j, hj), b2 = std::max(j, hj);
      if (a1 < a2 && a2 < b1 && b1 < b2) return false;
    }
  return true;
}

namespace {

using HeadVecs = std::vector<std::vector<int>>;

void enum_subtree(int lo, int hi, int h, std::vector<int>& heads,
                  std::vector<std::vector<int>>& out);

// partition [lo,hi] into consecutive blocks, each headed by a child of parent
void enum_child_seq(int lo, int hi, int parent, std::vector<int>& heads,
                    const std::function<void()>& done) {
  if (lo > hi) {
    done();
    return;
  }
  for (int m = lo; m <= hi; ++m)
    for (int c = lo; c <= m; ++c) {
      heads[c - 1] = parent;
      // enumerate the block [lo,m] under head c, then the rest
      std::vector<std::vector<int>> blocks;
      enum_subtree(lo, m, c, heads, blocks);
      for (auto& b : blocks) {
        for (int k = lo; k <= m; ++k)
          if (k != c) heads[k - 1] = b[k - 1];
        heads[c - 1] = parent;
        enum_child_seq(m + 1, hi, parent, heads, done);
      }
    }
}

void enum_subtree(int lo, int hi, int h, std::vector<int>& heads,
                  std::vector<std::vector<int>>& out) {
  enum_child_seq(lo, h - 1, h, heads, [&]() {
    enum_child_seq(h + 1, hi, h, heads, [&]() { out.push_back(heads); });
  });
}

}  // namespace

std::vector<std::vector<int>> enumerate_projective_heads(int n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (n > 8) throw std::invalid_argument("enumeration limit");
  HeadVecs out;
  std::vector<int> heads(n, -1);
  for (int c = 1; c <= n; ++c) {
    heads.assign(n, -1);
    heads[c - 1] = 0;
    std::vector<std::vector<int>> sub;
    enum_subtree(1, n, c, heads, sub);
    for (auto& s : sub) {
      s[c - 1] = 0;
      out.push_back(s);
    }
  }
  return out;
}

EnumerationResult enumerate_trees(const Sentence& sent,
                                  const ScoringModel& model) {
  int n = sent.size();
  if (n > 8) throw std::invalid_argument("enumeration limit");
  if (model.primary == nullptr) throw std::invalid_argument("missing tables");

  const std::vector<int>& ids =
      (model.kind != ModelKind::Joint && model.primary_lexical) ? sent.lex_ids
                                                                : sent.pos_ids;
  auto trees = enumerate_projective_heads(n);

  EnumerationResult res;
  res.n_trees = static_cast<int>(trees.size());
  std::vector<double> scores(trees.size());
  for (size_t t = 0; t < trees.size(); ++t) {
    double s = tree_log_prob(trees[t], ids, *model.primary);
    if (model.kind == ModelKind::Joint)
      s += tree_log_prob(trees[t], sent.lex_ids, *model.lexical);
    scores[t] = s;
    res.log_partition = log_add(res.log_partition, s);
    if (s > res.best.log_score) {
      res.best.log_score = s;
      res.best.heads = trees[t];
    }
  }

  res.counts = ExpectedCounts(*model.primary);
  if (model.kind == ModelKind::Joint)
    res.counts_lexical = ExpectedCounts(*model.lexical);
  for (size_t t = 0; t < trees.size(); ++t) {
    double w = std::exp(scores[t] - res.log_partition);
    accumulate_tree_counts(trees[t], ids, model.primary->order, w, &res.counts);
    if (model.kind == ModelKind::Joint)
      accumulate_tree_counts(trees[t], sent.lex_ids, ModelOrder::First, w,
                             &res.counts_lexical);
  }
  return res;
}

}  // namespace sodmv
