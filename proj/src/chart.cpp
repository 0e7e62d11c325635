#include "sodmv/chart.hpp"

#include <cmath>
#include <functional>

namespace sodmv {

namespace {

// Per-sentence rule scores resolved from the tables. Position indices are
// 1-based; g=0 is the NULL-sibling / imaginary-root context.
struct SentScores {
  int n = 0;
  int gsize = 1;
  std::vector<double> R;   // [n+1]
  std::vector<double> D;   // [n+1][gsize][2][2][2]
  std::vector<double> S;   // [n+1][n+1][gsize][2][2]  (head, child, g)

  size_t di(int i, int g, int d, int v, int a) const {
    return ((((static_cast<size_t>(i) * gsize + g) * 2 + d) * 2 + v) * 2) + a;
  }
  size_t si(int h, int c, int g, int d, int v) const {
    return ((((static_cast<size_t>(h) * (n + 1) + c) * gsize + g) * 2 + d) * 2) + v;
  }
  double dsc(int i, int g, int d, int v, int a) const { return D[di(i, g, d, v, a)]; }
  double ssc(int h, int c, int g, int d, int v) const { return S[si(h, c, g, d, v)]; }
};

const std::vector<int>& view_ids(const Sentence& sent, bool lexical) {
  if (!lexical) return sent.pos_ids;
  if (sent.lex_ids.size() != sent.pos_ids.size())
    throw std::invalid_argument("sentence has no lexical view");
  return sent.lex_ids;
}

void check_ids(const std::vector<int>& ids, int vocab_size) {
  for (int t : ids)
    if (t < 0 || t >= vocab_size)
      throw std::out_of_range("token id out of vocab range");
}

void check_model(const Sentence& sent, const ScoringModel& m) {
  if (sent.size() < 1) throw std::invalid_argument("empty sentence");
  if (m.primary == nullptr) throw std::invalid_argument("missing rule tables");
  ModelOrder want = order_for_kind(m.kind);
  if (m.primary->order != want)
    throw std::invalid_argument("rule-table order does not match model kind");
  if (m.kind == ModelKind::Joint) {
    if (m.lexical == nullptr || m.lexical->order != ModelOrder::First)
      throw std::invalid_argument("joint model requires first-order lexical tables");
    if (sent.lex_ids.size() != sent.pos_ids.size())
      throw std::invalid_argument("joint model requires aligned lexical view");
    check_ids(sent.lex_ids, m.lexical->vocab_size);
  }
  check_ids(view_ids(sent, m.kind != ModelKind::Joint && m.primary_lexical),
            m.primary->vocab_size);
}

// map chart g-position to the tables' extra-axis index
inline int extra_of(const std::vector<int>& ids, int g) {
  return g == 0 ? kNullExtra : ids[g - 1] + 1;
}

SentScores build_scores(const Sentence& sent, const ScoringModel& m) {
  check_model(sent, m);
  const RuleTables& T = *m.primary;
  bool second = m.kind != ModelKind::First;
  const std::vector<int>& ids =
      view_ids(sent, m.kind != ModelKind::Joint && m.primary_lexical);

  SentScores sc;
  sc.n = sent.size();
  sc.gsize = second ? sc.n + 1 : 1;
  sc.R.assign(sc.n + 1, kLogZero);
  sc.D.assign(static_cast<size_t>(sc.n + 1) * sc.gsize * 8, kLogZero);
  sc.S.assign(static_cast<size_t>(sc.n + 1) * (sc.n + 1) * sc.gsize * 4, kLogZero);

  for (int i = 1; i <= sc.n; ++i) {
    int ti = ids[i - 1];
    sc.R[i] = T.root[ti];
    for (int g = 0; g < sc.gsize; ++g) {
      int e = second ? extra_of(ids, g) : 0;
      for (int d = 0; d < 2; ++d)
        for (int v = 0; v < 2; ++v) {
          for (int a = 0; a < 2; ++a)
            sc.D[sc.di(i, g, d, v, a)] = T.decision_at(ti, e, d, v, a);
          for (int c = 1; c <= sc.n; ++c)
            sc.S[sc.si(i, c, g, d, v)] = T.child_at(ti, e, d, v, ids[c - 1]);
        }
    }
  }

  if (m.kind == ModelKind::Joint) {
    const RuleTables& L = *m.lexical;
    const std::vector<int>& lids = sent.lex_ids;
    for (int i = 1; i <= sc.n; ++i) {
      int ti = lids[i - 1];
      sc.R[i] += L.root[ti];
      for (int g = 0; g < sc.gsize; ++g)
        for (int d = 0; d < 2; ++d)
          for (int v = 0; v < 2; ++v) {
            for (int a = 0; a < 2; ++a)
              sc.D[sc.di(i, g, d, v, a)] += L.decision_at(ti, 0, d, v, a);
            for (int c = 1; c <= sc.n; ++c)
              sc.S[sc.si(i, c, g, d, v)] += L.child_at(ti, 0, d, v, lids[c - 1]);
          }
    }
  }
  return sc;
}

// ---------------------------------------------------------------------------
// second-order engine (sibling / grand); joint runs the sibling recursion on
// summed scores

struct Chart2 {
  int n = 0;
  std::vector<double> C, I;
  explicit Chart2(int n_)
      : n(n_),
        C(static_cast<size_t>(n_ + 1) * (n_ + 1) * (n_ + 1) * 4, kLogZero),
        I(C.size(), kLogZero) {}
  size_t idx(int g, int i, int j, int d, int v) const {
    return (((static_cast<size_t>(g) * (n + 1) + i) * (n + 1) + j) * 2 + d) * 2 + v;
  }
  double& c(int g, int i, int j, int d, int v) { return C[idx(g, i, j, d, v)]; }
  double cv(int g, int i, int j, int d, int v) const { return C[idx(g, i, j, d, v)]; }
  double& in(int g, int i, int j, int d, int v) { return I[idx(g, i, j, d, v)]; }
  double iv(int g, int i, int j, int d, int v) const { return I[idx(g, i, j, d, v)]; }
};

// Enumerate the (g, v) contexts a span [i,j] with the given direction can
// carry. Sibling contexts pair NULL with NOCHILD and a real sibling (a child
// of the head beyond the span) with HASCHILD; grandparent contexts range over
// all positions outside the span with both valences.
template <typename F>
void for_gv(bool sibling, int n, int d, int i, int j, F&& fn) {
  if (sibling) {
    fn(0, kNoChild);
    if (d == kRight)
      for (int g = j + 1; g <= n; ++g) fn(g, kHasChild);
    else
      for (int g = 1; g < i; ++g) fn(g, kHasChild);
  } else {
    for (int g = 0; g < i; ++g) {
      fn(g, kHasChild);
      fn(g, kNoChild);
    }
    for (int g = j + 1; g <= n; ++g) {
      fn(g, kHasChild);
      fn(g, kNoChild);
    }
  }
}

double run_second(const SentScores& sc, bool sibling, bool max_mode, Chart2& ch,
                  std::int64_t* steps) {
  int n = sc.n;
  auto combine = [max_mode](double& acc, double t) {
    if (max_mode) {
      if (t > acc) acc = t;
    } else {
      acc = log_add(acc, t);
    }
  };

  for (int i = 1; i <= n; ++i)
    for (int d = 0; d < 2; ++d)
      for_gv(sibling, n, d, i, i, [&](int g, int v) {
        ch.c(g, i, i, d, v) = sc.dsc(i, g, d, v, kStop);
      });

  for (int w = 1; w < n; ++w)
    for (int i = 1; i + w <= n; ++i) {
      int j = i + w;
      for_gv(sibling, n, kRight, i, j, [&](int g, int v) {
        double rule = sc.dsc(i, g, kRight, v, kContinue) + sc.ssc(i, j, g, kRight, v);
        double acc = kLogZero;
        for (int r = i; r < j; ++r) {
          double t = sibling
                         ? ch.cv(j, i, r, kRight, kHasChild) +
                               ch.cv(0, r + 1, j, kLeft, kNoChild)
                         : ch.cv(g, i, r, kRight, kHasChild) +
                               ch.cv(i, r + 1, j, kLeft, kNoChild);
          combine(acc, t + rule);
          if (steps) ++*steps;
        }
        ch.in(g, i, j, kRight, v) = acc;
      });
      for_gv(sibling, n, kLeft, i, j, [&](int g, int v) {
        double rule = sc.dsc(j, g, kLeft, v, kContinue) + sc.ssc(j, i, g, kLeft, v);
        double acc = kLogZero;
        for (int r = i; r < j; ++r) {
          double t = sibling
                         ? ch.cv(0, i, r, kRight, kNoChild) +
                               ch.cv(i, r + 1, j, kLeft, kHasChild)
                         : ch.cv(j, i, r, kRight, kNoChild) +
                               ch.cv(g, r + 1, j, kLeft, kHasChild);
          combine(acc, t + rule);
          if (steps) ++*steps;
        }
        ch.in(g, i, j, kLeft, v) = acc;
      });
      for_gv(sibling, n, kRight, i, j, [&](int g, int v) {
        double acc = kLogZero;
        for (int r = i + 1; r <= j; ++r) {
          double t = ch.iv(g, i, r, kRight, v) +
                     (sibling ? ch.cv(0, r, j, kRight, kNoChild)
                              : ch.cv(i, r, j, kRight, kNoChild));
          combine(acc, t);
          if (steps) ++*steps;
        }
        ch.c(g, i, j, kRight, v) = acc;
      });
      for_gv(sibling, n, kLeft, i, j, [&](int g, int v) {
        double acc = kLogZero;
        for (int r = i; r < j; ++r) {
          double t = (sibling ? ch.cv(0, i, r, kLeft, kNoChild)
                              : ch.cv(j, i, r, kLeft, kNoChild)) +
                     ch.iv(g, r, j, kLeft, v);
          combine(acc, t);
          if (steps) ++*steps;
        }
        ch.c(g, i, j, kLeft, v) = acc;
      });
    }

  double total = kLogZero;
  for (int i = 1; i <= n; ++i)
    combine(total, sc.R[i] + ch.cv(0, 1, i, kLeft, kNoChild) +
                       ch.cv(0, i, n, kRight, kNoChild));
  return total;
}

// Adjoints of the per-sentence rule scores; same layout as SentScores.
struct ScoreGrads {
  std::vector<double> R, D, S;
  explicit ScoreGrads(const SentScores& sc)
      : R(sc.R.size(), 0.0), D(sc.D.size(), 0.0), S(sc.S.size(), 0.0) {}
};

// Reverse pass over the inside recursion: distributes the adjoint of every
// logsumexp cell onto its source cells and rule scores.
void backward_second(const SentScores& sc, bool sibling, const Chart2& ch,
                     double logZ, ScoreGrads& gr) {
  int n = sc.n;
  std::vector<double> aC(ch.C.size(), 0.0), aI(ch.I.size(), 0.0);

  for (int i = 1; i <= n; ++i) {
    double t = sc.R[i] + ch.cv(0, 1, i, kLeft, kNoChild) +
               ch.cv(0, i, n, kRight, kNoChild);
    if (is_log_zero(t)) continue;
    double w = std::exp(t - logZ);
    gr.R[i] += w;
    aC[ch.idx(0, 1, i, kLeft, kNoChild)] += w;
    aC[ch.idx(0, i, n, kRight, kNoChild)] += w;
  }

  for (int w = n - 1; w >= 1; --w)
    for (int i = 1; i + w <= n; ++i) {
      int j = i + w;
      for_gv(sibling, n, kRight, i, j, [&](int g, int v) {
        double a = aC[ch.idx(g, i, j, kRight, v)];
        double val = ch.cv(g, i, j, kRight, v);
        if (a == 0.0 || is_log_zero(val)) return;
        for (int r = i + 1; r <= j; ++r) {
          int gc = sibling ? 0 : i;
          double t = ch.iv(g, i, r, kRight, v) + ch.cv(gc, r, j, kRight, kNoChild);
          if (is_log_zero(t)) continue;
          double wr = a * std::exp(t - val);
          aI[ch.idx(g, i, r, kRight, v)] += wr;
          aC[ch.idx(gc, r, j, kRight, kNoChild)] += wr;
        }
      });
      for_gv(sibling, n, kLeft, i, j, [&](int g, int v) {
        double a = aC[ch.idx(g, i, j, kLeft, v)];
        double val = ch.cv(g, i, j, kLeft, v);
        if (a == 0.0 || is_log_zero(val)) return;
        for (int r = i; r < j; ++r) {
          int gc = sibling ? 0 : j;
          double t = ch.cv(gc, i, r, kLeft, kNoChild) + ch.iv(g, r, j, kLeft, v);
          if (is_log_zero(t)) continue;
          double wr = a * std::exp(t - val);
          aC[ch.idx(gc, i, r, kLeft, kNoChild)] += wr;
          aI[ch.idx(g, r, j, kLeft, v)] += wr;
        }
      });
      for_gv(sibling, n, kRight, i, j, [&](int g, int v) {
        double a = aI[ch.idx(g, i, j, kRight, v)];
        double val = ch.iv(g, i, j, kRight, v);
        if (a == 0.0 || is_log_zero(val)) return;
        gr.D[sc.di(i, g, kRight, v, kContinue)] += a;
        gr.S[sc.si(i, j, g, kRight, v)] += a;
        double rule = sc.dsc(i, g, kRight, v, kContinue) + sc.ssc(i, j, g, kRight, v);
        for (int r = i; r < j; ++r) {
          int g1 = sibling ? j : g;
          int g2 = sibling ? 0 : i;
          double t = ch.cv(g1, i, r, kRight, kHasChild) +
                     ch.cv(g2, r + 1, j, kLeft, kNoChild) + rule;
          if (is_log_zero(t)) continue;
          double wr = a * std::exp(t - val);
          aC[ch.idx(g1, i, r, kRight, kHasChild)] += wr;
          aC[ch.idx(g2, r + 1, j, kLeft, kNoChild)] += wr;
        }
      });
      for_gv(sibling, n, kLeft, i, j, [&](int g, int v) {
        double a = aI[ch.idx(g, i, j, kLeft, v)];
        double val = ch.iv(g, i, j, kLeft, v);
        if (a == 0.0 || is_log_zero(val)) return;
        gr.D[sc.di(j, g, kLeft, v, kContinue)] += a;
        gr.S[sc.si(j, i, g, kLeft, v)] += a;
        double rule = sc.dsc(j, g, kLeft, v, kContinue) + sc.ssc(j, i, g, kLeft, v);
        for (int r = i; r < j; ++r) {
          int g1 = sibling ? 0 : j;
          int g2 = sibling ? i : g;
          double t = ch.cv(g1, i, r, kRight, kNoChild) +
                     ch.cv(g2, r + 1, j, kLeft, kHasChild) + rule;
          if (is_log_zero(t)) continue;
          double wr = a * std::exp(t - val);
          aC[ch.idx(g1, i, r, kRight, kNoChild)] += wr;
          aC[ch.idx(g2, r + 1, j, kLeft, kHasChild)] += wr;
        }
      });
    }

  for (int i = 1; i <= n; ++i)
    for (int d = 0; d < 2; ++d)
      for_gv(sibling, n, d, i, i, [&](int g, int v) {
        double a = aC[ch.idx(g, i, i, d, v)];
        if (a != 0.0) gr.D[sc.di(i, g, d, v, kStop)] += a;
      });
}

// Viterbi tree reconstruction: recompute the argmax split per cell, ties
// broken toward the smaller split index.
struct Extract2 {
  const SentScores& sc;
  const Chart2& ch;
  bool sibling;
  std::vector<int>& heads;

  void complete(int g, int i, int j, int d, int v) {
    if (i == j) return;
    if (d == kRight) {
      int gc = sibling ? 0 : i;
      int br = -1;
      double best = kLogZero;
      for (int r = i + 1; r <= j; ++r) {
        double t = ch.iv(g, i, r, kRight, v) + ch.cv(gc, r, j, kRight, kNoChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      incomplete(g, i, br, kRight, v);
      complete(gc, br, j, kRight, kNoChild);
    } else {
      int gc = sibling ? 0 : j;
      int br = -1;
      double best = kLogZero;
      for (int r = i; r < j; ++r) {
        double t = ch.cv(gc, i, r, kLeft, kNoChild) + ch.iv(g, r, j, kLeft, v);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(gc, i, br, kLeft, kNoChild);
      incomplete(g, br, j, kLeft, v);
    }
  }

  void incomplete(int g, int i, int j, int d, int v) {
    if (d == kRight) {
      heads[j - 1] = i;
      int g1 = sibling ? j : g;
      int g2 = sibling ? 0 : i;
      int br = -1;
      double best = kLogZero;
      for (int r = i; r < j; ++r) {
        double t = ch.cv(g1, i, r, kRight, kHasChild) +
                   ch.cv(g2, r + 1, j, kLeft, kNoChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(g1, i, br, kRight, kHasChild);
      complete(g2, br + 1, j, kLeft, kNoChild);
    } else {
      heads[i - 1] = j;
      int g1 = sibling ? 0 : j;
      int g2 = sibling ? i : g;
      int br = -1;
      double best = kLogZero;
      for (int r = i; r < j; ++r) {
        double t = ch.cv(g1, i, r, kRight, kNoChild) +
                   ch.cv(g2, r + 1, j, kLeft, kHasChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(g1, i, br, kRight, kNoChild);
      complete(g2, br + 1, j, kLeft, kHasChild);
    }
  }
};

// ---------------------------------------------------------------------------
// first-order engine

struct Chart1 {
  int n = 0;
  std::vector<double> C, I;
  explicit Chart1(int n_)
      : n(n_),
        C(static_cast<size_t>(n_ + 1) * (n_ + 1) * 4, kLogZero),
        I(C.size(), kLogZero) {}
  size_t idx(int i, int j, int d, int v) const {
    return ((static_cast<size_t>(i) * (n + 1) + j) * 2 + d) * 2 + v;
  }
  double& c(int i, int j, int d, int v) { return C[idx(i, j, d, v)]; }
  double cv(int i, int j, int d, int v) const { return C[idx(i, j, d, v)]; }
  double& in(int i, int j, int d, int v) { return I[idx(i, j, d, v)]; }
  double iv(int i, int j, int d, int v) const { return I[idx(i, j, d, v)]; }
};

double run_first(const SentScores& sc, bool max_mode, Chart1& ch,
                 std::int64_t* steps) {
  int n = sc.n;
  auto combine = [max_mode](double& acc, double t) {
    if (max_mode) {
      if (t > acc) acc = t;
    } else {
      acc = log_add(acc, t);
    }
  };

  for (int i = 1; i <= n; ++i)
    for (int d = 0; d < 2; ++d)
      for (int v = 0; v < 2; ++v) ch.c(i, i, d, v) = sc.dsc(i, 0, d, v, kStop);

  for (int w = 1; w < n; ++w)
    for (int i = 1; i + w <= n; ++i) {
      int j = i + w;
      for (int v = 0; v < 2; ++v) {
        double rule = sc.dsc(i, 0, kRight, v, kContinue) + sc.ssc(i, j, 0, kRight, v);
        double acc = kLogZero;
        for (int r = i; r < j; ++r) {
          combine(acc, ch.cv(i, r, kRight, kHasChild) +
                           ch.cv(r + 1, j, kLeft, kNoChild) + rule);
          if (steps) ++*steps;
        }
        ch.in(i, j, kRight, v) = acc;

        rule = sc.dsc(j, 0, kLeft, v, kContinue) + sc.ssc(j, i, 0, kLeft, v);
        acc = kLogZero;
        for (int r = i; r < j; ++r) {
          combine(acc, ch.cv(i, r, kRight, kNoChild) +
                           ch.cv(r + 1, j, kLeft, kHasChild) + rule);
          if (steps) ++*steps;
        }
        ch.in(i, j, kLeft, v) = acc;

        acc = kLogZero;
        for (int r = i + 1; r <= j; ++r) {
          combine(acc, ch.iv(i, r, kRight, v) + ch.cv(r, j, kRight, kNoChild));
          if (steps) ++*steps;
        }
        ch.c(i, j, kRight, v) = acc;

        acc = kLogZero;
        for (int r = i; r < j; ++r) {
          combine(acc, ch.cv(i, r, kLeft, kNoChild) + ch.iv(r, j, kLeft, v));
          if (steps) ++*steps;
        }
        ch.c(i, j, kLeft, v) = acc;
      }
    }

  double total = kLogZero;
  for (int i = 1; i <= n; ++i)
    combine(total, sc.R[i] + ch.cv(1, i, kLeft, kNoChild) +
                       ch.cv(i, n, kRight, kNoChild));
  return total;
}

void backward_first(const SentScores& sc, const Chart1& ch, double logZ,
                    ScoreGrads& gr) {
  int n = sc.n;
  std::vector<double> aC(ch.C.size(), 0.0), aI(ch.I.size(), 0.0);

  for (int i = 1; i <= n; ++i) {
    double t = sc.R[i] + ch.cv(1, i, kLeft, kNoChild) + ch.cv(i, n, kRight, kNoChild);
    if (is_log_zero(t)) continue;
    double w = std::exp(t - logZ);
    gr.R[i] += w;
    aC[ch.idx(1, i, kLeft, kNoChild)] += w;
    aC[ch.idx(i, n, kRight, kNoChild)] += w;
  }

  for (int w = n - 1; w >= 1; --w)
    for (int i = 1; i + w <= n; ++i) {
      int j = i + w;
      for (int v = 0; v < 2; ++v) {
        double a = aC[ch.idx(i, j, kRight, v)];
        double val = ch.cv(i, j, kRight, v);
        if (a != 0.0 && !is_log_zero(val))
          for (int r = i + 1; r <= j; ++r) {
            double t = ch.iv(i, r, kRight, v) + ch.cv(r, j, kRight, kNoChild);
            if (is_log_zero(t)) continue;
            double wr = a * std::exp(t - val);
            aI[ch.idx(i, r, kRight, v)] += wr;
            aC[ch.idx(r, j, kRight, kNoChild)] += wr;
          }

        a = aC[ch.idx(i, j, kLeft, v)];
        val = ch.cv(i, j, kLeft, v);
        if (a != 0.0 && !is_log_zero(val))
          for (int r = i; r < j; ++r) {
            double t = ch.cv(i, r, kLeft, kNoChild) + ch.iv(r, j, kLeft, v);
            if (is_log_zero(t)) continue;
            double wr = a * std::exp(t - val);
            aC[ch.idx(i, r, kLeft, kNoChild)] += wr;
            aI[ch.idx(r, j, kLeft, v)] += wr;
          }

        a = aI[ch.idx(i, j, kRight, v)];
        val = ch.iv(i, j, kRight, v);
        if (a != 0.0 && !is_log_zero(val)) {
          gr.D[sc.di(i, 0, kRight, v, kContinue)] += a;
          gr.S[sc.si(i, j, 0, kRight, v)] += a;
          double rule =
              sc.dsc(i, 0, kRight, v, kContinue) + sc.ssc(i, j, 0, kRight, v);
          for (int r = i; r < j; ++r) {
            double t = ch.cv(i, r, kRight, kHasChild) +
                       ch.cv(r + 1, j, kLeft, kNoChild) + rule;
            if (is_log_zero(t)) continue;
            double wr = a * std::exp(t - val);
            aC[ch.idx(i, r, kRight, kHasChild)] += wr;
            aC[ch.idx(r + 1, j, kLeft, kNoChild)] += wr;
          }
        }

        a = aI[ch.idx(i, j, kLeft, v)];
        val = ch.iv(i, j, kLeft, v);
        if (a != 0.0 && !is_log_zero(val)) {
          gr.D[sc.di(j, 0, kLeft, v, kContinue)] += a;
          gr.S[sc.si(j, i, 0, kLeft, v)] += a;
          double rule = sc.dsc(j, 0, kLeft, v, kContinue) + sc.ssc(j, i, 0, kLeft, v);
          for (int r = i; r < j; ++r) {
            double t = ch.cv(i, r, kRight, kNoChild) +
                       ch.cv(r + 1, j, kLeft, kHasChild) + rule;
            if (is_log_zero(t)) continue;
            double wr = a * std::exp(t - val);
            aC[ch.idx(i, r, kRight, kNoChild)] += wr;
            aC[ch.idx(r + 1, j, kLeft, kHasChild)] += wr;
          }
        }
      }
    }

  for (int i = 1; i <= n; ++i)
    for (int d = 0; d < 2; ++d)
      for (int v = 0; v < 2; ++v) {
        double a = aC[ch.idx(i, i, d, v)];
        if (a != 0.0) gr.D[sc.di(i, 0, d, v, kStop)] += a;
      }
}

struct Extract1 {
  const SentScores& sc;
  const Chart1& ch;
  std::vector<int>& heads;

  void complete(int i, int j, int d, int v) {
    if (i == j) return;
    if (d == kRight) {
      int br = -1;
      double best = kLogZero;
      for (int r = i + 1; r <= j; ++r) {
        double t = ch.iv(i, r, kRight, v) + ch.cv(r, j, kRight, kNoChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      incomplete(i, br, kRight, v);
      complete(br, j, kRight, kNoChild);
    } else {
      int br = -1;
      double best = kLogZero;
      for (int r = i; r < j; ++r) {
        double t = ch.cv(i, r, kLeft, kNoChild) + ch.iv(r, j, kLeft, v);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(i, br, kLeft, kNoChild);
      incomplete(br, j, kLeft, v);
    }
  }

  void incomplete(int i, int j, int d, int v) {
    int br = -1;
    double best = kLogZero;
    if (d == kRight) {
      heads[j - 1] = i;
      for (int r = i; r < j; ++r) {
        double t =
            ch.cv(i, r, kRight, kHasChild) + ch.cv(r + 1, j, kLeft, kNoChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(i, br, kRight, kHasChild);
      complete(br + 1, j, kLeft, kNoChild);
    } else {
      heads[i - 1] = j;
      for (int r = i; r < j; ++r) {
        double t =
            ch.cv(i, r, kRight, kNoChild) + ch.cv(r + 1, j, kLeft, kHasChild);
        if (t > best) {
          best = t;
          br = r;
        }
      }
      complete(i, br, kRight, kNoChild);
      complete(br + 1, j, kLeft, kHasChild);
    }
  }
};

void scatter_counts(const Sentence& sent, const SentScores& sc,
                    const ScoreGrads& gr, const std::vector<int>& ids,
                    bool second, ExpectedCounts* out) {
  int n = sc.n;
  for (int i = 1; i <= n; ++i) {
    int ti = ids[i - 1];
    out->root[ti] += gr.R[i];
    for (int g = 0; g < sc.gsize; ++g) {
      int e = second ? extra_of(ids, g) : 0;
      for (int d = 0; d < 2; ++d)
        for (int v = 0; v < 2; ++v) {
          for (int a = 0; a < 2; ++a) {
            double x = gr.D[sc.di(i, g, d, v, a)];
            if (x != 0.0)
              out->decision[(((static_cast<size_t>(ti) * out->extra_size + e) * 2 +
                              d) * 2 + v) * 2 + a] += x;
          }
          for (int c = 1; c <= n; ++c) {
            double x = gr.S[sc.si(i, c, g, d, v)];
            if (x != 0.0)
              out->child[(((static_cast<size_t>(ti) * out->extra_size + e) * 2 + d) *
                          2 + v) * static_cast<size_t>(out->vocab_size) +
                         ids[c - 1]] += x;
          }
        }
    }
  }
}

}  // namespace

std::pair<double, std::int64_t> inside_counted(const Sentence& sent,
                                               const ScoringModel& model) {
  SentScores sc = build_scores(sent, model);
  std::int64_t steps = 0;
  if (model.kind == ModelKind::First) {
    Chart1 ch(sc.n);
    double p = run_first(sc, false, ch, &steps);
    return {p, steps};
  }
  Chart2 ch(sc.n);
  bool sibling = model.kind != ModelKind::Grand;
  double p = run_second(sc, sibling, false, ch, &steps);
  return {p, steps};
}

double inside(const Sentence& sent, const ScoringModel& model) {
  return inside_counted(sent, model).first;
}

ParseTree viterbi_parse(const Sentence& sent, const ScoringModel& model) {
  SentScores sc = build_scores(sent, model);
  int n = sc.n;
  ParseTree tree;
  tree.heads.assign(n, -1);

  if (model.kind == ModelKind::First) {
    Chart1 ch(n);
    tree.log_score = run_first(sc, true, ch, nullptr);
    int bi = -1;
    double best = kLogZero;
    for (int i = 1; i <= n; ++i) {
      double t = sc.R[i] + ch.cv(1, i, kLeft, kNoChild) + ch.cv(i, n, kRight, kNoChild);
      if (t > best) {
        best = t;
        bi = i;
      }
    }
    if (bi < 0) throw std::runtime_error("no derivation (all-zero scores)");
    tree.heads[bi - 1] = 0;
    Extract1 ex{sc, ch, tree.heads};
    ex.complete(1, bi, kLeft, kNoChild);
    ex.complete(bi, n, kRight, kNoChild);
    return tree;
  }

  Chart2 ch(n);
  bool sibling = model.kind != ModelKind::Grand;
  tree.log_score = run_second(sc, sibling, true, ch, nullptr);
  int bi = -1;
  double best = kLogZero;
  for (int i = 1; i <= n; ++i) {
    double t = sc.R[i] + ch.cv(0, 1, i, kLeft, kNoChild) +
               ch.cv(0, i, n, kRight, kNoChild);
    if (t > best) {
      best = t;
      bi = i;
    }
  }
  if (bi < 0) throw std::runtime_error("no derivation (all-zero scores)");
  tree.heads[bi - 1] = 0;
  Extract2 ex{sc, ch, sibling, tree.heads};
  ex.complete(0, 1, bi, kLeft, kNoChild);
  ex.complete(0, bi, n, kRight, kNoChild);
  return tree;
}

std::pair<double, ExpectedCounts> expected_counts(const Sentence& sent,
                                                  const ScoringModel& model) {
  if (model.kind == ModelKind::Joint)
    throw std::invalid_argument("use expected_counts_joint for the joint model");
  SentScores sc = build_scores(sent, model);
  ScoreGrads gr(sc);
  double logZ;
  if (model.kind == ModelKind::First) {
    Chart1 ch(sc.n);
    logZ = run_first(sc, false, ch, nullptr);
    backward_first(sc, ch, logZ, gr);
  } else {
    Chart2 ch(sc.n);
    bool sibling = model.kind != ModelKind::Grand;
    logZ = run_second(sc, sibling, false, ch, nullptr);
    backward_second(sc, sibling, ch, logZ, gr);
  }
  ExpectedCounts counts(*model.primary);
  scatter_counts(sent, sc, gr, view_ids(sent, model.primary_lexical),
                 model.kind != ModelKind::First, &counts);
  return {logZ, counts};
}

JointCounts expected_counts_joint(const Sentence& sent,
                                  const ScoringModel& model) {
  if (model.kind != ModelKind::Joint)
    throw std::invalid_argument("expected_counts_joint requires the joint model");
  SentScores sc = build_scores(sent, model);
  Chart2 ch(sc.n);
  double logZ = run_second(sc, true, false, ch, nullptr);
  ScoreGrads gr(sc);
  backward_second(sc, true, ch, logZ, gr);

  JointCounts out;
  out.log_likelihood = logZ;
  out.second = ExpectedCounts(*model.primary);
  out.lexical = ExpectedCounts(*model.lexical);
  scatter_counts(sent, sc, gr, sent.pos_ids, true, &out.second);
  scatter_counts(sent, sc, gr, sent.lex_ids, false, &out.lexical);
  return out;
}

std::int64_t dp_update_count(int n, ModelKind kind) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  std::int64_t steps = 0;
  for (int w = 1; w < n; ++w)
    for (int i = 1; i + w <= n; ++i) {
      int j = i + w;
      std::int64_t nvR, nvL;
      switch (kind) {
        case ModelKind::First:
          nvR = nvL = 2;
          break;
        case ModelKind::Grand:
          nvR = nvL = 2 * (static_cast<std::int64_t>(i) + n - j);
          break;
        default:  // sibling / joint
          nvR = 1 + (n - j);
          nvL = i;
      }
      steps += 2 * (nvR + nvL) * w;   // one I and one C family per direction
    }
  return steps;
}

}  // namespace sodmv
