#ifndef SODMV_TEST_UTIL_HPP
#define SODMV_TEST_UTIL_HPP

#include <cmath>
#include <random>
#include <vector>

#include "sodmv/grammar.hpp"

namespace sodmv::test {

// log-softmax one slice of raw scores in place
inline void log_normalize(std::vector<double>& t, size_t base, int count) {
  double m = t[base];
  for (int k = 1; k < count; ++k) m = std::max(m, t[base + k]);
  double s = 0;
  for (int k = 0; k < count; ++k) s += std::exp(t[base + k] - m);
  double lz = m + std::log(s);
  for (int k = 0; k < count; ++k) t[base + k] -= lz;
}

// Random normalized tables; `sharpness` scales the logits.
inline RuleTables random_tables(ModelOrder order, int vocab_size,
                                std::mt19937_64& rng, double sharpness = 1.0) {
  RuleTables t(order, vocab_size);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& x : t.root) x = sharpness * gauss(rng);
  for (auto& x : t.child) x = sharpness * gauss(rng);
  for (auto& x : t.decision) x = sharpness * gauss(rng);
  log_normalize(t.root, 0, vocab_size);
  for (int p = 0; p < vocab_size; ++p)
    for (int e = 0; e < t.extra_size; ++e)
      for (int d = 0; d < 2; ++d)
        for (int v = 0; v < 2; ++v) {
          log_normalize(t.child, t.child_index(p, e, d, v, 0), vocab_size);
          log_normalize(t.decision, t.decision_index(p, e, d, v, 0), 2);
        }
  return t;
}

inline Sentence random_sentence(int n, int vocab_size, std::mt19937_64& rng,
                                bool with_lex = false) {
  Sentence s;
  std::uniform_int_distribution<int> pick(0, vocab_size - 1);
  for (int i = 0; i < n; ++i) {
    s.pos_ids.push_back(pick(rng));
    if (with_lex) s.lex_ids.push_back(pick(rng));
  }
  return s;
}

}  // namespace sodmv::test

#endif
