#ifndef SODMV_ENUMERATE_HPP
#define SODMV_ENUMERATE_HPP

#include <functional>

#include "sodmv/chart.hpp"
#include "sodmv/grammar.hpp"

namespace sodmv {

// One grammar-rule use inside a derivation.
struct RuleRef {
  enum Type { Root, Child, Decision };
  Type type;
  int parent = 0;   // token id
  int extra = 0;    // extra-axis index (0 = NULL/ROOT)
  int dir = 0;
  int val = 0;
  int outcome = 0;  // child token id, or decision
};

// Walks the generative story of the given tree (outside-in child order) and
// reports every rule use. heads are 1-based positions with 0 = imaginary
// root; ids are the token ids the rules are scored over.
void walk_tree_rules(const std::vector<int>& heads, const std::vector<int>& ids,
                     ModelOrder order,
                     const std::function<void(const RuleRef&)>& visit);

double tree_log_prob(const std::vector<int>& heads, const std::vector<int>& ids,
                     const RuleTables& tables);

void accumulate_tree_counts(const std::vector<int>& heads,
                            const std::vector<int>& ids, ModelOrder order,
                            double weight, ExpectedCounts* out);

bool is_projective_single_root(const std::vector<int>& heads);

// All projective head assignments over n tokens in which the imaginary root
// has exactly one child.
std::vector<std::vector<int>> enumerate_projective_heads(int n);

struct EnumerationResult {
  double log_partition = kLogZero;
  ParseTree best;
  ExpectedCounts counts;          // primary model counts
  ExpectedCounts counts_lexical;  // JOINT only
  int n_trees = 0;
};

// Exhaustive oracle over all projective single-root-child trees, n <= 8.
EnumerationResult enumerate_trees(const Sentence& sent,
                                  const ScoringModel& model);

}  // namespace sodmv

#endif
