#ifndef SODMV_CHART_HPP
#define SODMV_CHART_HPP

#include <cstdint>
#include <utility>

#include "sodmv/grammar.hpp"

namespace sodmv {

struct ParseTree {
  std::vector<int> heads;   // heads[i] for token i+1, 0 = imaginary root
  double log_score = kLogZero;
};

// Scoring interface for the chart algorithms. For FIRST/SIBLING/GRAND,
// `primary` holds the model's tables and `primary_lexical` selects which id
// sequence of the sentence it scores. For JOINT, `primary` is the
// second-order sibling model over POS ids and `lexical` the first-order
// model over lexical ids; scores are the sum of both (product of experts).
struct ScoringModel {
  ModelKind kind = ModelKind::First;
  const RuleTables* primary = nullptr;
  bool primary_lexical = false;
  const RuleTables* lexical = nullptr;
};

double inside(const Sentence& sent, const ScoringModel& model);

ParseTree viterbi_parse(const Sentence& sent, const ScoringModel& model);

// log-likelihood plus posterior expected rule counts of the primary model.
std::pair<double, ExpectedCounts> expected_counts(const Sentence& sent,
                                                  const ScoringModel& model);

struct JointCounts {
  double log_likelihood = kLogZero;
  ExpectedCounts lexical;   // first-order L-NDMV counts
  ExpectedCounts second;    // second-order sibling counts
};

// JOINT only: both models' expected counts under the shared product posterior.
JointCounts expected_counts_joint(const Sentence& sent,
                                  const ScoringModel& model);

// Exact number of binary span-combination steps the inside recursion
// performs for a length-n sentence; cubic in n for FIRST, quartic otherwise.
std::int64_t dp_update_count(int n, ModelKind kind);

// inside value together with the instrumented combination-step count
std::pair<double, std::int64_t> inside_counted(const Sentence& sent,
                                               const ScoringModel& model);

}  // namespace sodmv

#endif
