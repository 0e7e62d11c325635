#ifndef SODMV_NEURAL_HPP
#define SODMV_NEURAL_HPP

#include <Eigen/Dense>
#include <random>

#include "sodmv/grammar.hpp"

namespace sodmv {

using Mat = Eigen::MatrixXd;

struct DimConfig {
  int d_emb = 100;      // POS embedding width
  int d_word = 100;     // word embedding width (lexicalized)
  int d_hidden = 100;
  int q_child = 30;     // decomposed trilinear rank, child and root rules
  int q_decision = 10;
  bool use_skip = true;
  bool deep_output = false;
  double dropout = 0.0;
  bool lexicalized = false;

  int input_dim() const { return lexicalized ? d_emb + d_word : d_emb; }

  static DimConfig unlexicalized_defaults() { return {}; }
  static DimConfig lexicalized_defaults() {
    DimConfig c;
    c.d_hidden = 200;
    c.q_child = 150;
    c.q_decision = 50;
    c.dropout = 0.5;
    c.lexicalized = true;
    return c;
  }
};

struct TrilinearFactors {
  Mat parent, extra, child;   // q x d_hidden each
};

// All learnable parameters. Vectors are stored as single-column matrices so
// the visitor below can treat everything uniformly.
struct NeuralParams {
  DimConfig dims;
  Mat tok_emb;      // unlex: d_emb x V (POS); lex: d_word x V (word part)
  Mat pos_emb;      // lex only: d_emb x n_pos
  Mat null_emb;     // input_dim x 1, extra-slot NULL/ROOT symbol
  Mat dec_emb;      // input_dim x 2 (stop, continue)
  Mat root_emb;     // input_dim x 1
  Mat W_parent, W_child, W_extra, W_dec, W_root;   // d x input_dim
  Mat W_val[2], W1;        // valence MLP
  Mat W_dir[2], W2, W3;    // direction MLP
  Mat W4, W5, W6;          // output MLP (W5/W6 only in the deep variant)
  Mat const_slot;          // d x 1, fills the extra slot for root/first-order
  TrilinearFactors tri_child, tri_root, tri_dec;
};

// Applies fn to every parameter matrix, in a fixed order shared by params
// and gradients.
template <typename P, typename F>
void visit_params(P& p, F&& fn) {
  fn(p.tok_emb);
  fn(p.pos_emb);
  fn(p.null_emb);
  fn(p.dec_emb);
  fn(p.root_emb);
  fn(p.W_parent);
  fn(p.W_child);
  fn(p.W_extra);
  fn(p.W_dec);
  fn(p.W_root);
  fn(p.W_val[0]);
  fn(p.W_val[1]);
  fn(p.W1);
  fn(p.W_dir[0]);
  fn(p.W_dir[1]);
  fn(p.W2);
  fn(p.W3);
  fn(p.W4);
  fn(p.W5);
  fn(p.W6);
  fn(p.const_slot);
  fn(p.tri_child.parent);
  fn(p.tri_child.extra);
  fn(p.tri_child.child);
  fn(p.tri_root.parent);
  fn(p.tri_root.extra);
  fn(p.tri_root.child);
  fn(p.tri_dec.parent);
  fn(p.tri_dec.extra);
  fn(p.tri_dec.child);
}

using ParamGradients = NeuralParams;

NeuralParams zeros_like(const NeuralParams& p);

NeuralParams init_params(std::uint64_t seed, const DimConfig& dims,
                         const Vocab& vocab);

// Records one pass of the shared three-MLP stack.
struct StackTape {
  Mat E, A1, B1, T, U1, Dv, R1, R2, H;
};

struct Tape {
  ModelOrder order = ModelOrder::First;
  int vocab_size = 0;
  bool train_mode = false;
  std::vector<int> sym_pos;  // lexicalized: POS id per symbol (copied from vocab)
  Mat drop_mask;            // elementwise multiplier applied to X (may be empty)
  Mat X;                    // input_dim x V after dropout
  Mat Xext;                 // input_dim x (V+1) (second order)
  Mat Edec_raw;             // d x 2 = W_dec * dec_emb
  Mat Eroot_raw;            // d x 1
  // stack runs: role in {parent, child, extra, decision, root}
  StackTape st_parent[2][2], st_child[2][2], st_extra[2][2], st_dec[2][2];
  StackTape st_root;
  // trilinear projections per (dir, val)
  Mat Op[2][2], Oc[2][2], Oe[2][2];          // child-rule factors
  Mat Dp[2][2], De[2][2], Dd[2][2];          // decision-rule factors
  Mat Rp, Re, Rc;                            // root-rule factors
  RuleTables tables;                         // log-probabilities (for softmax grad)
};

struct ForwardResult {
  RuleTables tables;
  Tape tape;
};

// Computes all rule log-probabilities via the embedding -> role transform ->
// valence MLP -> direction MLP -> output MLP -> decomposed trilinear ->
// softmax pipeline. Dropout is active only in lexicalized train mode.
ForwardResult forward_tables(const NeuralParams& params, const Vocab& vocab,
                             ModelOrder order, bool train_mode,
                             std::mt19937_64& rng);

// Exact gradient of sum_r grad_log_tables[r] * log p(r) w.r.t. all params.
ParamGradients backward_params(const NeuralParams& params, const Tape& tape,
                               const ExpectedCounts& grad_log_tables);

// Optional pretrained embeddings: one line per symbol, symbol then
// whitespace-separated reals. Unmatched symbols keep their initialization.
void load_pretrained_embeddings(const std::string& path, const Vocab& vocab,
                                NeuralParams* params);

}  // namespace sodmv

#endif
