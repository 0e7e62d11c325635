#ifndef SODMV_TRAINING_HPP
#define SODMV_TRAINING_HPP

#include <optional>

#include "sodmv/chart.hpp"
#include "sodmv/data_io.hpp"
#include "sodmv/neural.hpp"

namespace sodmv {

enum class TrainMethod : int { EM = 0, DMO = 1, ProductEM = 2, JointDMO = 3 };
enum class InitScheme : int { KM = 0, Uniform = 1, SupervisedWarmup = 2 };

struct TrainConfig {
  TrainMethod method = TrainMethod::DMO;
  ModelKind model_kind = ModelKind::Sibling;
  int batch_size = 64;
  double learning_rate = 0.001;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int max_epochs = 50;
  int patience = 5;
  int m_steps_per_e_step = 1;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::KM;
  // single-model training over a lexicalized vocabulary (scores lex_ids);
  // ignored by the joint methods, whose first-order model is always lexical
  bool lexicalized = false;
  int warmup_epochs = 10;
  int max_train_length = 10;
  int restarts = 1;
  // network sizes; dims_lexical is the joint first-order model's config
  DimConfig dims = DimConfig::unlexicalized_defaults();
  DimConfig dims_lexical = DimConfig::unlexicalized_defaults();
  // harmonic-initializer fit schedule (tunables, see km_initialize)
  int km_epochs = 200;
  double km_learning_rate = 0.001;
};

// A neural grammar: parameters plus the vocabulary they index. lexical_view
// selects which id sequence of a Sentence this model scores.
struct NeuralModel {
  ModelKind kind = ModelKind::Sibling;
  Vocab vocab;
  NeuralParams params;
  bool lexical_view = false;

  ModelOrder order() const { return order_for_kind(kind); }
  RuleTables tables() const {   // eval mode (no dropout)
    std::mt19937_64 rng(0);
    return forward_tables(params, vocab, order(), false, rng).tables;
  }
};

struct AdamState {
  NeuralParams m, v;   // moment accumulators, shape-congruent with params
  long step = 0;

  AdamState() = default;
  explicit AdamState(const NeuralParams& p) : m(zeros_like(p)), v(zeros_like(p)) {}
};

// Standard bias-corrected Adam descent step on `grads`.
void adam_update(NeuralParams* params, const ParamGradients& grads,
                 AdamState* state, double lr, double beta1, double beta2,
                 double eps);

// Mean log-likelihood and summed expected counts over a batch.
struct BatchCounts {
  double mean_ll = 0.0;
  ExpectedCounts counts;   // sum over the batch
};
BatchCounts batch_expected_counts(const std::vector<const Sentence*>& batch,
                                  const NeuralModel& model,
                                  const RuleTables& tables);

// One direct-marginal-likelihood step; returns the pre-update batch mean
// negative log-likelihood. grad_out receives the applied gradient if given.
double dmo_step(const std::vector<const Sentence*>& batch, NeuralModel* model,
                AdamState* opt, const TrainConfig& cfg,
                ParamGradients* grad_out = nullptr);

// One EM step: counts frozen once, then cfg.m_steps_per_e_step Adam updates
// on Q with those counts. Returns Q before updating; frozen_out receives the
// cached counts if given.
double em_step(const std::vector<const Sentence*>& batch, NeuralModel* model,
               AdamState* opt, const TrainConfig& cfg,
               ParamGradients* grad_out = nullptr,
               ExpectedCounts* frozen_out = nullptr);

// Agreement step for the product of a first-order lexical model (model0)
// and a second-order sibling model (model1). JointDMO updates once per
// batch; ProductEM freezes counts for m_steps_per_e_step inner updates.
double joint_step(const std::vector<const Sentence*>& batch,
                  NeuralModel* model0, NeuralModel* model1, AdamState* opt0,
                  AdamState* opt1, const TrainConfig& cfg);

// Harmonic target tables for the K&M initializer (exposed for testing):
// child mass proportional to 1/|i-j|, root mass 1/n per position, CONTINUE
// mass proportional to expected fan-out, add-0.1 smoothing.
RuleTables km_target_tables(const Corpus& corpus, ModelOrder order, int V,
                            bool lexical_view = false);

// Fits the model to the harmonic targets by cross-entropy for `epochs`
// full-batch Adam steps. Returns per-epoch cross-entropy values.
std::vector<double> km_initialize(const Corpus& corpus, NeuralModel* model,
                                  int epochs, double lr = 0.001);

// Supervised warm-up on given trees; returns per-epoch mean log p(x, z).
std::vector<double> supervised_warmup(
    const std::vector<std::pair<const Sentence*, ParseTree>>& trees,
    NeuralModel* model, int epochs, const TrainConfig& cfg);

struct TrainResult {
  NeuralModel model;                         // second-order / single model
  std::optional<NeuralModel> lexical_model;  // joint methods only
  std::vector<std::string> log_lines;        // epoch \t train-loss \t dev-ll \t seconds
  double best_dev_ll = -1e300;
  int best_epoch = -1;
};

// Full training loop: init, shuffled mini-batches, per-epoch dev
// log-likelihood, early stopping, best-dev checkpoint. For joint methods
// lex_vocab supplies the first-order model's vocabulary.
TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& cfg, const Vocab* lex_vocab = nullptr,
                  const Corpus* warmup_corpus = nullptr);

}  // namespace sodmv

#endif
