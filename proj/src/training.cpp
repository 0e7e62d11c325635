#include "sodmv/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "sodmv/enumerate.hpp"

namespace sodmv {

namespace {

std::vector<Mat*> param_mats(NeuralParams& p) {
  std::vector<Mat*> out;
  visit_params(p, [&](Mat& m) { out.push_back(&m); });
  return out;
}

std::mt19937_64 step_rng(const TrainConfig& cfg, long step) {
  return std::mt19937_64(cfg.seed * 0x9E3779B97F4A7C15ULL + 0x1234567 +
                         static_cast<std::uint64_t>(step));
}

const std::vector<int>& ids_of(const Sentence& s, bool lexical_view) {
  return lexical_view ? s.lex_ids : s.pos_ids;
}

ExpectedCounts scaled(const ExpectedCounts& c, double s) {
  ExpectedCounts out = c;
  out.scale(s);
  return out;
}

double table_dot(const ExpectedCounts& c, const RuleTables& t) {
  double q = 0;
  for (size_t i = 0; i < t.root.size(); ++i) q += c.root[i] * t.root[i];
  for (size_t i = 0; i < t.child.size(); ++i) q += c.child[i] * t.child[i];
  for (size_t i = 0; i < t.decision.size(); ++i)
    q += c.decision[i] * t.decision[i];
  return q;
}

}  // namespace

void adam_update(NeuralParams* params, const ParamGradients& grads,
                 AdamState* state, double lr, double beta1, double beta2,
                 double eps) {
  auto ps = param_mats(*params);
  auto gs = param_mats(const_cast<ParamGradients&>(grads));
  auto ms = param_mats(state->m);
  auto vs = param_mats(state->v);
  for (Mat* g : gs)
    if (g->size() > 0 && !g->allFinite())
      throw std::runtime_error("non-finite gradient");
  ++state->step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state->step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state->step));
  for (size_t i = 0; i < ps.size(); ++i) {
    if (ps[i]->size() == 0) continue;
    *ms[i] = beta1 * *ms[i] + (1.0 - beta1) * *gs[i];
    *vs[i] = beta2 * *vs[i] + (1.0 - beta2) * gs[i]->cwiseProduct(*gs[i]);
    Mat mhat = *ms[i] / bc1;
    Mat vhat = *vs[i] / bc2;
    ps[i]->array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
  }
}

BatchCounts batch_expected_counts(const std::vector<const Sentence*>& batch,
                                  const NeuralModel& model,
                                  const RuleTables& tables) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  ScoringModel sm;
  sm.kind = model.kind;
  sm.primary = &tables;
  sm.primary_lexical = model.lexical_view;
  BatchCounts out;
  out.counts = ExpectedCounts(tables);
  for (size_t i = 0; i < batch.size(); ++i) {
    auto [ll, c] = expected_counts(*batch[i], sm);
    if (!std::isfinite(ll))
      throw std::runtime_error("non-finite loss at sentence " +
                               std::to_string(i));
    out.mean_ll += ll;
    out.counts.add_scaled(c, 1.0);
  }
  out.mean_ll /= static_cast<double>(batch.size());
  return out;
}

double dmo_step(const std::vector<const Sentence*>& batch, NeuralModel* model,
                AdamState* opt, const TrainConfig& cfg,
                ParamGradients* grad_out) {
  auto rng = step_rng(cfg, opt->step);
  auto fw = forward_tables(model->params, model->vocab, model->order(), true,
                           rng);
  auto bc = batch_expected_counts(batch, *model, fw.tables);
  auto upstream = scaled(bc.counts, -1.0 / static_cast<double>(batch.size()));
  auto g = backward_params(model->params, fw.tape, upstream);
  if (grad_out) *grad_out = g;
  adam_update(&model->params, g, opt, cfg.learning_rate, cfg.beta1, cfg.beta2,
              cfg.adam_eps);
  return -bc.mean_ll;
}

double em_step(const std::vector<const Sentence*>& batch, NeuralModel* model,
               AdamState* opt, const TrainConfig& cfg,
               ParamGradients* grad_out, ExpectedCounts* frozen_out) {
  auto rng = step_rng(cfg, opt->step);
  auto fw = forward_tables(model->params, model->vocab, model->order(), true,
                           rng);
  auto bc = batch_expected_counts(batch, *model, fw.tables);
  if (frozen_out) *frozen_out = bc.counts;
  double B = static_cast<double>(batch.size());
  double q0 = table_dot(bc.counts, fw.tables) / B;
  auto upstream = scaled(bc.counts, -1.0 / B);

  for (int k = 0; k < cfg.m_steps_per_e_step; ++k) {
    ForwardResult cur = k == 0 ? std::move(fw)
                               : [&] {
                                   auto r2 = step_rng(cfg, opt->step);
                                   return forward_tables(model->params,
                                                         model->vocab,
                                                         model->order(), true,
                                                         r2);
                                 }();
    auto g = backward_params(model->params, cur.tape, upstream);
    if (grad_out && k == 0) *grad_out = g;
    adam_update(&model->params, g, opt, cfg.learning_rate, cfg.beta1,
                cfg.beta2, cfg.adam_eps);
  }
  return q0;
}

double joint_step(const std::vector<const Sentence*>& batch,
                  NeuralModel* model0, NeuralModel* model1, AdamState* opt0,
                  AdamState* opt1, const TrainConfig& cfg) {
  if (model0->kind != ModelKind::First || model1->kind != ModelKind::Sibling)
    throw std::invalid_argument(
        "joint training needs a first-order and a sibling model");
  for (const Sentence* s : batch)
    if (s->lex_ids.empty() || s->pos_ids.empty())
      throw std::invalid_argument("joint training requires parallel views");

  auto make_tables = [&](NeuralModel* m, AdamState* o) {
    auto rng = step_rng(cfg, o->step);
    return forward_tables(m->params, m->vocab, m->order(), true, rng);
  };
  auto fw0 = make_tables(model0, opt0);
  auto fw1 = make_tables(model1, opt1);

  ScoringModel sm;
  sm.kind = ModelKind::Joint;
  sm.primary = &fw1.tables;
  sm.lexical = &fw0.tables;

  double mean_ll = 0.0;
  ExpectedCounts c0(fw0.tables), c1(fw1.tables);
  for (size_t i = 0; i < batch.size(); ++i) {
    auto jc = expected_counts_joint(*batch[i], sm);
    if (!std::isfinite(jc.log_likelihood))
      throw std::runtime_error("non-finite loss at sentence " +
                               std::to_string(i));
    mean_ll += jc.log_likelihood;
    c0.add_scaled(jc.lexical, 1.0);
    c1.add_scaled(jc.second, 1.0);
  }
  double B = static_cast<double>(batch.size());
  mean_ll /= B;
  auto up0 = scaled(c0, -1.0 / B);
  auto up1 = scaled(c1, -1.0 / B);

  int inner = cfg.method == TrainMethod::ProductEM ? cfg.m_steps_per_e_step : 1;
  for (int k = 0; k < inner; ++k) {
    ForwardResult cur0 = k == 0 ? std::move(fw0) : make_tables(model0, opt0);
    ForwardResult cur1 = k == 0 ? std::move(fw1) : make_tables(model1, opt1);
    auto g0 = backward_params(model0->params, cur0.tape, up0);
    auto g1 = backward_params(model1->params, cur1.tape, up1);
    adam_update(&model0->params, g0, opt0, cfg.learning_rate, cfg.beta1,
                cfg.beta2, cfg.adam_eps);
    adam_update(&model1->params, g1, opt1, cfg.learning_rate, cfg.beta1,
                cfg.beta2, cfg.adam_eps);
  }
  return mean_ll;
}

RuleTables km_target_tables(const Corpus& corpus, ModelOrder order, int V,
                            bool lexical_view) {
  RuleTables shape(order, V);
  // accumulate first-order-shaped pseudo-counts, broadcast at the end
  std::vector<double> root_c(V, 0.0);
  std::vector<double> child_c(static_cast<size_t>(V) * 2 * V, 0.0);
  std::vector<double> dec_c(static_cast<size_t>(V) * 2 * 2, 0.0);
  auto child_at = [&](int p, int d, int c) -> double& {
    return child_c[(static_cast<size_t>(p) * 2 + d) * V + c];
  };
  auto dec_at = [&](int p, int d, int a) -> double& {
    return dec_c[(static_cast<size_t>(p) * 2 + d) * 2 + a];
  };

  for (const Sentence& s : corpus.sentences) {
    const auto& ids = lexical_view ? s.lex_ids : s.pos_ids;
    int n = static_cast<int>(ids.size());
    if (n == 0) continue;
    std::vector<double> fanout(static_cast<size_t>(n) * 2, 0.0);
    for (int j = 1; j <= n; ++j) {
      double z = 1.0 / n;
      for (int i = 1; i <= n; ++i)
        if (i != j) z += 1.0 / std::abs(i - j);
      root_c[ids[j - 1]] += (1.0 / n) / z;
      for (int i = 1; i <= n; ++i) {
        if (i == j) continue;
        double q = (1.0 / std::abs(i - j)) / z;
        int d = j < i ? kLeft : kRight;
        child_at(ids[i - 1], d, ids[j - 1]) += q;
        fanout[(i - 1) * 2 + d] += q;
      }
    }
    for (int i = 1; i <= n; ++i)
      for (int d = 0; d < 2; ++d) {
        dec_at(ids[i - 1], d, kContinue) += fanout[(i - 1) * 2 + d];
        dec_at(ids[i - 1], d, kStop) += 1.0;
      }
  }

  const double smooth = 0.1;
  for (auto& x : root_c) x += smooth;
  for (auto& x : child_c) x += smooth;
  for (auto& x : dec_c) x += smooth;

  double rz = 0;
  for (double x : root_c) rz += x;
  for (int c = 0; c < V; ++c) shape.root[c] = std::log(root_c[c] / rz);
  for (int p = 0; p < V; ++p)
    for (int d = 0; d < 2; ++d) {
      double cz = 0;
      for (int c = 0; c < V; ++c) cz += child_at(p, d, c);
      double dz = dec_at(p, d, kStop) + dec_at(p, d, kContinue);
      for (int e = 0; e < shape.extra_size; ++e)
        for (int v = 0; v < 2; ++v) {
          for (int c = 0; c < V; ++c)
            shape.child_at(p, e, d, v, c) = std::log(child_at(p, d, c) / cz);
          for (int a = 0; a < 2; ++a)
            shape.decision_at(p, e, d, v, a) = std::log(dec_at(p, d, a) / dz);
        }
    }
  return shape;
}

std::vector<double> km_initialize(const Corpus& corpus, NeuralModel* model,
                                  int epochs, double lr) {
  if (corpus.sentences.empty()) throw std::invalid_argument("empty corpus");
  int V = model->vocab.size();
  RuleTables targets =
      km_target_tables(corpus, model->order(), V, model->lexical_view);
  // upstream gradient of cross-entropy -sum target_prob * log p
  ExpectedCounts up(targets);
  for (size_t i = 0; i < targets.root.size(); ++i)
    up.root[i] = -std::exp(targets.root[i]);
  for (size_t i = 0; i < targets.child.size(); ++i)
    up.child[i] = -std::exp(targets.child[i]);
  for (size_t i = 0; i < targets.decision.size(); ++i)
    up.decision[i] = -std::exp(targets.decision[i]);

  std::vector<double> ce_per_epoch;
  AdamState opt(model->params);
  std::mt19937_64 rng(0);
  for (int ep = 0; ep < epochs; ++ep) {
    auto fw = forward_tables(model->params, model->vocab, model->order(),
                             false, rng);
    ce_per_epoch.push_back(table_dot(up, fw.tables));   // = cross-entropy
    auto g = backward_params(model->params, fw.tape, up);
    adam_update(&model->params, g, &opt, lr, 0.9, 0.999, 1e-8);
  }
  return ce_per_epoch;
}

std::vector<double> supervised_warmup(
    const std::vector<std::pair<const Sentence*, ParseTree>>& trees,
    NeuralModel* model, int epochs, const TrainConfig& cfg) {
  if (trees.empty()) throw std::invalid_argument("no warm-up trees");
  ExpectedCounts counts(RuleTables(model->order(), model->vocab.size()));
  for (size_t i = 0; i < trees.size(); ++i) {
    const auto& [sent, tree] = trees[i];
    if (!is_projective_single_root(tree.heads))
      throw std::runtime_error("non-projective or multi-root tree at sentence " +
                               std::to_string(i));
    accumulate_tree_counts(tree.heads, ids_of(*sent, model->lexical_view),
                           model->order(), 1.0, &counts);
  }
  double N = static_cast<double>(trees.size());
  auto upstream = scaled(counts, -1.0 / N);

  std::vector<double> ll_per_epoch;
  AdamState opt(model->params);
  std::mt19937_64 rng(0);
  for (int ep = 0; ep < epochs; ++ep) {
    auto fw = forward_tables(model->params, model->vocab, model->order(),
                             false, rng);
    ll_per_epoch.push_back(table_dot(counts, fw.tables) / N);
    auto g = backward_params(model->params, fw.tape, upstream);
    adam_update(&model->params, g, &opt, cfg.learning_rate, cfg.beta1,
                cfg.beta2, cfg.adam_eps);
  }
  return ll_per_epoch;
}

namespace {

double corpus_mean_ll(const std::vector<const Sentence*>& sents,
                      const NeuralModel& model,
                      const NeuralModel* lex_model) {
  if (sents.empty()) return 0.0;
  RuleTables t = model.tables();
  RuleTables tl;
  ScoringModel sm;
  if (lex_model) {
    tl = lex_model->tables();
    sm.kind = ModelKind::Joint;
    sm.primary = &t;
    sm.lexical = &tl;
  } else {
    sm.kind = model.kind;
    sm.primary = &t;
    sm.primary_lexical = model.lexical_view;
  }
  double ll = 0;
  for (const Sentence* s : sents) ll += inside(*s, sm);
  return ll / static_cast<double>(sents.size());
}

std::string format_log_line(int epoch, double loss, double dev_ll,
                            double seconds) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f\t%.3f", epoch, loss, dev_ll,
                seconds);
  return buf;
}

}  // namespace

TrainResult train(const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& cfg, const Vocab* lex_vocab,
                  const Corpus* warmup_corpus) {
  const bool joint = cfg.method == TrainMethod::ProductEM ||
                     cfg.method == TrainMethod::JointDMO;
  if (joint && lex_vocab == nullptr)
    throw std::invalid_argument("joint training needs a lexical vocab");

  std::vector<const Sentence*> train_sents;
  for (const Sentence& s : train_corpus.sentences)
    if (s.size() >= 1 && s.size() <= cfg.max_train_length)
      train_sents.push_back(&s);
  if (train_sents.empty()) throw std::invalid_argument("empty corpus");
  std::vector<const Sentence*> dev_sents;
  for (const Sentence& s : dev_corpus.sentences)
    if (s.size() >= 1) dev_sents.push_back(&s);

  TrainResult res;
  res.model.kind = joint ? ModelKind::Sibling : cfg.model_kind;
  res.model.vocab = train_corpus.vocab;
  res.model.lexical_view = joint ? false : cfg.lexicalized;
  res.model.params = init_params(cfg.seed, cfg.dims, res.model.vocab);
  if (joint) {
    NeuralModel lex;
    lex.kind = ModelKind::First;
    lex.vocab = *lex_vocab;
    lex.lexical_view = true;
    lex.params = init_params(cfg.seed + 0x5151, cfg.dims_lexical, lex.vocab);
    res.lexical_model = std::move(lex);
  }

  // initialization scheme
  if (cfg.init == InitScheme::KM) {
    km_initialize(train_corpus, &res.model, cfg.km_epochs,
                  cfg.km_learning_rate);
    if (res.lexical_model)
      km_initialize(train_corpus, &*res.lexical_model, cfg.km_epochs,
                    cfg.km_learning_rate);
  } else if (cfg.init == InitScheme::SupervisedWarmup) {
    const Corpus& wc = warmup_corpus ? *warmup_corpus : train_corpus;
    std::vector<std::pair<const Sentence*, ParseTree>> trees;
    for (const Sentence& s : wc.sentences) {
      if (!s.has_gold() || s.size() > cfg.max_train_length) continue;
      if (!is_projective_single_root(s.gold_heads)) continue;
      ParseTree t;
      t.heads = s.gold_heads;
      trees.push_back({&s, t});
    }
    if (trees.empty())
      throw std::invalid_argument("warm-up requested but no usable trees");
    supervised_warmup(trees, &res.model, cfg.warmup_epochs, cfg);
    if (res.lexical_model)
      supervised_warmup(trees, &*res.lexical_model, cfg.warmup_epochs, cfg);
  }

  AdamState opt(res.model.params);
  AdamState opt_lex;
  if (res.lexical_model) opt_lex = AdamState(res.lexical_model->params);

  std::mt19937_64 shuffle_rng(cfg.seed);
  NeuralParams best = res.model.params;
  NeuralParams best_lex;
  if (res.lexical_model) best_lex = res.lexical_model->params;
  int bad_epochs = 0;
  auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(train_sents.begin(), train_sents.end(), shuffle_rng);
    double loss_sum = 0;
    long n_seen = 0;
    for (size_t start = 0; start < train_sents.size();
         start += cfg.batch_size) {
      size_t end = std::min(train_sents.size(),
                            start + static_cast<size_t>(cfg.batch_size));
      std::vector<const Sentence*> batch(train_sents.begin() + start,
                                         train_sents.begin() + end);
      double v;
      try {
        switch (cfg.method) {
          case TrainMethod::DMO:
            v = dmo_step(batch, &res.model, &opt, cfg);
            break;
          case TrainMethod::EM:
            v = -em_step(batch, &res.model, &opt, cfg);
            break;
          default:
            v = -joint_step(batch, &*res.lexical_model, &res.model, &opt_lex,
                            &opt, cfg);
            break;
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(start / cfg.batch_size) +
                                 ": " + e.what());
      }
      loss_sum += v * static_cast<double>(batch.size());
      n_seen += static_cast<long>(batch.size());
    }
    double train_loss = loss_sum / static_cast<double>(n_seen);

    double dev_ll = 0.0;
    bool have_dev = !dev_sents.empty();
    if (have_dev)
      dev_ll = corpus_mean_ll(
          dev_sents, res.model,
          res.lexical_model ? &*res.lexical_model : nullptr);

    double secs = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    res.log_lines.push_back(
        format_log_line(epoch, train_loss, dev_ll, secs));

    if (!have_dev) {
      res.best_dev_ll = dev_ll;
      res.best_epoch = epoch;
      best = res.model.params;
      if (res.lexical_model) best_lex = res.lexical_model->params;
      continue;
    }
    if (dev_ll > res.best_dev_ll) {
      res.best_dev_ll = dev_ll;
      res.best_epoch = epoch;
      best = res.model.params;
      if (res.lexical_model) best_lex = res.lexical_model->params;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  res.model.params = std::move(best);
  if (res.lexical_model) res.lexical_model->params = std::move(best_lex);
  return res;
}

}  // namespace sodmv
