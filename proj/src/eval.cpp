#include "sodmv/eval.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

namespace sodmv {

using nlohmann::json;

// ---------------------------------------------------------------------------
// UAS
// ---------------------------------------------------------------------------

EvalReport evaluate_uas(const std::vector<ParseTree>& predicted,
                        const Corpus& gold, PunctPolicy policy) {
  if (predicted.size() != gold.sentences.size())
    throw std::runtime_error("prediction/gold sentence count mismatch: " +
                             std::to_string(predicted.size()) + " vs " +
                             std::to_string(gold.sentences.size()));

  const int kBucketLens[] = {10, 15, 40, 0};   // 0 = all
  EvalReport rep;
  rep.policy = policy;
  for (int b : kBucketLens) {
    EvalReport::Bucket bk;
    bk.max_len = b;
    rep.buckets.push_back(bk);
  }

  for (size_t si = 0; si < predicted.size(); ++si) {
    const Sentence& s = gold.sentences[si];
    if (!s.has_gold())
      throw std::runtime_error("gold sentence " + std::to_string(si) +
                               " has no heads");
    if (static_cast<int>(predicted[si].heads.size()) != s.size())
      throw std::runtime_error("prediction/gold length mismatch at sentence " +
                               std::to_string(si));
    for (int i = 0; i < s.size(); ++i) {
      if (policy == PunctPolicy::Exclude && s.is_punct[i]) continue;
      bool ok = predicted[si].heads[i] == s.gold_heads[i];
      ++rep.scored;
      rep.correct += ok ? 1 : 0;
      for (auto& bk : rep.buckets) {
        if (bk.max_len != 0 && s.size() > bk.max_len) continue;
        ++bk.scored;
        bk.correct += ok ? 1 : 0;
      }
    }
  }
  if (rep.scored == 0) throw std::runtime_error("no scored tokens");
  rep.uas = static_cast<double>(rep.correct) / static_cast<double>(rep.scored);
  for (auto& bk : rep.buckets)
    bk.uas = bk.scored == 0
                 ? 0.0
                 : static_cast<double>(bk.correct) /
                       static_cast<double>(bk.scored);
  return rep;
}

// ---------------------------------------------------------------------------
// Model archive
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'O', 'D', 'M', 'V', 'A', 'R', 'C'};
constexpr std::uint32_t kArchiveVersion = 1;

json dims_to_json(const DimConfig& d) {
  return json{{"d_emb", d.d_emb},
              {"d_word", d.d_word},
              {"d_hidden", d.d_hidden},
              {"q_child", d.q_child},
              {"q_decision", d.q_decision},
              {"use_skip", d.use_skip},
              {"deep_output", d.deep_output},
              {"dropout", d.dropout},
              {"lexicalized", d.lexicalized}};
}

DimConfig dims_from_json(const json& j) {
  DimConfig d;
  d.d_emb = j.at("d_emb");
  d.d_word = j.at("d_word");
  d.d_hidden = j.at("d_hidden");
  d.q_child = j.at("q_child");
  d.q_decision = j.at("q_decision");
  d.use_skip = j.at("use_skip");
  d.deep_output = j.at("deep_output");
  d.dropout = j.at("dropout");
  d.lexicalized = j.at("lexicalized");
  return d;
}

json vocab_to_json(const Vocab& v) {
  return json{{"mode", static_cast<int>(v.mode)},
              {"symbols", v.symbols},
              {"sym_pos", v.sym_pos},
              {"n_pos", v.n_pos},
              {"min_freq", v.min_freq}};
}

Vocab vocab_from_json(const json& j) {
  Vocab v;
  v.mode = static_cast<VocabMode>(j.at("mode").get<int>());
  v.symbols = j.at("symbols").get<std::vector<std::string>>();
  v.sym_pos = j.at("sym_pos").get<std::vector<int>>();
  v.n_pos = j.at("n_pos");
  v.min_freq = j.at("min_freq");
  for (size_t i = 0; i < v.symbols.size(); ++i)
    v.symbol_to_id[v.symbols[i]] = static_cast<int>(i);
  return v;
}

json model_meta(const NeuralModel& m) {
  return json{{"kind", static_cast<int>(m.kind)},
              {"lexical_view", m.lexical_view},
              {"dims", dims_to_json(m.params.dims)},
              {"vocab", vocab_to_json(m.vocab)}};
}

void write_params(std::ostream& out, const NeuralParams& p) {
  visit_params(const_cast<NeuralParams&>(p), [&](Mat& m) {
    std::uint32_t r = static_cast<std::uint32_t>(m.rows());
    std::uint32_t c = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&r), sizeof r);
    out.write(reinterpret_cast<const char*>(&c), sizeof c);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
}

void read_params(std::istream& in, const NeuralParams& expected_shapes,
                 NeuralParams* p) {
  p->dims = expected_shapes.dims;
  std::vector<const Mat*> expect;
  visit_params(const_cast<NeuralParams&>(expected_shapes),
               [&](Mat& m) { expect.push_back(&m); });
  size_t idx = 0;
  visit_params(*p, [&](Mat& m) {
    std::uint32_t r = 0, c = 0;
    in.read(reinterpret_cast<char*>(&r), sizeof r);
    in.read(reinterpret_cast<char*>(&c), sizeof c);
    if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");
    const Mat& e = *expect[idx++];
    if (r != static_cast<std::uint32_t>(e.rows()) ||
        c != static_cast<std::uint32_t>(e.cols()))
      throw ArchiveError(
          ArchiveError::Shape,
          "shape inconsistency: stored " + std::to_string(r) + "x" +
              std::to_string(c) + ", expected " + std::to_string(e.rows()) +
              "x" + std::to_string(e.cols()));
    m.resize(r, c);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");
  });
}

NeuralModel model_from_meta(const json& j, std::istream& in) {
  NeuralModel m;
  m.kind = static_cast<ModelKind>(j.at("kind").get<int>());
  m.lexical_view = j.at("lexical_view");
  m.vocab = vocab_from_json(j.at("vocab"));
  DimConfig dims = dims_from_json(j.at("dims"));
  NeuralParams shapes = init_params(0, dims, m.vocab);
  read_params(in, shapes, &m.params);
  return m;
}

}  // namespace

void save_model(const NeuralModel& model, const NeuralModel* lexical,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json meta{{"format", "sodmv-model"},
            {"version", kArchiveVersion},
            {"model", model_meta(model)},
            {"has_lexical", lexical != nullptr}};
  if (lexical) meta["lexical"] = model_meta(*lexical);
  std::string header = meta.dump();

  out.write(kMagic, sizeof kMagic);
  std::uint32_t ver = kArchiveVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
  std::uint64_t hlen = header.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_params(out, model.params);
  if (lexical) write_params(out, lexical->params);
  if (!out) throw std::runtime_error("write failed: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);

  char magic[8];
  in.read(magic, sizeof magic);
  if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw ArchiveError(ArchiveError::Version, "not a model archive");
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof ver);
  if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");
  if (ver != kArchiveVersion)
    throw ArchiveError(ArchiveError::Version,
                       "version mismatch: archive version " +
                           std::to_string(ver) + ", reader supports " +
                           std::to_string(kArchiveVersion));
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
  if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw ArchiveError(ArchiveError::Truncated, "truncated file");

  json meta;
  try {
    meta = json::parse(header);
  } catch (const json::exception& e) {
    throw ArchiveError(ArchiveError::Shape,
                       std::string("bad metadata header: ") + e.what());
  }

  LoadedModel lm;
  lm.model = model_from_meta(meta.at("model"), in);
  if (meta.at("has_lexical").get<bool>())
    lm.lexical = model_from_meta(meta.at("lexical"), in);
  return lm;
}

// ---------------------------------------------------------------------------
// Grammar JSON + random peaked grammars
// ---------------------------------------------------------------------------

void write_grammar_json(const RuleTables& tables, const Vocab& vocab,
                        const std::string& path) {
  if (vocab.size() != tables.vocab_size)
    throw std::invalid_argument("tables/vocab size mismatch");
  json j{{"format", "sodmv-grammar"},
         {"order", static_cast<int>(tables.order)},
         {"symbols", vocab.symbols},
         {"root", tables.root},
         {"child", tables.child},
         {"decision", tables.decision}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << "\n";
}

std::pair<RuleTables, Vocab> read_grammar_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad grammar file: ") + e.what());
  }
  Vocab v;
  v.symbols = j.at("symbols").get<std::vector<std::string>>();
  v.n_pos = static_cast<int>(v.symbols.size());
  for (size_t i = 0; i < v.symbols.size(); ++i)
    v.symbol_to_id[v.symbols[i]] = static_cast<int>(i);

  RuleTables t(static_cast<ModelOrder>(j.at("order").get<int>()), v.size());
  auto root = j.at("root").get<std::vector<double>>();
  auto child = j.at("child").get<std::vector<double>>();
  auto decision = j.at("decision").get<std::vector<double>>();
  if (root.size() != t.root.size() || child.size() != t.child.size() ||
      decision.size() != t.decision.size())
    throw std::runtime_error("grammar file table sizes inconsistent");
  t.root = std::move(root);
  t.child = std::move(child);
  t.decision = std::move(decision);
  auto rep = validate_rule_tables(t, 1e-6);
  if (!rep.ok)
    throw std::runtime_error("grammar file tables are not normalized");
  return {std::move(t), std::move(v)};
}

std::pair<RuleTables, Vocab> random_grammar(int n_tags, std::uint64_t seed,
                                            double sharpness,
                                            double stop_bias) {
  if (n_tags < 1) throw std::invalid_argument("need at least one tag");
  Vocab v;
  for (int i = 0; i < n_tags; ++i) {
    v.symbols.push_back("T" + std::to_string(i));
    v.symbol_to_id[v.symbols.back()] = i;
  }
  v.n_pos = n_tags;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill_softmax = [&](double* slot, int n, double stop_bias_at0) {
    std::vector<double> logit(n);
    for (int k = 0; k < n; ++k)
      logit[k] = sharpness * (gauss(rng) + (k == 0 ? stop_bias_at0 : 0.0));
    double z = log_sum_exp(logit);
    for (int k = 0; k < n; ++k) slot[k] = logit[k] - z;
  };

  RuleTables t(ModelOrder::First, n_tags);
  fill_softmax(t.root.data(), n_tags, 0.0);
  for (int p = 0; p < n_tags; ++p)
    for (int d = 0; d < 2; ++d)
      for (int val = 0; val < 2; ++val) {
        fill_softmax(&t.child[t.child_index(p, 0, d, val, 0)], n_tags, 0.0);
        // a STOP bias keeps expected sentence length finite and small
        fill_softmax(&t.decision[t.decision_index(p, 0, d, val, 0)], 2,
                     stop_bias);
      }
  return {std::move(t), std::move(v)};
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

PunctPolicy parse_punct(const std::string& s) {
  if (s == "include") return PunctPolicy::Include;
  if (s == "exclude") return PunctPolicy::Exclude;
  throw CLI::ValidationError("--punct", "must be include or exclude");
}

// Epoch log lines carry a wall-clock seconds field; drop it so CLI output
// stays byte-reproducible across runs.
std::string strip_seconds(const std::string& line) {
  size_t tab = line.rfind('\t');
  return tab == std::string::npos ? line : line.substr(0, tab);
}

std::vector<ParseTree> parse_corpus(const Corpus& corpus,
                                    const ScoringModel& sm) {
  std::vector<ParseTree> pred;
  pred.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences)
    pred.push_back(viterbi_parse(s, sm));
  return pred;
}

std::vector<ParseTree> parse_with_model(const Corpus& corpus,
                                        const NeuralModel& model,
                                        const NeuralModel* lexical) {
  RuleTables t = model.tables();
  RuleTables tl;
  ScoringModel sm;
  if (lexical) {
    tl = lexical->tables();
    sm.kind = ModelKind::Joint;
    sm.primary = &t;
    sm.lexical = &tl;
  } else {
    sm.kind = model.kind;
    sm.primary = &t;
    sm.primary_lexical = model.lexical_view;
  }
  return parse_corpus(corpus, sm);
}

bool corpus_has_gold(const Corpus& c) {
  if (c.sentences.empty()) return false;
  for (const Sentence& s : c.sentences)
    if (!s.has_gold()) return false;
  return true;
}

struct TrainArgs {
  std::string train_path, dev_path, warmup_path, out_path;
  std::string method = "dmo", model = "sibling", init = "km";
  bool lexicalized = false, no_skip = false, deep = false;
  int batch_size = 64, epochs = 50, patience = 5, restarts = 1;
  int max_train_len = 10, min_freq = 2, m_steps = 1, warmup_epochs = 10;
  double lr = 0.001;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  if (a.method == "em")
    cfg.method = TrainMethod::EM;
  else if (a.method == "dmo")
    cfg.method = TrainMethod::DMO;
  else if (a.method == "product-em")
    cfg.method = TrainMethod::ProductEM;
  else if (a.method == "joint-dmo")
    cfg.method = TrainMethod::JointDMO;
  else
    throw CLI::ValidationError("--method", "unknown method: " + a.method);

  bool joint_model = a.model == "joint";
  if (a.model == "dmv" || a.model == "ndmv")
    cfg.model_kind = ModelKind::First;
  else if (a.model == "sibling")
    cfg.model_kind = ModelKind::Sibling;
  else if (a.model == "grand")
    cfg.model_kind = ModelKind::Grand;
  else if (!joint_model)
    throw CLI::ValidationError("--model", "unknown model: " + a.model);

  bool joint_method = cfg.method == TrainMethod::ProductEM ||
                      cfg.method == TrainMethod::JointDMO;
  if (joint_model != joint_method)
    throw CLI::ValidationError(
        "--model", "model 'joint' goes with methods product-em/joint-dmo "
                   "and vice versa");

  if (a.init == "km")
    cfg.init = InitScheme::KM;
  else if (a.init == "uniform")
    cfg.init = InitScheme::Uniform;
  else if (a.init == "warmup")
    cfg.init = InitScheme::SupervisedWarmup;
  else
    throw CLI::ValidationError("--init", "unknown init: " + a.init);

  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.patience = a.patience;
  cfg.max_train_length = a.max_train_len;
  cfg.m_steps_per_e_step = a.m_steps;
  cfg.warmup_epochs = a.warmup_epochs;
  cfg.restarts = a.restarts;

  auto raw_train = read_conllu(a.train_path, std::nullopt, PosColumn::Upos);
  if (raw_train.empty()) throw std::runtime_error("empty training file");

  Corpus train_c, dev_c;
  Vocab lex_vocab;
  const Vocab* lexp = nullptr;
  if (joint_model) {
    auto [posc, lexc] = build_parallel_views(raw_train, a.min_freq);
    train_c = std::move(posc);
    lex_vocab = lexc.vocab;
    lexp = &lex_vocab;
    if (a.lexicalized) cfg.dims_lexical = DimConfig::lexicalized_defaults();
  } else if (a.lexicalized) {
    Vocab v = build_vocab(raw_train, VocabMode::Lexicalized, a.min_freq);
    train_c = make_corpus(raw_train, v);
    cfg.lexicalized = true;
    cfg.dims = DimConfig::lexicalized_defaults();
  } else {
    Vocab v = build_vocab(raw_train, VocabMode::Unlexicalized, 1);
    train_c = make_corpus(raw_train, v);
  }
  cfg.dims.use_skip = !a.no_skip;
  cfg.dims.deep_output = a.deep;
  cfg.dims_lexical.use_skip = !a.no_skip;
  cfg.dims_lexical.deep_output = a.deep;

  if (!a.dev_path.empty()) {
    auto raw_dev = read_conllu(a.dev_path, std::nullopt, PosColumn::Upos);
    dev_c = make_corpus(raw_dev, train_c.vocab);
    if (joint_model) {
      Corpus dev_lex = make_corpus(raw_dev, lex_vocab);
      for (size_t i = 0; i < dev_c.sentences.size(); ++i)
        dev_c.sentences[i].lex_ids = dev_lex.sentences[i].lex_ids;
    }
  } else {
    dev_c.vocab = train_c.vocab;   // no dev set: keep last epoch's model
  }

  Corpus warmup_c;
  const Corpus* warmup = nullptr;
  if (!a.warmup_path.empty()) {
    auto raw_w = read_conllu(a.warmup_path, std::nullopt, PosColumn::Upos);
    warmup_c = make_corpus(raw_w, train_c.vocab);
    warmup = &warmup_c;
  }

  const Corpus& uas_ref = dev_c.sentences.empty() ? train_c : dev_c;
  bool score_uas = corpus_has_gold(uas_ref);

  std::optional<TrainResult> best;
  double mean_uas = 0.0;
  for (int r = 0; r < a.restarts; ++r) {
    cfg.seed = a.seed + static_cast<std::uint64_t>(r);
    if (a.restarts > 1) std::printf("restart %d (seed %llu)\n", r,
        static_cast<unsigned long long>(cfg.seed));
    TrainResult res = train(train_c, dev_c, cfg, lexp, warmup);
    for (const std::string& line : res.log_lines)
      std::printf("%s\n", strip_seconds(line).c_str());
    if (score_uas) {
      auto pred = parse_with_model(
          uas_ref, res.model,
          res.lexical_model ? &*res.lexical_model : nullptr);
      auto rep = evaluate_uas(pred, uas_ref, PunctPolicy::Exclude);
      std::printf("restart %d uas %.4f\n", r, rep.uas);
      mean_uas += rep.uas;
    }
    if (!best || res.best_dev_ll > best->best_dev_ll) best = std::move(res);
  }
  if (score_uas && a.restarts > 1)
    std::printf("mean uas %.4f\n", mean_uas / a.restarts);

  save_model(best->model,
             best->lexical_model ? &*best->lexical_model : nullptr,
             a.out_path);
  return 0;
}

struct ParseArgs {
  std::string model_file, input, output;
};

int cmd_parse(const ParseArgs& a) {
  LoadedModel lm = load_model(a.model_file);
  auto raw = read_conllu(a.input, std::nullopt, PosColumn::Upos);
  Corpus c = make_corpus(raw, lm.model.vocab);
  if (lm.lexical) {
    Corpus cl = make_corpus(raw, lm.lexical->vocab);
    for (size_t i = 0; i < c.sentences.size(); ++i)
      c.sentences[i].lex_ids = cl.sentences[i].lex_ids;
  }
  auto pred = parse_with_model(c, lm.model,
                               lm.lexical ? &*lm.lexical : nullptr);
  std::ofstream out(a.output);
  if (!out) throw std::runtime_error("cannot open for writing: " + a.output);
  write_conllu(c, &pred, out);
  return 0;
}

struct EvalArgs {
  std::string pred, gold, punct = "exclude";
};

int cmd_eval(const EvalArgs& a) {
  PunctPolicy policy = parse_punct(a.punct);
  auto raw_pred = read_conllu(a.pred, std::nullopt, PosColumn::Upos);
  auto raw_gold = read_conllu(a.gold, std::nullopt, PosColumn::Upos);
  Vocab gv = build_vocab(raw_gold, VocabMode::Unlexicalized, 1);
  Corpus gold = make_corpus(raw_gold, gv);

  std::vector<ParseTree> pred;
  for (size_t i = 0; i < raw_pred.size(); ++i) {
    ParseTree t;
    for (const RawToken& tok : raw_pred[i].tokens) {
      if (tok.head < 0)
        throw std::runtime_error("prediction sentence " + std::to_string(i) +
                                 " is missing heads");
      t.heads.push_back(tok.head);
    }
    pred.push_back(std::move(t));
  }

  EvalReport rep = evaluate_uas(pred, gold, policy);
  std::printf("uas %.4f\n", rep.uas);
  for (const auto& bk : rep.buckets) {
    if (bk.max_len == 0)
      std::printf("all uas %.4f (%ld/%ld)\n", bk.uas, bk.correct, bk.scored);
    else
      std::printf("len<=%d uas %.4f (%ld/%ld)\n", bk.max_len, bk.uas,
                  bk.correct, bk.scored);
  }
  return 0;
}

struct GenerateArgs {
  std::string grammar, out, save_grammar;
  int random_tags = 0;
  double sharpness = 2.0;
  double stop_bias = 1.0;
  std::uint64_t grammar_seed = 1;
  int n = 0, max_len = 10;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.grammar.empty() && a.random_tags <= 0)
    throw CLI::ValidationError(
        "--grammar", "give either --grammar FILE or --random-tags N");
  auto [tables, vocab] =
      a.grammar.empty()
          ? random_grammar(a.random_tags, a.grammar_seed, a.sharpness,
                           a.stop_bias)
          : read_grammar_json(a.grammar);
  if (!a.save_grammar.empty())
    write_grammar_json(tables, vocab, a.save_grammar);

  Corpus c = generate_synthetic(tables, vocab, a.n, a.max_len, a.seed);
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot open for writing: " + a.out);
  write_conllu(c, nullptr, out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Dependency grammar induction: train, parse, eval, generate"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--train", ta.train_path, "training CoNLL-U file")
      ->required();
  tr->add_option("--dev", ta.dev_path, "development CoNLL-U file");
  tr->add_option("--method", ta.method, "em|dmo|product-em|joint-dmo");
  tr->add_option("--model", ta.model, "dmv|ndmv|sibling|grand|joint");
  tr->add_flag("--lexicalized", ta.lexicalized,
               "word/POS-pair symbols with rare-word POS backoff");
  tr->add_option("--init", ta.init, "km|uniform|warmup");
  tr->add_option("--warmup-trees", ta.warmup_path,
                 "CoNLL-U trees for supervised warm-up");
  tr->add_option("--batch-size", ta.batch_size, "mini-batch size");
  tr->add_option("--lr", ta.lr, "Adam learning rate");
  tr->add_option("--epochs", ta.epochs, "maximum training epochs");
  tr->add_option("--patience", ta.patience, "early-stopping patience");
  tr->add_option("--seed", ta.seed, "base random seed");
  tr->add_option("--restarts", ta.restarts, "number of random restarts");
  tr->add_option("--max-train-len", ta.max_train_len,
                 "drop longer training sentences");
  tr->add_option("--min-freq", ta.min_freq,
                 "lexical frequency cutoff (lexicalized/joint)");
  tr->add_option("--m-steps", ta.m_steps, "gradient steps per E-step (em)");
  tr->add_option("--warmup-epochs", ta.warmup_epochs,
                 "supervised warm-up epochs");
  tr->add_flag("--no-skip-connections", ta.no_skip,
               "disable MLP skip connections");
  tr->add_flag("--deep-mlp", ta.deep, "three-layer output MLP");
  tr->add_option("--out", ta.out_path, "output model file")->required();
  tr->callback([&] { cmd_train(ta); });

  ParseArgs pa;
  auto* pr = app.add_subcommand("parse", "parse with a trained model");
  pr->add_option("--model-file", pa.model_file, "model archive")->required();
  pr->add_option("--input", pa.input, "input CoNLL-U file")->required();
  pr->add_option("--output", pa.output, "output CoNLL-U with predicted heads")
      ->required();
  pr->callback([&] { cmd_parse(pa); });

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "score predictions against gold");
  ev->add_option("--pred", ea.pred, "predicted CoNLL-U file")->required();
  ev->add_option("--gold", ea.gold, "gold CoNLL-U file")->required();
  ev->add_option("--punct", ea.punct, "include|exclude (default exclude)");
  ev->callback([&] { cmd_eval(ea); });

  GenerateArgs ga;
  auto* ge = app.add_subcommand("generate", "sample a synthetic corpus");
  ge->add_option("--grammar", ga.grammar, "grammar JSON file");
  ge->add_option("--random-tags", ga.random_tags,
                 "draw a random grammar over N tags instead");
  ge->add_option("--sharpness", ga.sharpness,
                 "temperature sharpening for --random-tags");
  ge->add_option("--stop-bias", ga.stop_bias,
                 "STOP-logit bias for --random-tags (larger = shorter)");
  ge->add_option("--grammar-seed", ga.grammar_seed,
                 "seed for the random grammar");
  ge->add_option("--n", ga.n, "number of sentences")->required();
  ge->add_option("--max-len", ga.max_len, "maximum sentence length");
  ge->add_option("--seed", ga.seed, "sampling seed");
  ge->add_option("--out", ga.out, "output CoNLL-U file")->required();
  ge->add_option("--save-grammar", ga.save_grammar,
                 "write the grammar used as JSON");
  ge->callback([&] { cmd_generate(ga); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sodmv
