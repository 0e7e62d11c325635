#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "sodmv/data_io.hpp"
#include "sodmv/eval.hpp"
#include "sodmv/training.hpp"

namespace py = pybind11;
using namespace sodmv;

namespace {

// tables + the vocabulary they are indexed by
struct Grammar {
  RuleTables tables;
  Vocab vocab;
};

std::vector<ParseTree> parse_all(const Corpus& corpus, const NeuralModel& m,
                                 const NeuralModel* lex) {
  RuleTables t = m.tables();
  RuleTables tl;
  ScoringModel sm;
  if (lex) {
    tl = lex->tables();
    sm.kind = ModelKind::Joint;
    sm.primary = &t;
    sm.lexical = &tl;
  } else {
    sm.kind = m.kind;
    sm.primary = &t;
    sm.primary_lexical = m.lexical_view;
  }
  std::vector<ParseTree> out;
  out.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences)
    out.push_back(viterbi_parse(s, sm));
  return out;
}

PunctPolicy punct_from_string(const std::string& s) {
  if (s == "include") return PunctPolicy::Include;
  if (s == "exclude") return PunctPolicy::Exclude;
  throw std::invalid_argument("punct must be 'include' or 'exclude'");
}

}  // namespace

PYBIND11_MODULE(_sodmv, m) {
  m.doc() = "Dependency grammar induction: chart algorithms, neural DMV "
            "training, evaluation";

  py::class_<Vocab>(m, "Vocab")
      .def_readonly("symbols", &Vocab::symbols)
      .def_readonly("n_pos", &Vocab::n_pos)
      .def("__len__", &Vocab::size);

  py::class_<Sentence>(m, "Sentence")
      .def_readonly("pos_ids", &Sentence::pos_ids)
      .def_readonly("gold_heads", &Sentence::gold_heads)
      .def_readonly("forms", &Sentence::forms)
      .def_readonly("pos_tags", &Sentence::pos_tags)
      .def("__len__", &Sentence::size);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("sentences", &Corpus::sentences)
      .def_readonly("vocab", &Corpus::vocab)
      .def("__len__",
           [](const Corpus& c) { return c.sentences.size(); });

  py::class_<Grammar>(m, "Grammar")
      .def_property_readonly("vocab",
                             [](const Grammar& g) { return g.vocab; });

  py::class_<ParseTree>(m, "ParseTree")
      .def(py::init([](std::vector<int> heads) {
             ParseTree t;
             t.heads = std::move(heads);
             return t;
           }),
           py::arg("heads"))
      .def_readonly("heads", &ParseTree::heads)
      .def_readonly("log_score", &ParseTree::log_score);

  py::class_<NeuralModel>(m, "Model")
      .def_property_readonly(
          "kind", [](const NeuralModel& m_) { return static_cast<int>(m_.kind); })
      .def_property_readonly("vocab",
                             [](const NeuralModel& m_) { return m_.vocab; });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("max_epochs", &TrainConfig::max_epochs)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("max_train_length", &TrainConfig::max_train_length)
      .def_property(
          "method",
          [](const TrainConfig& c) {
            switch (c.method) {
              case TrainMethod::EM: return "em";
              case TrainMethod::DMO: return "dmo";
              case TrainMethod::ProductEM: return "product-em";
              case TrainMethod::JointDMO: return "joint-dmo";
            }
            return "dmo";
          },
          [](TrainConfig& c, const std::string& s) {
            if (s == "em") c.method = TrainMethod::EM;
            else if (s == "dmo") c.method = TrainMethod::DMO;
            else if (s == "product-em") c.method = TrainMethod::ProductEM;
            else if (s == "joint-dmo") c.method = TrainMethod::JointDMO;
            else throw std::invalid_argument("unknown method: " + s);
          })
      .def_property(
          "model",
          [](const TrainConfig& c) {
            switch (c.model_kind) {
              case ModelKind::First: return "first";
              case ModelKind::Sibling: return "sibling";
              case ModelKind::Grand: return "grand";
              case ModelKind::Joint: return "joint";
            }
            return "sibling";
          },
          [](TrainConfig& c, const std::string& s) {
            if (s == "first" || s == "dmv" || s == "ndmv")
              c.model_kind = ModelKind::First;
            else if (s == "sibling") c.model_kind = ModelKind::Sibling;
            else if (s == "grand") c.model_kind = ModelKind::Grand;
            else throw std::invalid_argument("unknown model: " + s);
          })
      .def_property(
          "init",
          [](const TrainConfig& c) {
            switch (c.init) {
              case InitScheme::KM: return "km";
              case InitScheme::Uniform: return "uniform";
              case InitScheme::SupervisedWarmup: return "warmup";
            }
            return "km";
          },
          [](TrainConfig& c, const std::string& s) {
            if (s == "km") c.init = InitScheme::KM;
            else if (s == "uniform") c.init = InitScheme::Uniform;
            else if (s == "warmup") c.init = InitScheme::SupervisedWarmup;
            else throw std::invalid_argument("unknown init: " + s);
          });

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("log_lines", &TrainResult::log_lines)
      .def_readonly("best_dev_ll", &TrainResult::best_dev_ll)
      .def_readonly("best_epoch", &TrainResult::best_epoch);

  m.def(
      "random_grammar",
      [](int n_tags, std::uint64_t seed, double sharpness) {
        auto [t, v] = random_grammar(n_tags, seed, sharpness);
        return Grammar{std::move(t), std::move(v)};
      },
      py::arg("n_tags"), py::arg("seed") = 1, py::arg("sharpness") = 2.0,
      "Temperature-sharpened random first-order grammar");

  m.def(
      "generate",
      [](const Grammar& g, int n, int max_len, std::uint64_t seed) {
        return generate_synthetic(g.tables, g.vocab, n, max_len, seed);
      },
      py::arg("grammar"), py::arg("n"), py::arg("max_len") = 10,
      py::arg("seed") = 0, "Sample a synthetic corpus with gold trees");

  m.def(
      "read_corpus",
      [](const std::string& path, std::optional<int> max_len) {
        auto raw = read_conllu(path, max_len, PosColumn::Upos);
        Vocab v = build_vocab(raw, VocabMode::Unlexicalized, 1);
        return make_corpus(raw, v);
      },
      py::arg("path"), py::arg("max_len") = std::nullopt,
      "Read a CoNLL-U file over a POS-tag vocabulary");

  m.def(
      "write_corpus",
      [](const Corpus& c, const std::string& path,
         const std::optional<std::vector<ParseTree>>& pred) {
        std::ofstream out(path);
        if (!out)
          throw std::runtime_error("cannot open for writing: " + path);
        write_conllu(c, pred ? &*pred : nullptr, out);
      },
      py::arg("corpus"), py::arg("path"), py::arg("pred") = std::nullopt);

  m.def("train",
        [](const Corpus& train_c, const Corpus& dev_c, const TrainConfig& cfg) {
          return train(train_c, dev_c, cfg);
        },
        py::arg("train"), py::arg("dev"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  m.def(
      "parse",
      [](const NeuralModel& model, const Corpus& corpus) {
        return parse_all(corpus, model, nullptr);
      },
      py::arg("model"), py::arg("corpus"),
      "Viterbi-parse every sentence of the corpus");

  m.def(
      "uas",
      [](const std::vector<ParseTree>& pred, const Corpus& gold,
         const std::string& punct) {
        return evaluate_uas(pred, gold, punct_from_string(punct)).uas;
      },
      py::arg("pred"), py::arg("gold"), py::arg("punct") = "exclude");

  m.def(
      "save_model",
      [](const NeuralModel& model, const std::string& path) {
        save_model(model, nullptr, path);
      },
      py::arg("model"), py::arg("path"));

  m.def(
      "load_model",
      [](const std::string& path) { return load_model(path).model; },
      py::arg("path"));

  m.def(
      "sentence_logprob",
      [](const NeuralModel& model, const Sentence& s) {
        RuleTables t = model.tables();
        ScoringModel sm{model.kind, &t, model.lexical_view, nullptr};
        return inside(s, sm);
      },
      py::arg("model"), py::arg("sentence"),
      "Log marginal probability of a sentence under the model");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv = {"sodmv"};
        for (const auto& a : args) argv.push_back(a.c_str());
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Invoke the command-line interface in-process");
}
