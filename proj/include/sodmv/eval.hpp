#ifndef SODMV_EVAL_HPP
#define SODMV_EVAL_HPP

#include "sodmv/training.hpp"

namespace sodmv {

enum class PunctPolicy : int { Include = 0, Exclude = 1 };

struct EvalReport {
  double uas = 0.0;
  long correct = 0;
  long scored = 0;
  PunctPolicy policy = PunctPolicy::Exclude;
  struct Bucket {
    int max_len = 0;   // 0 means "all"
    double uas = 0.0;
    long correct = 0;
    long scored = 0;
  };
  std::vector<Bucket> buckets;   // <=10, <=15, <=40, all
};

EvalReport evaluate_uas(const std::vector<ParseTree>& predicted,
                        const Corpus& gold, PunctPolicy policy);

// Model archive errors carry a distinct code per failure mode.
struct ArchiveError : std::runtime_error {
  enum Code { Version = 1, Truncated = 2, Shape = 3 };
  Code code;
  ArchiveError(Code c, const std::string& msg)
      : std::runtime_error(msg), code(c) {}
};

// Versioned binary container: magic, format version, JSON metadata header,
// then raw 64-bit parameter payload (bit-exact round trip).
void save_model(const NeuralModel& model, const NeuralModel* lexical,
                const std::string& path);

struct LoadedModel {
  NeuralModel model;
  std::optional<NeuralModel> lexical;
};
LoadedModel load_model(const std::string& path);

// Explicit rule tables as JSON (grammars for the synthetic generator).
void write_grammar_json(const RuleTables& tables, const Vocab& vocab,
                        const std::string& path);
std::pair<RuleTables, Vocab> read_grammar_json(const std::string& path);

// Temperature-sharpened random grammar over V tags. stop_bias shifts the
// STOP logit before sharpening; larger values give shorter sentences.
std::pair<RuleTables, Vocab> random_grammar(int n_tags, std::uint64_t seed,
                                            double sharpness,
                                            double stop_bias = 1.0);

int run_cli(int argc, const char* const* argv);

}  // namespace sodmv

#endif
