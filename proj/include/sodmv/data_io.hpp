#ifndef SODMV_DATA_IO_HPP
#define SODMV_DATA_IO_HPP

#include <iosfwd>
#include <optional>

#include "sodmv/chart.hpp"
#include "sodmv/grammar.hpp"

namespace sodmv {

enum class PosColumn : int { Upos = 0, Xpos = 1 };

// Parses 10-column CoNLL-U. Comment lines, multiword ranges ("3-4") and
// empty nodes ("3.1") are skipped; sentences longer than max_len dropped.
std::vector<RawSentence> read_conllu(const std::string& path,
                                     std::optional<int> max_len,
                                     PosColumn pos_column);

// Maps raw sentences onto a vocabulary. Lexicalized vocabs fall back to the
// bare POS symbol for unknown word/POS pairs; a symbol absent from the vocab
// altogether is an error.
Corpus make_corpus(const std::vector<RawSentence>& raw, const Vocab& vocab);

// Two aligned corpora over the same sentences: POS-tag ids and
// word/POS-pair ids (frequency cutoff with POS fallback). Every sentence in
// both corpora carries pos_ids and lex_ids so joint training can use either.
std::pair<Corpus, Corpus> build_parallel_views(
    const std::vector<RawSentence>& raw, int min_freq);

// Samples (sentence, tree) pairs by executing the generative story
// (outside-in child order). Sentences longer than max_len are rejected;
// persistent rejection raises "grammar too verbose". If logps is given it
// receives each kept sample's accumulated log-probability.
Corpus generate_synthetic(const RuleTables& tables, const Vocab& vocab,
                          int n_sentences, int max_len, std::uint64_t seed,
                          std::vector<double>* logps = nullptr);

// CoNLL-U output; heads come from `pred` when given, else gold heads.
void write_conllu(const Corpus& corpus, const std::vector<ParseTree>* pred,
                  std::ostream& out);

}  // namespace sodmv

#endif
