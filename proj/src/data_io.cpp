#include "sodmv/data_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace sodmv {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

std::vector<RawSentence> read_conllu(const std::string& path,
                                     std::optional<int> max_len,
                                     PosColumn pos_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<RawSentence> out;
  RawSentence cur;
  auto flush = [&]() {
    if (cur.size() == 0) return;
    if (!max_len || cur.size() <= *max_len) out.push_back(cur);
    cur = RawSentence();
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw std::runtime_error("malformed line " + std::to_string(lineno) +
                               ": expected 10 columns, got " +
                               std::to_string(cols.size()));
    const std::string& id = cols[0];
    if (id.find('-') != std::string::npos ||
        id.find('.') != std::string::npos)
      continue;  // multiword range / empty node

    RawToken tok;
    tok.form = cols[1];
    tok.pos = pos_column == PosColumn::Upos ? cols[3] : cols[4];
    if (cols[6] == "_") {
      tok.head = -1;
    } else {
      try {
        size_t pos = 0;
        tok.head = std::stoi(cols[6], &pos);
        if (pos != cols[6].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": HEAD is not an integer: " + cols[6]);
      }
    }
    tok.punct = cols[3] == "PUNCT";
    cur.tokens.push_back(tok);
  }
  flush();
  return out;
}

Corpus make_corpus(const std::vector<RawSentence>& raw, const Vocab& vocab) {
  Corpus c;
  c.vocab = vocab;
  for (const auto& rs : raw) {
    Sentence s;
    bool any_gold = false;
    for (const auto& t : rs.tokens) {
      if (vocab.mode == VocabMode::Unlexicalized) {
        int id = vocab.id_of(t.pos);
        if (id < 0) throw std::runtime_error("unknown symbol: " + t.pos);
        s.pos_ids.push_back(id);
      } else {
        int id = vocab.id_of(t.form + "/" + t.pos);
        if (id < 0) id = vocab.id_of(t.pos);
        if (id < 0) throw std::runtime_error("unknown symbol: " + t.pos);
        s.lex_ids.push_back(id);
        s.pos_ids.push_back(vocab.sym_pos[id]);
      }
      s.forms.push_back(t.form);
      s.pos_tags.push_back(t.pos);
      s.is_punct.push_back(t.punct);
      if (t.head >= 0) any_gold = true;
    }
    if (any_gold)
      for (const auto& t : rs.tokens) s.gold_heads.push_back(t.head);
    c.sentences.push_back(std::move(s));
  }
  return c;
}

std::pair<Corpus, Corpus> build_parallel_views(
    const std::vector<RawSentence>& raw, int min_freq) {
  Vocab posv = build_vocab(raw, VocabMode::Unlexicalized, 1);
  Vocab lexv = build_vocab(raw, VocabMode::Lexicalized, min_freq);
  Corpus pos_corpus = make_corpus(raw, posv);
  Corpus lex_corpus = make_corpus(raw, lexv);
  for (size_t i = 0; i < raw.size(); ++i)
    pos_corpus.sentences[i].lex_ids = lex_corpus.sentences[i].lex_ids;
  return {std::move(pos_corpus), std::move(lex_corpus)};
}

namespace {

struct SampleNode {
  int tok = -1;
  // children in generation order (outside-in: farthest first)
  std::vector<SampleNode> gen[2];
};

struct Sampler {
  const RuleTables& t;
  std::mt19937_64& rng;
  int max_len;
  double logp = 0.0;
  int count = 0;
  bool overflow = false;

  int draw(const std::vector<double>& tbl, size_t base, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng), acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += std::exp(tbl[base + k]);
      if (x < acc) {
        logp += tbl[base + k];
        return k;
      }
    }
    logp += tbl[base + n - 1];
    return n - 1;  // numerical tail
  }

  void gen_node(SampleNode* node, int grand_extra) {
    if (overflow) return;
    for (int d = 0; d < 2; ++d) {
      int prev = -1;  // token id of previously generated (outer) child
      while (true) {
        int val = prev < 0 ? kNoChild : kHasChild;
        int extra = 0;
        if (t.order == ModelOrder::SecondSibling)
          extra = prev < 0 ? kNullExtra : prev + 1;
        else if (t.order == ModelOrder::SecondGrand)
          extra = grand_extra;
        int a = draw(t.decision, t.decision_index(node->tok, extra, d, val, 0),
                     2);
        if (a == kStop) break;
        int c = draw(t.child, t.child_index(node->tok, extra, d, val, 0),
                     t.vocab_size);
        if (++count > max_len) {
          overflow = true;
          return;
        }
        SampleNode child;
        child.tok = c;
        node->gen[d].push_back(std::move(child));
        gen_node(&node->gen[d].back(), node->tok + 1);
        if (overflow) return;
        prev = c;
      }
    }
  }
};

// placement: compute subtree widths, then assign linear positions
int width(const SampleNode& n) {
  int w = 1;
  for (int d = 0; d < 2; ++d)
    for (const auto& c : n.gen[d]) w += width(c);
  return w;
}

void assign(const SampleNode& n, int lo, int head_pos, std::vector<int>* toks,
            std::vector<int>* heads) {
  // left children occupy [lo, pos-1] in generation order (leftmost first)
  int cur = lo;
  std::vector<const SampleNode*> left;
  for (const auto& c : n.gen[kLeft]) left.push_back(&c);
  int pos = lo;
  for (const SampleNode* c : left) pos += width(*c);
  (*toks)[pos - 1] = n.tok;
  (*heads)[pos - 1] = head_pos;
  for (const SampleNode* c : left) {
    assign(*c, cur, pos, toks, heads);
    cur += width(*c);
  }
  std::vector<const SampleNode*> right;
  for (const auto& c : n.gen[kRight]) right.push_back(&c);
  std::reverse(right.begin(), right.end());  // generation order is outermost-first
  cur = pos + 1;
  for (const SampleNode* c : right) {
    assign(*c, cur, pos, toks, heads);
    cur += width(*c);
  }
}

}  // namespace

Corpus generate_synthetic(const RuleTables& tables, const Vocab& vocab,
                          int n_sentences, int max_len, std::uint64_t seed,
                          std::vector<double>* logps) {
  if (tables.vocab_size != vocab.size())
    throw std::invalid_argument("tables/vocab size mismatch");
  if (max_len < 1 || n_sentences < 0)
    throw std::invalid_argument("bad generation parameters");

  std::mt19937_64 rng(seed);
  Corpus c;
  c.vocab = vocab;
  c.provenance = "synthetic seed " + std::to_string(seed);
  if (logps) logps->clear();

  long attempts = 0, accepted = 0;
  while (accepted < n_sentences) {
    ++attempts;
    if (attempts % 1000 == 0 && accepted * 100 < attempts)
      throw std::runtime_error("grammar too verbose");

    Sampler smp{tables, rng, max_len};
    SampleNode root;
    root.tok = smp.draw(tables.root, 0, tables.vocab_size);
    smp.count = 1;
    smp.gen_node(&root, kNullExtra);
    if (smp.overflow) continue;

    int n = width(root);
    std::vector<int> toks(n), heads(n);
    assign(root, 1, 0, &toks, &heads);

    Sentence s;
    s.pos_ids = toks;
    s.lex_ids = toks;   // synthetic corpora use words = tags
    s.gold_heads = heads;
    for (int tok : toks) {
      s.forms.push_back(vocab.symbols[tok]);
      s.pos_tags.push_back(vocab.symbols[tok]);
      s.is_punct.push_back(false);
    }
    c.sentences.push_back(std::move(s));
    if (logps) logps->push_back(smp.logp);
    ++accepted;
  }
  return c;
}

void write_conllu(const Corpus& corpus, const std::vector<ParseTree>* pred,
                  std::ostream& out) {
  if (pred && pred->size() != corpus.sentences.size())
    throw std::invalid_argument("prediction/corpus length mismatch");
  for (size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& s = corpus.sentences[si];
    for (int i = 0; i < s.size(); ++i) {
      int head = -1;
      if (pred)
        head = (*pred)[si].heads[i];
      else if (s.has_gold())
        head = s.gold_heads[i];
      out << (i + 1) << '\t' << s.forms[i] << "\t_\t" << s.pos_tags[i]
          << "\t_\t_\t";
      if (head < 0)
        out << '_';
      else
        out << head;
      out << "\t_\t_\t_\n";
    }
    out << '\n';
  }
}

}  // namespace sodmv
