#include "sodmv/neural.hpp"

#include <fstream>
#include <sstream>

namespace sodmv {

namespace {

inline Mat relu(const Mat& m) { return m.cwiseMax(0.0); }

// mask of strictly positive entries (post-ReLU output doubles as the mask)
inline Mat pos_mask(const Mat& m) {
  return (m.array() > 0.0).cast<double>().matrix();
}

void run_stack(const NeuralParams& p, const Mat& E, int dir, int val,
               StackTape* t) {
  const bool skip = p.dims.use_skip;
  t->E = E;
  Mat A = p.W_val[val] * E;
  if (skip) A += E;
  t->A1 = relu(A);
  t->B1 = relu(p.W1 * t->A1);
  t->T = p.W_dir[dir] * t->B1;
  if (skip) t->T += E;
  t->U1 = relu(p.W2 * t->T);
  t->Dv = p.W3 * t->U1;
  if (!p.dims.deep_output) {
    t->H = relu(p.W4 * t->Dv);
  } else {
    Mat P1 = p.W4 * t->Dv;
    if (skip) P1 += E;
    t->R1 = relu(P1);
    t->R2 = relu(p.W5 * t->R1);
    t->H = relu(p.W6 * t->R2);
  }
}

// Accumulates weight gradients into g and returns dE.
Mat back_stack(const NeuralParams& p, const StackTape& t, int dir, int val,
               const Mat& dH, ParamGradients* g) {
  const bool skip = p.dims.use_skip;
  Mat dE = Mat::Zero(t.E.rows(), t.E.cols());
  Mat dDv;
  if (!p.dims.deep_output) {
    Mat dP = dH.cwiseProduct(pos_mask(t.H));
    g->W4 += dP * t.Dv.transpose();
    dDv = p.W4.transpose() * dP;
  } else {
    Mat dP3 = dH.cwiseProduct(pos_mask(t.H));
    g->W6 += dP3 * t.R2.transpose();
    Mat dR2 = p.W6.transpose() * dP3;
    Mat dP2 = dR2.cwiseProduct(pos_mask(t.R2));
    g->W5 += dP2 * t.R1.transpose();
    Mat dR1 = p.W5.transpose() * dP2;
    Mat dP1 = dR1.cwiseProduct(pos_mask(t.R1));
    g->W4 += dP1 * t.Dv.transpose();
    dDv = p.W4.transpose() * dP1;
    if (skip) dE += dP1;
  }
  g->W3 += dDv * t.U1.transpose();
  Mat dU1 = p.W3.transpose() * dDv;
  Mat dU = dU1.cwiseProduct(pos_mask(t.U1));
  g->W2 += dU * t.T.transpose();
  Mat dT = p.W2.transpose() * dU;
  g->W_dir[dir] += dT * t.B1.transpose();
  Mat dB1 = p.W_dir[dir].transpose() * dT;
  if (skip) dE += dT;
  Mat dBpre = dB1.cwiseProduct(pos_mask(t.B1));
  g->W1 += dBpre * t.A1.transpose();
  Mat dA1 = p.W1.transpose() * dBpre;
  Mat dA = dA1.cwiseProduct(pos_mask(t.A1));
  g->W_val[val] += dA * t.E.transpose();
  dE += p.W_val[val].transpose() * dA;
  if (skip) dE += dA;
  return dE;
}

// log-softmax rows of a raw-score matrix in place
void log_softmax_rows(Mat* s) {
  for (int r = 0; r < s->rows(); ++r) {
    double m = s->row(r).maxCoeff();
    double z = (s->row(r).array() - m).exp().sum();
    s->row(r).array() -= m + std::log(z);
  }
}

}  // namespace

NeuralParams zeros_like(const NeuralParams& p) {
  NeuralParams z = p;
  visit_params(z, [](Mat& m) { m.setZero(); });
  return z;
}

NeuralParams init_params(std::uint64_t seed, const DimConfig& dims,
                         const Vocab& vocab) {
  const int V = vocab.size();
  if (V <= 0) throw std::invalid_argument("empty vocab");
  const int in = dims.input_dim();
  const int d = dims.d_hidden;
  const int qc = dims.q_child;
  const int qd = dims.q_decision;

  NeuralParams p;
  p.dims = dims;
  if (dims.lexicalized) {
    if (static_cast<int>(vocab.sym_pos.size()) != V || vocab.n_pos <= 0)
      throw std::invalid_argument("lexicalized vocab lacks POS mapping");
    p.tok_emb.resize(dims.d_word, V);
    p.pos_emb.resize(dims.d_emb, vocab.n_pos);
  } else {
    p.tok_emb.resize(dims.d_emb, V);
    p.pos_emb.resize(0, 0);
  }
  p.null_emb.resize(in, 1);
  p.dec_emb.resize(in, 2);
  p.root_emb.resize(in, 1);
  for (Mat* w : {&p.W_parent, &p.W_child, &p.W_extra, &p.W_dec, &p.W_root})
    w->resize(d, in);
  for (Mat* w : {&p.W_val[0], &p.W_val[1], &p.W1, &p.W_dir[0], &p.W_dir[1],
                 &p.W2, &p.W3, &p.W4, &p.W5, &p.W6})
    w->resize(d, d);
  p.const_slot.resize(d, 1);
  for (Mat* w : {&p.tri_child.parent, &p.tri_child.extra, &p.tri_child.child,
                 &p.tri_root.parent, &p.tri_root.extra, &p.tri_root.child})
    w->resize(qc, d);
  for (Mat* w : {&p.tri_dec.parent, &p.tri_dec.extra, &p.tri_dec.child})
    w->resize(qd, d);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  visit_params(p, [&](Mat& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  });
  return p;
}

ForwardResult forward_tables(const NeuralParams& params, const Vocab& vocab,
                             ModelOrder order, bool train_mode,
                             std::mt19937_64& rng) {
  const NeuralParams& p = params;
  const int V = vocab.size();
  const bool second = order != ModelOrder::First;
  if (p.dims.lexicalized && static_cast<int>(vocab.sym_pos.size()) != V)
    throw std::invalid_argument("lexicalized vocab lacks POS mapping");

  ForwardResult out;
  Tape& t = out.tape;
  t.order = order;
  t.vocab_size = V;
  t.train_mode = train_mode;

  // token embedding matrix
  Mat Xraw(p.dims.input_dim(), V);
  if (p.dims.lexicalized) {
    t.sym_pos = vocab.sym_pos;
    for (int s = 0; s < V; ++s) {
      Xraw.col(s).head(p.dims.d_emb) = p.pos_emb.col(vocab.sym_pos[s]);
      Xraw.col(s).tail(p.dims.d_word) = p.tok_emb.col(s);
    }
  } else {
    Xraw = p.tok_emb;
  }
  if (train_mode && p.dims.dropout > 0.0) {
    std::bernoulli_distribution keep(1.0 - p.dims.dropout);
    t.drop_mask.resize(Xraw.rows(), Xraw.cols());
    double scale = 1.0 / (1.0 - p.dims.dropout);
    for (Eigen::Index j = 0; j < Xraw.cols(); ++j)
      for (Eigen::Index i = 0; i < Xraw.rows(); ++i)
        t.drop_mask(i, j) = keep(rng) ? scale : 0.0;
    t.X = Xraw.cwiseProduct(t.drop_mask);
  } else {
    t.X = Xraw;
  }
  if (second) {
    t.Xext.resize(t.X.rows(), V + 1);
    t.Xext.col(0) = p.null_emb;
    t.Xext.rightCols(V) = t.X;
  }

  Mat Ep = p.W_parent * t.X;
  Mat Ec = p.W_child * t.X;
  Mat Ee = second ? Mat(p.W_extra * t.Xext) : Mat();
  t.Edec_raw = p.W_dec * p.dec_emb;
  t.Eroot_raw = p.W_root * p.root_emb;

  RuleTables tables(order, V);
  const int E = tables.extra_size;

  for (int d = 0; d < 2; ++d)
    for (int v = 0; v < 2; ++v) {
      run_stack(p, Ep, d, v, &t.st_parent[d][v]);
      run_stack(p, Ec, d, v, &t.st_child[d][v]);
      if (second) run_stack(p, Ee, d, v, &t.st_extra[d][v]);
      run_stack(p, t.Edec_raw, d, v, &t.st_dec[d][v]);

      t.Op[d][v] = p.tri_child.parent * t.st_parent[d][v].H;
      t.Oc[d][v] = p.tri_child.child * t.st_child[d][v].H;
      t.Oe[d][v] = second ? Mat(p.tri_child.extra * t.st_extra[d][v].H)
                          : Mat(p.tri_child.extra * p.const_slot);
      t.Dp[d][v] = p.tri_dec.parent * t.st_parent[d][v].H;
      t.De[d][v] = second ? Mat(p.tri_dec.extra * t.st_extra[d][v].H)
                          : Mat(p.tri_dec.extra * p.const_slot);
      t.Dd[d][v] = p.tri_dec.child * t.st_dec[d][v].H;

      for (int e = 0; e < E; ++e) {
        // child rules: rows of S are parents, columns candidate children
        Mat Ope = (t.Op[d][v].array().colwise() * t.Oe[d][v].col(e).array()).matrix();
        Mat S = Ope.transpose() * t.Oc[d][v];
        log_softmax_rows(&S);
        for (int par = 0; par < V; ++par)
          for (int c = 0; c < V; ++c)
            tables.child_at(par, e, d, v, c) = S(par, c);

        Mat Dpe = (t.Dp[d][v].array().colwise() * t.De[d][v].col(e).array()).matrix();
        Mat Sd = Dpe.transpose() * t.Dd[d][v];
        log_softmax_rows(&Sd);
        for (int par = 0; par < V; ++par)
          for (int a = 0; a < 2; ++a)
            tables.decision_at(par, e, d, v, a) = Sd(par, a);
      }
    }

  // root rule: parent slot from the root embedding, extra slot from the
  // learned constant, child slot shared with the (right, no-child) child run
  run_stack(p, t.Eroot_raw, kRight, kNoChild, &t.st_root);
  t.Rp = p.tri_root.parent * t.st_root.H;
  t.Re = p.tri_root.extra * p.const_slot;
  t.Rc = p.tri_root.child * t.st_child[kRight][kNoChild].H;
  {
    Mat s = (t.Rp.cwiseProduct(t.Re)).transpose() * t.Rc;   // 1 x V
    log_softmax_rows(&s);
    for (int c = 0; c < V; ++c) tables.root[c] = s(0, c);
  }

  t.tables = tables;
  out.tables = std::move(tables);
  return out;
}

ParamGradients backward_params(const NeuralParams& params, const Tape& t,
                               const ExpectedCounts& grad) {
  const NeuralParams& p = params;
  const int V = t.vocab_size;
  const bool second = t.order != ModelOrder::First;
  const int E = t.tables.extra_size;
  if (grad.vocab_size != V || grad.extra_size != E)
    throw std::invalid_argument("gradient shape mismatch");

  ParamGradients g = zeros_like(p);
  const int d_h = p.dims.d_hidden;

  Mat dHp[2][2], dHc[2][2], dHe[2][2], dHdec[2][2];
  Mat dConst = Mat::Zero(d_h, 1);

  for (int d = 0; d < 2; ++d)
    for (int v = 0; v < 2; ++v) {
      dHp[d][v] = Mat::Zero(d_h, V);
      dHc[d][v] = Mat::Zero(d_h, V);
      if (second) dHe[d][v] = Mat::Zero(d_h, V + 1);
      dHdec[d][v] = Mat::Zero(d_h, 2);

      Mat dOp = Mat::Zero(t.Op[d][v].rows(), V);
      Mat dOc = Mat::Zero(t.Oc[d][v].rows(), V);
      Mat dOe = Mat::Zero(t.Oe[d][v].rows(), t.Oe[d][v].cols());
      Mat dDp = Mat::Zero(t.Dp[d][v].rows(), V);
      Mat dDd = Mat::Zero(t.Dd[d][v].rows(), 2);
      Mat dDe = Mat::Zero(t.De[d][v].rows(), t.De[d][v].cols());

      for (int e = 0; e < E; ++e) {
        // softmax backward: dS = g - p * rowsum(g), rows indexed by parent
        Mat dS(V, V);
        for (int par = 0; par < V; ++par) {
          size_t base = t.tables.child_index(par, e, d, v, 0);
          double G = 0;
          for (int c = 0; c < V; ++c) G += grad.child[base + c];
          for (int c = 0; c < V; ++c)
            dS(par, c) = grad.child[base + c] -
                         std::exp(t.tables.child[base + c]) * G;
        }
        Mat Ope = (t.Op[d][v].array().colwise() * t.Oe[d][v].col(e).array()).matrix();
        dOc += Ope * dS;
        Mat M = t.Oc[d][v] * dS.transpose();   // col par = sum_c dS(par,c) Oc(:,c)
        dOp += (M.array().colwise() * t.Oe[d][v].col(e).array()).matrix();
        dOe.col(e) +=
            (t.Op[d][v].array() * M.array()).rowwise().sum().matrix();

        Mat dSd(V, 2);
        for (int par = 0; par < V; ++par) {
          size_t base = t.tables.decision_index(par, e, d, v, 0);
          double G = grad.decision[base] + grad.decision[base + 1];
          for (int a = 0; a < 2; ++a)
            dSd(par, a) = grad.decision[base + a] -
                          std::exp(t.tables.decision[base + a]) * G;
        }
        Mat Dpe = (t.Dp[d][v].array().colwise() * t.De[d][v].col(e).array()).matrix();
        dDd += Dpe * dSd;
        Mat Md = t.Dd[d][v] * dSd.transpose();
        dDp += (Md.array().colwise() * t.De[d][v].col(e).array()).matrix();
        dDe.col(e) +=
            (t.Dp[d][v].array() * Md.array()).rowwise().sum().matrix();
      }

      g.tri_child.parent += dOp * t.st_parent[d][v].H.transpose();
      dHp[d][v] += p.tri_child.parent.transpose() * dOp;
      g.tri_child.child += dOc * t.st_child[d][v].H.transpose();
      dHc[d][v] += p.tri_child.child.transpose() * dOc;
      g.tri_dec.parent += dDp * t.st_parent[d][v].H.transpose();
      dHp[d][v] += p.tri_dec.parent.transpose() * dDp;
      g.tri_dec.child += dDd * t.st_dec[d][v].H.transpose();
      dHdec[d][v] += p.tri_dec.child.transpose() * dDd;
      if (second) {
        g.tri_child.extra += dOe * t.st_extra[d][v].H.transpose();
        dHe[d][v] += p.tri_child.extra.transpose() * dOe;
        g.tri_dec.extra += dDe * t.st_extra[d][v].H.transpose();
        dHe[d][v] += p.tri_dec.extra.transpose() * dDe;
      } else {
        g.tri_child.extra += dOe * p.const_slot.transpose();
        dConst += p.tri_child.extra.transpose() * dOe;
        g.tri_dec.extra += dDe * p.const_slot.transpose();
        dConst += p.tri_dec.extra.transpose() * dDe;
      }
    }

  // root rule
  Mat dHroot;
  {
    Mat dS(1, V);
    double G = 0;
    for (int c = 0; c < V; ++c) G += grad.root[c];
    for (int c = 0; c < V; ++c)
      dS(0, c) = grad.root[c] - std::exp(t.tables.root[c]) * G;
    Mat w = t.Rp.cwiseProduct(t.Re);
    Mat dRc = w * dS;
    Mat m = t.Rc * dS.transpose();   // q x 1
    Mat dRp = t.Re.cwiseProduct(m);
    Mat dRe = t.Rp.cwiseProduct(m);
    g.tri_root.child += dRc * t.st_child[kRight][kNoChild].H.transpose();
    dHc[kRight][kNoChild] += p.tri_root.child.transpose() * dRc;
    g.tri_root.parent += dRp * t.st_root.H.transpose();
    dHroot = p.tri_root.parent.transpose() * dRp;
    g.tri_root.extra += dRe * p.const_slot.transpose();
    dConst += p.tri_root.extra.transpose() * dRe;
  }
  g.const_slot += dConst;

  // stacks -> role embeddings
  Mat dEp = Mat::Zero(d_h, V), dEc = Mat::Zero(d_h, V);
  Mat dEe = second ? Mat(Mat::Zero(d_h, V + 1)) : Mat();
  Mat dEdec = Mat::Zero(d_h, 2);
  for (int d = 0; d < 2; ++d)
    for (int v = 0; v < 2; ++v) {
      dEp += back_stack(p, t.st_parent[d][v], d, v, dHp[d][v], &g);
      dEc += back_stack(p, t.st_child[d][v], d, v, dHc[d][v], &g);
      if (second) dEe += back_stack(p, t.st_extra[d][v], d, v, dHe[d][v], &g);
      dEdec += back_stack(p, t.st_dec[d][v], d, v, dHdec[d][v], &g);
    }
  Mat dEroot = back_stack(p, t.st_root, kRight, kNoChild, dHroot, &g);

  // role transforms -> input embeddings
  Mat dX = Mat::Zero(t.X.rows(), V);
  g.W_parent += dEp * t.X.transpose();
  dX += p.W_parent.transpose() * dEp;
  g.W_child += dEc * t.X.transpose();
  dX += p.W_child.transpose() * dEc;
  if (second) {
    g.W_extra += dEe * t.Xext.transpose();
    Mat dXext = p.W_extra.transpose() * dEe;
    g.null_emb += dXext.col(0);
    dX += dXext.rightCols(V);
  }
  g.W_dec += dEdec * p.dec_emb.transpose();
  g.dec_emb += p.W_dec.transpose() * dEdec;
  g.W_root += dEroot * p.root_emb.transpose();
  g.root_emb += p.W_root.transpose() * dEroot;

  Mat dXraw = t.drop_mask.size() > 0 ? Mat(dX.cwiseProduct(t.drop_mask)) : dX;
  if (p.dims.lexicalized) {
    // each column is [POS embedding; word embedding]
    for (int s = 0; s < V; ++s) {
      g.pos_emb.col(t.sym_pos[s]) += dXraw.col(s).head(p.dims.d_emb);
      g.tok_emb.col(s) += dXraw.col(s).tail(p.dims.d_word);
    }
  } else {
    g.tok_emb += dXraw;
  }

  return g;
}

void load_pretrained_embeddings(const std::string& path, const Vocab& vocab,
                                NeuralParams* params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
  std::string line;
  int rows = static_cast<int>(params->tok_emb.rows());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string sym;
    ss >> sym;
    int id = vocab.id_of(sym);
    std::vector<double> vals;
    double x;
    while (ss >> x) vals.push_back(x);
    if (id < 0) continue;
    if (static_cast<int>(vals.size()) != rows)
      throw std::runtime_error("embedding width mismatch for symbol " + sym);
    for (int i = 0; i < rows; ++i) params->tok_emb(i, id) = vals[i];
  }
}

}  // namespace sodmv
