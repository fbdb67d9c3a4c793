#include "halprobe/model.hpp"

#include <algorithm>
#include <cmath>

namespace halprobe {

namespace {

constexpr double kLayerNormEps = 1e-6;

Matrix layer_norm(const Matrix& x, const LayerNormWeights& w) {
  Matrix out(x.rows(), x.cols());
  const int d = static_cast<int>(x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    out.row(r) = ((x.row(r).array() - mean) * inv * w.gamma.row(0).array()) +
                 w.beta.row(0).array();
  }
  return out;
}

// Row-wise softmax over columns [0, limit(r)); masked columns become exact 0.
Matrix masked_softmax(const Matrix& scores, const std::function<int(int)>& limit) {
  Matrix out = Matrix::Zero(scores.rows(), scores.cols());
  for (int r = 0; r < scores.rows(); ++r) {
    const int lim = limit(r);
    double mx = scores(r, 0);
    for (int c = 1; c < lim; ++c) mx = std::max(mx, scores(r, c));
    double sum = 0.0;
    for (int c = 0; c < lim; ++c) {
      out(r, c) = std::exp(scores(r, c) - mx);
      sum += out(r, c);
    }
    for (int c = 0; c < lim; ++c) out(r, c) /= sum;
  }
  return out;
}

// Multi-head attention; causal restricts query r to keys <= r.
Matrix attention(const Matrix& q_in, const Matrix& kv_in, const AttentionWeights& w,
                 int heads, bool causal, AttentionTrace* trace) {
  const int d = static_cast<int>(q_in.cols());
  const int dh = d / heads;
  const int nq = static_cast<int>(q_in.rows());
  const int nk = static_cast<int>(kv_in.rows());

  Matrix q = (q_in * w.wq).rowwise() + w.bq.row(0);
  Matrix k = (kv_in * w.wk).rowwise() + w.bk.row(0);
  Matrix v = (kv_in * w.wv).rowwise() + w.bv.row(0);

  Matrix concat(nq, d);
  std::vector<Matrix> head_scores, head_attn;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < heads; ++h) {
    const Matrix qh = q.middleCols(h * dh, dh);
    const Matrix kh = k.middleCols(h * dh, dh);
    const Matrix vh = v.middleCols(h * dh, dh);
    Matrix scores = qh * kh.transpose() * scale;
    Matrix attn = masked_softmax(scores, [&](int r) { return causal ? r + 1 : nk; });
    concat.middleCols(h * dh, dh) = attn * vh;
    if (trace) {
      head_scores.push_back(std::move(scores));
      head_attn.push_back(std::move(attn));
    }
  }
  Matrix out = (concat * w.wo).rowwise() + w.bo.row(0);
  if (trace) {
    trace->q_in = q_in;
    trace->kv_in = kv_in;
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->scores = std::move(head_scores);
    trace->attn = std::move(head_attn);
    trace->concat = std::move(concat);
    trace->out = out;
  }
  return out;
}

Matrix feed_forward(const Matrix& x, const FfnWeights& w, FfnTrace* trace) {
  Matrix pre = (x * w.w1).rowwise() + w.b1.row(0);
  Matrix act = pre.cwiseMax(0.0);
  Matrix out = (act * w.w2).rowwise() + w.b2.row(0);
  if (trace) {
    trace->in = x;
    trace->pre = std::move(pre);
    trace->act = std::move(act);
    trace->out = out;
  }
  return out;
}

void xavier_fill(Matrix& m, Rng& rng, int fan_in, int fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) m(r, c) = (2.0 * rng.uniform() - 1.0) * limit;
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1 || d_model < 1 || heads < 1 || d_ff < 1) {
    throw UsageError("model dimensions must be >= 1");
  }
  if (d_model % heads != 0) throw UsageError("d_model must be divisible by heads");
  if (max_src_len < 2 || max_tgt_len < 1) throw UsageError("invalid sequence length limits");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw UsageError("label smoothing must be in [0, 1)");
  }
  if (vocab_size < 5) throw UsageError("vocab_size must cover the reserved tokens");
}

TransformerWeights TransformerWeights::zeros(const ModelConfig& cfg) {
  cfg.validate();
  TransformerWeights w;
  w.config = cfg;
  const int d = cfg.d_model, v = cfg.vocab_size, f = cfg.d_ff;
  auto attn = [&] {
    AttentionWeights a;
    a.wq = a.wk = a.wv = a.wo = Matrix::Zero(d, d);
    a.bq = a.bk = a.bv = a.bo = Matrix::Zero(1, d);
    return a;
  };
  auto ln = [&] {
    LayerNormWeights l;
    l.gamma = Matrix::Ones(1, d);
    l.beta = Matrix::Zero(1, d);
    return l;
  };
  auto ffn = [&] {
    FfnWeights ff;
    ff.w1 = Matrix::Zero(d, f);
    ff.b1 = Matrix::Zero(1, f);
    ff.w2 = Matrix::Zero(f, d);
    ff.b2 = Matrix::Zero(1, d);
    return ff;
  };
  w.src_embedding = Matrix::Zero(v, d);
  w.tgt_embedding = Matrix::Zero(v, d);
  for (int l = 0; l < cfg.layers; ++l) {
    w.encoder.push_back({attn(), ln(), ffn(), ln()});
    w.decoder.push_back({attn(), ln(), attn(), ln(), ffn(), ln()});
  }
  w.out_proj = Matrix::Zero(d, v);
  w.out_bias = Matrix::Zero(1, v);
  return w;
}

TransformerWeights TransformerWeights::init(const ModelConfig& cfg, std::uint64_t seed) {
  TransformerWeights w = zeros(cfg);
  Rng rng(derive_seed(seed, "model-init"));
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  w.visit([&](const std::string& name, Matrix& m) {
    if (name.find("embedding") != std::string::npos) {
      for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.normal() * emb_std;
      }
    } else if (name.find(".gamma") != std::string::npos ||
               name.find(".beta") != std::string::npos ||
               name.find(".b") != std::string::npos || name == "out_bias") {
      // biases stay zero, layer-norm scales stay one
    } else {
      xavier_fill(m, rng, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    }
  });
  return w;
}

void TransformerWeights::visit(const std::function<void(const std::string&, Matrix&)>& fn) {
  fn("src_embedding", src_embedding);
  fn("tgt_embedding", tgt_embedding);
  auto visit_attn = [&](const std::string& p, AttentionWeights& a) {
    fn(p + ".wq", a.wq);
    fn(p + ".bq", a.bq);
    fn(p + ".wk", a.wk);
    fn(p + ".bk", a.bk);
    fn(p + ".wv", a.wv);
    fn(p + ".bv", a.bv);
    fn(p + ".wo", a.wo);
    fn(p + ".bo", a.bo);
  };
  auto visit_ln = [&](const std::string& p, LayerNormWeights& l) {
    fn(p + ".gamma", l.gamma);
    fn(p + ".beta", l.beta);
  };
  auto visit_ffn = [&](const std::string& p, FfnWeights& f) {
    fn(p + ".w1", f.w1);
    fn(p + ".b1", f.b1);
    fn(p + ".w2", f.w2);
    fn(p + ".b2", f.b2);
  };
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    const std::string p = "enc." + std::to_string(l);
    visit_attn(p + ".attn", encoder[l].attn);
    visit_ln(p + ".ln1", encoder[l].ln1);
    visit_ffn(p + ".ffn", encoder[l].ffn);
    visit_ln(p + ".ln2", encoder[l].ln2);
  }
  for (std::size_t l = 0; l < decoder.size(); ++l) {
    const std::string p = "dec." + std::to_string(l);
    visit_attn(p + ".self", decoder[l].self_attn);
    visit_ln(p + ".ln1", decoder[l].ln1);
    visit_attn(p + ".cross", decoder[l].cross_attn);
    visit_ln(p + ".ln2", decoder[l].ln2);
    visit_ffn(p + ".ffn", decoder[l].ffn);
    visit_ln(p + ".ln3", decoder[l].ln3);
  }
  fn("out_proj", out_proj);
  fn("out_bias", out_bias);
}

void TransformerWeights::visit(
    const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<TransformerWeights*>(this)->visit(
      [&](const std::string& name, Matrix& m) { fn(name, m); });
}

bool TransformerWeights::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

Matrix Transformer::positional_encoding(int positions, int d_model) {
  Matrix pe(positions, d_model);
  for (int pos = 0; pos < positions; ++pos) {
    for (int i = 0; i < d_model; i += 2) {
      const double angle = pos / std::pow(10000.0, static_cast<double>(i) / d_model);
      pe(pos, i) = std::sin(angle);
      if (i + 1 < d_model) pe(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Transformer::Transformer(TransformerWeights weights) : w_(std::move(weights)) {
  w_.config.validate();
  if (!w_.all_finite()) throw NumericError("non-finite weights");
}

Matrix Transformer::encode(const std::vector<int>& src, ActivationTrace* trace) const {
  if (src.empty()) throw DataError("empty source");
  if (static_cast<int>(src.size()) > w_.config.max_src_len) throw DataError("source too long");
  std::vector<int> ids = src;
  ids.push_back(4 - 2);  // placeholder; replaced below for clarity
  ids.back() = 2;        // EOS
  const int n = static_cast<int>(ids.size());
  const int d = w_.config.d_model;

  Matrix x(n, d);
  const double scale = std::sqrt(static_cast<double>(d));
  const Matrix pe = positional_encoding(n, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= w_.config.vocab_size) throw DataError("source id out of range");
    x.row(i) = w_.src_embedding.row(ids[i]) * scale + pe.row(i);
  }
  if (trace) {
    trace->src_ids = ids;
    trace->src_embedded = x;
    trace->enc.resize(w_.encoder.size());
  }
  for (std::size_t l = 0; l < w_.encoder.size(); ++l) {
    const auto& lw = w_.encoder[l];
    EncoderLayerTrace* lt = trace ? &trace->enc[l] : nullptr;
    Matrix a = attention(x, x, lw.attn, w_.config.heads, false, lt ? &lt->attn : nullptr);
    Matrix norm1 = layer_norm(x + a, lw.ln1);
    if (lt) {
      lt->ln1.in = x + a;
      lt->ln1.out = norm1;
    }
    Matrix f = feed_forward(norm1, lw.ffn, lt ? &lt->ffn : nullptr);
    Matrix norm2 = layer_norm(norm1 + f, lw.ln2);
    if (lt) {
      lt->ln2.in = norm1 + f;
      lt->ln2.out = norm2;
    }
    x = std::move(norm2);
  }
  if (!x.allFinite()) throw NumericError("non-finite encoder states");
  if (trace) trace->encoder_out = x;
  return x;
}

Matrix Transformer::decode_logits(const Matrix& enc_out, const std::vector<int>& dec_input) const {
  const int t = static_cast<int>(dec_input.size());
  const int d = w_.config.d_model;
  Matrix y(t, d);
  const double scale = std::sqrt(static_cast<double>(d));
  const Matrix pe = positional_encoding(t, d);
  for (int i = 0; i < t; ++i) {
    if (dec_input[i] < 0 || dec_input[i] >= w_.config.vocab_size) {
      throw DataError("target id out of range");
    }
    y.row(i) = w_.tgt_embedding.row(dec_input[i]) * scale + pe.row(i);
  }
  for (const auto& lw : w_.decoder) {
    Matrix a = attention(y, y, lw.self_attn, w_.config.heads, true, nullptr);
    Matrix norm1 = layer_norm(y + a, lw.ln1);
    Matrix c = attention(norm1, enc_out, lw.cross_attn, w_.config.heads, false, nullptr);
    Matrix norm2 = layer_norm(norm1 + c, lw.ln2);
    Matrix f = feed_forward(norm2, lw.ffn, nullptr);
    y = layer_norm(norm2 + f, lw.ln3);
  }
  return (y * w_.out_proj).rowwise() + w_.out_bias.row(0);
}

Matrix Transformer::forward(const std::vector<int>& src, const std::vector<int>& out,
                            ActivationTrace* trace) const {
  if (out.empty()) throw DataError("empty target");
  Matrix enc_out = encode(src, trace);

  std::vector<int> dec_input;
  dec_input.reserve(out.size());
  dec_input.push_back(1);  // BOS
  dec_input.insert(dec_input.end(), out.begin(), out.end() - 1);

  const int t = static_cast<int>(dec_input.size());
  const int d = w_.config.d_model;
  Matrix y(t, d);
  const double scale = std::sqrt(static_cast<double>(d));
  const Matrix pe = positional_encoding(t, d);
  for (int i = 0; i < t; ++i) {
    if (dec_input[i] < 0 || dec_input[i] >= w_.config.vocab_size) {
      throw DataError("target id out of range");
    }
    y.row(i) = w_.tgt_embedding.row(dec_input[i]) * scale + pe.row(i);
  }
  if (trace) {
    trace->tgt_input_ids = dec_input;
    trace->tgt_embedded = y;
    trace->dec.resize(w_.decoder.size());
  }
  for (std::size_t l = 0; l < w_.decoder.size(); ++l) {
    const auto& lw = w_.decoder[l];
    DecoderLayerTrace* lt = trace ? &trace->dec[l] : nullptr;
    Matrix a = attention(y, y, lw.self_attn, w_.config.heads, true, lt ? &lt->self_attn : nullptr);
    Matrix norm1 = layer_norm(y + a, lw.ln1);
    if (lt) {
      lt->ln1.in = y + a;
      lt->ln1.out = norm1;
    }
    Matrix c = attention(norm1, enc_out, lw.cross_attn, w_.config.heads, false,
                         lt ? &lt->cross_attn : nullptr);
    Matrix norm2 = layer_norm(norm1 + c, lw.ln2);
    if (lt) {
      lt->ln2.in = norm1 + c;
      lt->ln2.out = norm2;
    }
    Matrix f = feed_forward(norm2, lw.ffn, lt ? &lt->ffn : nullptr);
    Matrix norm3 = layer_norm(norm2 + f, lw.ln3);
    if (lt) {
      lt->ln3.in = norm2 + f;
      lt->ln3.out = norm3;
    }
    y = std::move(norm3);
  }
  Matrix logits = (y * w_.out_proj).rowwise() + w_.out_bias.row(0);
  if (!logits.allFinite()) throw NumericError("non-finite logits");
  if (trace) {
    trace->dec_out = y;
    trace->logits = logits;
  }
  return logits;
}

Vector log_softmax_row(const Eigen::RowVectorXd& logits) {
  const double mx = logits.maxCoeff();
  const double lse = std::log((logits.array() - mx).exp().sum()) + mx;
  return (logits.array() - lse).transpose();
}

DecodeResult Transformer::greedy_decode(const std::vector<int>& src, int max_len,
                                        bool want_trace) const {
  if (max_len < 1) throw UsageError("max_len must be >= 1");
  max_len = std::min(max_len, w_.config.max_tgt_len);
  const Matrix enc_out = encode(src, nullptr);

  DecodeResult res;
  std::vector<int> dec_input = {1};  // BOS
  for (int step = 0; step < max_len; ++step) {
    Matrix logits = decode_logits(enc_out, dec_input);
    const Vector lp = log_softmax_row(logits.row(logits.rows() - 1));
    int best = 0;
    for (int i = 1; i < lp.size(); ++i) {
      if (lp(i) > lp(best)) best = i;
    }
    res.tokens.push_back(best);
    res.step_logprob.push_back(lp(best));
    res.total_logprob += lp(best);
    if (best == 2) break;  // EOS
    dec_input.push_back(best);
  }
  if (want_trace) {
    auto trace = std::make_shared<ActivationTrace>();
    forward(src, res.tokens, trace.get());
    res.trace = std::move(trace);
  }
  return res;
}

namespace {

struct BeamHyp {
  std::vector<int> tokens;
  std::vector<double> step_logprob;
  double logprob = 0.0;

  double normalized() const {
    return tokens.empty() ? -1e30 : logprob / static_cast<double>(tokens.size());
  }
};

// Orders by cumulative log-probability, ties by lexicographically smaller
// token sequence.
bool better_cumulative(const BeamHyp& a, const BeamHyp& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.tokens < b.tokens;
}

bool better_normalized(const BeamHyp& a, const BeamHyp& b) {
  if (a.normalized() != b.normalized()) return a.normalized() > b.normalized();
  return a.tokens < b.tokens;
}

}  // namespace

DecodeResult Transformer::beam_decode(const std::vector<int>& src, int beam, int max_len,
                                      bool want_trace) const {
  if (beam < 1) throw UsageError("beam must be >= 1");
  if (max_len < 1) throw UsageError("max_len must be >= 1");
  max_len = std::min(max_len, w_.config.max_tgt_len);
  const Matrix enc_out = encode(src, nullptr);

  std::vector<BeamHyp> alive = {BeamHyp{}};
  std::vector<BeamHyp> completed;
  for (int step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<BeamHyp> candidates;
    for (const auto& hyp : alive) {
      std::vector<int> dec_input = {1};
      dec_input.insert(dec_input.end(), hyp.tokens.begin(), hyp.tokens.end());
      Matrix logits = decode_logits(enc_out, dec_input);
      const Vector lp = log_softmax_row(logits.row(logits.rows() - 1));
      for (int tok = 0; tok < lp.size(); ++tok) {
        BeamHyp next = hyp;
        next.tokens.push_back(tok);
        next.step_logprob.push_back(lp(tok));
        next.logprob += lp(tok);
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better_cumulative);
    alive.clear();
    for (auto& cand : candidates) {
      if (cand.tokens.back() == 2 || static_cast<int>(cand.tokens.size()) == max_len) {
        completed.push_back(std::move(cand));
      } else if (static_cast<int>(alive.size()) < beam) {
        alive.push_back(std::move(cand));
      }
    }
  }
  if (completed.empty()) throw NumericError("beam search produced no hypotheses");
  const BeamHyp& best =
      *std::min_element(completed.begin(), completed.end(),
                        [](const BeamHyp& a, const BeamHyp& b) { return better_normalized(a, b); });

  DecodeResult res;
  res.tokens = best.tokens;
  res.step_logprob = best.step_logprob;
  res.total_logprob = best.logprob;
  if (want_trace) {
    auto trace = std::make_shared<ActivationTrace>();
    forward(src, res.tokens, trace.get());
    res.trace = std::move(trace);
  }
  return res;
}

double Transformer::sequence_logprob(const std::vector<int>& src,
                                     const std::vector<int>& out) const {
  if (out.empty()) throw DataError("empty target");
  if (static_cast<int>(out.size()) > w_.config.max_tgt_len) throw DataError("target too long");
  Matrix logits = forward(src, out);
  double total = 0.0;
  for (int t = 0; t < logits.rows(); ++t) {
    total += log_softmax_row(logits.row(t))(out[t]);
  }
  return total;
}

}  // namespace halprobe
