#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "halprobe/common.hpp"

namespace halprobe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  int layers = 2;  // per stack (encoder and decoder)
  int d_model = 64;
  int heads = 4;
  int d_ff = 128;
  int max_src_len = 64;
  int max_tgt_len = 32;
  double label_smoothing = 0.1;
  int vocab_size = 0;

  int head_dim() const { return d_model / heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct AttentionWeights {
  Matrix wq, wk, wv, wo;      // d_model x d_model
  Matrix bq, bk, bv, bo;      // 1 x d_model
};

struct LayerNormWeights {
  Matrix gamma, beta;  // 1 x d_model
};

struct FfnWeights {
  Matrix w1, w2;  // d_model x d_ff, d_ff x d_model
  Matrix b1, b2;  // 1 x d_ff, 1 x d_model
};

struct EncoderLayerWeights {
  AttentionWeights attn;
  LayerNormWeights ln1;
  FfnWeights ffn;
  LayerNormWeights ln2;
};

struct DecoderLayerWeights {
  AttentionWeights self_attn;
  LayerNormWeights ln1;
  AttentionWeights cross_attn;
  LayerNormWeights ln2;
  FfnWeights ffn;
  LayerNormWeights ln3;
};

// All parameters are held as matrices (biases as 1 x n) so that one visitor
// serves init, serialization, gradient accumulation, and Adam state.
struct TransformerWeights {
  ModelConfig config;
  Matrix src_embedding, tgt_embedding;  // vocab x d_model
  std::vector<EncoderLayerWeights> encoder;
  std::vector<DecoderLayerWeights> decoder;
  Matrix out_proj;  // d_model x vocab
  Matrix out_bias;  // 1 x vocab

  static TransformerWeights init(const ModelConfig& cfg, std::uint64_t seed);
  static TransformerWeights zeros(const ModelConfig& cfg);

  // Visits every parameter tensor in a fixed documented order.
  void visit(const std::function<void(const std::string&, Matrix&)>& fn);
  void visit(const std::function<void(const std::string&, const Matrix&)>& fn) const;

  bool all_finite() const;
};

// Everything the relevance rules and backprop consume, for one teacher-forced
// forward pass. Residual sums are reconstructable: each sublayer's pre-norm
// input is stream_in + sublayer_out.
struct AttentionTrace {
  Matrix q_in;    // queries x d_model (stream feeding the Q projection)
  Matrix kv_in;   // keys x d_model (stream feeding K/V projections)
  Matrix q, k, v; // projected, full width
  std::vector<Matrix> scores;  // per head, queries x keys (post 1/sqrt(dh))
  std::vector<Matrix> attn;    // per head, row-stochastic over unmasked keys
  Matrix concat;  // queries x d_model, heads concatenated
  Matrix out;     // after output projection
};

struct LayerNormTrace {
  Matrix in, out;
};

struct FfnTrace {
  Matrix in, pre, act, out;
};

struct EncoderLayerTrace {
  AttentionTrace attn;
  LayerNormTrace ln1;
  FfnTrace ffn;
  LayerNormTrace ln2;
};

struct DecoderLayerTrace {
  AttentionTrace self_attn;
  LayerNormTrace ln1;
  AttentionTrace cross_attn;
  LayerNormTrace ln2;
  FfnTrace ffn;
  LayerNormTrace ln3;
};

struct ActivationTrace {
  std::vector<int> src_ids;        // with EOS appended
  std::vector<int> tgt_input_ids;  // BOS followed by the forced prefix
  Matrix src_embedded;             // n x d (scaled embedding + positional)
  std::vector<EncoderLayerTrace> enc;
  Matrix encoder_out;
  Matrix tgt_embedded;  // T x d
  std::vector<DecoderLayerTrace> dec;
  Matrix dec_out;  // T x d
  Matrix logits;   // T x vocab
};

struct DecodeResult {
  std::vector<int> tokens;            // ends with EOS when produced before max_len
  std::vector<double> step_logprob;   // log P(token_t | source, prefix)
  double total_logprob = 0.0;         // sum of step_logprob
  std::shared_ptr<ActivationTrace> trace;  // present when requested
};

// Immutable-weight transformer. Decoding is strictly per-sample, so results
// never depend on batch composition.
class Transformer {
 public:
  explicit Transformer(TransformerWeights weights);

  const TransformerWeights& weights() const { return w_; }
  const ModelConfig& config() const { return w_.config; }

  // Encodes the source (EOS appended internally). Rejects empty or over-long
  // sources.
  Matrix encode(const std::vector<int>& src, ActivationTrace* trace = nullptr) const;

  // Teacher-forced pass over `out`; logits row t scores out[t].
  Matrix forward(const std::vector<int>& src, const std::vector<int>& out,
                 ActivationTrace* trace = nullptr) const;

  DecodeResult greedy_decode(const std::vector<int>& src, int max_len,
                             bool want_trace = false) const;

  // Length-normalized beam search; ties broken by lexicographically smaller
  // token-id sequence.
  DecodeResult beam_decode(const std::vector<int>& src, int beam, int max_len,
                           bool want_trace = false) const;

  double sequence_logprob(const std::vector<int>& src, const std::vector<int>& out) const;

  static Matrix positional_encoding(int positions, int d_model);

 private:
  Matrix decode_logits(const Matrix& enc_out, const std::vector<int>& dec_input) const;
  TransformerWeights w_;
};

Vector log_softmax_row(const Eigen::RowVectorXd& logits);

}  // namespace halprobe
