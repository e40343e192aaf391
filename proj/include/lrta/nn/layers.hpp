#pragma once

#include <string>
#include <vector>

#include "lrta/nn/tape.hpp"

namespace lrta::nn {

enum class Activation { identity, relu };

/// y = activation(x W^T + b), applied to every row of x.
struct FeedForwardLayer {
  Parameter* weight = nullptr;  // out_dim x in_dim
  Parameter* bias = nullptr;    // 1 x out_dim
  Activation activation = Activation::identity;

  Index in_dim() const { return weight->value.cols(); }
  Index out_dim() const { return weight->value.rows(); }

  static FeedForwardLayer create(ParameterStore& store, const std::string& name, Index in_dim, Index out_dim,
                                 Activation activation, RngState& rng);
};

Var feed_forward(Tape& tape, const FeedForwardLayer& layer, Var x);

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* shift = nullptr;
  double eps = 1e-5;

  static LayerNorm create(ParameterStore& store, const std::string& name, Index dim, RngState& rng,
                          double eps = 1e-5);
};

Var layer_norm(Tape& tape, const LayerNorm& ln, Var x);

/// Stack of FeedForwardLayers: relu on every hidden layer, identity output.
struct FeedForwardNet {
  std::vector<FeedForwardLayer> layers;

  static FeedForwardNet create(ParameterStore& store, const std::string& name, const std::vector<Index>& widths,
                               RngState& rng);
  Index in_dim() const { return layers.front().in_dim(); }
  Index out_dim() const { return layers.back().out_dim(); }
};

Var feed_forward(Tape& tape, const FeedForwardNet& net, Var x);

struct Embedding {
  Parameter* table = nullptr;  // rows x dim

  Index rows() const { return table->value.rows(); }
  Index dim() const { return table->value.cols(); }

  static Embedding create(ParameterStore& store, const std::string& name, Index rows, Index dim, RngState& rng);
};

/// Row `index` of the table as a 1 x dim vector.
Var embed(Tape& tape, const Embedding& table, Index index);
/// Rows `indices` stacked.
Var embed_rows(Tape& tape, const Embedding& table, std::span<const Index> indices);

struct MultiHeadAttention {
  FeedForwardLayer query, key, value, output;
  Index heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name, Index dim, Index heads,
                                   RngState& rng);
};

/// Scaled dot-product attention of `queries` (Lq x D) over `memory` (Lk x D).
/// `causal` masks key positions after each query position (requires Lq == Lk).
Var attend(Tape& tape, const MultiHeadAttention& mha, Var queries, Var memory, bool causal = false);

/// Post-norm encoder block: x = LN(x + MHA(x, x)); x = LN(x + FF(x)).
struct EncoderBlock {
  MultiHeadAttention attention;
  LayerNorm norm1, norm2;
  FeedForwardNet ff;

  static EncoderBlock create(ParameterStore& store, const std::string& name, Index dim, Index hidden, Index heads,
                             RngState& rng);
};

Var encoder_block(Tape& tape, const EncoderBlock& block, Var x);

/// Post-norm decoder block with causal self-attention and cross-attention.
struct DecoderBlock {
  MultiHeadAttention self_attention, cross_attention;
  LayerNorm norm1, norm2, norm3;
  FeedForwardNet ff;

  static DecoderBlock create(ParameterStore& store, const std::string& name, Index dim, Index hidden, Index heads,
                             RngState& rng);
};

Var decoder_block(Tape& tape, const DecoderBlock& block, Var x, Var memory);

/// Autoregressive token decoder conditioned on a memory of vectors. Used for
/// both instruction text and full answers.
struct SequenceDecoder {
  Embedding tokens;
  Embedding positions;
  std::vector<DecoderBlock> blocks;
  FeedForwardLayer readout;
  Index bos = 0;
  Index eos = 1;

  static SequenceDecoder create(ParameterStore& store, const std::string& name, Index vocab, Index max_len, Index dim,
                                Index hidden, Index heads, Index blocks, Index bos, Index eos, RngState& rng);
  Index max_len() const { return positions.rows(); }
};

/// Log-probabilities (L x V) for inputs [bos, t_1 .. t_{L-1}] under causal
/// masking; row r predicts target r.
Var decoder_log_probs(Tape& tape, const SequenceDecoder& dec, Var memory, std::span<const Index> inputs);

/// Teacher-forced negative log-likelihood of `targets` (eos appended).
Var decoder_nll(Tape& tape, const SequenceDecoder& dec, Var memory, std::span<const Index> targets);

/// Greedy decoding; returns tokens without the end marker, at most
/// `max_tokens` of them.
std::vector<Index> greedy_decode(Tape& tape, const SequenceDecoder& dec, Var memory, Index max_tokens);

}  // namespace lrta::nn
