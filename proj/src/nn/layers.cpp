#include "lrta/nn/layers.hpp"

#include <cmath>
#include <limits>

namespace lrta::nn {

FeedForwardLayer FeedForwardLayer::create(ParameterStore& store, const std::string& name, Index in_dim,
                                          Index out_dim, Activation activation, RngState& rng) {
  if (in_dim < 1 || out_dim < 1) {
    throw DimensionError("feed-forward layer '" + name + "' needs in/out >= 1, got " + shape_string(out_dim, in_dim));
  }
  FeedForwardLayer layer;
  layer.weight = &store.create(name + ".weight", out_dim, in_dim, Init::glorot_uniform, rng);
  layer.bias = &store.create(name + ".bias", 1, out_dim, Init::zeros, rng);
  layer.activation = activation;
  return layer;
}

Var feed_forward(Tape& tape, const FeedForwardLayer& layer, Var x) {
  if (x.cols() != layer.in_dim()) {
    throw DimensionError("feed_forward '" + layer.weight->name + "': input " + shape_string(x.value()) +
                         " vs weight " + shape_string(layer.weight->value));
  }
  Var y = matmul_nt(x, tape.param(*layer.weight)) + tape.param(*layer.bias);
  return layer.activation == Activation::relu ? relu(y) : y;
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, Index dim, RngState& rng, double eps) {
  LayerNorm ln;
  ln.gain = &store.create(name + ".gain", 1, dim, Init::ones, rng);
  ln.shift = &store.create(name + ".shift", 1, dim, Init::zeros, rng);
  ln.eps = eps;
  return ln;
}

Var layer_norm(Tape& tape, const LayerNorm& ln, Var x) {
  return layer_norm_rows(x, tape.param(*ln.gain), tape.param(*ln.shift), ln.eps);
}

FeedForwardNet FeedForwardNet::create(ParameterStore& store, const std::string& name,
                                      const std::vector<Index>& widths, RngState& rng) {
  if (widths.size() < 2) throw ContractError("feed-forward net '" + name + "' needs at least two widths");
  FeedForwardNet net;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const bool last = k + 2 == widths.size();
    net.layers.push_back(FeedForwardLayer::create(store, name + "." + std::to_string(k), widths[k], widths[k + 1],
                                                  last ? Activation::identity : Activation::relu, rng));
  }
  return net;
}

Var feed_forward(Tape& tape, const FeedForwardNet& net, Var x) {
  for (const auto& layer : net.layers) x = feed_forward(tape, layer, x);
  return x;
}

Embedding Embedding::create(ParameterStore& store, const std::string& name, Index rows, Index dim, RngState& rng) {
  Embedding e;
  e.table = &store.create(name, rows, dim, Init::glorot_uniform, rng);
  return e;
}

Var embed(Tape& tape, const Embedding& table, Index index) {
  const Index one[] = {index};
  return embed_rows(tape, table, one);
}

Var embed_rows(Tape& tape, const Embedding& table, std::span<const Index> indices) {
  for (Index i : indices) {
    if (i < 0 || i >= table.rows()) {
      throw VocabularyError("embedding '" + table.table->name + "': index " + std::to_string(i) + " out of " +
                            std::to_string(table.rows()) + " rows");
    }
  }
  return gather_rows(tape.param(*table.table), indices);
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name, Index dim, Index heads,
                                              RngState& rng) {
  if (heads < 1 || dim % heads != 0) {
    throw DimensionError("attention '" + name + "': dim " + std::to_string(dim) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  MultiHeadAttention m;
  m.query = FeedForwardLayer::create(store, name + ".query", dim, dim, Activation::identity, rng);
  m.key = FeedForwardLayer::create(store, name + ".key", dim, dim, Activation::identity, rng);
  m.value = FeedForwardLayer::create(store, name + ".value", dim, dim, Activation::identity, rng);
  m.output = FeedForwardLayer::create(store, name + ".output", dim, dim, Activation::identity, rng);
  m.heads = heads;
  return m;
}

Var attend(Tape& tape, const MultiHeadAttention& mha, Var queries, Var memory, bool causal) {
  const Index dim = mha.query.out_dim();
  const Index head_dim = dim / mha.heads;
  const Index lq = queries.rows();
  const Index lk = memory.rows();
  if (causal && lq != lk) throw DimensionError("causal attention needs square scores, got " + shape_string(lq, lk));
  Var q = feed_forward(tape, mha.query, queries);
  Var k = feed_forward(tape, mha.key, memory);
  Var v = feed_forward(tape, mha.value, memory);
  Var mask;
  if (causal && lq > 1) {
    Tensor m = Tensor::Zero(lq, lk);
    for (Index r = 0; r < lq; ++r) {
      for (Index c = r + 1; c < lk; ++c) m(r, c) = -1e30;
    }
    mask = tape.constant(std::move(m));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(mha.heads));
  for (Index h = 0; h < mha.heads; ++h) {
    Var qh = mha.heads == 1 ? q : slice_cols(q, h * head_dim, head_dim);
    Var kh = mha.heads == 1 ? k : slice_cols(k, h * head_dim, head_dim);
    Var vh = mha.heads == 1 ? v : slice_cols(v, h * head_dim, head_dim);
    Var scores = scale * matmul_nt(qh, kh);
    if (mask.valid()) scores = scores + mask;
    outs.push_back(matmul(softmax_rows(scores), vh));
  }
  Var joined = outs.size() == 1 ? outs.front() : hcat(outs);
  return feed_forward(tape, mha.output, joined);
}

EncoderBlock EncoderBlock::create(ParameterStore& store, const std::string& name, Index dim, Index hidden,
                                  Index heads, RngState& rng) {
  EncoderBlock b;
  b.attention = MultiHeadAttention::create(store, name + ".attn", dim, heads, rng);
  b.norm1 = LayerNorm::create(store, name + ".norm1", dim, rng);
  b.ff = FeedForwardNet::create(store, name + ".ff", {dim, hidden, dim}, rng);
  b.norm2 = LayerNorm::create(store, name + ".norm2", dim, rng);
  return b;
}

Var encoder_block(Tape& tape, const EncoderBlock& block, Var x) {
  x = layer_norm(tape, block.norm1, x + attend(tape, block.attention, x, x));
  return layer_norm(tape, block.norm2, x + feed_forward(tape, block.ff, x));
}

DecoderBlock DecoderBlock::create(ParameterStore& store, const std::string& name, Index dim, Index hidden,
                                  Index heads, RngState& rng) {
  DecoderBlock b;
  b.self_attention = MultiHeadAttention::create(store, name + ".self", dim, heads, rng);
  b.norm1 = LayerNorm::create(store, name + ".norm1", dim, rng);
  b.cross_attention = MultiHeadAttention::create(store, name + ".cross", dim, heads, rng);
  b.norm2 = LayerNorm::create(store, name + ".norm2", dim, rng);
  b.ff = FeedForwardNet::create(store, name + ".ff", {dim, hidden, dim}, rng);
  b.norm3 = LayerNorm::create(store, name + ".norm3", dim, rng);
  return b;
}

Var decoder_block(Tape& tape, const DecoderBlock& block, Var x, Var memory) {
  x = layer_norm(tape, block.norm1, x + attend(tape, block.self_attention, x, x, /*causal=*/true));
  x = layer_norm(tape, block.norm2, x + attend(tape, block.cross_attention, x, memory));
  return layer_norm(tape, block.norm3, x + feed_forward(tape, block.ff, x));
}

SequenceDecoder SequenceDecoder::create(ParameterStore& store, const std::string& name, Index vocab, Index max_len,
                                        Index dim, Index hidden, Index heads, Index blocks, Index bos, Index eos,
                                        RngState& rng) {
  SequenceDecoder d;
  d.tokens = Embedding::create(store, name + ".tokens", vocab, dim, rng);
  d.positions = Embedding::create(store, name + ".positions", max_len, dim, rng);
  for (Index b = 0; b < blocks; ++b) {
    d.blocks.push_back(DecoderBlock::create(store, name + ".block" + std::to_string(b), dim, hidden, heads, rng));
  }
  d.readout = FeedForwardLayer::create(store, name + ".readout", dim, vocab, Activation::identity, rng);
  d.bos = bos;
  d.eos = eos;
  return d;
}

Var decoder_log_probs(Tape& tape, const SequenceDecoder& dec, Var memory, std::span<const Index> inputs) {
  const auto len = static_cast<Index>(inputs.size());
  if (len < 1 || len > dec.max_len()) {
    throw DimensionError("decoder input length " + std::to_string(len) + " outside [1, " +
                         std::to_string(dec.max_len()) + "]");
  }
  std::vector<Index> pos(static_cast<std::size_t>(len));
  for (Index p = 0; p < len; ++p) pos[static_cast<std::size_t>(p)] = p;
  Var x = embed_rows(tape, dec.tokens, inputs) + embed_rows(tape, dec.positions, pos);
  for (const auto& block : dec.blocks) x = decoder_block(tape, block, x, memory);
  return log_softmax_rows(feed_forward(tape, dec.readout, x));
}

Var decoder_nll(Tape& tape, const SequenceDecoder& dec, Var memory, std::span<const Index> targets) {
  std::vector<Index> inputs{dec.bos};
  std::vector<Index> outputs(targets.begin(), targets.end());
  inputs.insert(inputs.end(), targets.begin(), targets.end());
  outputs.push_back(dec.eos);
  Var logp = decoder_log_probs(tape, dec, memory, inputs);
  return -1.0 * pick_sum(logp, outputs);
}

std::vector<Index> greedy_decode(Tape& tape, const SequenceDecoder& dec, Var memory, Index max_tokens) {
  std::vector<Index> inputs{dec.bos};
  std::vector<Index> out;
  const Index limit = std::min(max_tokens, dec.max_len() - 1);
  while (static_cast<Index>(out.size()) < limit) {
    Var logp = decoder_log_probs(tape, dec, memory, inputs);
    const Index next = argmax_row(logp.value(), logp.rows() - 1);
    if (next == dec.eos) break;
    out.push_back(next);
    inputs.push_back(next);
  }
  return out;
}

}  // namespace lrta::nn
