#include "lrta/program/parser.hpp"

#include "lrta/error.hpp"
#include "lrta/program/render.hpp"

namespace lrta::program {

using nn::Tensor;

QuestionParser QuestionParser::create(nn::ParameterStore& store, const std::string& name, Index vocab,
                                      const ParserConfig& config, nn::RngState& rng) {
  QuestionParser p;
  p.tokens = nn::Embedding::create(store, name + ".tokens", vocab, config.dim, rng);
  p.positions = nn::Embedding::create(store, name + ".positions", config.max_question_len, config.dim, rng);
  for (Index b = 0; b < config.encoder_blocks; ++b) {
    p.encoder.push_back(nn::EncoderBlock::create(store, name + ".encoder" + std::to_string(b), config.dim,
                                                 config.hidden, config.heads, rng));
  }
  p.step_queries = nn::Embedding::create(store, name + ".step_queries", config.m_max, config.dim, rng);
  p.previous = nn::FeedForwardLayer::create(store, name + ".previous", config.dim, config.dim, nn::Activation::identity, rng);
  p.readout = nn::MultiHeadAttention::create(store, name + ".readout", config.dim, config.heads, rng);
  p.norm1 = nn::LayerNorm::create(store, name + ".norm1", config.dim, rng);
  p.ff = nn::FeedForwardNet::create(store, name + ".ff", {config.dim, config.hidden, config.dim}, rng);
  p.norm2 = nn::LayerNorm::create(store, name + ".norm2", config.dim, rng);
  p.stop = nn::FeedForwardLayer::create(store, name + ".stop", config.dim, 2, nn::Activation::identity, rng);
  p.m_max = config.m_max;
  return p;
}

InstructionVectorSeq parse_question(Tape& tape, const QuestionParser& parser, std::span<const Index> token_ids,
                                    std::optional<Index> forced_steps) {
  if (token_ids.empty()) throw ContractError("cannot parse an empty question");
  const auto len = static_cast<Index>(token_ids.size());
  if (len > parser.positions.rows()) {
    throw DimensionError("question of " + std::to_string(len) + " tokens exceeds the " +
                         std::to_string(parser.positions.rows()) + "-token limit");
  }
  if (forced_steps && (*forced_steps < 1 || *forced_steps > parser.m_max)) {
    throw ContractError("forced step count " + std::to_string(*forced_steps) + " outside [1, M_max]");
  }
  std::vector<Index> pos(static_cast<std::size_t>(len));
  for (Index p = 0; p < len; ++p) pos[static_cast<std::size_t>(p)] = p;
  Var enc = nn::embed_rows(tape, parser.tokens, token_ids) + nn::embed_rows(tape, parser.positions, pos);
  for (const auto& block : parser.encoder) enc = nn::encoder_block(tape, block, enc);

  InstructionVectorSeq out;
  std::vector<Var> stops;
  const Index dim = parser.tokens.dim();
  Var prev = tape.constant(Tensor::Zero(1, dim));
  for (Index m = 0; m < parser.m_max; ++m) {
    Var x = nn::embed(tape, parser.step_queries, m) + nn::feed_forward(tape, parser.previous, prev);
    Var y = nn::layer_norm(tape, parser.norm1, x + nn::attend(tape, parser.readout, x, enc));
    Var iv = nn::layer_norm(tape, parser.norm2, y + nn::feed_forward(tape, parser.ff, y));
    Var stop = nn::log_softmax_rows(nn::feed_forward(tape, parser.stop, iv));
    out.vectors.push_back(iv);
    stops.push_back(stop);
    prev = iv;
    if (forced_steps) {
      if (m + 1 == *forced_steps) break;
    } else if (nn::argmax_row(stop.value(), 0) == 1) {
      break;
    }
  }
  out.stop_logp = nn::vcat(stops);
  out.stop_position = out.size();
  return out;
}

GoldInstructionEmbedder GoldInstructionEmbedder::create(nn::ParameterStore& store, const std::string& name,
                                                        Index vocab, Index dim, nn::RngState& rng) {
  GoldInstructionEmbedder g;
  g.tokens = nn::Embedding::create(store, name + ".tokens", vocab, dim, rng);
  g.positions = nn::Embedding::create(store, name + ".positions", 4, dim, rng);
  g.norm = nn::LayerNorm::create(store, name + ".norm", dim, rng);
  return g;
}

std::vector<Var> embed_gold_program(Tape& tape, const GoldInstructionEmbedder& embedder,
                                    const InstructionProgram& program, const Vocabulary& vocab) {
  std::vector<Var> out;
  for (const auto& step : program.steps) {
    const auto ids = vocab.encode(to_tokens(step));
    std::vector<Index> pos;
    for (std::size_t p = 0; p < ids.size(); ++p) pos.push_back(static_cast<Index>(p));
    Var rows = nn::embed_rows(tape, embedder.tokens, ids) + nn::embed_rows(tape, embedder.positions, pos);
    Var summed = nn::matmul(tape.constant(Tensor::Ones(1, rows.rows())), rows);
    out.push_back(nn::layer_norm(tape, embedder.norm, summed));
  }
  return out;
}

GoldProgramTargets encode_gold_program(const InstructionProgram& program, const WorldSchema& schema,
                                       const Vocabulary& vocab, std::size_t m_max) {
  validate_program(program, schema, m_max);
  GoldProgramTargets t;
  for (const auto& step : program.steps) t.step_tokens.push_back(vocab.encode(to_tokens(step)));
  t.stop_step = static_cast<Index>(program.steps.size());
  return t;
}

Var instruction_loss(Tape& tape, const InstructionVectorSeq& sequence, const nn::SequenceDecoder& decoder,
                     const GoldProgramTargets& targets) {
  if (sequence.size() != targets.stop_step) {
    throw DimensionError("instruction loss: " + std::to_string(sequence.size()) + " vectors for " +
                         std::to_string(targets.stop_step) + " gold steps");
  }
  std::vector<Index> stop_targets(static_cast<std::size_t>(targets.stop_step), 0);
  stop_targets.back() = 1;
  Var loss = -1.0 * nn::pick_sum(sequence.stop_logp, stop_targets);
  for (Index m = 0; m < targets.stop_step; ++m) {
    loss = loss + nn::decoder_nll(tape, decoder, sequence.vectors[static_cast<std::size_t>(m)],
                                  targets.step_tokens[static_cast<std::size_t>(m)]);
  }
  return loss;
}

std::string decode_instruction(Tape& tape, const nn::SequenceDecoder& decoder, Var instruction,
                               const Vocabulary& vocab, Index max_tokens) {
  return join_tokens(vocab.decode(nn::greedy_decode(tape, decoder, instruction, max_tokens)));
}

}  // namespace lrta::program
