#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrta/nn/layers.hpp"
#include "lrta/program/instruction.hpp"
#include "lrta/program/vocabulary.hpp"

namespace lrta::program {

using nn::Index;
using nn::Tape;
using nn::Var;

struct ParserConfig {
  Index dim = 64;
  Index hidden = 128;
  Index heads = 2;
  Index encoder_blocks = 2;
  Index m_max = 5;
  Index max_question_len = 32;
};

/// Question tokens -> M instruction vectors. A self-attention encoder reads
/// the question; a step-wise decoder emits one vector per step from a learned
/// step query plus the previous vector, attending over the encoded tokens.
/// A two-way stop classifier on each vector decides whether the program ends.
struct QuestionParser {
  nn::Embedding tokens;
  nn::Embedding positions;
  std::vector<nn::EncoderBlock> encoder;
  nn::Embedding step_queries;
  nn::FeedForwardLayer previous;
  nn::MultiHeadAttention readout;
  nn::LayerNorm norm1;
  nn::FeedForwardNet ff;
  nn::LayerNorm norm2;
  nn::FeedForwardLayer stop;
  Index m_max = 5;

  static QuestionParser create(nn::ParameterStore& store, const std::string& name, Index vocab,
                               const ParserConfig& config, nn::RngState& rng);
};

struct InstructionVectorSeq {
  std::vector<Var> vectors;  // each 1 x D
  Var stop_logp;             // M x 2; column 1 = "stop after this step"
  /// Number of emitted steps (the stop position, 1-based).
  Index stop_position = 0;

  Index size() const { return static_cast<Index>(vectors.size()); }
};

/// Greedy stop unless `forced_steps` is given (teacher forcing of M).
/// Throws ContractError on an empty question.
InstructionVectorSeq parse_question(Tape& tape, const QuestionParser& parser, std::span<const Index> token_ids,
                                    std::optional<Index> forced_steps = std::nullopt);

/// Dense encoding of a canonical instruction used when gold programs bypass
/// the parser: LayerNorm(sum_p token_p + position_p).
struct GoldInstructionEmbedder {
  nn::Embedding tokens;
  nn::Embedding positions;
  nn::LayerNorm norm;

  static GoldInstructionEmbedder create(nn::ParameterStore& store, const std::string& name, Index vocab, Index dim,
                                        nn::RngState& rng);
};

std::vector<Var> embed_gold_program(Tape& tape, const GoldInstructionEmbedder& embedder,
                                    const InstructionProgram& program, const Vocabulary& vocab);

/// Supervision for the parser: canonical token ids per step and the step at
/// which the stop classifier must fire.
struct GoldProgramTargets {
  std::vector<std::vector<Index>> step_tokens;
  Index stop_step = 0;  // 1-based, equals M
};

/// Validates the program first (ValidationError lists the violated
/// invariant).
GoldProgramTargets encode_gold_program(const InstructionProgram& program, const WorldSchema& schema,
                                       const Vocabulary& vocab, std::size_t m_max);

/// Sum of per-step text negative log-likelihoods plus the stop
/// cross-entropy. `sequence` must hold exactly stop_step vectors.
Var instruction_loss(Tape& tape, const InstructionVectorSeq& sequence, const nn::SequenceDecoder& decoder,
                     const GoldProgramTargets& targets);

/// Greedy text readout of one instruction vector.
std::string decode_instruction(Tape& tape, const nn::SequenceDecoder& decoder, Var instruction,
                               const Vocabulary& vocab, Index max_tokens);

}  // namespace lrta::program
