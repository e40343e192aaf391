#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lrta/exec/oracle.hpp"
#include "lrta/nn/layers.hpp"
#include "lrta/program/vocabulary.hpp"

namespace lrta::answer {

using nn::Index;
using nn::Tape;
using nn::Var;

struct FullAnswer {
  std::vector<std::string> tokens;
  std::string short_answer;
};

/// First token when it is "yes" / "no", otherwise the token before the
/// closing ".". Empty for an empty sentence.
std::string short_answer_of(const std::vector<std::string>& tokens);

/// Template sentence for a program ending in a terminal step:
///   exist   "yes , there is a <desc> ."  |  "no , there is no <desc> ."
///   query   "the <mc> of the <desc> is <value> ."
///   verify  "yes , the <desc> is <v> ."  |  "no , the <desc> is not <v> ."
FullAnswer render_full_answer(const program::InstructionProgram& program, const exec::OracleResult& result);

/// Full-answer decoder. Memory slot m is
/// LayerNorm(Linear(h_m ++ i_m) + step_m), decoded greedily.
struct AnswerGenerator {
  nn::FeedForwardLayer memory;
  nn::Embedding steps;
  nn::LayerNorm norm;
  nn::SequenceDecoder decoder;
  Index max_tokens = 16;

  static AnswerGenerator create(nn::ParameterStore& store, const std::string& name, Index vocab, Index dim,
                                Index hidden, Index heads, Index blocks, Index m_max, Index max_tokens,
                                nn::RngState& rng);
};

Var answer_memory(Tape& tape, const AnswerGenerator& generator, std::span<const Var> histories,
                  std::span<const Var> instructions);

/// Teacher-forced negative log-likelihood of the answer token ids.
Var answer_loss(Tape& tape, const AnswerGenerator& generator, Var memory, std::span<const Index> target);

FullAnswer generate_answer(Tape& tape, const AnswerGenerator& generator, Var memory, const Vocabulary& vocab);

struct Prediction {
  std::string question_id;
  std::vector<std::string> full_answer;
  std::string short_answer;
  std::string question_type;
};

struct TypeScore {
  double full_acc = 0.0;
  double short_acc = 0.0;
  std::size_t n = 0;
};

struct Metrics {
  double full_acc = 0.0;
  double short_acc = 0.0;
  std::map<std::string, TypeScore> by_type;
  std::size_t n = 0;
};

/// Aligns by question_id. Throws DataError listing ids present on one side
/// only. Per-type grouping follows the reference question_type.
Metrics score(const std::vector<Prediction>& predictions, const std::vector<Prediction>& references);

Json metrics_to_json(const Metrics& metrics);
Json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j);

}  // namespace lrta::answer
