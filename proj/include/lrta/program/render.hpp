#pragma once

#include <string>
#include <vector>

#include "lrta/nn/rng.hpp"
#include "lrta/program/instruction.hpp"

namespace lrta::program {

struct Question {
  std::string question_id;
  std::string scene_id;
  std::vector<std::string> tokens;
  /// Terminal opcode name of the gold program.
  std::string question_type;
};

/// Noun phrase for the active set built by the non-terminal steps, e.g.
///   select cube; filter color red                 -> "red cube"
///   select girl; relate holding fwd               -> "thing the girl is holding"
///   select girl; relate holding bwd; filter ...   -> "red thing holding the girl"
std::vector<std::string> describe(const InstructionProgram& program);

/// Lowercase, space-tokenized template question:
///   exist         -> "is there a <desc> ?"
///   query mc      -> "what|which <mc> is the <desc> ?"   (wording drawn from rng)
///   verify mc v   -> "is the <desc> <v> ?"
/// The program must end in a terminal step.
Question render_question(const InstructionProgram& program, nn::RngState& rng);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace lrta::program
