#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lrta/world/schema.hpp"

namespace lrta::program {

enum class Opcode { select, filter_attr, relate, exist, query_attr, verify_attr };
enum class Direction { forward, backward };

/// One scene-graph traversal step.
///
///   select  <category>            arg = category
///   filter  <metaconcept> <value> arg = metaconcept, value
///   relate  <predicate> fwd|bwd   arg = predicate, direction
///   exist
///   query   <metaconcept>         arg = metaconcept
///   verify  <metaconcept> <value> arg = metaconcept, value
struct Instruction {
  Opcode op = Opcode::exist;
  std::string arg;
  std::string value;
  Direction direction = Direction::forward;

  static Instruction select(std::string category);
  static Instruction filter(std::string metaconcept, std::string value);
  static Instruction relate(std::string predicate, Direction direction);
  static Instruction exist();
  static Instruction query(std::string metaconcept);
  static Instruction verify(std::string metaconcept, std::string value);

  bool terminal() const { return op == Opcode::exist || op == Opcode::query_attr || op == Opcode::verify_attr; }
  friend bool operator==(const Instruction&, const Instruction&);
};

struct InstructionProgram {
  std::vector<Instruction> steps;

  std::size_t size() const { return steps.size(); }
  bool has_terminal() const { return !steps.empty() && steps.back().terminal(); }
  bool has_relate() const;
  /// Name of the terminal opcode ("exist", "query", "verify"), or "none".
  std::string question_type() const;

  friend bool operator==(const InstructionProgram&, const InstructionProgram&) = default;
};

std::string opcode_name(Opcode op);

/// Canonical lowercase serialization, e.g. "relate holding fwd".
std::string to_text(const Instruction& instruction);
std::vector<std::string> to_tokens(const Instruction& instruction);
/// Inverse of to_text. Throws ValidationError on malformed text.
Instruction instruction_from_text(std::string_view text);

std::vector<std::string> program_to_strings(const InstructionProgram& program);
InstructionProgram program_from_strings(const std::vector<std::string>& lines);

/// Checks: 1 <= M <= m_max, first step is select, terminal steps only in the
/// last position, arguments drawn from the schema. With `require_terminal`
/// the last step must also be terminal. Throws ValidationError naming the
/// violated invariant.
void validate_program(const InstructionProgram& program, const WorldSchema& schema, std::size_t m_max,
                      bool require_terminal = false);

}  // namespace lrta::program
