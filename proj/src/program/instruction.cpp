#include "lrta/program/instruction.hpp"

#include <sstream>

#include "lrta/error.hpp"

namespace lrta::program {

Instruction Instruction::select(std::string category) { return {Opcode::select, std::move(category), {}, Direction::forward}; }
Instruction Instruction::filter(std::string metaconcept, std::string value) {
  return {Opcode::filter_attr, std::move(metaconcept), std::move(value), Direction::forward};
}
Instruction Instruction::relate(std::string predicate, Direction direction) {
  return {Opcode::relate, std::move(predicate), {}, direction};
}
Instruction Instruction::exist() { return {Opcode::exist, {}, {}, Direction::forward}; }
Instruction Instruction::query(std::string metaconcept) { return {Opcode::query_attr, std::move(metaconcept), {}, Direction::forward}; }
Instruction Instruction::verify(std::string metaconcept, std::string value) {
  return {Opcode::verify_attr, std::move(metaconcept), std::move(value), Direction::forward};
}

bool operator==(const Instruction& a, const Instruction& b) {
  if (a.op != b.op || a.arg != b.arg || a.value != b.value) return false;
  return a.op != Opcode::relate || a.direction == b.direction;
}

bool InstructionProgram::has_relate() const {
  for (const auto& s : steps) {
    if (s.op == Opcode::relate) return true;
  }
  return false;
}

std::string InstructionProgram::question_type() const {
  return has_terminal() ? opcode_name(steps.back().op) : "none";
}

std::string opcode_name(Opcode op) {
  switch (op) {
    case Opcode::select: return "select";
    case Opcode::filter_attr: return "filter";
    case Opcode::relate: return "relate";
    case Opcode::exist: return "exist";
    case Opcode::query_attr: return "query";
    case Opcode::verify_attr: return "verify";
  }
  return "?";
}

std::vector<std::string> to_tokens(const Instruction& in) {
  switch (in.op) {
    case Opcode::select: return {"select", in.arg};
    case Opcode::filter_attr: return {"filter", in.arg, in.value};
    case Opcode::relate: return {"relate", in.arg, in.direction == Direction::forward ? "fwd" : "bwd"};
    case Opcode::exist: return {"exist"};
    case Opcode::query_attr: return {"query", in.arg};
    case Opcode::verify_attr: return {"verify", in.arg, in.value};
  }
  return {};
}

std::string to_text(const Instruction& in) {
  std::string out;
  for (const auto& t : to_tokens(in)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Instruction instruction_from_text(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::vector<std::string> tok;
  for (std::string t; is >> t;) tok.push_back(t);
  auto fail = [&](const std::string& why) {
    return ValidationError("malformed instruction '" + std::string(text) + "': " + why);
  };
  if (tok.empty()) throw fail("empty");
  const std::string& op = tok[0];
  auto arity = [&](std::size_t n) {
    if (tok.size() != n + 1) throw fail("'" + op + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (op == "select") {
    arity(1);
    return Instruction::select(tok[1]);
  }
  if (op == "filter") {
    arity(2);
    return Instruction::filter(tok[1], tok[2]);
  }
  if (op == "relate") {
    arity(2);
    if (tok[2] != "fwd" && tok[2] != "bwd") throw fail("direction must be fwd or bwd");
    return Instruction::relate(tok[1], tok[2] == "fwd" ? Direction::forward : Direction::backward);
  }
  if (op == "exist") {
    arity(0);
    return Instruction::exist();
  }
  if (op == "query") {
    arity(1);
    return Instruction::query(tok[1]);
  }
  if (op == "verify") {
    arity(2);
    return Instruction::verify(tok[1], tok[2]);
  }
  throw fail("unknown opcode '" + op + "'");
}

std::vector<std::string> program_to_strings(const InstructionProgram& program) {
  std::vector<std::string> out;
  for (const auto& s : program.steps) out.push_back(to_text(s));
  return out;
}

InstructionProgram program_from_strings(const std::vector<std::string>& lines) {
  InstructionProgram p;
  for (const auto& l : lines) p.steps.push_back(instruction_from_text(l));
  return p;
}

void validate_program(const InstructionProgram& program, const WorldSchema& schema, std::size_t m_max,
                      bool require_terminal) {
  const auto& steps = program.steps;
  if (steps.empty()) throw ValidationError("program has no steps (M >= 1)");
  if (steps.size() > m_max) {
    throw ValidationError("program has " + std::to_string(steps.size()) + " steps, exceeds M_max " + std::to_string(m_max));
  }
  if (steps.front().op != Opcode::select) throw ValidationError("first step must be select");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const Instruction& s = steps[k];
    if (s.terminal() && k + 1 != steps.size()) {
      throw ValidationError("terminal step '" + to_text(s) + "' at position " + std::to_string(k + 1) + " is not last");
    }
    switch (s.op) {
      case Opcode::select:
        if (schema.category_index(s.arg) < 0) throw ValidationError("unknown category '" + s.arg + "'");
        break;
      case Opcode::filter_attr:
      case Opcode::verify_attr: {
        const int mc = schema.metaconcept_index(s.arg);
        if (mc < 0) throw ValidationError("unknown metaconcept '" + s.arg + "'");
        if (schema.value_index(mc, s.value) < 0) {
          throw ValidationError("value '" + s.value + "' not in metaconcept '" + s.arg + "'");
        }
        break;
      }
      case Opcode::relate:
        if (schema.predicate_index(s.arg) < 0) throw ValidationError("unknown predicate '" + s.arg + "'");
        break;
      case Opcode::query_attr:
        if (schema.metaconcept_index(s.arg) < 0) throw ValidationError("unknown metaconcept '" + s.arg + "'");
        break;
      case Opcode::exist:
        break;
    }
  }
  if (require_terminal && !steps.back().terminal()) throw ValidationError("program must end in a terminal step");
}

}  // namespace lrta::program
