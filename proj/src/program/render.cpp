#include "lrta/program/render.hpp"

#include "lrta/error.hpp"

namespace lrta::program {

namespace {

struct NounPhrase {
  std::vector<std::string> adjectives;
  std::string head = "thing";
  std::vector<std::string> tail;

  std::vector<std::string> tokens() const {
    std::vector<std::string> out = adjectives;
    out.push_back(head);
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
};

}  // namespace

std::vector<std::string> describe(const InstructionProgram& program) {
  NounPhrase np;
  for (const auto& step : program.steps) {
    switch (step.op) {
      case Opcode::select:
        np = NounPhrase{{}, step.arg, {}};
        break;
      case Opcode::filter_attr:
        np.adjectives.push_back(step.value);
        break;
      case Opcode::relate: {
        NounPhrase outer;
        if (step.direction == Direction::forward) {
          outer.tail.push_back("the");
          const auto inner = np.tokens();
          outer.tail.insert(outer.tail.end(), inner.begin(), inner.end());
          outer.tail.push_back("is");
          outer.tail.push_back(step.arg);
        } else {
          outer.tail = {step.arg, "the"};
          const auto inner = np.tokens();
          outer.tail.insert(outer.tail.end(), inner.begin(), inner.end());
        }
        np = std::move(outer);
        break;
      }
      case Opcode::exist:
      case Opcode::query_attr:
      case Opcode::verify_attr:
        break;
    }
  }
  return np.tokens();
}

Question render_question(const InstructionProgram& program, nn::RngState& rng) {
  if (!program.has_terminal()) throw ValidationError("cannot render a question for a program without a terminal step");
  const Instruction& last = program.steps.back();
  const auto desc = describe(program);
  Question q;
  q.question_type = opcode_name(last.op);
  auto& t = q.tokens;
  switch (last.op) {
    case Opcode::exist:
      t = {"is", "there", "a"};
      t.insert(t.end(), desc.begin(), desc.end());
      break;
    case Opcode::query_attr:
      t = {rng.bernoulli(0.5) ? "what" : "which", last.arg, "is", "the"};
      t.insert(t.end(), desc.begin(), desc.end());
      break;
    case Opcode::verify_attr:
      t = {"is", "the"};
      t.insert(t.end(), desc.begin(), desc.end());
      t.push_back(last.value);
      break;
    default:
      break;
  }
  t.push_back("?");
  return q;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace lrta::program
