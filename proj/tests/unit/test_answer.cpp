#include <doctest.h>

#include "lrta/answer/answer.hpp"
#include "lrta/error.hpp"
#include "lrta/program/render.hpp"

using namespace lrta;
using namespace lrta::answer;
using program::Instruction;

namespace {

std::string joined(const std::vector<std::string>& t) { return program::join_tokens(t); }

Prediction pred(std::string id, std::string full, std::string short_answer, std::string type = "exist") {
  Prediction p;
  p.question_id = std::move(id);
  std::string cur;
  for (char c : full + " ") {
    if (c == ' ') {
      if (!cur.empty()) p.full_answer.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  p.short_answer = std::move(short_answer);
  p.question_type = std::move(type);
  return p;
}

exec::OracleResult answered(std::string a) {
  exec::OracleResult r;
  r.short_answer = std::move(a);
  return r;
}

}  // namespace

TEST_CASE("full answer templates") {
  auto f = render_full_answer({{Instruction::select("dog"), Instruction::exist()}}, answered("yes"));
  CHECK(joined(f.tokens) == "yes , there is a dog .");
  CHECK(f.short_answer == "yes");
  f = render_full_answer({{Instruction::select("dog"), Instruction::exist()}}, answered("no"));
  CHECK(joined(f.tokens) == "no , there is no dog .");
  f = render_full_answer(
      {{Instruction::select("cube"), Instruction::filter("color", "red"), Instruction::query("material")}},
      answered("metal"));
  CHECK(joined(f.tokens) == "the material of the red cube is metal .");
  CHECK(f.short_answer == "metal");
  f = render_full_answer({{Instruction::select("ball"), Instruction::verify("size", "large")}}, answered("no"));
  CHECK(joined(f.tokens) == "no , the ball is not large .");
  CHECK(short_answer_of(f.tokens) == "no");
}

TEST_CASE("short answer extraction") {
  CHECK(short_answer_of({"yes", ",", "there", "is", "a", "dog", "."}) == "yes");
  CHECK(short_answer_of({"the", "color", "of", "the", "dog", "is", "red", "."}) == "red");
  CHECK(short_answer_of({}).empty());
}

TEST_CASE("scoring counts exact matches") {
  std::vector<Prediction> refs{pred("a", "yes , there is a dog .", "yes"), pred("b", "no , there is no cat .", "no"),
                               pred("c", "the color of the cube is red .", "red", "query"),
                               pred("d", "yes , the ball is large .", "yes", "verify")};
  auto m = score(refs, refs);
  CHECK(m.full_acc == 1.0);
  CHECK(m.short_acc == 1.0);
  CHECK(m.n == 4);
  std::vector<Prediction> wrong{pred("a", "x", "q"), pred("b", "x", "q"), pred("c", "x", "q"), pred("d", "x", "q")};
  m = score(wrong, refs);
  CHECK(m.full_acc == 0.0);
  CHECK(m.short_acc == 0.0);
  auto half = refs;
  half[0] = wrong[0];
  half[3] = wrong[3];
  m = score(half, refs);
  CHECK(m.full_acc == 0.5);
  CHECK(m.short_acc == 0.5);
  CHECK(m.by_type.at("exist").short_acc == 0.5);
  CHECK(m.by_type.at("verify").n == 1);
  auto partial = refs;
  partial[2].full_answer.back() = "!";
  m = score(partial, refs);
  CHECK(m.full_acc == 0.75);
  CHECK(m.short_acc == 1.0);
}

TEST_CASE("scoring rejects misaligned sets") {
  std::vector<Prediction> refs{pred("a", "yes .", "yes"), pred("b", "no .", "no")};
  std::vector<Prediction> preds{pred("a", "yes .", "yes"), pred("z", "no .", "no")};
  try {
    score(preds, refs);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("z") != std::string::npos);
    CHECK(msg.find("b") != std::string::npos);
  }
}

TEST_CASE("prediction json round trip") {
  const auto p = pred("q1", "the color of the cube is red .", "red", "query");
  const auto back = prediction_from_json(prediction_to_json(p));
  CHECK(back.question_id == p.question_id);
  CHECK(back.full_answer == p.full_answer);
  CHECK(back.short_answer == p.short_answer);
  CHECK(back.question_type == p.question_type);
  CHECK(metrics_to_json(score({p}, {p}))["short_acc"] == 1.0);
}

TEST_CASE("untrained generator respects the length bound and is deterministic") {
  const auto schema = WorldSchema::default_schema();
  const auto vocab = answer_vocabulary(schema);
  nn::ParameterStore store;
  nn::RngState rng(12);
  const auto gen = AnswerGenerator::create(store, "answer", vocab.size(), 8, 16, 2, 1, 5, 16, rng);
  nn::RngState draw(3);
  std::vector<nn::Tensor> hs, is;
  for (int m = 0; m < 3; ++m) {
    nn::Tensor h(1, 8), i(1, 8);
    for (nn::Index k = 0; k < 8; ++k) {
      h(0, k) = draw.normal();
      i(0, k) = draw.normal();
    }
    hs.push_back(h);
    is.push_back(i);
  }
  auto run = [&] {
    nn::Tape tape(false);
    std::vector<Var> h, i;
    for (int m = 0; m < 3; ++m) {
      h.push_back(tape.constant(hs[static_cast<std::size_t>(m)]));
      i.push_back(tape.constant(is[static_cast<std::size_t>(m)]));
    }
    const Var memory = answer_memory(tape, gen, h, i);
    CHECK(memory.rows() == 3);
    return generate_answer(tape, gen, memory, vocab);
  };
  const auto a = run();
  CHECK(a.tokens.size() <= 16);
  CHECK(run().tokens == a.tokens);
  CHECK(a.short_answer == short_answer_of(a.tokens));
}
