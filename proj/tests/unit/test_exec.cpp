#include <doctest.h>

#include <cmath>

#include "lrta/error.hpp"
#include "lrta/exec/engine.hpp"
#include "lrta/exec/oracle.hpp"
#include "lrta/world/worldgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace lrta;
using namespace lrta::exec;
using program::Direction;
using program::Instruction;
using program::InstructionProgram;

namespace {

Tensor random_tensor(nn::RngState& rng, Index rows, Index cols) {
  Tensor t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
  return t;
}

struct Fixture {
  nn::ParameterStore store;
  ExecutionEngine engine;
  explicit Fixture(Index dim, Index hidden = 8) {
    nn::RngState rng(21);
    engine = ExecutionEngine::create(store, "think", dim, hidden, rng);
  }
};

scene::VectorSceneGraph random_graph(Tape& tape, nn::RngState& rng, Index n, Index d) {
  scene::VectorSceneGraph g;
  g.objects = tape.constant(random_tensor(rng, n, d));
  g.edges = tape.constant(random_tensor(rng, n * (n - 1), d));
  g.slot_count = n;
  return g;
}

}  // namespace

TEST_CASE("neighbor feature width and zero weights") {
  Fixture f(4);
  CHECK(f.engine.neighbor.in_dim() == 16);
  for (auto& p : f.store.all()) p.value.setZero();
  Tape tape(false);
  nn::RngState rng(1);
  auto r = [&] { return tape.constant(random_tensor(rng, 1, 4)); };
  CHECK(neighbor_feature(tape, f.engine, r(), r(), r(), r()).value().isZero());
  CHECK_THROWS_AS(neighbor_feature(tape, f.engine, tape.constant(Tensor::Zero(1, 3)), r(), r(), r()), DimensionError);
}

TEST_CASE("context vector is the mean") {
  Tape tape(false);
  Tensor a(1, 2), b(1, 2);
  a << 1, 1;
  b << 3, 3;
  std::vector<Var> two{tape.constant(a), tape.constant(b)};
  CHECK(context_vector(tape, two, 2).value() == (Tensor(1, 2) << 2, 2).finished());
  std::vector<Var> swapped{two[1], two[0]};
  CHECK(context_vector(tape, swapped, 2).value() == context_vector(tape, two, 2).value());
  CHECK(context_vector(tape, std::span<const Var>(two.data(), 1), 2).value() == a);
  CHECK(context_vector(tape, {}, 2).value().isZero());
}

TEST_CASE("classification tie rule and saturation") {
  CHECK(bitmap_bit(0.5) == 0);
  CHECK(bitmap_bit(0.5000001) == 1);
  Tensor logits(1, 2);
  logits << 0, 10;
  CHECK(nn::softmax_rows(logits)(0, 1) == doctest::Approx(1.0).epsilon(1e-4));
  Fixture f(4);
  for (auto& p : f.store.all()) p.value.setZero();
  Tape tape(false);
  const Tensor lp = classify_node(tape, f.engine, tape.constant(Tensor::Ones(1, 4)), tape.constant(Tensor::Ones(1, 4)),
                                  tape.constant(Tensor::Ones(1, 4)))
                        .value();
  CHECK(std::exp(lp(0, 1)) == doctest::Approx(0.5));
}

TEST_CASE("history is the score-weighted sum") {
  Tape tape(false);
  Tensor s(2, 1), o(2, 2);
  s << 0.5, 0.5;
  o << 2, 0, 0, 2;
  CHECK(history_vector(tape.constant(s), tape.constant(o)).value() == (Tensor(1, 2) << 1, 1).finished());
  s << 1, 0;
  CHECK(history_vector(tape.constant(s), tape.constant(o)).value() == o.row(0));
  s << 0, 0;
  CHECK(history_vector(tape.constant(s), tape.constant(o)).value().isZero());
  CHECK_THROWS_AS(history_vector(tape.constant(Tensor::Zero(3, 1)), tape.constant(o)), DimensionError);
}

TEST_CASE("batched execution equals the per-node definition") {
  const Index d = 5;
  Fixture f(d, 7);
  nn::RngState rng(33);
  for (Index n : {1, 2, 4}) {
    Tape tape(false);
    const auto g = random_graph(tape, rng, n, d);
    std::vector<Var> instr{tape.constant(random_tensor(rng, 1, d)), tape.constant(random_tensor(rng, 1, d)),
                           tape.constant(random_tensor(rng, 1, d))};
    const auto trace = execute(tape, f.engine, g, instr);
    REQUIRE(trace.size() == 3);
    Var history = tape.constant(Tensor::Zero(1, d));
    for (std::size_t m = 0; m < instr.size(); ++m) {
      Tensor scores(n, 1);
      for (Index c = 0; c < n; ++c) {
        std::vector<Var> feats;
        for (Index k = 0; k < n; ++k) {
          if (k == c) continue;
          const Var edge = nn::slice_rows(g.edges, scene::VectorSceneGraph::pair_index(k, c, n), 1);
          feats.push_back(neighbor_feature(tape, f.engine, nn::slice_rows(g.objects, k, 1), edge, history, instr[m]));
        }
        const Var ctx = context_vector(tape, feats, d);
        const Var lp = classify_node(tape, f.engine, nn::slice_rows(g.objects, c, 1), ctx, instr[m]);
        scores(c, 0) = std::exp(lp.value()(0, 1));
        CHECK(std::abs(trace.node_logp[m].value()(c, 1) - lp.value()(0, 1)) < 1e-12);
        CHECK(std::abs(trace.states[m].scores[static_cast<std::size_t>(c)] - scores(c, 0)) < 1e-12);
        CHECK(trace.states[m].bitmap[static_cast<std::size_t>(c)] == bitmap_bit(scores(c, 0)));
      }
      history = history_vector(tape.constant(scores), g.objects);
      CHECK((trace.states[m].history - history.value()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("execution determinism and traversal loss closed form") {
  const Index d = 4;
  Fixture f(d);
  for (auto& p : f.store.all()) p.value.setZero();
  nn::RngState rng(2);
  Tape tape(false);
  const auto g = random_graph(tape, rng, 3, d);
  std::vector<Var> instr{tape.constant(random_tensor(rng, 1, d)), tape.constant(random_tensor(rng, 1, d))};
  const auto a = execute(tape, f.engine, g, instr);
  const auto b = execute(tape, f.engine, g, instr);
  for (std::size_t m = 0; m < 2; ++m) CHECK(a.states[m].scores == b.states[m].scores);
  const std::vector<std::vector<int>> gold{{1, 0, 1}, {0, 0, 1}};
  CHECK(traversal_loss(a, gold).scalar() == doctest::Approx(2 * 3 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(traversal_loss(a, {{1, 0, 1}}), DimensionError);
  CHECK_THROWS_AS(traversal_loss(a, {{1, 0}, {0, 1}}), DimensionError);
}

TEST_CASE("singleton graph uses a zero context") {
  Fixture f(3);
  nn::RngState rng(4);
  Tape tape(false);
  const auto g = random_graph(tape, rng, 1, 3);
  std::vector<Var> instr{tape.constant(random_tensor(rng, 1, 3))};
  const auto trace = execute(tape, f.engine, g, instr);
  const Var lp = classify_node(tape, f.engine, g.objects, tape.constant(Tensor::Zero(1, 3)), instr[0]);
  CHECK(trace.node_logp[0].value()(0, 1) == doctest::Approx(lp.value()(0, 1)).epsilon(1e-12));
}

TEST_CASE("traversal loss is equivariant under node relabeling") {
  const Index d = 4;
  Fixture f(d);
  nn::RngState rng(7);
  Tape tape(false);
  const Tensor obj = random_tensor(rng, 3, d);
  const Tensor edges = random_tensor(rng, 6, d);
  std::vector<Var> instr{tape.constant(random_tensor(rng, 1, d))};
  scene::VectorSceneGraph g{tape.constant(obj), tape.constant(edges), 3, {}};
  const std::vector<int> perm{2, 0, 1};  // new position -> old position
  Tensor pobj(3, d), pedges(6, d);
  for (Index i = 0; i < 3; ++i) {
    pobj.row(i) = obj.row(perm[i]);
    for (Index j = 0; j < 3; ++j) {
      if (i == j) continue;
      pedges.row(scene::VectorSceneGraph::pair_index(i, j, 3)) =
          edges.row(scene::VectorSceneGraph::pair_index(perm[i], perm[j], 3));
    }
  }
  scene::VectorSceneGraph pg{tape.constant(pobj), tape.constant(pedges), 3, {}};
  const std::vector<int> gold{1, 0, 1};
  const std::vector<int> pgold{gold[2], gold[0], gold[1]};
  const double a = traversal_loss(execute(tape, f.engine, g, instr), {gold}).scalar();
  const double b = traversal_loss(execute(tape, f.engine, pg, instr), {pgold}).scalar();
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("oracle: worked examples") {
  const auto schema = WorldSchema::default_schema();
  const auto scene = testing::girl_hamburger();
  auto r = oracle_execute(scene, {{Instruction::select("girl")}}, schema);
  CHECK(r.bitmaps == std::vector<std::vector<int>>{{1, 0}});
  CHECK(r.short_answer.empty());
  r = oracle_execute(scene, {{Instruction::select("girl"), Instruction::relate("holding", Direction::forward),
                              Instruction::exist()}},
                     schema);
  CHECK(r.bitmaps == std::vector<std::vector<int>>{{1, 0}, {0, 1}, {0, 1}});
  CHECK(r.short_answer == "yes");
  r = oracle_execute(scene, {{Instruction::select("cat"), Instruction::exist()}}, schema);
  CHECK(r.bitmaps == std::vector<std::vector<int>>{{0, 0}, {0, 0}});
  CHECK(r.short_answer == "no");
  r = oracle_execute(scene, {{Instruction::select("hamburger"), Instruction::relate("holding", Direction::backward),
                              Instruction::query("color")}},
                     schema);
  CHECK(r.short_answer == "red");
  CHECK(r.referent == 0);
  r = oracle_execute(scene, {{Instruction::select("cat"), Instruction::query("color")}}, schema);
  CHECK(r.short_answer == "none");
  r = oracle_execute(scene, {{Instruction::select("girl"), Instruction::verify("size", "small")}}, schema);
  CHECK(r.short_answer == "no");
  CHECK(r.bitmaps.back() == std::vector<int>{0, 0});
  CHECK_THROWS_AS(oracle_execute(scene, {{Instruction::select("unicorn")}}, schema), ValidationError);
}

TEST_CASE("oracle: filter never grows the set and agrees with brute force") {
  const auto schema = WorldSchema::default_schema();
  nn::RngState rng(55);
  for (int t = 0; t < 200; ++t) {
    auto srng = rng.derive(static_cast<std::uint64_t>(t));
    const auto scene = world::sample_scene(schema, srng, {}, "s");
    const auto drawn = world::sample_program_for(scene, schema, srng, {}, 4);
    if (!drawn) continue;
    const auto& sampled = *drawn;
    const auto r = oracle_execute(scene, sampled.program, schema);
    CHECK(r.bitmaps == testing::brute_force_bitmaps(scene, sampled.program));
    for (std::size_t m = 1; m < sampled.program.size(); ++m) {
      if (sampled.program.steps[m].op != program::Opcode::filter_attr) continue;
      for (std::size_t i = 0; i < r.bitmaps[m].size(); ++i) CHECK(r.bitmaps[m][i] <= r.bitmaps[m - 1][i]);
    }
  }
}

TEST_CASE("trace json names nodes") {
  const Index d = 3;
  Fixture f(d);
  nn::RngState rng(1);
  Tape tape(false);
  const auto g = random_graph(tape, rng, 2, d);
  std::vector<Var> instr{tape.constant(random_tensor(rng, 1, d))};
  auto trace = execute(tape, f.engine, g, instr);
  trace.instructions = {"select girl"};
  const auto j = trace_to_json(trace, {"girl#0", "hamburger#1"});
  REQUIRE(j["steps"].size() == 1);
  CHECK(j["steps"][0]["instruction"] == "select girl");
  CHECK(j["nodes"].size() == 2);
  CHECK(j["steps"][0]["bitmap"].size() == 2);
}
