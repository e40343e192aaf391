#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lrta/error.hpp"
#include "lrta/scene/matching.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace lrta;
using nn::Tape;
using nn::Tensor;

namespace {

struct Heads {
  WorldSchema schema = WorldSchema::default_schema();
  nn::ParameterStore store;
  scene::SceneEmbedder embedder;
  scene::SceneGraphHeads heads;
  explicit Heads(nn::Index dim = 8) {
    nn::RngState rng(4);
    embedder = scene::SceneEmbedder::create(store, "embed", schema, dim, rng);
    heads = scene::SceneGraphHeads::create(store, "look", schema, dim, 16, rng);
  }
};

SymbolicScene random_scene(const WorldSchema& schema, nn::RngState& rng, int n) {
  SymbolicScene s;
  for (int i = 0; i < n; ++i) {
    SymbolicObject o;
    o.id = i;
    o.category = schema.categories[rng.index(schema.categories.size())];
    for (const auto& mc : schema.metaconcepts) o.attributes[mc.name] = mc.values[rng.index(mc.values.size())];
    o.box = {rng.uniform(0, 0.6), rng.uniform(0, 0.6), rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3)};
    s.objects.push_back(o);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && rng.bernoulli(0.3)) s.relations.push_back({i, schema.predicates[rng.index(schema.predicates.size())], j});
    }
  }
  return s;
}

}  // namespace

TEST_CASE("scene validation catches malformed scenes") {
  const auto schema = WorldSchema::default_schema();
  auto s = testing::girl_hamburger();
  CHECK_NOTHROW(s.validate(schema));
  auto dup = s;
  dup.objects[1].id = 0;
  CHECK_THROWS_AS(dup.validate(schema), ValidationError);
  auto self = s;
  self.relations.push_back({0, "on", 0});
  CHECK_THROWS_AS(self.validate(schema), ValidationError);
  auto label = s;
  label.objects[0].category = "unicorn";
  CHECK_THROWS_AS(label.validate(schema), ValidationError);
  auto box = s;
  box.objects[0].box[2] = 0.0;
  CHECK_THROWS_AS(box.validate(schema), ValidationError);
}

TEST_CASE("scene json round trip and ablation copies") {
  const auto s = testing::girl_hamburger();
  CHECK(scene_from_json(scene_to_json(s)) == s);
  CHECK(strip_relations(s).relations.empty());
  CHECK(strip_attributes(s).objects[0].attributes.empty());
  CHECK(strip_attributes(s).relations == s.relations);
}

TEST_CASE("empty scene fills every slot with no object") {
  Heads h;
  Tape tape(false);
  nn::RngState rng(1);
  scene::EmbedOptions opts;
  opts.slots = 4;
  const auto g = scene::embed_scene(tape, SymbolicScene{}, h.schema, h.embedder, h.heads.encoder, opts, rng);
  CHECK(g.objects.rows() == 4);
  CHECK(g.edges.rows() == 12);
  CHECK(std::all_of(g.slot_object.begin(), g.slot_object.end(), [](int p) { return p == -1; }));
}

TEST_CASE("embedding is deterministic and rejects overfull scenes") {
  Heads h;
  scene::EmbedOptions opts;
  opts.slots = 3;
  auto scene = testing::girl_hamburger();
  Tape t1(false), t2(false);
  nn::RngState r1(5), r2(5);
  const auto a = scene::embed_scene(t1, scene, h.schema, h.embedder, h.heads.encoder, opts, r1);
  const auto b = scene::embed_scene(t2, scene, h.schema, h.embedder, h.heads.encoder, opts, r2);
  CHECK(a.objects.value() == b.objects.value());
  CHECK(a.edges.value() == b.edges.value());
  CHECK(a.slot_object == b.slot_object);
  opts.slots = 1;
  Tape t3(false);
  CHECK_THROWS_AS(scene::embed_scene(t3, scene, h.schema, h.embedder, h.heads.encoder, opts, r1), CapacityError);
}

TEST_CASE("slot noise has the configured standard deviation") {
  Heads h;
  SymbolicScene one;
  one.objects.push_back(testing::girl_hamburger().objects[0]);
  scene::EmbedOptions clean;
  clean.slots = 1;
  clean.permute = false;
  auto noisy = clean;
  noisy.noise_std = 0.1;
  Tape t(false);
  nn::RngState r(0);
  const Tensor base = scene::embed_scene(t, one, h.schema, h.embedder, h.heads.encoder, clean, r).objects.value();
  double sq = 0.0;
  long count = 0;
  for (int k = 0; count < 10000; ++k) {
    Tape tk(false);
    nn::RngState rk(static_cast<std::uint64_t>(k + 1));
    const Tensor v = scene::embed_scene(tk, one, h.schema, h.embedder, h.heads.encoder, noisy, rk).objects.value();
    sq += (v - base).squaredNorm();
    count += v.size();
  }
  CHECK(std::sqrt(sq / static_cast<double>(count)) == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("edge vector: width, normalization, asymmetry") {
  nn::ParameterStore store;
  nn::RngState rng(2);
  auto enc = scene::RelationEncoder::create(store, "enc", 4, rng);
  CHECK(enc.ff.in_dim() == 8);
  Tape tape(false);
  Tensor a(1, 4), b(1, 4);
  a << 1, 0, 2, 0;
  b << 0, 3, 0, -1;
  const Tensor ab = scene::build_edge_vector(tape, enc, tape.constant(a), tape.constant(b)).value();
  const Tensor ba = scene::build_edge_vector(tape, enc, tape.constant(b), tape.constant(a)).value();
  CHECK(std::abs(ab.mean()) < 1e-9);
  CHECK((ab - ba).norm() > 1e-6);
}

TEST_CASE("untrained heads emit normalized distributions") {
  Heads h;
  Tape tape(false);
  nn::RngState rng(3);
  const auto g = scene::embed_scene(tape, testing::girl_hamburger(), h.schema, h.embedder, h.heads.encoder, {}, rng);
  const auto pred = scene::predict_graph(tape, g, h.heads);
  auto rows_sum_to_one = [](const Tensor& logp) {
    for (nn::Index r = 0; r < logp.rows(); ++r) {
      if (std::abs(logp.row(r).array().exp().sum() - 1.0) > 1e-9) return false;
    }
    return true;
  };
  CHECK(rows_sum_to_one(pred.category_logp.value()));
  CHECK(rows_sum_to_one(pred.relation_logp.value()));
  for (const auto& a : pred.attribute_logp) CHECK(rows_sum_to_one(a.value()));
  const auto out = scene::read_out(pred, h.schema);
  const auto none = static_cast<nn::Index>(h.schema.categories.size());
  std::size_t real = 0;
  for (nn::Index r = 0; r < pred.category_logp.rows(); ++r) real += nn::argmax_row(pred.category_logp.value(), r) != none;
  CHECK(out.objects.size() == real);
}

TEST_CASE("hungarian: small examples") {
  Tensor c(2, 2);
  c << 1, 2, 2, 1;
  auto m = scene::hungarian_match(c);
  CHECK(m.assignment == std::vector<int>{0, 1});
  CHECK(m.total_cost == 2.0);
  Tensor z(3, 3);
  z << 5, 0, 5, 5, 5, 0, 0, 5, 5;
  m = scene::hungarian_match(z);
  CHECK(m.assignment == std::vector<int>{1, 2, 0});
  CHECK(m.total_cost == 0.0);
  Tensor rect(3, 1);
  rect << 4, 1, 3;
  m = scene::hungarian_match(rect);
  CHECK(m.slot_for(0) == 1);
  CHECK(m.assignment == std::vector<int>{-1, 0, -1});
}

TEST_CASE("hungarian matches brute force on random matrices") {
  nn::RngState rng(17);
  for (int t = 0; t < 200; ++t) {
    const auto gts = static_cast<nn::Index>(1 + rng.index(6));
    const auto preds = gts + static_cast<nn::Index>(rng.index(2));
    Tensor c(preds, gts);
    for (nn::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-5, 5);
    CHECK(scene::hungarian_match(c).total_cost == testing::brute_force_assignment(c));
  }
}

TEST_CASE("set loss: permutation invariance and box gating") {
  Heads h;
  nn::RngState rng(8);
  const auto scene = random_scene(h.schema, rng, 5);
  Tape tape(false);
  nn::RngState er(1);
  scene::EmbedOptions opts;
  opts.slots = 6;
  const auto g = scene::embed_scene(tape, scene, h.schema, h.embedder, h.heads.encoder, opts, er);
  const auto pred = scene::predict_graph(tape, g, h.heads);
  const double base = scene::set_prediction_loss(tape, pred, scene, h.schema, 1.0).loss.scalar();

  auto shuffled = scene;
  std::reverse(shuffled.objects.begin(), shuffled.objects.end());
  CHECK(std::abs(scene::set_prediction_loss(tape, pred, shuffled, h.schema, 1.0).loss.scalar() - base) < 1e-9);

  auto moved = scene;
  for (auto& o : moved.objects) o.box[0] = std::min(0.6, o.box[0] + 0.2);
  CHECK(scene::set_prediction_loss(tape, pred, scene, h.schema, 0.0).loss.scalar() ==
        doctest::Approx(scene::set_prediction_loss(tape, pred, moved, h.schema, 0.0).loss.scalar()).epsilon(1e-12));
}
