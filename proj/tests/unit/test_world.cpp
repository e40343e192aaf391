#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lrta/answer/answer.hpp"
#include "lrta/error.hpp"
#include "lrta/exec/oracle.hpp"
#include "lrta/world/worldgen.hpp"

using namespace lrta;
using namespace lrta::world;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DatasetConfig small_config() {
  DatasetConfig c;
  c.train = 30;
  c.valid = 10;
  c.testdev = 10;
  return c;
}

}  // namespace

TEST_CASE("default schema shape") {
  const auto s = WorldSchema::default_schema();
  CHECK(s.categories.size() == 8);
  REQUIRE(s.metaconcepts.size() == 3);
  CHECK(s.metaconcepts[0].values.size() == 5);
  CHECK(s.metaconcepts[1].values.size() == 3);
  CHECK(s.metaconcepts[2].values.size() == 2);
  CHECK(s.predicates.size() == 6);
  CHECK(WorldSchema::from_json(s.to_json()) == s);
  auto bad = s;
  bad.categories.push_back("dog");
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("scene sampling") {
  const auto schema = WorldSchema::default_schema();
  nn::RngState rng(1);
  SceneOptions one;
  one.min_objects = one.max_objects = 1;
  const auto s = sample_scene(schema, rng, one);
  CHECK(s.objects.size() == 1);
  CHECK(s.relations.empty());
  nn::RngState a(3), b(3);
  CHECK(sample_scene(schema, a, {}) == sample_scene(schema, b, {}));
  std::set<std::string> seen;
  nn::RngState cov(4);
  for (int i = 0; i < 10000; ++i) {
    const auto sc = sample_scene(schema, cov, {});
    CHECK_NOTHROW(sc.validate(schema));
    CHECK(sc.objects.size() >= 3);
    CHECK(sc.objects.size() <= 8);
    for (const auto& o : sc.objects) seen.insert(o.category);
    if (seen.size() == schema.categories.size() && i > 100) break;
  }
  CHECK(seen.size() == schema.categories.size());
  SceneOptions inverted;
  inverted.min_objects = 5;
  inverted.max_objects = 2;
  CHECK_THROWS_AS(sample_scene(schema, rng, inverted), ContractError);
}

TEST_CASE("program sampling honours the type mix and negative rate") {
  const auto schema = WorldSchema::default_schema();
  TypeMix only_exist;
  only_exist.query = only_exist.verify = 0.0;
  nn::RngState rng(9);
  int total = 0, negatives = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto scene = sample_scene(schema, rng, {});
    const auto p = sample_program_for(scene, schema, rng, only_exist);
    if (!p) continue;
    CHECK_NOTHROW(program::validate_program(p->program, schema, 5, true));
    CHECK(p->program.question_type() == "exist");
    const auto r = exec::oracle_execute(scene, p->program, schema);
    CHECK((r.short_answer == "no") == !p->answerable);
    ++total;
    negatives += r.short_answer == "no";
  }
  CHECK(total > 9000);
  CHECK(static_cast<double>(negatives) / total == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("query and verify programs read a unique referent") {
  const auto schema = WorldSchema::default_schema();
  TypeMix mix;
  mix.exist = 0.0;
  nn::RngState rng(10);
  for (int i = 0; i < 500; ++i) {
    const auto scene = sample_scene(schema, rng, {});
    const auto p = sample_program_for(scene, schema, rng, mix);
    if (!p) continue;
    const auto r = exec::oracle_execute(scene, p->program, schema);
    const auto& before = r.bitmaps[r.bitmaps.size() - 2];
    CHECK(std::count(before.begin(), before.end(), 1) == 1);
  }
}

TEST_CASE("dataset: counts, disjointness, consistency, balance") {
  const auto schema = WorldSchema::default_schema();
  const auto cfg = small_config();
  const auto splits = build_dataset(schema, cfg);
  REQUIRE(splits.size() == 3);
  CHECK(splits[0].scenes.size() == 30);
  CHECK(splits[1].scenes.size() == 10);
  CHECK(splits[2].scenes.size() == 10);
  for (const auto& sp : splits) {
    CHECK(sp.items.size() >= sp.scenes.size());
    CHECK(sp.items.size() <= sp.scenes.size() * cfg.questions_per_scene);
  }
  std::set<std::string> ids;
  std::size_t scenes = 0;
  for (const auto& sp : splits) {
    for (const auto& s : sp.scenes) ids.insert(s.scene_id);
    scenes += sp.scenes.size();
    std::map<std::string, const SymbolicScene*> by_id;
    for (const auto& s : sp.scenes) by_id[s.scene_id] = &s;
    std::map<std::string, std::map<std::string, int>> answers;
    for (const auto& it : sp.items) {
      const auto& scene = *by_id.at(it.scene_id);
      const auto r = exec::oracle_execute(scene, it.program, schema);
      CHECK(r.bitmaps == it.bitmaps);
      CHECK(r.short_answer == it.short_answer);
      CHECK(answer::short_answer_of(it.full_answer) == it.short_answer);
      answers[it.question_type][it.short_answer]++;
    }
    for (const auto& type : {"exist", "verify"}) {
      const auto& a = answers[type];
      const int n = a.count("yes") ? a.at("yes") : 0;
      const int m = a.count("no") ? a.at("no") : 0;
      if (n + m < 10) continue;
      CHECK(std::max(n, m) <= 0.6 * (n + m) + 1.0);
    }
  }
  CHECK(ids.size() == scenes);
}

TEST_CASE("dataset files regenerate byte-identically") {
  const auto schema = WorldSchema::default_schema();
  const auto root = std::filesystem::temp_directory_path() / "lrta_test_world";
  std::filesystem::remove_all(root);
  write_dataset(root / "a", schema, build_dataset(schema, small_config()));
  write_dataset(root / "b", schema, build_dataset(schema, small_config()));
  for (const auto& entry : std::filesystem::directory_iterator(root / "a")) {
    CHECK(slurp(entry.path()) == slurp(root / "b" / entry.path().filename()));
  }
  const auto back = read_split(root / "a", "valid");
  const auto fresh = build_split(schema, small_config(), "valid");
  REQUIRE(back.items.size() == fresh.items.size());
  CHECK(item_to_json(back.items[3]) == item_to_json(fresh.items[3]));
  CHECK(read_schema(root / "a") == schema);
}

TEST_CASE("item json errors name the field") {
  Json j = {{"question_id", "q"}, {"scene_id", "s"}};
  try {
    item_from_json(j);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("tokens") != std::string::npos);
  }
}

TEST_CASE("GQA adapter keeps known categories and their relations") {
  const auto schema = WorldSchema::default_schema();
  const Json gqa = Json::parse(R"({
    "img1": {"width": 200, "height": 100, "objects": {
      "10": {"name": "girl", "x": 20, "y": 10, "w": 40, "h": 50, "attributes": ["red", "shiny"],
             "relations": [{"name": "holding", "object": "11"}, {"name": "near", "object": "11"},
                           {"name": "on", "object": "12"}]},
      "11": {"name": "hamburger", "x": 100, "y": 50, "w": 20, "h": 10, "attributes": ["small"], "relations": []},
      "12": {"name": "lamp", "x": 0, "y": 0, "w": 10, "h": 10, "attributes": [], "relations": []}
    }}})");
  const auto scenes = scenes_from_gqa(gqa, schema);
  REQUIRE(scenes.size() == 1);
  const auto& s = scenes[0];
  CHECK(s.scene_id == "img1");
  REQUIRE(s.objects.size() == 2);
  CHECK(s.objects[0].attributes.at("color") == "red");
  CHECK(s.objects[0].attributes.count("material") == 0);
  CHECK(s.objects[0].box[0] == doctest::Approx(0.1));
  CHECK(s.objects[0].box[3] == doctest::Approx(0.5));
  REQUIRE(s.relations.size() == 1);
  CHECK(s.relations[0].predicate == "holding");
  CHECK_NOTHROW(s.validate(schema));
}
