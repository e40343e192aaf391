#include <doctest.h>

#include "lrta/error.hpp"
#include "lrta/perturb/perturb.hpp"
#include "lrta/program/render.hpp"
#include "lrta/world/worldgen.hpp"

using namespace lrta;
using namespace lrta::perturb;

namespace {

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

const CueLexicons& lexicons() {
  static const CueLexicons lex = CueLexicons::load(LRTA_DATA_DIR "/lexicons", WorldSchema::default_schema());
  return lex;
}

}  // namespace

TEST_CASE("attribute masking") {
  const auto& lex = lexicons();
  auto m = mask_attributes(words("is there a red cube ?"), lex);
  CHECK(m.tokens == words("is there a [MASK] cube ?"));
  CHECK(m.positions == std::vector<std::size_t>{3});
  m = mask_attributes(words("is there a dog ?"), lex);
  CHECK(m.tokens == words("is there a dog ?"));
  CHECK(m.positions.empty());
  const auto once = mask_attributes(words("is the small ball metal ?"), lex).tokens;
  CHECK(mask_attributes(once, lex).tokens == once);
}

TEST_CASE("verb and preposition masking") {
  const auto& lex = lexicons();
  CHECK(mask_vb_prpn(words("what is the girl holding ?"), lex).tokens == words("what is the girl [MASK] ?"));
  CHECK(mask_vb_prpn(words("is there a dog ?"), lex).tokens == words("is there a dog ?"));
  CHECK(mask_vb_prpn(words("on in at"), lex).tokens == words("[MASK] [MASK] [MASK]"));
  CHECK(mask_vb_prpn(words("is the cube behind the ball red ?"), lex).tokens ==
        words("is the cube [MASK] the ball red ?"));
  for (const std::string v : {"holding", "holds", "held", "wears", "watched", "watches", "wearing"}) {
    INFO(v);
    CHECK(is_verb(v, lex));
  }
  CHECK_FALSE(is_verb("cube", lex));
  CHECK_FALSE(is_verb("is", lex));
  auto with_copulas = lex;
  with_copulas.mask_copulas = true;
  CHECK(mask_vb_prpn(words("is there a dog ?"), with_copulas).tokens == words("[MASK] there a dog ?"));
}

TEST_CASE("masks preserve length, commute, and only touch cue tokens") {
  const auto& lex = lexicons();
  const auto schema = WorldSchema::default_schema();
  const auto split = world::build_split(schema, [] {
    world::DatasetConfig c;
    c.train = 50;
    return c;
  }(), "train");
  for (const auto& item : split.items) {
    const auto a = mask_attributes(item.tokens, lex);
    const auto v = mask_vb_prpn(item.tokens, lex);
    REQUIRE(a.tokens.size() == item.tokens.size());
    REQUIRE(v.tokens.size() == item.tokens.size());
    for (std::size_t i = 0; i < item.tokens.size(); ++i) {
      const bool masked_a = std::find(a.positions.begin(), a.positions.end(), i) != a.positions.end();
      CHECK((a.tokens[i] == item.tokens[i]) != masked_a);
    }
    CHECK(mask_vb_prpn(a.tokens, lex).tokens == mask_attributes(v.tokens, lex).tokens);
    bool has_value_arg = false;
    for (const auto& step : item.program.steps) {
      has_value_arg |= step.op == program::Opcode::filter_attr || step.op == program::Opcode::verify_attr;
    }
    if (item.question_type != "exist" || has_value_arg) CHECK(a.positions.empty() == !has_value_arg);
    if (item.program.has_relate()) CHECK_FALSE(v.positions.empty());
  }
}

TEST_CASE("drop formatting") {
  CHECK(format_drop(54.48, 28.28) == "26.20% (54.48% → 28.28%)");
  DropRow r{"vb_prpn", "relate", 54.48, 28.28, 10};
  CHECK(r.drop() == doctest::Approx(26.20));
  DropRow swapped{"vb_prpn", "relate", 28.28, 54.48, 10};
  CHECK(swapped.drop() == doctest::Approx(-r.drop()));
  DropRow same{"attributes", "all", 70.0, 70.0, 10};
  CHECK(same.drop() == 0.0);
  const auto csv = drop_table_csv({r}, false);
  CHECK(csv.rfind("# copulas", 0) == 0);
  CHECK(csv.find("mask,subset,n,before,after,drop,formatted") != std::string::npos);
  CHECK(csv.find("26.20") != std::string::npos);
  CHECK(drop_table_json({r}, false)["rows"][0]["subset"] == "relate");
}

TEST_CASE("mask records and kinds") {
  const auto& lex = lexicons();
  Json rec = {{"question_id", "q1"}, {"tokens", words("is there a red cube ?")}, {"extra", 5}};
  const auto out = mask_record(rec, MaskKind::attributes, lex);
  CHECK(out["tokens"][3] == kMaskToken);
  CHECK(out["extra"] == 5);
  CHECK(out["mask_kind"] == "attributes");
  CHECK(out["masked_positions"] == Json::array({3}));
  CHECK(parse_mask_kind("vb_prpn") == MaskKind::vb_prpn);
  CHECK_THROWS_AS(parse_mask_kind("nouns"), ContractError);
  CHECK_THROWS_AS(CueLexicons::load("/nonexistent/dir", WorldSchema::default_schema()), LoadError);
}
