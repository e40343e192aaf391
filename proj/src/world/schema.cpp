#include "lrta/world/schema.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "lrta/error.hpp"
#include "lrta/nn/rng.hpp"

namespace lrta {

WorldSchema WorldSchema::default_schema() {
  WorldSchema s;
  s.categories = {"girl", "boy", "dog", "cat", "cube", "ball", "hamburger", "table"};
  s.metaconcepts = {
      {"color", {"red", "blue", "green", "yellow", "gray"}},
      {"material", {"metal", "rubber", "plastic"}},
      {"size", {"large", "small"}},
  };
  s.predicates = {"holding", "wearing", "watching", "on", "under", "behind"};
  return s;
}

namespace {

void check_token(const std::string& kind, const std::string& label) {
  if (label.empty()) throw ValidationError("empty " + kind + " label");
  for (unsigned char c : label) {
    if (std::isspace(c) || std::isupper(c)) {
      throw ValidationError(kind + " label '" + label + "' must be a single lowercase token");
    }
  }
}

void check_unique(const std::string& kind, const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    check_token(kind, l);
    if (!seen.insert(l).second) throw ValidationError("duplicate " + kind + " label '" + l + "'");
  }
}

int find_index(const std::vector<std::string>& v, const std::string& x) {
  auto it = std::find(v.begin(), v.end(), x);
  return it == v.end() ? -1 : static_cast<int>(it - v.begin());
}

}  // namespace

void WorldSchema::validate() const {
  if (categories.empty()) throw ValidationError("schema has no categories");
  check_unique("category", categories);
  check_unique("predicate", predicates);
  std::vector<std::string> names;
  for (const auto& mc : metaconcepts) {
    names.push_back(mc.name);
    if (mc.values.size() < 2) {
      throw ValidationError("metaconcept '" + mc.name + "' needs at least 2 values, has " +
                            std::to_string(mc.values.size()));
    }
  }
  check_unique("metaconcept", names);
  check_unique("attribute value", attribute_lexicon());
}

int WorldSchema::category_index(const std::string& label) const { return find_index(categories, label); }

int WorldSchema::metaconcept_index(const std::string& name) const {
  for (std::size_t k = 0; k < metaconcepts.size(); ++k) {
    if (metaconcepts[k].name == name) return static_cast<int>(k);
  }
  return -1;
}

int WorldSchema::value_index(int metaconcept, const std::string& value) const {
  if (metaconcept < 0 || metaconcept >= static_cast<int>(metaconcepts.size())) return -1;
  return find_index(metaconcepts[static_cast<std::size_t>(metaconcept)].values, value);
}

int WorldSchema::predicate_index(const std::string& label) const { return find_index(predicates, label); }

std::optional<int> WorldSchema::metaconcept_of_value(const std::string& value) const {
  for (std::size_t k = 0; k < metaconcepts.size(); ++k) {
    if (find_index(metaconcepts[k].values, value) >= 0) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::vector<std::string> WorldSchema::attribute_lexicon() const {
  std::vector<std::string> out;
  for (const auto& mc : metaconcepts) out.insert(out.end(), mc.values.begin(), mc.values.end());
  return out;
}

Json WorldSchema::to_json() const {
  Json mcs = Json::array();
  for (const auto& mc : metaconcepts) mcs.push_back({{"name", mc.name}, {"values", mc.values}});
  return Json{{"categories", categories}, {"metaconcepts", mcs}, {"predicates", predicates}};
}

WorldSchema WorldSchema::from_json(const Json& j) {
  WorldSchema s;
  try {
    s.categories = j.at("categories").get<std::vector<std::string>>();
    s.predicates = j.at("predicates").get<std::vector<std::string>>();
    for (const auto& mc : j.at("metaconcepts")) {
      s.metaconcepts.push_back({mc.at("name").get<std::string>(), mc.at("values").get<std::vector<std::string>>()});
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed world schema: ") + e.what());
  }
  s.validate();
  return s;
}

std::uint64_t WorldSchema::fingerprint() const { return nn::fnv1a64(to_json().dump()); }

bool operator==(const Metaconcept& a, const Metaconcept& b) { return a.name == b.name && a.values == b.values; }

bool operator==(const WorldSchema& a, const WorldSchema& b) {
  return a.categories == b.categories && a.metaconcepts == b.metaconcepts && a.predicates == b.predicates;
}

}  // namespace lrta
