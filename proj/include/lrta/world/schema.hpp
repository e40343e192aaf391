#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace lrta {

using Json = nlohmann::json;

/// An attribute family (e.g. color) and its admissible values.
struct Metaconcept {
  std::string name;
  std::vector<std::string> values;
};

/// Vocabulary of a synthetic world: object categories, attribute families,
/// and relation predicates. Every label is a single lowercase token.
struct WorldSchema {
  std::vector<std::string> categories;
  std::vector<Metaconcept> metaconcepts;
  std::vector<std::string> predicates;

  /// 8 categories; color (5), material (3), size (2); 6 predicates.
  static WorldSchema default_schema();

  /// Throws ValidationError on duplicate labels, a metaconcept with fewer
  /// than two values, or a label that is not a single lowercase token.
  void validate() const;

  int category_index(const std::string& label) const;
  int metaconcept_index(const std::string& name) const;
  int value_index(int metaconcept, const std::string& value) const;
  int predicate_index(const std::string& label) const;
  /// Metaconcept that owns an attribute value, if any.
  std::optional<int> metaconcept_of_value(const std::string& value) const;

  /// Every attribute value token, in schema order.
  std::vector<std::string> attribute_lexicon() const;

  Json to_json() const;
  static WorldSchema from_json(const Json& j);
  std::uint64_t fingerprint() const;
};

bool operator==(const Metaconcept& a, const Metaconcept& b);
bool operator==(const WorldSchema& a, const WorldSchema& b);

}  // namespace lrta
