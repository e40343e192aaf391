#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrta/world/schema.hpp"

namespace lrta {

/// Normalized (x, y, w, h) in [0, 1], w and h strictly positive.
using Box = std::array<double, 4>;

struct SymbolicObject {
  int id = 0;
  std::string category;
  /// metaconcept -> value; a missing key means "unspecified".
  std::map<std::string, std::string> attributes;
  Box box{0.0, 0.0, 0.1, 0.1};
};

/// Directed labeled edge: subject --predicate--> object, by object id.
struct Relation {
  int subject = 0;
  std::string predicate;
  int object = 0;

  friend bool operator==(const Relation&, const Relation&) = default;
};

/// Ground-truth scene graph.
struct SymbolicScene {
  std::string scene_id;
  std::vector<SymbolicObject> objects;
  std::vector<Relation> relations;

  /// Unique ids, relation endpoints exist, no self relations, at most one
  /// predicate per ordered pair, labels drawn from the schema, valid boxes.
  void validate(const WorldSchema& schema) const;

  /// Position of the object with `id` in `objects`, or -1.
  int position_of(int id) const;
  /// Predicate on the ordered pair of positions (subject, object), if any.
  std::optional<std::string> predicate_between(int subject_pos, int object_pos) const;
};

bool operator==(const SymbolicObject& a, const SymbolicObject& b);
bool operator==(const SymbolicScene& a, const SymbolicScene& b);

/// Copy with every object's attributes removed.
SymbolicScene strip_attributes(const SymbolicScene& scene);
/// Copy with all relations removed.
SymbolicScene strip_relations(const SymbolicScene& scene);

Json scene_to_json(const SymbolicScene& scene);
SymbolicScene scene_from_json(const Json& j);

std::vector<SymbolicScene> read_scenes_jsonl(const std::filesystem::path& path);
void write_scenes_jsonl(const std::filesystem::path& path, const std::vector<SymbolicScene>& scenes);

}  // namespace lrta
