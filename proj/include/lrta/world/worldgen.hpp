#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lrta/answer/answer.hpp"
#include "lrta/nn/rng.hpp"
#include "lrta/program/instruction.hpp"
#include "lrta/scene/scene.hpp"

namespace lrta::world {

struct SceneOptions {
  int min_objects = 3;
  int max_objects = 8;
  /// Probability that an ordered pair carries a relation.
  double relation_density = 0.25;
};

/// Objects with every metaconcept assigned, boxes inside the unit square,
/// ids 0..n-1. Throws ContractError on an empty or inverted size range.
SymbolicScene sample_scene(const WorldSchema& schema, nn::RngState& rng, const SceneOptions& options,
                           const std::string& scene_id = "");

struct TypeMix {
  double exist = 1.0;
  double query = 1.0;
  double verify = 1.0;
  /// Share of programs with a relate step.
  double relate = 0.5;
  /// Share of exist questions whose answer is "no".
  double negative = 0.5;
};

struct SampledProgram {
  program::InstructionProgram program;
  /// False for "no"-answer exist programs.
  bool answerable = true;
};

/// Draws a program with a well-defined answer: query and verify read a
/// unique referent, filters are added only where they narrow the set
/// (exist programs may carry one extra true filter). Negative exist
/// programs swap one argument for a label that empties the final set.
/// Returns nullopt when the scene cannot support the drawn shape.
std::optional<SampledProgram> sample_program_for(const SymbolicScene& scene, const WorldSchema& schema,
                                                 nn::RngState& rng, const TypeMix& mix, std::size_t m_max = 5);

/// One supervised question.
struct DatasetItem {
  std::string question_id;
  std::string scene_id;
  std::vector<std::string> tokens;
  program::InstructionProgram program;
  std::string question_type;
  std::string short_answer;
  std::vector<std::string> full_answer;
  /// Oracle bitmaps over scene positions, one per step.
  std::vector<std::vector<int>> bitmaps;
};

Json item_to_json(const DatasetItem& item);
DatasetItem item_from_json(const Json& j);
std::vector<DatasetItem> read_items_jsonl(const std::filesystem::path& path);
void write_items_jsonl(const std::filesystem::path& path, const std::vector<DatasetItem>& items);

/// Scene plus question/answer/bitmap supervision for a program.
DatasetItem make_item(const SymbolicScene& scene, const program::InstructionProgram& program,
                      const WorldSchema& schema, nn::RngState& rng, std::string question_id);

/// Split sizes count scenes; each kept scene carries 1..questions_per_scene
/// questions.
struct DatasetConfig {
  std::uint64_t seed = 7;
  std::size_t train = 2000;
  std::size_t valid = 500;
  std::size_t testdev = 500;
  std::size_t questions_per_scene = 4;
  SceneOptions scene;
  TypeMix mix;
  /// Upper bound on the share of either answer among exist and verify
  /// questions.
  double answer_cap = 0.6;
  std::size_t m_max = 5;

  Json to_json() const;
  static DatasetConfig from_json(const Json& j);
};

struct DatasetSplit {
  std::string name;
  std::vector<SymbolicScene> scenes;
  std::vector<DatasetItem> items;
};

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names{"train", "valid", "testdev"};
  return names;
}

/// Exactly config.<split> scenes per split; scene ids carry the split
/// name so splits never share scenes.
DatasetSplit build_split(const WorldSchema& schema, const DatasetConfig& config, const std::string& split);
std::vector<DatasetSplit> build_dataset(const WorldSchema& schema, const DatasetConfig& config);

/// schema.json, <split>.scenes.jsonl, <split>.questions.jsonl.
void write_dataset(const std::filesystem::path& dir, const WorldSchema& schema,
                   const std::vector<DatasetSplit>& splits);
DatasetSplit read_split(const std::filesystem::path& dir, const std::string& split);
WorldSchema read_schema(const std::filesystem::path& dir);

/// GQA scene-graph JSON (image id -> {width, height, objects}) to scenes.
/// Objects whose name is not a schema category are dropped together with
/// their relations; unknown attributes and predicates are ignored.
std::vector<SymbolicScene> scenes_from_gqa(const Json& gqa, const WorldSchema& schema);

}  // namespace lrta::world
