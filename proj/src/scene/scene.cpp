#include "lrta/scene/scene.hpp"

#include <fstream>
#include <set>

#include "lrta/error.hpp"

namespace lrta {

void SymbolicScene::validate(const WorldSchema& schema) const {
  const std::string where = "scene '" + scene_id + "': ";
  std::set<int> ids;
  for (const auto& o : objects) {
    if (o.id < 0) throw ValidationError(where + "negative object id " + std::to_string(o.id));
    if (!ids.insert(o.id).second) throw ValidationError(where + "duplicate object id " + std::to_string(o.id));
    if (schema.category_index(o.category) < 0) {
      throw ValidationError(where + "unknown category '" + o.category + "'");
    }
    for (const auto& [mc, value] : o.attributes) {
      const int k = schema.metaconcept_index(mc);
      if (k < 0) throw ValidationError(where + "unknown metaconcept '" + mc + "'");
      if (schema.value_index(k, value) < 0) {
        throw ValidationError(where + "value '" + value + "' not in metaconcept '" + mc + "'");
      }
    }
    for (double v : o.box) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(where + "box coordinate outside [0, 1]");
    }
    if (!(o.box[2] > 0.0 && o.box[3] > 0.0)) throw ValidationError(where + "degenerate box on object " + std::to_string(o.id));
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& r : relations) {
    if (!ids.count(r.subject) || !ids.count(r.object)) {
      throw ValidationError(where + "relation endpoint missing (" + std::to_string(r.subject) + ", " +
                            std::to_string(r.object) + ")");
    }
    if (r.subject == r.object) throw ValidationError(where + "self relation on " + std::to_string(r.subject));
    if (schema.predicate_index(r.predicate) < 0) {
      throw ValidationError(where + "unknown predicate '" + r.predicate + "'");
    }
    if (!pairs.insert({r.subject, r.object}).second) {
      throw ValidationError(where + "two predicates on ordered pair (" + std::to_string(r.subject) + ", " +
                            std::to_string(r.object) + ")");
    }
  }
}

int SymbolicScene::position_of(int id) const {
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (objects[k].id == id) return static_cast<int>(k);
  }
  return -1;
}

std::optional<std::string> SymbolicScene::predicate_between(int subject_pos, int object_pos) const {
  const int s = objects[static_cast<std::size_t>(subject_pos)].id;
  const int o = objects[static_cast<std::size_t>(object_pos)].id;
  for (const auto& r : relations) {
    if (r.subject == s && r.object == o) return r.predicate;
  }
  return std::nullopt;
}

bool operator==(const SymbolicObject& a, const SymbolicObject& b) {
  return a.id == b.id && a.category == b.category && a.attributes == b.attributes && a.box == b.box;
}

bool operator==(const SymbolicScene& a, const SymbolicScene& b) {
  return a.scene_id == b.scene_id && a.objects == b.objects && a.relations == b.relations;
}

SymbolicScene strip_attributes(const SymbolicScene& scene) {
  SymbolicScene out = scene;
  for (auto& o : out.objects) o.attributes.clear();
  return out;
}

SymbolicScene strip_relations(const SymbolicScene& scene) {
  SymbolicScene out = scene;
  out.relations.clear();
  return out;
}

Json scene_to_json(const SymbolicScene& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"id", o.id},
                       {"category", o.category},
                       {"attributes", o.attributes},
                       {"box", std::vector<double>(o.box.begin(), o.box.end())}});
  }
  Json relations = Json::array();
  for (const auto& r : scene.relations) relations.push_back(Json::array({r.subject, r.predicate, r.object}));
  return Json{{"scene_id", scene.scene_id}, {"objects", objects}, {"relations", relations}};
}

namespace {

int read_id(const Json& j) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) return std::stoi(j.get<std::string>());
  throw DataError("object id must be an integer");
}

}  // namespace

SymbolicScene scene_from_json(const Json& j) {
  SymbolicScene s;
  try {
    s.scene_id = j.at("scene_id").get<std::string>();
    for (const auto& o : j.at("objects")) {
      SymbolicObject obj;
      obj.id = read_id(o.at("id"));
      obj.category = o.at("category").get<std::string>();
      if (o.contains("attributes")) obj.attributes = o.at("attributes").get<std::map<std::string, std::string>>();
      const auto box = o.at("box").get<std::vector<double>>();
      if (box.size() != 4) throw DataError("box must have 4 entries");
      std::copy(box.begin(), box.end(), obj.box.begin());
      s.objects.push_back(std::move(obj));
    }
    if (j.contains("relations")) {
      for (const auto& r : j.at("relations")) {
        if (!r.is_array() || r.size() != 3) throw DataError("relation must be [subject, predicate, object]");
        s.relations.push_back({read_id(r[0]), r[1].get<std::string>(), read_id(r[2])});
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed scene record: ") + e.what());
  }
  return s;
}

std::vector<SymbolicScene> read_scenes_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw LoadError("cannot open scene file " + path.string());
  std::vector<SymbolicScene> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(scene_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw DataError("bad JSON in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_scenes_jsonl(const std::filesystem::path& path, const std::vector<SymbolicScene>& scenes) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw LoadError("cannot write scene file " + path.string());
  for (const auto& s : scenes) os << scene_to_json(s).dump() << '\n';
}

}  // namespace lrta
