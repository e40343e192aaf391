#include "lrta/exec/oracle.hpp"

namespace lrta::exec {

using program::Direction;
using program::Opcode;

namespace {

bool has_value(const SymbolicObject& o, const std::string& mc, const std::string& v) {
  auto it = o.attributes.find(mc);
  return it != o.attributes.end() && it->second == v;
}

int lowest_active(const SymbolicScene& scene, const std::vector<int>& active) {
  int best = -1;
  for (std::size_t p = 0; p < active.size(); ++p) {
    if (!active[p]) continue;
    if (best < 0 || scene.objects[p].id < scene.objects[static_cast<std::size_t>(best)].id) best = static_cast<int>(p);
  }
  return best;
}

}  // namespace

OracleResult oracle_execute(const SymbolicScene& scene, const program::InstructionProgram& program,
                            const WorldSchema& schema, std::size_t m_max) {
  program::validate_program(program, schema, m_max);
  const std::size_t n = scene.objects.size();
  OracleResult result;
  std::vector<int> active(n, 0);
  for (const auto& step : program.steps) {
    std::vector<int> next(n, 0);
    switch (step.op) {
      case Opcode::select:
        for (std::size_t p = 0; p < n; ++p) next[p] = scene.objects[p].category == step.arg;
        break;
      case Opcode::filter_attr:
        for (std::size_t p = 0; p < n; ++p) next[p] = active[p] && has_value(scene.objects[p], step.arg, step.value);
        break;
      case Opcode::relate:
        for (const auto& r : scene.relations) {
          if (r.predicate != step.arg) continue;
          const int s = scene.position_of(r.subject);
          const int t = scene.position_of(r.object);
          const int from = step.direction == Direction::forward ? s : t;
          const int to = step.direction == Direction::forward ? t : s;
          if (active[static_cast<std::size_t>(from)]) next[static_cast<std::size_t>(to)] = 1;
        }
        break;
      case Opcode::exist:
        next = active;
        result.short_answer = lowest_active(scene, active) >= 0 ? "yes" : "no";
        break;
      case Opcode::query_attr: {
        next = active;
        const int p = lowest_active(scene, active);
        result.short_answer = "none";
        if (p >= 0) {
          const auto& obj = scene.objects[static_cast<std::size_t>(p)];
          result.referent = obj.id;
          auto it = obj.attributes.find(step.arg);
          if (it != obj.attributes.end()) result.short_answer = it->second;
        }
        break;
      }
      case Opcode::verify_attr: {
        for (std::size_t p = 0; p < n; ++p) next[p] = active[p] && has_value(scene.objects[p], step.arg, step.value);
        const int p = lowest_active(scene, active);
        result.short_answer = "no";
        if (p >= 0) {
          const auto& obj = scene.objects[static_cast<std::size_t>(p)];
          result.referent = obj.id;
          if (has_value(obj, step.arg, step.value)) result.short_answer = "yes";
        }
        break;
      }
    }
    active = next;
    result.bitmaps.push_back(active);
  }
  return result;
}

}  // namespace lrta::exec
