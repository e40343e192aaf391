#pragma once

#include <string>
#include <vector>

#include "lrta/program/instruction.hpp"
#include "lrta/scene/scene.hpp"

namespace lrta::exec {

struct OracleResult {
  /// One bitmap per step over scene positions.
  std::vector<std::vector<int>> bitmaps;
  /// "yes" / "no" / attribute value / "none"; empty when the program has no
  /// terminal step.
  std::string short_answer;
  /// Id of the object a query or verify step read, -1 if none.
  int referent = -1;
};

/// Exact symbolic execution.
///   select c       nodes of category c
///   filter mc v    active nodes with attribute mc == v
///   relate p fwd   targets t of (s, p, t) for an active s; bwd swaps roles
///   exist          set unchanged; "yes" iff non-empty
///   query mc       set unchanged; value of the lowest-id active node
///   verify mc v    active nodes with mc == v; judged on the lowest-id
///                  active node
/// Empty sets answer "no" (exist, verify) or "none" (query). Throws
/// ValidationError when the program does not fit the schema.
OracleResult oracle_execute(const SymbolicScene& scene, const program::InstructionProgram& program,
                            const WorldSchema& schema, std::size_t m_max = 5);

}  // namespace lrta::exec
