#include "lrta/scene/matching.hpp"

#include <limits>

#include "lrta/error.hpp"

namespace lrta::scene {

using nn::Tensor;

int Matching::slot_for(int g) const {
  for (std::size_t s = 0; s < assignment.size(); ++s) {
    if (assignment[s] == g) return static_cast<int>(s);
  }
  return -1;
}

Matching hungarian_match(const Tensor& cost) {
  const Index m = cost.rows();  // predictions
  const Index n = cost.cols();  // ground truth
  if (m < n) {
    throw CapacityError("matching needs at least as many predictions as targets, got " + std::to_string(m) + " < " +
                        std::to_string(n));
  }
  if (!cost.allFinite()) throw ContractError("matching cost contains non-finite entries");
  Matching result;
  result.assignment.assign(static_cast<std::size_t>(m), -1);
  if (n == 0) return result;

  // Rows of the working problem are ground-truth objects (1-based), columns
  // are predictions; a(i, j) = cost(j - 1, i - 1).
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto N = static_cast<std::size_t>(n);
  const auto M = static_cast<std::size_t>(m);
  std::vector<double> u(N + 1, 0.0), v(M + 1, 0.0);
  std::vector<std::size_t> p(M + 1, 0), way(M + 1, 0);
  for (std::size_t i = 1; i <= N; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(M + 1, inf);
    std::vector<bool> used(M + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= M; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Index>(j - 1), static_cast<Index>(i0 - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= M; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= M; ++j) {
    if (p[j] != 0) result.assignment[j - 1] = static_cast<int>(p[j] - 1);
  }
  for (Index g = 0; g < n; ++g) result.total_cost += cost(result.slot_for(static_cast<int>(g)), g);
  return result;
}

Tensor matching_cost(const GraphPrediction& prediction, const SymbolicScene& scene, const WorldSchema& schema,
                     double lambda_box) {
  const Index n = prediction.slot_count;
  const auto g = static_cast<Index>(scene.objects.size());
  Tensor cost(n, g);
  const Tensor& cat = prediction.category_logp.value();
  const Tensor& boxes = prediction.boxes.value();
  for (Index k = 0; k < g; ++k) {
    const SymbolicObject& obj = scene.objects[static_cast<std::size_t>(k)];
    const int c = schema.category_index(obj.category);
    if (c < 0) throw ValidationError("unknown category '" + obj.category + "'");
    for (Index s = 0; s < n; ++s) {
      double l1 = 0.0;
      for (int b = 0; b < 4; ++b) l1 += std::abs(boxes(s, b) - obj.box[static_cast<std::size_t>(b)]);
      cost(s, k) = -cat(s, c) + lambda_box * l1;
    }
  }
  return cost;
}

namespace {

// Exact ties appear when every predicted box coordinate lies on one side of
// the targets: L1 is then separable and swapping two same-category objects
// leaves the cost unchanged while the attribute and relation losses differ.
// A small strictly convex term picks one matching regardless of input order.
constexpr double kTieBreak = 1e-6;

Tensor tie_break_cost(const GraphPrediction& prediction, const SymbolicScene& scene, const WorldSchema& schema) {
  const Index n = prediction.slot_count;
  const auto g = static_cast<Index>(scene.objects.size());
  Tensor cost = Tensor::Zero(n, g);
  const Tensor& boxes = prediction.boxes.value();
  for (Index k = 0; k < g; ++k) {
    const SymbolicObject& obj = scene.objects[static_cast<std::size_t>(k)];
    for (Index s = 0; s < n; ++s) {
      for (int b = 0; b < 4; ++b) {
        const double d = boxes(s, b) - obj.box[static_cast<std::size_t>(b)];
        cost(s, k) += d * d;
      }
      for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
        auto it = obj.attributes.find(schema.metaconcepts[m].name);
        const Index v = it == obj.attributes.end() ? static_cast<Index>(schema.metaconcepts[m].values.size())
                                                   : schema.value_index(static_cast<int>(m), it->second);
        cost(s, k) -= prediction.attribute_logp[m].value()(s, v);
      }
    }
  }
  return cost;
}

}  // namespace

SetLoss set_prediction_loss(Tape& tape, const GraphPrediction& prediction, const SymbolicScene& scene,
                            const WorldSchema& schema, double lambda_box) {
  const Index n = prediction.slot_count;
  const auto g = static_cast<Index>(scene.objects.size());
  if (g > n) {
    throw CapacityError("scene '" + scene.scene_id + "' has " + std::to_string(g) + " objects for " +
                        std::to_string(n) + " slots");
  }
  SetLoss out;
  out.matching = hungarian_match(matching_cost(prediction, scene, schema, lambda_box) +
                                 kTieBreak * tie_break_cost(prediction, scene, schema));
  const auto& assign = out.matching.assignment;

  std::vector<Index> category_targets(static_cast<std::size_t>(n), static_cast<Index>(schema.categories.size()));
  for (Index s = 0; s < n; ++s) {
    const int k = assign[static_cast<std::size_t>(s)];
    if (k >= 0) category_targets[static_cast<std::size_t>(s)] = schema.category_index(scene.objects[static_cast<std::size_t>(k)].category);
  }
  out.category = -1.0 * nn::pick_sum(prediction.category_logp, category_targets);

  out.attributes = tape.scalar(0.0);
  for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
    const auto unspecified = static_cast<Index>(schema.metaconcepts[m].values.size());
    std::vector<Index> targets(static_cast<std::size_t>(n), -1);
    for (Index s = 0; s < n; ++s) {
      const int k = assign[static_cast<std::size_t>(s)];
      if (k < 0) continue;
      const auto& attrs = scene.objects[static_cast<std::size_t>(k)].attributes;
      auto it = attrs.find(schema.metaconcepts[m].name);
      targets[static_cast<std::size_t>(s)] =
          it == attrs.end() ? unspecified : schema.value_index(static_cast<int>(m), it->second);
    }
    out.attributes = out.attributes + -1.0 * nn::pick_sum(prediction.attribute_logp[m], targets);
  }

  std::vector<Index> matched_slots;
  Tensor target_boxes(g, 4);
  for (Index k = 0; k < g; ++k) {
    matched_slots.push_back(out.matching.slot_for(static_cast<int>(k)));
    for (int b = 0; b < 4; ++b) target_boxes(k, b) = scene.objects[static_cast<std::size_t>(k)].box[static_cast<std::size_t>(b)];
  }
  if (g > 0 && lambda_box != 0.0) {
    out.box = lambda_box * nn::l1_distance(nn::gather_rows(prediction.boxes, matched_slots),
                                           tape.constant(std::move(target_boxes)));
  } else {
    out.box = tape.scalar(0.0);
  }

  const auto none_relation = static_cast<Index>(schema.predicates.size());
  std::vector<Index> relation_targets(static_cast<std::size_t>(n * (n - 1)), -1);
  for (Index a = 0; a < g; ++a) {
    for (Index b = 0; b < g; ++b) {
      if (a == b) continue;
      const auto pred = scene.predicate_between(static_cast<int>(a), static_cast<int>(b));
      const Index row = VectorSceneGraph::pair_index(matched_slots[static_cast<std::size_t>(a)],
                                                     matched_slots[static_cast<std::size_t>(b)], n);
      relation_targets[static_cast<std::size_t>(row)] = pred ? schema.predicate_index(*pred) : none_relation;
    }
  }
  out.relation = -1.0 * nn::pick_sum(prediction.relation_logp, relation_targets);
  out.loss = out.category + out.attributes + out.box + out.relation;
  return out;
}

}  // namespace lrta::scene
