#pragma once

#include <vector>

#include "lrta/scene/scene_graph.hpp"

namespace lrta::scene {

/// Optimal assignment between predicted slots and ground-truth objects.
struct Matching {
  /// Per predicted slot: matched ground-truth index, or -1 when unmatched.
  std::vector<int> assignment;
  /// Sum of matched costs, accumulated in ground-truth order.
  double total_cost = 0.0;

  /// Slot matched to ground-truth index g, or -1.
  int slot_for(int g) const;
};

/// Minimum-cost assignment of every column (ground truth) to a distinct row
/// (prediction) of an N_pred x N_gt cost matrix, N_pred >= N_gt. Exact
/// (shortest augmenting path with potentials), O(N_gt^2 N_pred).
Matching hungarian_match(const nn::Tensor& cost);

struct SetLoss {
  Var loss;
  Var category;
  Var attributes;
  Var box;
  Var relation;
  Matching matching;
};

/// Pairwise matching cost: -log p(category) + lambda_box * L1(box).
nn::Tensor matching_cost(const GraphPrediction& prediction, const SymbolicScene& scene, const WorldSchema& schema,
                         double lambda_box);

/// Set-prediction loss: match slots to objects, then sum the matched slots'
/// category, attribute and box losses, the unmatched slots' "no object" loss,
/// and the relation loss over ordered pairs of matched slots ("no relation"
/// where the scene has none).
SetLoss set_prediction_loss(Tape& tape, const GraphPrediction& prediction, const SymbolicScene& scene,
                            const WorldSchema& schema, double lambda_box);

}  // namespace lrta::scene
