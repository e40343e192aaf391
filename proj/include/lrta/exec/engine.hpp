#pragma once

#include <span>
#include <string>
#include <vector>

#include "lrta/nn/layers.hpp"
#include "lrta/scene/scene_graph.hpp"

namespace lrta::exec {

using nn::Index;
using nn::Tape;
using nn::Tensor;
using nn::Var;

/// Recurrent graph-traversal engine. Per step m and central node c:
///   f_kc = Neighbor(o_k ++ e_kc ++ h_{m-1} ++ i_m)   for every k != c
///   c_c  = mean_k f_kc                               (zero when N == 1)
///   s_c  = softmax(Node(o_c ++ c_c ++ i_m))[1]
///   h_m  = sum_c s_c o_c
struct ExecutionEngine {
  nn::FeedForwardNet neighbor;    // 4D -> hidden^layers -> D
  nn::FeedForwardNet classifier;  // 3D -> hidden^layers -> 2

  Index dim() const { return neighbor.out_dim(); }
  static ExecutionEngine create(nn::ParameterStore& store, const std::string& name, Index dim, Index hidden,
                                nn::RngState& rng, Index layers = 1);
};

Var neighbor_feature(Tape& tape, const ExecutionEngine& engine, Var neighbor_object, Var edge, Var history,
                     Var instruction);
/// Mean of the features; an empty list gives a 1 x dim zero vector.
Var context_vector(Tape& tape, std::span<const Var> features, Index dim);
/// Two-way log-probabilities (1 x 2) for one central node.
Var classify_node(Tape& tape, const ExecutionEngine& engine, Var central_object, Var context, Var instruction);
/// Score-weighted sum of the object rows: scores is N x 1, objects N x D.
Var history_vector(Var scores, Var objects);

/// Strict threshold: ties map to 0.
inline int bitmap_bit(double score) { return score > 0.5 ? 1 : 0; }

struct TraversalState {
  Index step = 0;  // 1-based
  std::vector<double> scores;
  std::vector<int> bitmap;
  Tensor history;
};

struct ExecTrace {
  std::vector<TraversalState> states;
  /// Decoded instruction text per step, filled in by callers that have a
  /// text decoder.
  std::vector<std::string> instructions;
  std::vector<Var> histories;  // 1 x D per step
  std::vector<Var> node_logp;  // N x 2 per step

  Index size() const { return static_cast<Index>(states.size()); }
};

ExecTrace execute(Tape& tape, const ExecutionEngine& engine, const scene::VectorSceneGraph& graph,
                  std::span<const Var> instructions);

/// Sum over steps and nodes of the two-way cross-entropy against the gold
/// bits (gold[m][n] in {0, 1}).
Var traversal_loss(const ExecTrace& trace, const std::vector<std::vector<int>>& gold);

/// Trace as JSON: per step the instruction text, scores and bitmap, with
/// `node_names` labelling the nodes.
Json trace_to_json(const ExecTrace& trace, const std::vector<std::string>& node_names);

}  // namespace lrta::exec
