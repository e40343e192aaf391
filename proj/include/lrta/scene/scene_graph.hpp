#pragma once

#include <vector>

#include "lrta/nn/layers.hpp"
#include "lrta/scene/scene.hpp"

namespace lrta::scene {

using nn::Index;
using nn::Tape;
using nn::Var;

/// Stand-in for the pixel backbone: turns symbolic objects into slot vectors
/// and symbolic relations into pair appearance vectors.
///
/// Table layouts (last row is the sentinel):
///   category  : C + 1 rows, row C = "no object"
///   attribute : V + 1 rows per metaconcept, row V = "unspecified"
///   outgoing / incoming : P + 1 rows, row P = "no relation"
struct SceneEmbedder {
  nn::Embedding category;
  std::vector<nn::Embedding> attributes;
  nn::FeedForwardLayer box;
  nn::Embedding outgoing;
  nn::Embedding incoming;

  Index dim() const { return category.dim(); }
  static SceneEmbedder create(nn::ParameterStore& store, const std::string& name, const WorldSchema& schema, Index dim,
                              nn::RngState& rng);
};

/// e_ij = LayerNorm(FeedForward(o_i ++ o_j) [+ a_ij]).
struct RelationEncoder {
  nn::FeedForwardLayer ff;  // 2D -> D, relu
  nn::LayerNorm norm;

  static RelationEncoder create(nn::ParameterStore& store, const std::string& name, Index dim, nn::RngState& rng);
};

/// Decoders reading a VectorSceneGraph back into symbols. Category and
/// relation vocabularies carry the trailing "no object" / "no relation"
/// label; attribute vocabularies carry a trailing "unspecified" value.
struct SceneGraphHeads {
  RelationEncoder encoder;
  nn::FeedForwardNet category;
  std::vector<nn::FeedForwardNet> attributes;
  nn::FeedForwardNet box;
  nn::FeedForwardNet relation;

  static SceneGraphHeads create(nn::ParameterStore& store, const std::string& name, const WorldSchema& schema,
                                Index dim, Index hidden, nn::RngState& rng);
};

struct EmbedOptions {
  Index slots = 12;
  double noise_std = 0.0;
  double slot_dropout = 0.0;
  bool permute = true;
};

/// N object vectors (N x D) and the N(N-1) ordered edge vectors, row
/// `pair_index(i, j, N)` holding e_ij.
struct VectorSceneGraph {
  Var objects;
  Var edges;
  Index slot_count = 0;
  /// Scene position shown in each slot, -1 for "no object".
  std::vector<int> slot_object;

  static Index pair_index(Index i, Index j, Index n) { return i * (n - 1) + (j < i ? j : j - 1); }
  /// Slot holding scene position `pos`, or -1 if it was dropped.
  int slot_of(int pos) const;
};

/// Object rows only (N x D); slot layout in `slot_object`.
Var embed_objects(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema, const SceneEmbedder& embedder,
                  const EmbedOptions& options, nn::RngState& rng, std::vector<int>& slot_object);

/// Pair appearance rows (N(N-1) x D) for the given slot layout.
Var pair_appearance(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema, const SceneEmbedder& embedder,
                    const std::vector<int>& slot_object);

/// Full "Look" embedding: slot vectors plus edge vectors. Throws
/// CapacityError when the scene has more objects than slots.
VectorSceneGraph embed_scene(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema,
                             const SceneEmbedder& embedder, const RelationEncoder& encoder,
                             const EmbedOptions& options, nn::RngState& rng);

/// Single ordered pair, no appearance term.
Var build_edge_vector(Tape& tape, const RelationEncoder& encoder, Var oi, Var oj);
/// All ordered pairs of `objects`; `appearance` may be an invalid Var.
Var build_edge_vectors(Tape& tape, const RelationEncoder& encoder, Var objects, Var appearance);

struct GraphPrediction {
  Var category_logp;                 // N x (C + 1)
  std::vector<Var> attribute_logp;   // per metaconcept, N x (V + 1)
  Var boxes;                         // N x 4, in (0, 1)
  Var relation_logp;                 // N(N-1) x (P + 1)
  Index slot_count = 0;
};

GraphPrediction predict_graph(Tape& tape, const VectorSceneGraph& graph, const SceneGraphHeads& heads);

/// Argmax readout. Slots whose category is "no object" are dropped; relation
/// pairs whose label is "no relation" are dropped; object id = slot index.
SymbolicScene read_out(const GraphPrediction& prediction, const WorldSchema& schema, const std::string& scene_id = "");

}  // namespace lrta::scene
