#include "lrta/scene/scene_graph.hpp"

#include <numeric>

#include "lrta/error.hpp"

namespace lrta::scene {

using nn::Tensor;

SceneEmbedder SceneEmbedder::create(nn::ParameterStore& store, const std::string& name, const WorldSchema& schema,
                                    Index dim, nn::RngState& rng) {
  SceneEmbedder e;
  e.category = nn::Embedding::create(store, name + ".category", static_cast<Index>(schema.categories.size()) + 1, dim, rng);
  for (const auto& mc : schema.metaconcepts) {
    e.attributes.push_back(
        nn::Embedding::create(store, name + ".attr." + mc.name, static_cast<Index>(mc.values.size()) + 1, dim, rng));
  }
  e.box = nn::FeedForwardLayer::create(store, name + ".box", 4, dim, nn::Activation::identity, rng);
  const auto p = static_cast<Index>(schema.predicates.size()) + 1;
  e.outgoing = nn::Embedding::create(store, name + ".pair_out", p, dim, rng);
  e.incoming = nn::Embedding::create(store, name + ".pair_in", p, dim, rng);
  return e;
}

RelationEncoder RelationEncoder::create(nn::ParameterStore& store, const std::string& name, Index dim,
                                        nn::RngState& rng) {
  RelationEncoder r;
  r.ff = nn::FeedForwardLayer::create(store, name + ".ff", 2 * dim, dim, nn::Activation::relu, rng);
  r.norm = nn::LayerNorm::create(store, name + ".norm", dim, rng);
  return r;
}

SceneGraphHeads SceneGraphHeads::create(nn::ParameterStore& store, const std::string& name, const WorldSchema& schema,
                                        Index dim, Index hidden, nn::RngState& rng) {
  SceneGraphHeads h;
  h.encoder = RelationEncoder::create(store, name + ".relation_encoder", dim, rng);
  h.category = nn::FeedForwardNet::create(store, name + ".category", {dim, hidden, static_cast<Index>(schema.categories.size()) + 1}, rng);
  for (const auto& mc : schema.metaconcepts) {
    h.attributes.push_back(nn::FeedForwardNet::create(store, name + ".attr." + mc.name,
                                                      {dim, hidden, static_cast<Index>(mc.values.size()) + 1}, rng));
  }
  h.box = nn::FeedForwardNet::create(store, name + ".box", {dim, hidden, 4}, rng);
  h.relation = nn::FeedForwardNet::create(store, name + ".relation", {dim, hidden, static_cast<Index>(schema.predicates.size()) + 1}, rng);
  return h;
}

int VectorSceneGraph::slot_of(int pos) const {
  for (std::size_t s = 0; s < slot_object.size(); ++s) {
    if (slot_object[s] == pos) return static_cast<int>(s);
  }
  return -1;
}

Var embed_objects(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema, const SceneEmbedder& embedder,
                  const EmbedOptions& options, nn::RngState& rng, std::vector<int>& slot_object) {
  const Index n_slots = options.slots;
  const auto n_objects = static_cast<Index>(scene.objects.size());
  if (n_objects > n_slots) {
    throw CapacityError("scene '" + scene.scene_id + "' has " + std::to_string(n_objects) + " objects for " +
                        std::to_string(n_slots) + " slots");
  }
  nn::RngState permute_rng = rng.derive("permute");
  nn::RngState dropout_rng = rng.derive("dropout");
  nn::RngState noise_rng = rng.derive("noise");
  rng.next_u64();

  std::vector<int> kept;
  for (Index k = 0; k < n_objects; ++k) {
    if (options.slot_dropout > 0.0 && dropout_rng.bernoulli(options.slot_dropout)) continue;
    kept.push_back(static_cast<int>(k));
  }
  std::vector<Index> order(static_cast<std::size_t>(n_slots));
  std::iota(order.begin(), order.end(), 0);
  if (options.permute) permute_rng.shuffle(order);
  slot_object.assign(static_cast<std::size_t>(n_slots), -1);
  for (std::size_t k = 0; k < kept.size(); ++k) slot_object[static_cast<std::size_t>(order[k])] = kept[k];

  const auto none_category = static_cast<Index>(schema.categories.size());
  std::vector<Index> category_rows(static_cast<std::size_t>(n_slots), none_category);
  Tensor mask = Tensor::Zero(n_slots, embedder.dim());
  Tensor boxes = Tensor::Zero(n_slots, 4);
  std::vector<std::vector<Index>> attribute_rows(schema.metaconcepts.size());
  for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
    attribute_rows[m].assign(static_cast<std::size_t>(n_slots), static_cast<Index>(schema.metaconcepts[m].values.size()));
  }
  bool any_real = false;
  for (Index s = 0; s < n_slots; ++s) {
    const int pos = slot_object[static_cast<std::size_t>(s)];
    if (pos < 0) continue;
    any_real = true;
    const SymbolicObject& obj = scene.objects[static_cast<std::size_t>(pos)];
    const int c = schema.category_index(obj.category);
    if (c < 0) throw ValidationError("unknown category '" + obj.category + "'");
    category_rows[static_cast<std::size_t>(s)] = c;
    for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
      auto it = obj.attributes.find(schema.metaconcepts[m].name);
      if (it == obj.attributes.end()) continue;
      const int v = schema.value_index(static_cast<int>(m), it->second);
      if (v < 0) throw ValidationError("unknown attribute value '" + it->second + "'");
      attribute_rows[m][static_cast<std::size_t>(s)] = v;
    }
    mask.row(s).setOnes();
    for (int b = 0; b < 4; ++b) boxes(s, b) = obj.box[static_cast<std::size_t>(b)];
  }

  Var objects = nn::embed_rows(tape, embedder.category, category_rows);
  if (any_real) {
    Var detail = nn::feed_forward(tape, embedder.box, tape.constant(std::move(boxes)));
    for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
      detail = detail + nn::embed_rows(tape, embedder.attributes[m], attribute_rows[m]);
    }
    objects = objects + nn::hadamard(tape.constant(std::move(mask)), detail);
  }
  if (options.noise_std > 0.0) {
    Tensor noise(n_slots, embedder.dim());
    for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = options.noise_std * noise_rng.normal();
    objects = objects + tape.constant(std::move(noise));
  }
  return objects;
}

Var pair_appearance(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema, const SceneEmbedder& embedder,
                    const std::vector<int>& slot_object) {
  const auto n = static_cast<Index>(slot_object.size());
  const auto none = static_cast<Index>(schema.predicates.size());
  const auto n_obj = scene.objects.size();
  std::vector<Index> pred(n_obj * n_obj, none);
  for (const auto& r : scene.relations) {
    const int s = scene.position_of(r.subject);
    const int o = scene.position_of(r.object);
    const int p = schema.predicate_index(r.predicate);
    if (s < 0 || o < 0 || p < 0) throw ValidationError("relation does not match scene '" + scene.scene_id + "'");
    pred[static_cast<std::size_t>(s) * n_obj + static_cast<std::size_t>(o)] = p;
  }
  auto lookup = [&](int a, int b) -> Index {
    if (a < 0 || b < 0) return none;
    return pred[static_cast<std::size_t>(a) * n_obj + static_cast<std::size_t>(b)];
  };
  std::vector<Index> out_rows, in_rows;
  out_rows.reserve(static_cast<std::size_t>(n * (n - 1)));
  in_rows.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const int a = slot_object[static_cast<std::size_t>(i)];
      const int b = slot_object[static_cast<std::size_t>(j)];
      out_rows.push_back(lookup(a, b));
      in_rows.push_back(lookup(b, a));
    }
  }
  return nn::embed_rows(tape, embedder.outgoing, out_rows) + nn::embed_rows(tape, embedder.incoming, in_rows);
}

Var build_edge_vector(Tape& tape, const RelationEncoder& encoder, Var oi, Var oj) {
  if (oi.cols() != oj.cols()) {
    throw DimensionError("edge vector: " + nn::shape_string(oi.value()) + " vs " + nn::shape_string(oj.value()));
  }
  return nn::layer_norm(tape, encoder.norm, nn::feed_forward(tape, encoder.ff, nn::hcat({oi, oj})));
}

Var build_edge_vectors(Tape& tape, const RelationEncoder& encoder, Var objects, Var appearance) {
  const Index n = objects.rows();
  const Index d = objects.cols();
  if (encoder.ff.in_dim() != 2 * d) {
    throw DimensionError("relation encoder expects " + std::to_string(encoder.ff.in_dim()) + " inputs, objects are " +
                         nn::shape_string(objects.value()));
  }
  std::vector<Index> first, second;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      first.push_back(i);
      second.push_back(j);
    }
  }
  // W [o_i; o_j] = W_a o_i + W_b o_j, projected once per slot then gathered.
  Var w = tape.param(*encoder.ff.weight);
  Var head = nn::matmul_nt(objects, nn::slice_cols(w, 0, d));
  Var tail = nn::matmul_nt(objects, nn::slice_cols(w, d, d));
  Var z = nn::gather_rows(head, first) + nn::gather_rows(tail, second) + tape.param(*encoder.ff.bias);
  if (encoder.ff.activation == nn::Activation::relu) z = nn::relu(z);
  if (appearance.valid()) z = z + appearance;
  return nn::layer_norm(tape, encoder.norm, z);
}

VectorSceneGraph embed_scene(Tape& tape, const SymbolicScene& scene, const WorldSchema& schema,
                             const SceneEmbedder& embedder, const RelationEncoder& encoder,
                             const EmbedOptions& options, nn::RngState& rng) {
  VectorSceneGraph g;
  g.slot_count = options.slots;
  g.objects = embed_objects(tape, scene, schema, embedder, options, rng, g.slot_object);
  Var appearance = pair_appearance(tape, scene, schema, embedder, g.slot_object);
  g.edges = build_edge_vectors(tape, encoder, g.objects, appearance);
  return g;
}

GraphPrediction predict_graph(Tape& tape, const VectorSceneGraph& graph, const SceneGraphHeads& heads) {
  GraphPrediction p;
  p.slot_count = graph.slot_count;
  p.category_logp = nn::log_softmax_rows(nn::feed_forward(tape, heads.category, graph.objects));
  for (const auto& head : heads.attributes) {
    p.attribute_logp.push_back(nn::log_softmax_rows(nn::feed_forward(tape, head, graph.objects)));
  }
  p.boxes = nn::sigmoid(nn::feed_forward(tape, heads.box, graph.objects));
  p.relation_logp = nn::log_softmax_rows(nn::feed_forward(tape, heads.relation, graph.edges));
  return p;
}

SymbolicScene read_out(const GraphPrediction& prediction, const WorldSchema& schema, const std::string& scene_id) {
  SymbolicScene out;
  out.scene_id = scene_id;
  const Index n = prediction.slot_count;
  const auto none_category = static_cast<Index>(schema.categories.size());
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  const auto& cat = prediction.category_logp.value();
  for (Index s = 0; s < n; ++s) {
    const Index c = nn::argmax_row(cat, s);
    if (c == none_category) continue;
    kept[static_cast<std::size_t>(s)] = true;
    SymbolicObject obj;
    obj.id = static_cast<int>(s);
    obj.category = schema.categories[static_cast<std::size_t>(c)];
    for (std::size_t m = 0; m < schema.metaconcepts.size(); ++m) {
      const Index v = nn::argmax_row(prediction.attribute_logp[m].value(), s);
      if (v < static_cast<Index>(schema.metaconcepts[m].values.size())) {
        obj.attributes[schema.metaconcepts[m].name] = schema.metaconcepts[m].values[static_cast<std::size_t>(v)];
      }
    }
    for (int b = 0; b < 4; ++b) obj.box[static_cast<std::size_t>(b)] = prediction.boxes.value()(s, b);
    out.objects.push_back(std::move(obj));
  }
  const auto none_relation = static_cast<Index>(schema.predicates.size());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j || !kept[static_cast<std::size_t>(i)] || !kept[static_cast<std::size_t>(j)]) continue;
      const Index r = nn::argmax_row(prediction.relation_logp.value(), VectorSceneGraph::pair_index(i, j, n));
      if (r == none_relation) continue;
      out.relations.push_back({static_cast<int>(i), schema.predicates[static_cast<std::size_t>(r)], static_cast<int>(j)});
    }
  }
  return out;
}

}  // namespace lrta::scene
