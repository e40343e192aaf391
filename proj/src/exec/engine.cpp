#include "lrta/exec/engine.hpp"

#include "lrta/error.hpp"

namespace lrta::exec {

ExecutionEngine ExecutionEngine::create(nn::ParameterStore& store, const std::string& name, Index dim, Index hidden,
                                        nn::RngState& rng, Index layers) {
  if (layers < 1) throw ContractError("engine needs at least one hidden layer, got " + std::to_string(layers));
  auto widths = [&](Index in, Index out) {
    std::vector<Index> w{in};
    w.insert(w.end(), static_cast<std::size_t>(layers), hidden);
    w.push_back(out);
    return w;
  };
  ExecutionEngine e;
  e.neighbor = nn::FeedForwardNet::create(store, name + ".neighbor", widths(4 * dim, dim), rng);
  e.classifier = nn::FeedForwardNet::create(store, name + ".classifier", widths(3 * dim, 2), rng);
  return e;
}

namespace {

void require_row(Var v, Index dim, const char* what) {
  if (v.rows() != 1 || v.cols() != dim) {
    throw DimensionError(std::string(what) + " must be 1x" + std::to_string(dim) + ", got " +
                         nn::shape_string(v.value()));
  }
}

}  // namespace

Var neighbor_feature(Tape& tape, const ExecutionEngine& engine, Var neighbor_object, Var edge, Var history,
                     Var instruction) {
  const Index d = engine.dim();
  require_row(neighbor_object, d, "neighbor object");
  require_row(edge, d, "edge");
  require_row(history, d, "history");
  require_row(instruction, d, "instruction");
  return nn::feed_forward(tape, engine.neighbor, nn::hcat({neighbor_object, edge, history, instruction}));
}

Var context_vector(Tape& tape, std::span<const Var> features, Index dim) {
  if (features.empty()) return tape.constant(Tensor::Zero(1, dim));
  for (const auto& f : features) require_row(f, dim, "feature");
  return nn::segment_mean_rows(nn::vcat(features), 1, static_cast<Index>(features.size()));
}

Var classify_node(Tape& tape, const ExecutionEngine& engine, Var central_object, Var context, Var instruction) {
  const Index d = engine.dim();
  require_row(central_object, d, "central object");
  require_row(context, d, "context");
  require_row(instruction, d, "instruction");
  return nn::log_softmax_rows(nn::feed_forward(tape, engine.classifier, nn::hcat({central_object, context, instruction})));
}

Var history_vector(Var scores, Var objects) {
  if (scores.cols() != 1 || scores.rows() != objects.rows()) {
    throw DimensionError("history: scores " + nn::shape_string(scores.value()) + " vs objects " +
                         nn::shape_string(objects.value()));
  }
  return nn::matmul(nn::transpose(scores), objects);
}

ExecTrace execute(Tape& tape, const ExecutionEngine& engine, const scene::VectorSceneGraph& graph,
                  std::span<const Var> instructions) {
  const Index n = graph.objects.rows();
  const Index d = engine.dim();
  if (graph.objects.cols() != d) {
    throw DimensionError("object vectors are " + nn::shape_string(graph.objects.value()) + ", engine expects width " +
                         std::to_string(d));
  }
  const Index k = n - 1;
  const auto& first = engine.neighbor.layers.front();
  const auto& rest = engine.neighbor.layers;

  // Row c*(N-1)+r of the neighbor layout holds the pair (k_r, c).
  std::vector<Index> neighbor_rows, edge_rows;
  for (Index c = 0; c < n; ++c) {
    for (Index j = 0; j < n; ++j) {
      if (j == c) continue;
      neighbor_rows.push_back(j);
      edge_rows.push_back(scene::VectorSceneGraph::pair_index(j, c, n));
    }
  }

  Var w = tape.param(*first.weight);
  Var w_obj = nn::slice_cols(w, 0, d);
  Var w_edge = nn::slice_cols(w, d, d);
  Var w_state = nn::slice_cols(w, 2 * d, 2 * d);
  Var bias = tape.param(*first.bias);

  Var pre_pairs;
  if (k > 0) {
    if (graph.edges.rows() != n * k || graph.edges.cols() != d) {
      throw DimensionError("edge vectors are " + nn::shape_string(graph.edges.value()) + " for " + std::to_string(n) +
                           " objects");
    }
    Var obj_proj = nn::matmul_nt(graph.objects, w_obj);
    Var edge_proj = nn::matmul_nt(graph.edges, w_edge);
    pre_pairs = nn::gather_rows(obj_proj, neighbor_rows) + nn::gather_rows(edge_proj, edge_rows);
  }

  ExecTrace trace;
  Var history = tape.constant(Tensor::Zero(1, d));
  for (std::size_t m = 0; m < instructions.size(); ++m) {
    Var instr = instructions[m];
    require_row(instr, d, "instruction");
    Var context;
    if (k > 0) {
      Var state = nn::matmul_nt(nn::hcat({history, instr}), w_state) + bias;
      Var hidden = nn::relu(pre_pairs + state);
      for (std::size_t l = 1; l < rest.size(); ++l) hidden = nn::feed_forward(tape, rest[l], hidden);
      context = nn::segment_mean_rows(hidden, n, k);
    } else {
      context = tape.constant(Tensor::Zero(n, d));
    }
    Var logits = nn::feed_forward(tape, engine.classifier,
                                  nn::hcat({graph.objects, context, nn::broadcast_rows(instr, n)}));
    Var logp = nn::log_softmax_rows(logits);
    Var scores = nn::slice_cols(nn::softmax_rows(logits), 1, 1);
    history = history_vector(scores, graph.objects);

    TraversalState st;
    st.step = static_cast<Index>(m + 1);
    st.history = history.value();
    for (Index i = 0; i < n; ++i) {
      const double s = scores.value()(i, 0);
      st.scores.push_back(s);
      st.bitmap.push_back(bitmap_bit(s));
    }
    trace.states.push_back(std::move(st));
    trace.histories.push_back(history);
    trace.node_logp.push_back(logp);
  }
  return trace;
}

Var traversal_loss(const ExecTrace& trace, const std::vector<std::vector<int>>& gold) {
  if (gold.size() != trace.node_logp.size() || gold.empty()) {
    throw DimensionError("traversal loss: " + std::to_string(gold.size()) + " gold steps for a trace of " +
                         std::to_string(trace.node_logp.size()));
  }
  Var total;
  for (std::size_t m = 0; m < gold.size(); ++m) {
    const Var logp = trace.node_logp[m];
    if (static_cast<Index>(gold[m].size()) != logp.rows()) {
      throw DimensionError("traversal loss: step " + std::to_string(m + 1) + " has " + std::to_string(gold[m].size()) +
                           " gold bits for " + std::to_string(logp.rows()) + " nodes");
    }
    std::vector<Index> targets(gold[m].begin(), gold[m].end());
    Var step = -1.0 * nn::pick_sum(logp, targets);
    total = total.valid() ? total + step : step;
  }
  return total;
}

Json trace_to_json(const ExecTrace& trace, const std::vector<std::string>& node_names) {
  Json steps = Json::array();
  for (std::size_t m = 0; m < trace.states.size(); ++m) {
    const auto& st = trace.states[m];
    Json active = Json::array();
    for (std::size_t i = 0; i < st.bitmap.size(); ++i) {
      if (st.bitmap[i] && i < node_names.size()) active.push_back(node_names[i]);
    }
    steps.push_back({{"step", st.step},
                     {"instruction", m < trace.instructions.size() ? trace.instructions[m] : ""},
                     {"scores", st.scores},
                     {"bitmap", st.bitmap},
                     {"active", active}});
  }
  return Json{{"nodes", node_names}, {"steps", steps}};
}

}  // namespace lrta::exec
