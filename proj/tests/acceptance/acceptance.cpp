// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "lrta/answer/answer.hpp"
#include "lrta/exec/engine.hpp"
#include "lrta/exec/oracle.hpp"
#include "lrta/pipeline/run.hpp"
#include "lrta/scene/matching.hpp"
#include "support/gradient_suite.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace lrta;
using nn::Index;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

Tensor random_tensor(nn::RngState& rng, Index rows, Index cols) {
  Tensor t(rows, cols);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-2, 2);
  return t;
}

bool same_files(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
      why = n + " differs";
      return false;
    }
  }
  return true;
}

// 1 ---------------------------------------------------------------------------
Outcome gradient_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const auto cases = testing::run_gradient_suite(50, 1e-5);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  std::size_t checked = 0, kinks = 0;
  for (const auto& c : cases) {
    checked += c.checked;
    kinks += c.kinks;
    if (c.checked == 0 || c.draws < 50) ok = false;
    if (c.kinks > 0) std::cout << "  " << c.name << ": " << c.kinks << " entries at kinks" << std::endl;
    if (c.max_rel_error > worst) {
      worst = c.max_rel_error;
      worst_name = c.name;
    }
  }
  ok = ok && worst < 1e-4 && secs < 60.0;
  return {ok, std::to_string(cases.size()) + " cases x 50 draws, max rel err " + fmt("%.2e", worst) + " (" +
                  worst_name + "), " + std::to_string(checked) + " entries checked, " + std::to_string(kinks) +
                  " skipped at ReLU kinks, " + fmt("%.1f s", secs)};
}

// 2 ---------------------------------------------------------------------------
Outcome hungarian_optimality() {
  nn::RngState rng = nn::RngState(2024).derive("hungarian");
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto gts = static_cast<Index>(1 + rng.index(7));
    const auto preds = gts + static_cast<Index>(rng.index(static_cast<std::size_t>(8 - gts)));
    Tensor c(preds, gts);
    for (Index i = 0; i < c.size(); ++i) {
      // Mix of continuous and small-integer costs so ties occur.
      c.data()[i] = rng.bernoulli(0.5) ? rng.uniform(-10, 10) : static_cast<double>(rng.index(4));
    }
    const auto m = scene::hungarian_match(c);
    std::set<int> used;
    for (int a : m.assignment) {
      if (a >= 0 && !used.insert(a).second) ++mismatches;
    }
    if (static_cast<Index>(used.size()) != gts || m.total_cost != testing::brute_force_assignment(c)) ++mismatches;
  }
  return {mismatches == 0, "1000 matrices up to 7x7, " + std::to_string(mismatches) + " mismatches"};
}

// 3 ---------------------------------------------------------------------------
Outcome oracle_equivalence() {
  const auto schema = WorldSchema::default_schema();
  nn::RngState rng = nn::RngState(2024).derive("oracle");
  world::SceneOptions so;
  so.min_objects = 1;
  so.max_objects = 8;
  int pairs = 0, mismatches = 0;
  while (pairs < 1000) {
    const auto scene = world::sample_scene(schema, rng, so, "s");
    const auto drawn = world::sample_program_for(scene, schema, rng, {}, 4);
    if (!drawn) continue;
    // Truncating at a random length also covers programs without a terminal.
    auto program = drawn->program;
    program.steps.resize(1 + rng.index(program.size()));
    const auto r = exec::oracle_execute(scene, program, schema, 4);
    mismatches += r.bitmaps != testing::brute_force_bitmaps(scene, program);
    ++pairs;
  }
  return {mismatches == 0, std::to_string(pairs) + " pairs (N<=8, M<=4), " + std::to_string(mismatches) + " mismatches"};
}

// 4 ---------------------------------------------------------------------------
Outcome naive_recomputation() {
  nn::RngState rng = nn::RngState(2024).derive("recompute");
  nn::ParameterStore store;
  nn::RngState init(5);
  const Index d = 6;
  const auto engine = exec::ExecutionEngine::create(store, "think", d, 12, init);
  double hist_err = 0.0, ctx_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Tape tape(false);
    const auto n = static_cast<Index>(1 + rng.index(8));
    const Tensor objects = random_tensor(rng, n, d);
    Tensor scores(n, 1);
    for (Index i = 0; i < n; ++i) scores(i, 0) = rng.uniform();
    const Tensor h = exec::history_vector(tape.constant(scores), tape.constant(objects)).value();
    for (Index j = 0; j < d; ++j) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += scores(i, 0) * objects(i, j);
      hist_err = std::max(hist_err, std::abs(acc - h(0, j)));
    }

    const auto k = static_cast<Index>(1 + rng.index(8));
    std::vector<Tensor> feats;
    std::vector<Var> vars;
    for (Index i = 0; i < k; ++i) {
      feats.push_back(random_tensor(rng, 1, d));
      vars.push_back(tape.constant(feats.back()));
    }
    const Tensor c = exec::context_vector(tape, vars, d).value();
    for (Index j = 0; j < d; ++j) {
      double acc = 0.0;
      for (const auto& f : feats) acc += f(0, j);
      ctx_err = std::max(ctx_err, std::abs(acc / static_cast<double>(k) - c(0, j)));
    }

    // The same quantities inside a full engine step.
    if (n >= 2) {
      scene::VectorSceneGraph g{tape.constant(objects), tape.constant(random_tensor(rng, n * (n - 1), d)), n, {}};
      std::vector<Var> instr{tape.constant(random_tensor(rng, 1, d))};
      const auto trace = exec::execute(tape, engine, g, instr);
      for (Index j = 0; j < d; ++j) {
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) acc += trace.states[0].scores[static_cast<std::size_t>(i)] * objects(i, j);
        hist_err = std::max(hist_err, std::abs(acc - trace.states[0].history(0, j)));
      }
    }
  }
  const bool ok = hist_err <= 1e-12 && ctx_err <= 1e-12;
  return {ok, "1000 instances, history max err " + fmt("%.1e", hist_err) + ", context max err " + fmt("%.1e", ctx_err)};
}

// 5 ---------------------------------------------------------------------------
scene::GraphPrediction permute_slots(Tape& tape, const scene::GraphPrediction& p, const std::vector<Index>& order) {
  const auto n = static_cast<Index>(order.size());
  std::vector<Index> pairs;
  for (Index s = 0; s < n; ++s) {
    for (Index t = 0; t < n; ++t) {
      if (s != t) pairs.push_back(scene::VectorSceneGraph::pair_index(order[s], order[t], n));
    }
  }
  scene::GraphPrediction q;
  q.slot_count = p.slot_count;
  q.category_logp = nn::gather_rows(p.category_logp, order);
  for (const auto& a : p.attribute_logp) q.attribute_logp.push_back(nn::gather_rows(a, order));
  q.boxes = nn::gather_rows(p.boxes, order);
  q.relation_logp = nn::gather_rows(p.relation_logp, pairs);
  (void)tape;
  return q;
}

Outcome set_loss_invariance() {
  const auto schema = WorldSchema::default_schema();
  nn::ParameterStore store;
  nn::RngState init(9);
  const auto embedder = scene::SceneEmbedder::create(store, "embed", schema, 16, init);
  const auto heads = scene::SceneGraphHeads::create(store, "look", schema, 16, 32, init);
  nn::RngState rng = nn::RngState(2024).derive("setloss");
  world::SceneOptions so;
  so.min_objects = 1;
  so.max_objects = 8;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    Tape tape(false);
    const auto scene = world::sample_scene(schema, rng, so, "s");
    scene::EmbedOptions eo;
    eo.slots = 12;
    eo.noise_std = 0.3;
    auto erng = rng.derive(static_cast<std::uint64_t>(t));
    const auto g = scene::embed_scene(tape, scene, schema, embedder, heads.encoder, eo, erng);
    const auto pred = scene::predict_graph(tape, g, heads);
    const double base = scene::set_prediction_loss(tape, pred, scene, schema, 1.0).loss.scalar();
    for (int rep = 0; rep < 3; ++rep) {
      auto shuffled = scene;
      rng.shuffle(shuffled.objects);
      std::vector<Index> order(12);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      const auto q = permute_slots(tape, pred, order);
      const double v = scene::set_prediction_loss(tape, q, shuffled, schema, 1.0).loss.scalar();
      worst = std::max(worst, std::abs(v - base));
    }
  }
  return {worst < 1e-9, "200 scenes x 3 joint permutations, max |delta loss| " + fmt("%.1e", worst)};
}

// 6-9 -------------------------------------------------------------------------
struct RunReport {
  pipeline::EvalReport testdev;
  std::vector<perturb::DropRow> ablation;
  std::vector<perturb::DropRow> masking;
  std::string document;  // byte image of the metric report
  double seconds = 0.0;
};

const perturb::DropRow& row(const std::vector<perturb::DropRow>& rows, const std::string& kind,
                            const std::string& subset) {
  for (const auto& r : rows) {
    if (r.mask_kind == kind && r.subset == subset) return r;
  }
  throw std::runtime_error("missing report row " + kind + "/" + subset);
}

RunReport full_run(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto schema = WorldSchema::default_schema();
  fs::remove_all(dir);
  world::write_dataset(dir / "data", schema, world::build_dataset(schema, world::DatasetConfig{}));

  pipeline::PipelineConfig cfg;
  cfg.mode = pipeline::Mode::visual_oracle;
  cfg.data_dir = (dir / "data").string();
  cfg.out_dir = dir.string();
  const auto train_set = pipeline::load_dataset(dir / "data", "train");
  const auto valid_set = pipeline::load_dataset(dir / "data", "valid");
  const auto testdev = pipeline::load_dataset(dir / "data", "testdev");
  auto trained = pipeline::train(cfg, schema, train_set, valid_set, [](const pipeline::EpochLog& e) {
    std::cout << "  epoch " << e.epoch << " loss " << fmt("%.4f", e.loss.total) << " valid short "
              << fmt("%.4f", e.valid_short) << " full " << fmt("%.4f", e.valid_full) << std::endl;
  });
  pipeline::save_checkpoint(dir / "checkpoint", trained.model);

  RunReport out;
  out.testdev = pipeline::evaluate(trained.model, testdev);
  out.ablation = pipeline::ablation_rows(trained.model, testdev);
  const auto lex = perturb::CueLexicons::load(LRTA_DATA_DIR "/lexicons", schema);
  out.masking = pipeline::perturbation_rows(trained.model, testdev, lex);

  Json doc;
  doc["train_log"] = trained.log.to_json();
  doc["testdev"] = out.testdev.to_json();
  doc["scene_ablation"] = perturb::drop_table_json(out.ablation, lex.mask_copulas);
  doc["perturbation"] = perturb::drop_table_json(out.masking, lex.mask_copulas);
  out.document = doc.dump(2);
  write_text(dir / "report.json", out.document);
  write_text(dir / "perturbation.csv", perturb::drop_table_csv(out.masking, lex.mask_copulas));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

Outcome visual_oracle_accuracy(const RunReport& r) {
  const auto& m = r.testdev.metrics;
  const bool ok = m.short_acc >= 0.90 && m.full_acc >= 0.80 && r.seconds <= 3600.0;
  return {ok, "testdev short " + fmt("%.4f", m.short_acc) + " (>= 0.90), full " + fmt("%.4f", m.full_acc) +
                  " (>= 0.80), n " + std::to_string(m.n) + ", " + fmt("%.0f s", r.seconds)};
}

Outcome relation_ablation(const RunReport& r) {
  const auto& x = row(r.ablation, "strip_relations", "relate");
  return {x.drop() >= 15.0, "relate questions (n " + std::to_string(x.n) + "): " +
                                perturb::format_drop(x.before, x.after) + ", need >= 15.00"};
}

Outcome perturbation_direction(const RunReport& r) {
  const auto& a = row(r.masking, "attributes", "attribute");
  const auto& v = row(r.masking, "vb_prpn", "relate");
  const bool ok = a.drop() >= 20.0 && v.drop() >= 15.0;
  return {ok, "attributes on attribute questions " + perturb::format_drop(a.before, a.after) +
                  " (need >= 20.00); VB/PRPN on relate questions " + perturb::format_drop(v.before, v.after) +
                  " (need >= 15.00)"};
}

// 10 --------------------------------------------------------------------------
Outcome template_consistency(const fs::path& work) {
  const auto schema = WorldSchema::default_schema();
  const world::DatasetConfig cfg;
  fs::remove_all(work / "gen_a");
  fs::remove_all(work / "gen_b");
  const auto splits = world::build_dataset(schema, cfg);
  world::write_dataset(work / "gen_a", schema, splits);
  world::write_dataset(work / "gen_b", schema, world::build_dataset(schema, cfg));
  std::size_t total = 0, bad = 0;
  for (const auto& sp : splits) {
    std::map<std::string, const SymbolicScene*> scenes;
    for (const auto& s : sp.scenes) scenes[s.scene_id] = &s;
    for (const auto& it : sp.items) {
      ++total;
      const auto r = exec::oracle_execute(*scenes.at(it.scene_id), it.program, schema);
      const bool ok = answer::short_answer_of(it.full_answer) == r.short_answer && it.short_answer == r.short_answer &&
                      it.bitmaps == r.bitmaps;
      bad += !ok;
    }
  }
  std::string why;
  const bool identical = same_files(work / "gen_a", work / "gen_b", why);
  return {bad == 0 && identical, std::to_string(total - bad) + "/" + std::to_string(total) +
                                     " consistent; regeneration " + (identical ? "byte-identical" : why)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "criteria to run");
  CLI11_PARSE(app, argc, argv);
  const fs::path dir(work);
  fs::create_directories(dir);
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!wanted(id)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
  };

  report(1, "gradient oracle", gradient_oracle);
  report(2, "hungarian optimality", hungarian_optimality);
  report(3, "oracle executor equivalence", oracle_equivalence);
  report(4, "naive history/context recomputation", naive_recomputation);
  report(5, "set-loss permutation invariance", set_loss_invariance);

  if (wanted(6) || wanted(7) || wanted(8) || wanted(9)) {
    std::optional<RunReport> first, second;
    std::string error;
    try {
      std::cout << "training run 1" << std::endl;
      first = full_run(dir / "run1");
      if (wanted(9)) {
        std::cout << "training run 2" << std::endl;
        second = full_run(dir / "run2");
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto guarded = [&](auto fn) -> std::function<Outcome()> {
      return [&, fn] { return first ? fn(*first) : Outcome{false, "run failed: " + error}; };
    };
    report(6, "visual-oracle accuracy", guarded(visual_oracle_accuracy));
    report(7, "scene-ablation direction", guarded(relation_ablation));
    report(8, "perturbation direction", guarded(perturbation_direction));
    report(9, "determinism", [&] {
      if (!first || !second) return Outcome{false, "run failed: " + error};
      const bool same = first->document == second->document &&
                        slurp(dir / "run1" / "perturbation.csv") == slurp(dir / "run2" / "perturbation.csv");
      return Outcome{same, std::string("metric reports ") + (same ? "byte-identical" : "differ") + " across two runs (" +
                               fmt("%.0f s", first->seconds) + ", " + fmt("%.0f s", second->seconds) + ")"};
    });
  }
  report(10, "template/oracle consistency", [&] { return template_consistency(dir); });
  return failures;
}
