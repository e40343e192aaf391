#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "lrta/error.hpp"
#include "lrta/pipeline/run.hpp"

namespace fs = std::filesystem;
using namespace lrta;

namespace {

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

fs::path default_lexicons() { return fs::path(LRTA_DATA_DIR) / "lexicons"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-graph reasoning pipeline"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen->allow_extras();
  std::string gen_out = "data/synthetic", gen_config, gen_schema;
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--config", gen_config, "dataset config JSON");
  gen->add_option("--schema", gen_schema, "world schema JSON (default schema otherwise)");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  tr->allow_extras();
  std::string tr_config;
  tr->add_option("--config", tr_config, "pipeline config JSON");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_data, ev_split = "testdev", ev_ablation = "none", ev_out, ev_preds;
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--split", ev_split);
  ev->add_option("--ablation", ev_ablation, "none|strip_attributes|strip_relations|strip_both");
  ev->add_option("--out", ev_out, "metrics JSON");
  ev->add_option("--predictions", ev_preds, "predictions JSONL");

  // perturb
  auto* pt = app.add_subcommand("perturb", "mask cue tokens in a question file");
  std::string pt_in, pt_out, pt_mask, pt_lex, pt_schema;
  bool pt_copulas = false;
  pt->add_option("--in", pt_in)->required();
  pt->add_option("--out", pt_out)->required();
  pt->add_option("--mask", pt_mask, "attributes|vb_prpn")->required();
  pt->add_option("--lexicons", pt_lex, "lexicon directory");
  pt->add_option("--schema", pt_schema, "schema.json whose attribute values join the lexicon");
  pt->add_flag("--mask-copulas", pt_copulas);

  // perturb-eval
  auto* pe = app.add_subcommand("perturb-eval", "accuracy before and after masking");
  std::string pe_ckpt, pe_data, pe_split = "testdev", pe_lex, pe_out;
  bool pe_copulas = false;
  pe->add_option("--checkpoint", pe_ckpt)->required();
  pe->add_option("--data", pe_data)->required();
  pe->add_option("--split", pe_split);
  pe->add_option("--lexicons", pe_lex);
  pe->add_option("--out", pe_out, "drop table JSON");
  pe->add_flag("--mask-copulas", pe_copulas);

  // explain
  auto* ex = app.add_subcommand("explain", "per-step trace for one question");
  std::string ex_ckpt, ex_data, ex_split = "testdev", ex_qid;
  ex->add_option("--checkpoint", ex_ckpt)->required();
  ex->add_option("--data", ex_data)->required();
  ex->add_option("--split", ex_split);
  ex->add_option("--question-id", ex_qid)->required();

  // report
  auto* rp = app.add_subcommand("report", "CSV drop table from perturb-eval output");
  std::string rp_in, rp_out;
  rp->add_option("--in", rp_in, "perturb-eval JSON")->required();
  rp->add_option("--out", rp_out, "CSV path (stdout otherwise)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      Json cfg = world::DatasetConfig{}.to_json();
      if (!gen_config.empty()) {
        const Json file = read_json(gen_config);
        for (const auto& [k, v] : file.items()) {
          if (!cfg.contains(k)) throw ContractError("unknown dataset config key '" + k + "'");
          cfg[k] = v;
        }
      }
      pipeline::apply_overrides(cfg, gen->remaining());
      const auto config = world::DatasetConfig::from_json(cfg);
      const auto schema =
          gen_schema.empty() ? WorldSchema::default_schema() : WorldSchema::from_json(read_json(gen_schema));
      const auto splits = world::build_dataset(schema, config);
      world::write_dataset(gen_out, schema, splits);
      write_json(fs::path(gen_out) / "dataset_config.json", config.to_json());
      for (const auto& s : splits) {
        std::cout << s.name << ": " << s.items.size() << " questions over " << s.scenes.size() << " scenes\n";
      }
    } else if (tr->parsed()) {
      const auto config = pipeline::load_config(tr_config, tr->remaining());
      const auto schema = world::read_schema(config.data_dir);
      const auto train_set = pipeline::load_dataset(config.data_dir, "train");
      const auto valid_set = pipeline::load_dataset(config.data_dir, "valid");
      Json timing = Json::array();
      auto result = pipeline::train(config, schema, train_set, valid_set, [&](const pipeline::EpochLog& e) {
        std::printf("epoch %3ld  loss %.4f (look %.4f read %.4f think %.4f answer %.4f)  valid short %.4f full %.4f  %.1fs\n",
                    e.epoch, e.loss.total, e.loss.look, e.loss.read, e.loss.think, e.loss.answer, e.valid_short,
                    e.valid_full, e.wall_seconds);
        std::fflush(stdout);
        timing.push_back({{"epoch", e.epoch}, {"wall_seconds", e.wall_seconds}});
      });
      const fs::path out = config.out_dir;
      pipeline::save_checkpoint(out / "checkpoint", result.model);
      write_json(out / "train_log.json", result.log.to_json());
      write_json(out / "timing.json", timing);
      std::cout << "best epoch " << result.log.best_epoch << ", checkpoint " << (out / "checkpoint").string() << '\n';
    } else if (ev->parsed()) {
      const auto schema = world::read_schema(ev_data);
      const auto model = pipeline::load_checkpoint(ev_ckpt, &schema);
      const auto data = pipeline::load_dataset(ev_data, ev_split);
      const auto report = pipeline::evaluate(model, data, pipeline::parse_ablation(ev_ablation));
      Json j = report.to_json();
      j["split"] = ev_split;
      j["ablation"] = ev_ablation;
      j["mode"] = pipeline::mode_name(model.config.mode);
      if (!ev_preds.empty()) {
        std::ofstream out(ev_preds, std::ios::binary);
        for (const auto& p : report.predictions) out << answer::prediction_to_json(p).dump() << '\n';
      }
      if (ev_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        write_json(ev_out, j);
      }
    } else if (pt->parsed()) {
      const auto schema = pt_schema.empty() ? WorldSchema::default_schema() : WorldSchema::from_json(read_json(pt_schema));
      auto lex = perturb::CueLexicons::load(pt_lex.empty() ? default_lexicons() : fs::path(pt_lex), schema);
      lex.mask_copulas = pt_copulas;
      perturb::mask_questions_file(pt_in, pt_out, perturb::parse_mask_kind(pt_mask), lex);
    } else if (pe->parsed()) {
      const auto schema = world::read_schema(pe_data);
      const auto model = pipeline::load_checkpoint(pe_ckpt, &schema);
      const auto data = pipeline::load_dataset(pe_data, pe_split);
      auto lex = perturb::CueLexicons::load(pe_lex.empty() ? default_lexicons() : fs::path(pe_lex), schema);
      lex.mask_copulas = pe_copulas;
      auto rows = pipeline::perturbation_rows(model, data, lex);
      const auto ablations = pipeline::ablation_rows(model, data);
      rows.insert(rows.end(), ablations.begin(), ablations.end());
      const Json j = perturb::drop_table_json(rows, pe_copulas);
      if (pe_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        write_json(pe_out, j);
      }
    } else if (ex->parsed()) {
      const auto schema = world::read_schema(ex_data);
      const auto model = pipeline::load_checkpoint(ex_ckpt, &schema);
      const auto data = pipeline::load_dataset(ex_data, ex_split);
      std::cout << pipeline::explain(model, data, ex_qid).dump(2) << '\n';
    } else if (rp->parsed()) {
      const Json j = read_json(rp_in);
      std::vector<perturb::DropRow> rows;
      for (const auto& r : j.at("rows")) {
        rows.push_back({r.at("mask").get<std::string>(), r.at("subset").get<std::string>(), r.at("before").get<double>(),
                        r.at("after").get<double>(), r.at("n").get<std::size_t>()});
      }
      const auto csv = perturb::drop_table_csv(rows, j.value("copulas", "excluded") == "masked");
      if (rp_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(rp_out, std::ios::binary) << csv;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
