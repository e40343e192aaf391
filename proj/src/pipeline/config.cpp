#include "lrta/pipeline/config.hpp"

#include <fstream>

#include "lrta/error.hpp"
#include "lrta/nn/rng.hpp"

namespace lrta::pipeline {

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::visual_oracle: return "visual_oracle";
    case Mode::reading_oracle: return "reading_oracle";
    case Mode::end_to_end: return "end_to_end";
    case Mode::noisy: return "noisy";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::visual_oracle, Mode::reading_oracle, Mode::end_to_end, Mode::noisy}) {
    if (mode_name(m) == name) return m;
  }
  throw ContractError("unknown mode '" + name + "' (visual_oracle, reading_oracle, end_to_end, noisy)");
}

Json PipelineConfig::to_json() const {
  return Json{{"dim", dim},
              {"slots", slots},
              {"m_max", m_max},
              {"a_max", a_max},
              {"hidden", hidden},
              {"think_hidden", think_hidden},
              {"think_layers", think_layers},
              {"heads", heads},
              {"encoder_blocks", encoder_blocks},
              {"text_blocks", text_blocks},
              {"answer_blocks", answer_blocks},
              {"max_question_len", max_question_len},
              {"lambda_look", lambda_look},
              {"lambda_read", lambda_read},
              {"lambda_think", lambda_think},
              {"lambda_answer", lambda_answer},
              {"lambda_box", lambda_box},
              {"optimizer", optimizer},
              {"lr", lr},
              {"lr_min_ratio", lr_min_ratio},
              {"momentum", momentum},
              {"beta1", beta1},
              {"beta2", beta2},
              {"clip_norm", clip_norm},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"curriculum_epochs", curriculum_epochs},
              {"mode", mode_name(mode)},
              {"noise_std", noise_std},
              {"slot_dropout", slot_dropout},
              {"seed", seed},
              {"data_dir", data_dir},
              {"out_dir", out_dir}};
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
  if (!j.is_object()) throw ContractError("config must be a JSON object");
  const Json known = PipelineConfig{}.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ContractError("unknown config key '" + key + "'");
  }
  PipelineConfig c;
  try {
#define LRTA_FIELD(name) c.name = j.value(#name, c.name)
    LRTA_FIELD(dim);
    LRTA_FIELD(slots);
    LRTA_FIELD(m_max);
    LRTA_FIELD(a_max);
    LRTA_FIELD(hidden);
    LRTA_FIELD(think_hidden);
    LRTA_FIELD(think_layers);
    LRTA_FIELD(heads);
    LRTA_FIELD(encoder_blocks);
    LRTA_FIELD(text_blocks);
    LRTA_FIELD(answer_blocks);
    LRTA_FIELD(max_question_len);
    LRTA_FIELD(lambda_look);
    LRTA_FIELD(lambda_read);
    LRTA_FIELD(lambda_think);
    LRTA_FIELD(lambda_answer);
    LRTA_FIELD(lambda_box);
    LRTA_FIELD(optimizer);
    LRTA_FIELD(lr);
    LRTA_FIELD(lr_min_ratio);
    LRTA_FIELD(momentum);
    LRTA_FIELD(beta1);
    LRTA_FIELD(beta2);
    LRTA_FIELD(clip_norm);
    LRTA_FIELD(epochs);
    LRTA_FIELD(batch_size);
    LRTA_FIELD(curriculum_epochs);
    LRTA_FIELD(noise_std);
    LRTA_FIELD(slot_dropout);
    LRTA_FIELD(seed);
    LRTA_FIELD(data_dir);
    LRTA_FIELD(out_dir);
#undef LRTA_FIELD
    c.mode = parse_mode(j.value("mode", mode_name(c.mode)));
  } catch (const Json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  return c;
}

void PipelineConfig::validate() const {
  auto positive = [](long v, const char* name) {
    if (v < 1) throw ContractError(std::string("config: ") + name + " must be >= 1, got " + std::to_string(v));
  };
  positive(dim, "dim");
  positive(slots, "slots");
  positive(m_max, "m_max");
  positive(a_max, "a_max");
  positive(hidden, "hidden");
  positive(think_hidden, "think_hidden");
  positive(think_layers, "think_layers");
  positive(heads, "heads");
  positive(text_blocks, "text_blocks");
  positive(answer_blocks, "answer_blocks");
  positive(max_question_len, "max_question_len");
  positive(batch_size, "batch_size");
  if (encoder_blocks < 0) throw ContractError("config: encoder_blocks must be >= 0");
  if (epochs < 0) throw ContractError("config: epochs must be >= 0");
  if (curriculum_epochs < 0) throw ContractError("config: curriculum_epochs must be >= 0");
  if (dim % heads != 0) throw ContractError("config: dim must be divisible by heads");
  for (auto [v, name] : {std::pair{lambda_look, "lambda_look"}, std::pair{lambda_read, "lambda_read"},
                         std::pair{lambda_think, "lambda_think"}, std::pair{lambda_answer, "lambda_answer"},
                         std::pair{lambda_box, "lambda_box"}}) {
    if (!(v >= 0.0)) throw ContractError(std::string("config: ") + name + " must be >= 0");
  }
  if (!(lr > 0.0)) throw ContractError("config: lr must be > 0");
  if (noise_std < 0.0 || slot_dropout < 0.0 || slot_dropout >= 1.0) {
    throw ContractError("config: noise_std >= 0 and slot_dropout in [0, 1) required");
  }
  nn::parse_optimizer_kind(optimizer);
}

std::uint64_t PipelineConfig::hash() const { return nn::fnv1a64(to_json().dump()); }

nn::OptimizerConfig PipelineConfig::optimizer_config() const {
  nn::OptimizerConfig o;
  o.kind = nn::parse_optimizer_kind(optimizer);
  o.momentum = momentum;
  o.beta1 = beta1;
  o.beta2 = beta2;
  o.clip_norm = clip_norm;
  return o;
}

void apply_overrides(Json& config, const std::vector<std::string>& overrides) {
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    std::string key = overrides[i];
    std::string value;
    if (key.rfind("--", 0) != 0) throw ContractError("expected --key, got '" + key + "'");
    key = key.substr(2);
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= overrides.size()) throw ContractError("--" + key + " needs a value");
      value = overrides[++i];
    }
    for (auto& ch : key) {
      if (ch == '-') ch = '_';
    }
    if (!config.contains(key)) throw ContractError("unknown config key '" + key + "'");
    Json& slot = config[key];
    try {
      if (slot.is_boolean()) {
        slot = value == "true" || value == "1";
      } else if (slot.is_number_unsigned()) {
        slot = static_cast<std::uint64_t>(std::stoull(value));
      } else if (slot.is_number_integer()) {
        slot = std::stol(value);
      } else if (slot.is_number_float()) {
        slot = std::stod(value);
      } else {
        slot = value;
      }
    } catch (const std::logic_error&) {
      throw ContractError("--" + key + ": cannot convert '" + value + "'");
    }
  }
}

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  Json j = PipelineConfig{}.to_json();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config " + path.string());
    Json file;
    try {
      file = Json::parse(in);
    } catch (const Json::exception& e) {
      throw LoadError("config " + path.string() + ": " + e.what());
    }
    if (!file.is_object()) throw ContractError("config " + path.string() + " must be a JSON object");
    for (const auto& [k, v] : file.items()) {
      if (!j.contains(k)) throw ContractError("unknown config key '" + k + "'");
      j[k] = v;
    }
  }
  apply_overrides(j, overrides);
  auto c = PipelineConfig::from_json(j);
  c.validate();
  return c;
}

}  // namespace lrta::pipeline
