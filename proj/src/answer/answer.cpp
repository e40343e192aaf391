#include "lrta/answer/answer.hpp"

#include <algorithm>

#include "lrta/error.hpp"
#include "lrta/program/render.hpp"

namespace lrta::answer {

using program::Opcode;

std::string short_answer_of(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return "";
  if (tokens.front() == "yes" || tokens.front() == "no") return tokens.front();
  if (tokens.back() == "." && tokens.size() >= 2) return tokens[tokens.size() - 2];
  return tokens.back();
}

FullAnswer render_full_answer(const program::InstructionProgram& program, const exec::OracleResult& result) {
  if (!program.has_terminal()) throw ValidationError("full answers need a program ending in a terminal step");
  const auto& last = program.steps.back();
  const auto desc = program::describe(program);
  const bool yes = result.short_answer == "yes";
  std::vector<std::string> t;
  auto append_desc = [&] { t.insert(t.end(), desc.begin(), desc.end()); };
  switch (last.op) {
    case Opcode::exist:
      t = yes ? std::vector<std::string>{"yes", ",", "there", "is", "a"}
              : std::vector<std::string>{"no", ",", "there", "is", "no"};
      append_desc();
      break;
    case Opcode::query_attr:
      t = {"the", last.arg, "of", "the"};
      append_desc();
      t.push_back("is");
      t.push_back(result.short_answer);
      break;
    case Opcode::verify_attr:
      t = {yes ? "yes" : "no", ",", "the"};
      append_desc();
      t.push_back("is");
      if (!yes) t.push_back("not");
      t.push_back(last.value);
      break;
    default:
      break;
  }
  t.push_back(".");
  FullAnswer a;
  a.short_answer = short_answer_of(t);
  a.tokens = std::move(t);
  return a;
}

AnswerGenerator AnswerGenerator::create(nn::ParameterStore& store, const std::string& name, Index vocab, Index dim,
                                        Index hidden, Index heads, Index blocks, Index m_max, Index max_tokens,
                                        nn::RngState& rng) {
  AnswerGenerator g;
  g.memory = nn::FeedForwardLayer::create(store, name + ".memory", 2 * dim, dim, nn::Activation::identity, rng);
  g.steps = nn::Embedding::create(store, name + ".steps", m_max, dim, rng);
  g.norm = nn::LayerNorm::create(store, name + ".norm", dim, rng);
  g.decoder = nn::SequenceDecoder::create(store, name + ".decoder", vocab, max_tokens + 1, dim, hidden, heads, blocks,
                                          Vocabulary::bos(), Vocabulary::eos(), rng);
  g.max_tokens = max_tokens;
  return g;
}

Var answer_memory(Tape& tape, const AnswerGenerator& generator, std::span<const Var> histories,
                  std::span<const Var> instructions) {
  if (histories.empty() || histories.size() != instructions.size()) {
    throw DimensionError("answer memory: " + std::to_string(histories.size()) + " histories and " +
                         std::to_string(instructions.size()) + " instructions");
  }
  const auto m = static_cast<Index>(histories.size());
  if (m > generator.steps.rows()) {
    throw DimensionError("answer memory: " + std::to_string(m) + " steps exceed M_max " +
                         std::to_string(generator.steps.rows()));
  }
  std::vector<Index> pos(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) pos[static_cast<std::size_t>(i)] = i;
  Var joined = nn::hcat({nn::vcat(histories), nn::vcat(instructions)});
  return nn::layer_norm(tape, generator.norm,
                        nn::feed_forward(tape, generator.memory, joined) + nn::embed_rows(tape, generator.steps, pos));
}

Var answer_loss(Tape& tape, const AnswerGenerator& generator, Var memory, std::span<const Index> target) {
  if (static_cast<Index>(target.size()) > generator.max_tokens) {
    throw DimensionError("answer of " + std::to_string(target.size()) + " tokens exceeds A_max " +
                         std::to_string(generator.max_tokens));
  }
  return nn::decoder_nll(tape, generator.decoder, memory, target);
}

FullAnswer generate_answer(Tape& tape, const AnswerGenerator& generator, Var memory, const Vocabulary& vocab) {
  FullAnswer a;
  a.tokens = vocab.decode(nn::greedy_decode(tape, generator.decoder, memory, generator.max_tokens));
  a.short_answer = short_answer_of(a.tokens);
  return a;
}

Metrics score(const std::vector<Prediction>& predictions, const std::vector<Prediction>& references) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.question_id, &p).second) throw DataError("duplicate prediction id " + p.question_id);
  }
  std::vector<std::string> missing;
  std::map<std::string, bool> seen;
  for (const auto& r : references) {
    seen[r.question_id] = true;
    if (!by_id.count(r.question_id)) missing.push_back(r.question_id);
  }
  for (const auto& p : predictions) {
    if (!seen.count(p.question_id)) missing.push_back(p.question_id);
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw DataError("unmatched question ids: " + list);
  }
  Metrics m;
  std::map<std::string, std::pair<std::size_t, std::size_t>> hits;
  std::size_t full = 0, shrt = 0;
  for (const auto& r : references) {
    const Prediction& p = *by_id.at(r.question_id);
    const bool f = p.full_answer == r.full_answer;
    const bool s = p.short_answer == r.short_answer;
    full += f;
    shrt += s;
    auto& ts = m.by_type[r.question_type];
    ++ts.n;
    hits[r.question_type].first += f;
    hits[r.question_type].second += s;
  }
  m.n = references.size();
  if (m.n > 0) {
    m.full_acc = static_cast<double>(full) / static_cast<double>(m.n);
    m.short_acc = static_cast<double>(shrt) / static_cast<double>(m.n);
  }
  for (auto& [type, ts] : m.by_type) {
    ts.full_acc = static_cast<double>(hits[type].first) / static_cast<double>(ts.n);
    ts.short_acc = static_cast<double>(hits[type].second) / static_cast<double>(ts.n);
  }
  return m;
}

Json metrics_to_json(const Metrics& metrics) {
  Json by_type = Json::object();
  for (const auto& [type, ts] : metrics.by_type) {
    by_type[type] = {{"full_acc", ts.full_acc}, {"short_acc", ts.short_acc}, {"n", ts.n}};
  }
  return Json{{"full_acc", metrics.full_acc}, {"short_acc", metrics.short_acc}, {"by_type", by_type}, {"n", metrics.n}};
}

Json prediction_to_json(const Prediction& p) {
  Json j{{"question_id", p.question_id}, {"full_answer", p.full_answer}, {"short_answer", p.short_answer}};
  if (!p.question_type.empty()) j["question_type"] = p.question_type;
  return j;
}

Prediction prediction_from_json(const Json& j) {
  Prediction p;
  try {
    p.question_id = j.at("question_id").get<std::string>();
    p.full_answer = j.at("full_answer").get<std::vector<std::string>>();
    p.short_answer = j.value("short_answer", short_answer_of(p.full_answer));
    p.question_type = j.value("question_type", "");
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed prediction: ") + e.what());
  }
  return p;
}

}  // namespace lrta::answer
