#include "lrta/perturb/perturb.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrta/error.hpp"

namespace lrta::perturb {

std::string mask_kind_name(MaskKind kind) { return kind == MaskKind::attributes ? "attributes" : "vb_prpn"; }

MaskKind parse_mask_kind(const std::string& name) {
  if (name == "attributes") return MaskKind::attributes;
  if (name == "vb_prpn") return MaskKind::vb_prpn;
  throw ContractError("unknown mask kind '" + name + "' (expected attributes or vb_prpn)");
}

namespace {

std::set<std::string> read_words(const std::filesystem::path& path, bool required) {
  std::set<std::string> out;
  std::ifstream in(path);
  if (!in) {
    if (required) throw LoadError("cannot open lexicon " + path.string());
    return out;
  }
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string w;
    if (!(words >> w) || w.front() == '#') continue;
    if (w == kMaskToken) throw LoadError(path.string() + " lists the mask token");
    for (char c : w) {
      if (c >= 'A' && c <= 'Z') throw LoadError(path.string() + ": '" + w + "' is not lowercase");
    }
    out.insert(w);
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

CueLexicons CueLexicons::load(const std::filesystem::path& dir, const WorldSchema& schema) {
  CueLexicons lex;
  lex.attributes = read_words(dir / "attributes.txt", false);
  for (const auto& v : schema.attribute_lexicon()) lex.attributes.insert(v);
  lex.verbs = read_words(dir / "verbs.txt", true);
  lex.prepositions = read_words(dir / "prepositions.txt", true);
  lex.copulas = read_words(dir / "copulas.txt", true);
  return lex;
}

bool is_verb(const std::string& token, const CueLexicons& lex) {
  if (lex.copulas.count(token)) return lex.mask_copulas;
  if (lex.verbs.count(token)) return true;
  for (const char* suffix : {"ing", "ed", "es", "s"}) {
    if (!ends_with(token, suffix)) continue;
    std::string stem = token.substr(0, token.size() - std::char_traits<char>::length(suffix));
    if (lex.verbs.count(stem) || lex.verbs.count(stem + "e")) return true;
    // doubled final consonant: "sitting" -> "sit"
    if (stem.size() >= 2 && stem.back() == stem[stem.size() - 2] && lex.verbs.count(stem.substr(0, stem.size() - 1))) {
      return true;
    }
  }
  return false;
}

bool is_preposition(const std::string& token, const CueLexicons& lex) { return lex.prepositions.count(token) > 0; }

MaskedQuestion mask_tokens(const std::vector<std::string>& tokens, MaskKind kind, const CueLexicons& lex) {
  MaskedQuestion out;
  out.kind = kind;
  out.tokens = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    const bool hit = kind == MaskKind::attributes ? lex.attributes.count(t) > 0
                                                  : (is_verb(t, lex) || is_preposition(t, lex));
    if (hit) {
      out.tokens[i] = kMaskToken;
      out.positions.push_back(i);
    }
  }
  return out;
}

MaskedQuestion mask_attributes(const std::vector<std::string>& tokens, const CueLexicons& lex) {
  return mask_tokens(tokens, MaskKind::attributes, lex);
}

MaskedQuestion mask_vb_prpn(const std::vector<std::string>& tokens, const CueLexicons& lex) {
  return mask_tokens(tokens, MaskKind::vb_prpn, lex);
}

Json mask_record(const Json& record, MaskKind kind, const CueLexicons& lex) {
  if (!record.contains("tokens") || !record["tokens"].is_array()) {
    throw DataError("question record without a 'tokens' array");
  }
  const auto masked = mask_tokens(record["tokens"].get<std::vector<std::string>>(), kind, lex);
  Json out = record;
  out["tokens"] = masked.tokens;
  out["mask_kind"] = mask_kind_name(kind);
  out["masked_positions"] = masked.positions;
  return out;
}

void mask_questions_file(const std::filesystem::path& in, const std::filesystem::path& out, MaskKind kind,
                         const CueLexicons& lex) {
  std::ifstream src(in);
  if (!src) throw LoadError("cannot open " + in.string());
  std::ofstream dst(out, std::ios::binary);
  if (!dst) throw LoadError("cannot write " + out.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(src, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      dst << mask_record(Json::parse(line), kind, lex).dump() << '\n';
    } catch (const Json::exception& e) {
      throw DataError(in.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string format_drop(double before, double after) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f%% (%.2f%% → %.2f%%)", before - after, before, after);
  return buf;
}

std::string drop_table_csv(const std::vector<DropRow>& rows, bool mask_copulas) {
  std::ostringstream out;
  out << "# copulas " << (mask_copulas ? "masked" : "excluded") << "\n";
  out << "mask,subset,n,before,after,drop,formatted\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.mask_kind << ',' << r.subset << ',' << r.n;
    for (double v : {r.before, r.after, r.drop()}) {
      std::snprintf(buf, sizeof buf, ",%.2f", v);
      out << buf;
    }
    out << ",\"" << format_drop(r.before, r.after) << "\"\n";
  }
  return out.str();
}

Json drop_table_json(const std::vector<DropRow>& rows, bool mask_copulas) {
  Json list = Json::array();
  for (const auto& r : rows) {
    list.push_back({{"mask", r.mask_kind},
                    {"subset", r.subset},
                    {"n", r.n},
                    {"before", r.before},
                    {"after", r.after},
                    {"drop", r.drop()},
                    {"formatted", format_drop(r.before, r.after)}});
  }
  return Json{{"copulas", mask_copulas ? "masked" : "excluded"}, {"rows", list}};
}

}  // namespace lrta::perturb
