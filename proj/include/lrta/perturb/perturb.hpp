#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "lrta/world/schema.hpp"

namespace lrta::perturb {

inline constexpr const char* kMaskToken = "[MASK]";

enum class MaskKind { attributes, vb_prpn };

std::string mask_kind_name(MaskKind kind);
/// Throws ContractError for anything but "attributes" or "vb_prpn".
MaskKind parse_mask_kind(const std::string& name);

/// Word lists for the rule tagger. Copulas are left alone unless
/// `mask_copulas` is set.
struct CueLexicons {
  std::set<std::string> attributes;
  std::set<std::string> verbs;
  std::set<std::string> prepositions;
  std::set<std::string> copulas;
  bool mask_copulas = false;

  /// Reads attributes.txt (optional), verbs.txt, prepositions.txt and
  /// copulas.txt, one lowercase token per line, and adds the schema's
  /// attribute values. Throws LoadError when a required file is missing.
  static CueLexicons load(const std::filesystem::path& dir, const WorldSchema& schema);
};

/// Verb by direct lexicon hit or by stripping -ing / -ed / -es / -s (with
/// an optional restored final "e") down to a lexicon stem.
bool is_verb(const std::string& token, const CueLexicons& lex);
bool is_preposition(const std::string& token, const CueLexicons& lex);

struct MaskedQuestion {
  std::vector<std::string> tokens;
  MaskKind kind = MaskKind::attributes;
  std::vector<std::size_t> positions;
};

MaskedQuestion mask_attributes(const std::vector<std::string>& tokens, const CueLexicons& lex);
MaskedQuestion mask_vb_prpn(const std::vector<std::string>& tokens, const CueLexicons& lex);
MaskedQuestion mask_tokens(const std::vector<std::string>& tokens, MaskKind kind, const CueLexicons& lex);

/// Applies a mask to every record of a question JSONL stream: "tokens" is
/// replaced, "mask_kind" and "masked_positions" are added, all other fields
/// are kept.
Json mask_record(const Json& record, MaskKind kind, const CueLexicons& lex);
void mask_questions_file(const std::filesystem::path& in, const std::filesystem::path& out, MaskKind kind,
                         const CueLexicons& lex);

/// Accuracy before and after masking, in percent.
struct DropRow {
  std::string mask_kind;
  std::string subset;
  double before = 0.0;
  double after = 0.0;
  std::size_t n = 0;

  double drop() const { return before - after; }
};

/// "26.20% (54.48% → 28.28%)".
std::string format_drop(double before, double after);

/// Header line plus one CSV row per entry: mask,subset,n,before,after,drop,formatted.
std::string drop_table_csv(const std::vector<DropRow>& rows, bool mask_copulas);
Json drop_table_json(const std::vector<DropRow>& rows, bool mask_copulas);

}  // namespace lrta::perturb
