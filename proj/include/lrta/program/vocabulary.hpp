#pragma once

#include <map>
#include <string>
#include <vector>

#include "lrta/nn/tensor.hpp"
#include "lrta/world/schema.hpp"

namespace lrta {

inline constexpr const char* kBos = "<bos>";
inline constexpr const char* kEos = "<eos>";
inline constexpr const char* kUnk = "[UNK]";
inline constexpr const char* kMask = "[MASK]";

/// Token <-> index map. The first four entries are always <bos>, <eos>,
/// [UNK], [MASK]; unknown tokens encode to [UNK].
class Vocabulary {
 public:
  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}
  explicit Vocabulary(const std::vector<std::string>& words);

  nn::Index size() const { return static_cast<nn::Index>(tokens_.size()); }
  nn::Index index(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(nn::Index i) const;

  static constexpr nn::Index bos() { return 0; }
  static constexpr nn::Index eos() { return 1; }
  static constexpr nn::Index unk() { return 2; }
  static constexpr nn::Index mask() { return 3; }

  std::vector<nn::Index> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<nn::Index>& ids) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, nn::Index> index_;
};

/// Question words: template tokens plus every schema label.
Vocabulary question_vocabulary(const WorldSchema& schema);
/// Canonical instruction tokens: opcodes, directions, schema labels.
Vocabulary instruction_vocabulary(const WorldSchema& schema);
/// Full-answer tokens: template tokens plus every schema label.
Vocabulary answer_vocabulary(const WorldSchema& schema);

}  // namespace lrta
