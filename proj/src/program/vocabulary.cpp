#include "lrta/program/vocabulary.hpp"

#include "lrta/error.hpp"

namespace lrta {

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  for (const char* special : {kBos, kEos, kUnk, kMask}) {
    index_.emplace(special, static_cast<nn::Index>(tokens_.size()));
    tokens_.emplace_back(special);
  }
  for (const auto& w : words) {
    if (index_.count(w)) continue;
    index_.emplace(w, static_cast<nn::Index>(tokens_.size()));
    tokens_.push_back(w);
  }
}

nn::Index Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk() : it->second;
}

const std::string& Vocabulary::token(nn::Index i) const {
  if (i < 0 || i >= size()) {
    throw VocabularyError("token index " + std::to_string(i) + " out of vocabulary of " + std::to_string(size()));
  }
  return tokens_[static_cast<std::size_t>(i)];
}

std::vector<nn::Index> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<nn::Index> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<nn::Index>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

namespace {

std::vector<std::string> with_labels(std::vector<std::string> words, const WorldSchema& schema) {
  words.insert(words.end(), schema.categories.begin(), schema.categories.end());
  for (const auto& mc : schema.metaconcepts) {
    words.push_back(mc.name);
    words.insert(words.end(), mc.values.begin(), mc.values.end());
  }
  words.insert(words.end(), schema.predicates.begin(), schema.predicates.end());
  return words;
}

}  // namespace

Vocabulary question_vocabulary(const WorldSchema& schema) {
  return Vocabulary(with_labels({"is", "there", "a", "what", "which", "the", "thing", "?"}, schema));
}

Vocabulary instruction_vocabulary(const WorldSchema& schema) {
  return Vocabulary(with_labels({"select", "filter", "relate", "fwd", "bwd", "exist", "query", "verify"}, schema));
}

Vocabulary answer_vocabulary(const WorldSchema& schema) {
  return Vocabulary(
      with_labels({"yes", "no", ",", ".", "there", "is", "a", "the", "of", "not", "thing", "none"}, schema));
}

}  // namespace lrta
