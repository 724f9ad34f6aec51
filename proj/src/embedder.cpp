#include "sqltrack/embedder.hpp"

#include <cctype>

namespace sqltrack {

std::vector<std::string> tokenize_utterance(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || raw == '_') {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      tokens.push_back(std::string(1, raw));
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> name_words(std::string_view name) {
  std::vector<std::string> words;
  std::string current;
  for (char raw : name) {
    if (raw == '.' || raw == '_') {
      if (!current.empty()) {
        words.push_back(current);
        current.clear();
      }
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw))));
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

std::vector<std::string> Embedder::build_vocab(std::span<const std::string> words) {
  std::vector<std::string> vocab;
  vocab.emplace_back(kOov);
  std::unordered_map<std::string, bool> seen;
  seen[std::string(kOov)] = true;
  for (const auto& w : words) {
    if (!seen.count(w)) {
      seen[w] = true;
      vocab.push_back(w);
    }
  }
  return vocab;
}

Embedder::Embedder(ParamStore& store, std::vector<std::string> vocab, std::size_t d)
    : d_(d), vocab_(std::move(vocab)) {
  if (vocab_.empty() || vocab_[0] != kOov) {
    throw std::runtime_error("embedder vocabulary must start with the OOV token");
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = i;
  param_id_ = store.add_uniform("embedder.words", {vocab_.size(), d}, -0.1, 0.1, "embedder");
  std::string blob;
  for (const auto& w : vocab_) {
    blob += w;
    blob.push_back('\n');
  }
  store.set_blob("embedder.vocab", blob);
}

Embedder Embedder::from_store(const ParamStore& store) {
  Embedder e;
  const std::string* blob = store.blob("embedder.vocab");
  if (blob == nullptr) throw std::runtime_error("checkpoint lacks embedder vocabulary");
  std::string word;
  for (char c : *blob) {
    if (c == '\n') {
      e.vocab_.push_back(word);
      word.clear();
    } else {
      word.push_back(c);
    }
  }
  for (std::size_t i = 0; i < e.vocab_.size(); ++i) e.index_[e.vocab_[i]] = i;
  e.param_id_ = store.find("embedder.words");
  e.d_ = store.param(e.param_id_).value.cols();
  return e;
}

std::size_t Embedder::row_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? 0 : it->second;
}

Var Embedder::embed_word(Graph& g, std::string_view word) const {
  return g.param_row(param_id_, row_of(word));
}

std::vector<Var> Embedder::embed_utterance(Graph& g, std::span<const std::string> tokens) const {
  std::vector<Var> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(embed_word(g, t));
  return out;
}

Var Embedder::embed_column(Graph& g, const Schema& schema, std::size_t column) const {
  const std::string& qualified = schema.columns()[column];
  auto words = name_words(qualified);
  std::vector<Var> rows;
  rows.reserve(words.size());
  for (const auto& w : words) rows.push_back(embed_word(g, w));
  return g.scale(g.add_many(rows), 1.0 / static_cast<double>(rows.size()));
}

}  // namespace sqltrack
