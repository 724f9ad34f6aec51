#ifndef SQLTRACK_EMBEDDER_HPP_
#define SQLTRACK_EMBEDDER_HPP_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sqltrack/autograd.hpp"
#include "sqltrack/schema_graph.hpp"

namespace sqltrack {

// Tokenizer contract (fixed): lowercase, split on whitespace; every
// punctuation character becomes its own token, including "|".
std::vector<std::string> tokenize_utterance(std::string_view text);

// Words of a table or column name: split on '.' and '_', lowercased.
std::vector<std::string> name_words(std::string_view name);

// Trainable lookup embedder over a word vocabulary. Row 0 is the OOV
// token; lookups never fail. Column names embed as the mean of the word
// vectors of their table-name words plus column-name words.
class Embedder {
 public:
  static constexpr std::string_view kOov = "<unk>";

  Embedder() = default;  // empty; rebind via from_store

  // Registers the embedding table (parameter group "embedder") and stores
  // the vocabulary blob so checkpoints are self-contained.
  Embedder(ParamStore& store, std::vector<std::string> vocab, std::size_t d);
  static Embedder from_store(const ParamStore& store);

  std::size_t dim() const { return d_; }
  std::size_t param_id() const { return param_id_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t row_of(std::string_view word) const;

  Var embed_word(Graph& g, std::string_view word) const;
  std::vector<Var> embed_utterance(Graph& g, std::span<const std::string> tokens) const;
  Var embed_column(Graph& g, const Schema& schema, std::size_t column) const;

  // Deduplicates while preserving first-occurrence order; ensures the OOV
  // token leads.
  static std::vector<std::string> build_vocab(std::span<const std::string> words);

 private:
  std::size_t d_ = 0;
  std::size_t param_id_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace sqltrack

#endif  // SQLTRACK_EMBEDDER_HPP_
