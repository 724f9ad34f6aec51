#ifndef SQLTRACK_CORPUS_HPP_
#define SQLTRACK_CORPUS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/schema_graph.hpp"

namespace sqltrack {

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct InteractionTurn {
  std::string utterance;  // unanswerable turns arrive pre-concatenated with "|"
  std::string query;
};

struct InteractionRecord {
  std::string id;
  std::string db_id;
  std::vector<InteractionTurn> turns;
};

// Interactions file: one JSON record per line,
//   {"id":..., "db_id":..., "turns":[{"utterance":..., "query":...}, ...]}
std::vector<InteractionRecord> load_interactions(const std::string& path);
void save_interactions(std::span<const InteractionRecord> records, const std::string& path);

// The two toy databases of the synthetic corpus.
Schema dorm_schema();
Schema concert_schema();

struct SyntheticCorpus {
  std::vector<Schema> schemas;
  std::vector<InteractionRecord> train;
  std::vector<InteractionRecord> dev;
};

// Templated multi-turn interactions over the two toy schemas, exercising
// SELECT/WHERE/GROUP/ORDER/IUEN and cross-turn references. Deterministic
// under a fixed seed.
SyntheticCorpus generate_corpus(std::uint64_t seed, std::size_t train_count = 200,
                                std::size_t dev_count = 40);

}  // namespace sqltrack

#endif  // SQLTRACK_CORPUS_HPP_
