#ifndef SQLTRACK_TRAINER_HPP_
#define SQLTRACK_TRAINER_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/corpus.hpp"
#include "sqltrack/evaluation.hpp"
#include "sqltrack/model.hpp"

namespace sqltrack {

struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t d = 16;
  std::size_t heads = 3;  // K
  double lambda = 0.01;
  double lr_embedder = 1e-5;
  double lr = 1e-3;
  std::size_t patience = 10;
  std::size_t max_len = 100;
  std::size_t epochs = 200;
  double dev_fraction = 0.15;  // tail split of --data when no dev set given
  bool no_schema_states = false;
  bool no_sql_states = false;

  void validate() const;
  ModelConfig model_config() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
};

struct TrainLogEntry {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_token_acc = 0.0;
};

struct TrainResult {
  ParamStore store;
  std::vector<TrainLogEntry> log;
  double best_dev_token_acc = 0.0;
  std::size_t epochs_run = 0;
};

// Teacher-forced training with two-tier Adam learning rates and early
// stopping on dev token-level string matching accuracy. The state tracker
// consumes gold previous queries throughout. Deterministic under a fixed
// seed. Throws NonFiniteLoss when the loss diverges.
TrainResult train_model(const std::vector<Schema>& schemas,
                        std::span<const InteractionRecord> train,
                        std::span<const InteractionRecord> dev, const RunConfig& config,
                        std::ostream* log_stream = nullptr);

struct PredictionRecord {
  std::string interaction_id;
  std::size_t turn_index = 1;  // 1-based
  std::vector<SqlToken> tokens;
  std::optional<std::string> sql;  // assembled canonical text, absent on AssemblyError
  bool terminated = false;
  std::optional<SqlQuery> query;   // in-memory assembled form
};

// Sequential per-interaction decoding; each turn's predicted token stream
// feeds the state tracker of the next turn.
std::vector<PredictionRecord> predict_interactions(ParamStore& store,
                                                   const std::vector<Schema>& schemas,
                                                   std::span<const InteractionRecord> data,
                                                   std::size_t max_len);

MetricsReport evaluate_records(std::span<const PredictionRecord> predictions,
                               const std::vector<Schema>& schemas,
                               std::span<const InteractionRecord> data);

// Teacher-forced token accuracy of a checkpoint over a dataset.
double token_accuracy(ParamStore& store, const std::vector<Schema>& schemas,
                      std::span<const InteractionRecord> data);

}  // namespace sqltrack

#endif  // SQLTRACK_TRAINER_HPP_
