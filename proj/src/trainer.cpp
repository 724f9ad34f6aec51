#include "sqltrack/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace sqltrack {

void RunConfig::validate() const {
  if (d == 0 || d % 2 != 0) throw DataError("config: d must be positive and even");
  if (heads == 0) throw DataError("config: K must be positive");
  if (lambda < 0) throw DataError("config: lambda must be nonnegative");
  if (lr <= 0 || lr_embedder <= 0) throw DataError("config: learning rates must be positive");
  if (patience == 0) throw DataError("config: patience must be positive");
  if (max_len == 0) throw DataError("config: max_len must be positive");
  if (epochs == 0) throw DataError("config: epochs must be positive");
  if (dev_fraction < 0 || dev_fraction >= 1) throw DataError("config: dev_fraction out of range");
}

ModelConfig RunConfig::model_config() const {
  ModelConfig mc;
  mc.d = d;
  mc.heads = heads;
  mc.lambda = lambda;
  mc.no_schema_states = no_schema_states;
  mc.no_sql_states = no_sql_states;
  return mc;
}

RunConfig RunConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", c.seed);
  get("d", c.d);
  get("K", c.heads);
  get("lambda", c.lambda);
  get("lr_embedder", c.lr_embedder);
  get("lr", c.lr);
  get("patience", c.patience);
  get("max_len", c.max_len);
  get("epochs", c.epochs);
  get("dev_fraction", c.dev_fraction);
  get("no_schema_states", c.no_schema_states);
  get("no_sql_states", c.no_sql_states);
  c.validate();
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

namespace {

struct PreparedTurn {
  std::vector<std::string> tokens;
  std::vector<SqlToken> gold;
};

struct PreparedInteraction {
  std::string id;
  const Schema* schema = nullptr;
  const SchemaGraph* graph = nullptr;
  std::vector<PreparedTurn> turns;
};

struct PreparedData {
  std::map<std::string, SchemaGraph> graphs;
  std::vector<PreparedInteraction> interactions;
};

PreparedData prepare(const std::vector<Schema>& schemas,
                     std::span<const InteractionRecord> records) {
  PreparedData data;
  for (const auto& rec : records) {
    const Schema& schema = find_schema(schemas, rec.db_id);
    if (!data.graphs.count(rec.db_id)) data.graphs[rec.db_id] = build_graph(schema);
    PreparedInteraction prep;
    prep.id = rec.id;
    prep.schema = &schema;
    for (const auto& turn : rec.turns) {
      PreparedTurn pt;
      pt.tokens = tokenize_utterance(turn.utterance);
      try {
        pt.gold = parse(turn.query, schema).normalized_tokens;
      } catch (const std::exception& e) {
        throw DataError("interaction '" + rec.id + "': cannot parse gold query '" + turn.query +
                        "': " + e.what());
      }
      prep.turns.push_back(std::move(pt));
    }
    data.interactions.push_back(std::move(prep));
  }
  for (auto& prep : data.interactions) prep.graph = &data.graphs.at(prep.schema->db_id());
  return data;
}

std::vector<std::string> gather_vocab(const std::vector<Schema>& schemas,
                                      const PreparedData& train) {
  std::vector<std::string> words;
  for (const auto& schema : schemas) {
    for (const auto& table : schema.tables()) {
      for (const auto& w : name_words(table.name)) words.push_back(w);
      for (const auto& [c, ty] : table.columns) {
        (void)ty;
        for (const auto& w : name_words(c)) words.push_back(w);
      }
    }
  }
  for (const auto& prep : train.interactions) {
    for (const auto& turn : prep.turns) {
      words.insert(words.end(), turn.tokens.begin(), turn.tokens.end());
    }
  }
  return Embedder::build_vocab(words);
}

struct AccuracyStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

AccuracyStats dataset_accuracy(Model& model, Graph& graph, const PreparedData& data) {
  AccuracyStats stats;
  for (const auto& prep : data.interactions) {
    graph.reset();
    std::vector<std::vector<std::string>> tokens;
    std::vector<std::vector<SqlToken>> golds;
    for (const auto& turn : prep.turns) {
      tokens.push_back(turn.tokens);
      golds.push_back(turn.gold);
    }
    auto loss = model.interaction_loss(graph, *prep.schema, *prep.graph, tokens, golds);
    stats.correct += loss.correct;
    stats.total += loss.total;
  }
  return stats;
}

}  // namespace

TrainResult train_model(const std::vector<Schema>& schemas,
                        std::span<const InteractionRecord> train,
                        std::span<const InteractionRecord> dev, const RunConfig& config,
                        std::ostream* log_stream) {
  config.validate();
  if (train.empty()) throw DataError("training set is empty");
  PreparedData train_data = prepare(schemas, train);
  PreparedData dev_data = prepare(schemas, dev);

  ParamStore store(config.seed);
  Model model(store, gather_vocab(schemas, train_data), config.model_config());
  Adam adam(config.lr, {{"embedder", config.lr_embedder}});
  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

  if (log_stream != nullptr) {
    *log_stream << "train: interactions=" << train.size() << " dev=" << dev.size()
                << " params=" << store.count() << " state_source=gold\n";
  }

  TrainResult result{ParamStore(config.seed), {}, 0.0, 0};
  std::vector<Tensor> best_values;
  std::size_t patience_left = config.patience;
  Graph graph(&store);

  std::vector<std::size_t> order(train_data.interactions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const PreparedInteraction& prep = train_data.interactions[idx];
      graph.reset();
      std::vector<std::vector<std::string>> tokens;
      std::vector<std::vector<SqlToken>> golds;
      for (const auto& turn : prep.turns) {
        tokens.push_back(turn.tokens);
        golds.push_back(turn.gold);
      }
      auto loss = model.interaction_loss(graph, *prep.schema, *prep.graph, tokens, golds);
      if (!std::isfinite(loss.loss_value)) {
        throw NonFiniteLoss("training loss diverged on interaction '" + prep.id + "' at epoch " +
                            std::to_string(epoch));
      }
      loss_sum += loss.loss_value;
      graph.backward(loss.loss);
      adam.step(store);
      store.zero_grad();
    }
    double train_loss = loss_sum / static_cast<double>(order.size());
    AccuracyStats dev_acc = dataset_accuracy(model, graph, dev_data);

    result.log.push_back({epoch, train_loss, dev_acc.value()});
    result.epochs_run = epoch;
    if (log_stream != nullptr) {
      *log_stream << "epoch " << epoch << " train_loss=" << train_loss
                  << " dev_token_acc=" << dev_acc.value() << "\n";
    }

    if (dev_acc.value() > result.best_dev_token_acc || best_values.empty()) {
      result.best_dev_token_acc = dev_acc.value();
      best_values.clear();
      for (std::size_t p = 0; p < store.count(); ++p) best_values.push_back(store.param(p).value);
      patience_left = config.patience;
    } else if (--patience_left == 0) {
      if (log_stream != nullptr) {
        *log_stream << "early stop at epoch " << epoch << " (patience " << config.patience
                    << ")\n";
      }
      break;
    }
    if (dev_acc.total > 0 && dev_acc.correct == dev_acc.total) break;  // nothing left to learn
  }

  for (std::size_t p = 0; p < store.count(); ++p) store.param(p).value = best_values[p];
  result.store = std::move(store);
  return result;
}

std::vector<PredictionRecord> predict_interactions(ParamStore& store,
                                                   const std::vector<Schema>& schemas,
                                                   std::span<const InteractionRecord> data,
                                                   std::size_t max_len) {
  Model model = Model::from_store(store);
  std::map<std::string, SchemaGraph> graphs;
  std::vector<PredictionRecord> records;
  Graph graph(&store);
  for (const auto& rec : data) {
    const Schema& schema = find_schema(schemas, rec.db_id);
    if (!graphs.count(rec.db_id)) graphs[rec.db_id] = build_graph(schema);
    const SchemaGraph& sgraph = graphs.at(rec.db_id);

    std::vector<std::vector<std::string>> utterances;
    std::vector<SqlToken> prev_tokens;
    for (std::size_t t = 0; t < rec.turns.size(); ++t) {
      utterances.push_back(tokenize_utterance(rec.turns[t].utterance));
      graph.reset();
      auto reprs = model.encode_turn(graph, schema, sgraph, utterances,
                                     t == 0 ? nullptr : &prev_tokens);
      DecodeResult decoded = model.decode(graph, reprs, schema, max_len);

      PredictionRecord out;
      out.interaction_id = rec.id;
      out.turn_index = t + 1;
      out.tokens = decoded.tokens;
      out.terminated = decoded.terminated;
      try {
        SqlQuery assembled = assemble(decoded.tokens, schema);
        out.sql = serialize(assembled);
        out.query = std::move(assembled);
      } catch (const AssemblyError&) {
        // kept as raw tokens for metric purposes
      }
      prev_tokens = decoded.tokens;
      records.push_back(std::move(out));
    }
  }
  return records;
}

MetricsReport evaluate_records(std::span<const PredictionRecord> predictions,
                               const std::vector<Schema>& schemas,
                               std::span<const InteractionRecord> data) {
  std::map<std::pair<std::string, std::size_t>, const PredictionRecord*> by_turn;
  for (const auto& p : predictions) by_turn[{p.interaction_id, p.turn_index}] = &p;
  MetricsAccumulator acc;
  for (const auto& rec : data) {
    const Schema& schema = find_schema(schemas, rec.db_id);
    for (std::size_t t = 0; t < rec.turns.size(); ++t) {
      SqlQuery gold = parse(rec.turns[t].query, schema);
      auto it = by_turn.find({rec.id, t + 1});
      const SqlQuery* pred = nullptr;
      if (it != by_turn.end() && it->second->query.has_value()) pred = &*it->second->query;
      acc.add_turn(rec.id, t + 1, pred, gold);
    }
  }
  return acc.finish();
}

double token_accuracy(ParamStore& store, const std::vector<Schema>& schemas,
                      std::span<const InteractionRecord> data) {
  Model model = Model::from_store(store);
  PreparedData prepared = prepare(schemas, data);
  Graph graph(&store);
  return dataset_accuracy(model, graph, prepared).value();
}

}  // namespace sqltrack
