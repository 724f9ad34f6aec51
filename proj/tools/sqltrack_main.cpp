// Command-line surface: parse, track, train, predict, eval, gradcheck,
// plus gen for the synthetic corpus. Exit codes: 0 success, 2 data error,
// 3 numeric failure.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqltrack/corpus.hpp"
#include "sqltrack/evaluation.hpp"
#include "sqltrack/model.hpp"
#include "sqltrack/state_tracker.hpp"
#include "sqltrack/trainer.hpp"

namespace {

using nlohmann::json;
using namespace sqltrack;

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open output file: " + path);
  return out;
}

json tokens_json(std::span<const SqlToken> tokens) {
  json arr = json::array();
  for (const auto& t : tokens) arr.push_back(t.text);
  return arr;
}

struct CommonArgs {
  std::string schema_file;
  std::string data_file;
  std::string config_file;
  std::string out_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_len;
  bool no_schema_states = false;
  bool no_sql_states = false;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config;
  if (!args.config_file.empty()) config = RunConfig::from_json_file(args.config_file);
  if (args.seed) config.seed = *args.seed;
  if (args.max_len) config.max_len = *args.max_len;
  if (args.no_schema_states) config.no_schema_states = true;
  if (args.no_sql_states) config.no_sql_states = true;
  config.validate();
  return config;
}

int cmd_parse(const CommonArgs& args, const std::string& sql, const std::string& db) {
  auto schemas = load_schemas(args.schema_file);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.out_file.empty()) {
    file = open_out(args.out_file);
    out = &file;
  }
  auto emit = [&](const std::string& id, std::size_t turn, const SqlQuery& q) {
    json rec;
    rec["interaction"] = id;
    rec["turn"] = turn;
    rec["canonical"] = serialize(q);
    rec["normalized_tokens"] = tokens_json(q.normalized_tokens);
    json comps;
    for (const auto& [name, elems] : decompose(q).components) {
      comps[name] = json::array();
      for (const auto& e : elems) comps[name].push_back(e);
    }
    rec["decomposition"] = comps;
    *out << rec.dump() << "\n";
  };
  if (!sql.empty()) {
    emit("-", 1, parse(sql, find_schema(schemas, db)));
    return kExitOk;
  }
  for (const auto& rec : load_interactions(args.data_file)) {
    const Schema& schema = find_schema(schemas, rec.db_id);
    for (std::size_t t = 0; t < rec.turns.size(); ++t) {
      emit(rec.id, t + 1, parse(rec.turns[t].query, schema));
    }
  }
  return kExitOk;
}

int cmd_track(const CommonArgs& args) {
  auto schemas = load_schemas(args.schema_file);
  auto data = load_interactions(args.data_file);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.out_file.empty()) {
    file = open_out(args.out_file);
    out = &file;
  }
  for (const auto& rec : data) {
    const Schema& schema = find_schema(schemas, rec.db_id);
    std::optional<SqlQuery> prev;
    for (std::size_t t = 0; t < rec.turns.size(); ++t) {
      InteractionStates states = prev ? update_states(*prev, schema) : update_states(schema);
      SplitResult split = prev ? split_pieces(*prev) : SplitResult{};
      json trace;
      trace["interaction"] = rec.id;
      trace["turn"] = t + 1;
      trace["state_source"] = "gold";
      json sql_states;
      for (const auto& [kw, values] : states.sql_states) {
        sql_states[kw] = json::array();
        for (const auto& v : values) sql_states[kw].push_back(v);
      }
      trace["sql_states"] = sql_states;
      json schema_states;
      for (const auto& [col, values] : states.schema_states) {
        schema_states[col] = json::array();
        for (const auto& v : values) schema_states[col].push_back(v);
      }
      trace["schema_states"] = schema_states;
      trace["tail"] = tokens_json(split.tail);
      *out << trace.dump() << "\n";
      prev = parse(rec.turns[t].query, schema);
    }
  }
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  auto schemas = load_schemas(args.schema_file);
  auto data = load_interactions(args.data_file);
  std::size_t dev_count = static_cast<std::size_t>(
      config.dev_fraction * static_cast<double>(data.size()));
  if (dev_count == 0 && data.size() > 1) dev_count = 1;
  std::size_t train_count = data.size() - dev_count;
  std::span<const InteractionRecord> train(data.data(), train_count);
  std::span<const InteractionRecord> dev(data.data() + train_count, dev_count);

  TrainResult result = train_model(schemas, train, dev, config, &std::cout);
  std::string out = args.out_file.empty() ? "model.ckpt" : args.out_file;
  result.store.save(out);
  std::cout << "checkpoint written to " << out
            << " (best dev token accuracy " << result.best_dev_token_acc << ")\n";
  return kExitOk;
}

int cmd_predict(const CommonArgs& args, const std::string& checkpoint, bool and_eval) {
  RunConfig config = resolve_config(args);
  auto schemas = load_schemas(args.schema_file);
  auto data = load_interactions(args.data_file);
  ParamStore store = ParamStore::load(checkpoint);
  auto predictions = predict_interactions(store, schemas, data, config.max_len);

  if (!and_eval) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!args.out_file.empty()) {
      file = open_out(args.out_file);
      out = &file;
    }
    for (const auto& p : predictions) {
      json rec;
      rec["interaction"] = p.interaction_id;
      rec["turn"] = p.turn_index;
      rec["state_source"] = "predicted";
      rec["tokens"] = tokens_json(p.tokens);
      rec["sql"] = p.sql ? json(*p.sql) : json(nullptr);
      rec["terminated"] = p.terminated;
      *out << rec.dump() << "\n";
    }
    return kExitOk;
  }

  MetricsReport report = evaluate_records(predictions, schemas, data);
  if (args.out_file.empty()) {
    std::cout << report.to_json() << "\n";
  } else {
    open_out(args.out_file) << report.to_json() << "\n";
  }
  return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args) {
  RunConfig config = resolve_config(args);
  if (args.config_file.empty()) {
    config.d = 8;  // reference operating point; override via --config
    config.heads = 3;
    if (!args.seed) config.seed = 1;
  }
  if (config.d > 16) throw DataError("gradcheck requires d <= 16");

  Schema schema = dorm_schema();
  SchemaGraph sgraph = build_graph(schema);
  std::vector<std::vector<std::string>> utterances = {
      tokenize_utterance("show the dorm name of each dorm ."),
      tokenize_utterance("only keep rows where amenity name equals some value ."),
      tokenize_utterance("sort them by student capacity in descending order ."),
  };
  std::vector<std::vector<SqlToken>> golds = {
      parse("select dorm_name from dorm", schema).normalized_tokens,
      parse("select dorm_name from dorm join has_amenity on dorm.dormid = has_amenity.dormid "
            "join dorm_amenity on has_amenity.amenid = dorm_amenity.amenid "
            "where dorm_amenity.amenity_name = 'x'",
            schema)
          .normalized_tokens,
      parse("select dorm_name from dorm join has_amenity on dorm.dormid = has_amenity.dormid "
            "join dorm_amenity on has_amenity.amenid = dorm_amenity.amenid "
            "where dorm_amenity.amenity_name = 'x' order by student_capacity desc",
            schema)
          .normalized_tokens,
  };
  std::vector<std::string> words;
  for (const auto& u : utterances) words.insert(words.end(), u.begin(), u.end());
  for (const auto& t : schema.tables()) {
    for (const auto& w : name_words(t.name)) words.push_back(w);
    for (const auto& [c, ty] : t.columns) {
      (void)ty;
      for (const auto& w : name_words(c)) words.push_back(w);
    }
  }

  ParamStore store(config.seed);
  Model model(store, Embedder::build_vocab(words), config.model_config());
  // evaluate at a well-conditioned point: every gradient coordinate must
  // clear the central-difference noise floor
  for (std::size_t p = 0; p < store.count(); ++p) {
    for (std::size_t i = 0; i < store.param(p).value.size(); ++i) {
      store.param(p).value[i] *= 6.0;
    }
  }
  Graph graph(&store);
  LossFn loss_fn = [&](ParamStore&, bool with_grad) {
    graph.reset();
    auto loss = model.interaction_loss(graph, schema, sgraph, utterances, golds);
    if (with_grad) graph.backward(loss.loss);
    return loss.loss_value;
  };
  GradCheckReport report = grad_check_detailed(loss_fn, store);

  std::map<std::string, double> by_group;
  for (const auto& [name, err] : report.per_param) {
    std::string group = name.substr(0, name.find('.'));
    by_group[group] = std::max(by_group[group], err);
  }
  for (const auto& [group, err] : by_group) {
    std::cout << "group " << group << ": max rel err " << err << "\n";
  }
  std::cout << "overall max rel err " << report.max_rel_err << " (param " << report.worst_param
            << " coord " << report.worst_coord << ")\n";
  if (report.max_rel_err >= 1e-4) {
    std::cerr << "gradient check FAILED (threshold 1e-4)\n";
    return kExitNumeric;
  }
  std::cout << "gradient check passed\n";
  return kExitOk;
}

int cmd_gen(const std::string& out_dir, std::uint64_t seed, std::size_t train_count,
            std::size_t dev_count) {
  SyntheticCorpus corpus = generate_corpus(seed, train_count, dev_count);
  save_schemas(corpus.schemas, out_dir + "/schemas.jsonl");
  save_interactions(corpus.train, out_dir + "/train.jsonl");
  save_interactions(corpus.dev, out_dir + "/dev.jsonl");
  std::vector<InteractionRecord> all = corpus.train;
  all.insert(all.end(), corpus.dev.begin(), corpus.dev.end());
  save_interactions(all, out_dir + "/all.jsonl");
  std::cout << "wrote " << corpus.train.size() << " train and " << corpus.dev.size()
            << " dev interactions to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interaction-state tracking text-to-SQL parser"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string sql, db, checkpoint, out_dir = ".";
  std::uint64_t gen_seed = 7;
  std::size_t train_count = 200, dev_count = 40;

  auto add_common = [&](CLI::App* cmd, bool need_schema = true, bool need_data = true) {
    auto* s = cmd->add_option("--schema", args.schema_file, "schema JSONL file");
    if (need_schema) s->required();
    auto* d = cmd->add_option("--data", args.data_file, "interactions JSONL file");
    if (need_data) d->required();
    cmd->add_option("--config", args.config_file, "run config JSON file");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out", args.out_file, "output path");
    cmd->add_option("--max-len", args.max_len, "decoder length cap override");
    cmd->add_flag("--no-schema-states", args.no_schema_states, "disable schema-states");
    cmd->add_flag("--no-sql-states", args.no_sql_states, "disable SQL-states");
  };

  auto* parse_cmd = app.add_subcommand("parse", "parse queries and emit canonical forms");
  add_common(parse_cmd, true, false);
  parse_cmd->add_option("--sql", sql, "one-off SQL text (requires --db)");
  parse_cmd->add_option("--db", db, "db_id for --sql");

  auto* track_cmd = app.add_subcommand("track", "emit per-turn state traces");
  add_common(track_cmd);

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_common(train_cmd);

  auto* predict_cmd = app.add_subcommand("predict", "decode predictions");
  predict_cmd->add_option("checkpoint", checkpoint, "model checkpoint")->required();
  add_common(predict_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "decode and score predictions");
  eval_cmd->add_option("checkpoint", checkpoint, "model checkpoint")->required();
  add_common(eval_cmd);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck_cmd->add_option("--config", args.config_file, "run config JSON file");
  gradcheck_cmd->add_option("--seed", args.seed, "seed override");

  auto* gen_cmd = app.add_subcommand("gen", "generate the synthetic corpus");
  gen_cmd->add_option("--out", out_dir, "output directory");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--train-count", train_count, "training interactions");
  gen_cmd->add_option("--dev-count", dev_count, "dev interactions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) {
      if (sql.empty() && args.data_file.empty()) {
        throw DataError("parse needs --data or --sql with --db");
      }
      return cmd_parse(args, sql, db);
    }
    if (track_cmd->parsed()) return cmd_track(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (predict_cmd->parsed()) return cmd_predict(args, checkpoint, false);
    if (eval_cmd->parsed()) return cmd_predict(args, checkpoint, true);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(args);
    if (gen_cmd->parsed()) return cmd_gen(out_dir, gen_seed, train_count, dev_count);
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
