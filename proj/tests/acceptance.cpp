// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sqltrack/corpus.hpp"
#include "sqltrack/evaluation.hpp"
#include "sqltrack/model.hpp"
#include "sqltrack/state_encoders.hpp"
#include "sqltrack/state_tracker.hpp"
#include "sqltrack/trainer.hpp"

using namespace sqltrack;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

Schema worked_example_schema() {
  return Schema::make(
      "dorm_fig",
      {{"dorm", {{"dorm", "text"}, {"dormid", "number"}}},
       {"has_amenity", {{"dormid", "number"}, {"amenid", "number"}}},
       {"dorm_amenity", {{"amenid", "number"}, {"amenity_name", "text"}}}},
      {{"has_amenity.dormid", "dorm.dormid"}, {"has_amenity.amenid", "dorm_amenity.amenid"}});
}

// --------------------------------------------------------------------------
// Criterion 1: the two-piece state-updater fixture.

void criterion_1(Check& c) {
  Schema schema = worked_example_schema();
  SqlQuery q2 = parse(
      "SELECT dorm FROM dorm JOIN has_amenity ON dorm.dormid = has_amenity.dormid "
      "JOIN dorm_amenity ON has_amenity.amenid = dorm_amenity.amenid "
      "WHERE dorm_amenity.amenity_name = 'TV'",
      schema);
  SplitResult split = split_pieces(q2);
  c.expect(split.pieces.size() == 2, "expected exactly two pieces");
  if (!c.ok) return;
  c.expect(split.pieces[0].text() == "select dorm.dorm", "piece 1 is " + split.pieces[0].text());
  c.expect(split.pieces[1].text() == "where dorm_amenity.amenity_name",
           "piece 2 is " + split.pieces[1].text());

  InteractionStates states = update_states(q2, schema);
  c.expect(states.sql_states.at("select") == std::set<std::string>{"dorm.dorm"},
           "select state");
  c.expect(states.sql_states.at("where") == std::set<std::string>{"dorm_amenity.amenity_name"},
           "where state");
  for (auto kw : kKeywordVocabulary) {
    if (kw == "select" || kw == "where") continue;
    c.expect(states.sql_states.at(std::string(kw)) == std::set<std::string>{"NONE_K"},
             "sentinel sql state for " + std::string(kw));
  }
  c.expect(states.schema_states.at("dorm.dorm") == std::vector<std::string>{"select"},
           "dorm.dorm schema state");
  c.expect(states.schema_states.at("dorm_amenity.amenity_name") ==
               std::vector<std::string>{"where"},
           "amenity_name schema state");
  for (const auto& col : schema.columns()) {
    if (col == "dorm.dorm" || col == "dorm_amenity.amenity_name") continue;
    c.expect(states.schema_states.at(col) == std::vector<std::string>{"NONE_S"},
             "sentinel schema state for " + col);
  }
}

// --------------------------------------------------------------------------
// Criterion 2: duplicate keyword retention.

void criterion_2(Check& c) {
  Schema schema = Schema::make("ab", {{"a", {{"x", "number"}, {"y", "number"}}}}, {});
  std::vector<SqlToken> stream = {
      keyword_token("select"), column_token("a.x"), keyword_token("except"),
      keyword_token("select"), column_token("a.x"), keyword_token("where"),
      column_token("a.y"),     keyword_token("="),  value_token()};
  InteractionStates states = update_states(stream, schema);
  c.expect(states.schema_states.at("a.x") ==
               std::vector<std::string>{"select", "except", "select"},
           "a.x must keep both select occurrences in order");
  c.expect(states.sql_states.at("select") == std::set<std::string>{"a.x"},
           "select values must deduplicate to {a.x}");
  c.expect(states.sql_states.at("except") == std::set<std::string>{"a.x"}, "except state");
  c.expect(states.sql_states.at("where") == std::set<std::string>{"a.y"}, "where state");
  c.expect(states.sql_states.at("=") == std::set<std::string>{"NONE_K"},
           "tail '=' must stay sentinel");
}

// --------------------------------------------------------------------------
// Criterion 3: RGNN identity and loop-oracle equivalence.

Tensor rgnn_loop_oracle(const Tensor& h, const SchemaGraph& graph, const EdgeParams& edges) {
  const std::size_t n = h.rows(), d = h.cols();
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    Tensor h_out({d}), h_in({d});
    for (EdgeType e : {EdgeType::FK, EdgeType::FKT}) {
      const Tensor& z_out = e == EdgeType::FK ? edges.z_out_fk : edges.z_out_fkt;
      const Tensor& z_in = e == EdgeType::FK ? edges.z_in_fk : edges.z_in_fkt;
      for (auto j : graph.out_neighbors(i, e)) {
        Tensor hj = Tensor::from(std::vector<double>(h.row(j).begin(), h.row(j).end()));
        h_out = add(h_out, matvec(edges.w_out, elementwise_mul(z_out, hj)));
      }
      for (auto j : graph.in_neighbors(i, e)) {
        Tensor hj = Tensor::from(std::vector<double>(h.row(j).begin(), h.row(j).end()));
        h_in = add(h_in, matvec(edges.w_in, elementwise_mul(z_in, hj)));
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      out.at(i, k) = h.at(i, k) + 0.5 * h_out[k] + 0.5 * h_in[k];
    }
  }
  return out;
}

void criterion_3(Check& c) {
  Rng rng(303);
  auto random_matrix = [&](std::size_t r, std::size_t cc) {
    Tensor t({r, cc});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-0.7, 0.7);
    return t;
  };
  auto random_vec = [&](std::size_t n) {
    Tensor t({n});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-0.7, 0.7);
    return t;
  };

  // isolated nodes: bitwise pass-through
  Schema flat = Schema::make("flat", {{"a", {{"x", "number"}}}, {"b", {{"y", "number"}}}}, {});
  SchemaGraph empty_graph = build_graph(flat);
  Tensor h0 = random_matrix(2, 6);
  EdgeParams e0{random_matrix(6, 6), random_matrix(6, 6), random_vec(6),
                random_vec(6),       random_vec(6),       random_vec(6)};
  Tensor out0 = rgnn_propagate(h0, empty_graph, e0);
  for (std::size_t i = 0; i < h0.size(); ++i) {
    c.expect(out0[i] == h0[i], "isolated node output differs bitwise at " + std::to_string(i));
  }

  // 20 random 6-node graphs against the explicit loop oracle
  const std::size_t d = 5;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Schema::Table> tables = {{"t0", {{"c0", "number"}, {"c1", "number"}}},
                                         {"t1", {{"c2", "number"}, {"c3", "number"}}},
                                         {"t2", {{"c4", "number"}, {"c5", "number"}}}};
    std::vector<std::string> qualified = {"t0.c0", "t0.c1", "t1.c2", "t1.c3", "t2.c4", "t2.c5"};
    std::vector<std::pair<std::string, std::string>> fks;
    std::size_t n_fks = 1 + rng.below(3);
    std::size_t guard = 0;
    while (fks.size() < n_fks && guard++ < 50) {
      const std::string& a = qualified[rng.below(6)];
      const std::string& b = qualified[rng.below(6)];
      if (a.substr(0, 2) != b.substr(0, 2)) fks.emplace_back(a, b);
    }
    Schema schema = Schema::make("six", tables, fks);
    SchemaGraph graph = build_graph(schema);
    Tensor h = random_matrix(6, d);
    EdgeParams edges{random_matrix(d, d), random_matrix(d, d), random_vec(d),
                     random_vec(d),       random_vec(d),       random_vec(d)};
    Tensor got = rgnn_propagate(h, graph, edges);
    Tensor want = rgnn_loop_oracle(h, graph, edges);
    double max_abs = 0;
    for (std::size_t i = 0; i < got.size(); ++i) {
      max_abs = std::max(max_abs, std::abs(got[i] - want[i]));
    }
    c.expect(max_abs < 1e-9,
             "trial " + std::to_string(trial) + " max abs diff " + std::to_string(max_abs));
  }
}

// --------------------------------------------------------------------------
// Criterion 4: gradient conformance at d = 8, K = 3.
//
// The checks evaluate at a fixed well-conditioned point (initialization
// scaled by a constant) so every coordinate's gradient sits above the
// central-difference noise floor; h stays at the 1e-4 default.

void scale_params(ParamStore& store, double factor) {
  for (std::size_t p = 0; p < store.count(); ++p) {
    for (std::size_t i = 0; i < store.param(p).value.size(); ++i) {
      store.param(p).value[i] *= factor;
    }
  }
}

double gradcheck_eq3_to_7() {
  Schema schema = dorm_schema();
  SchemaGraph graph = build_graph(schema);
  std::vector<SqlToken> stream = {keyword_token("select"), column_token("dorm.dorm_name"),
                                  keyword_token("where"),
                                  column_token("dorm_amenity.amenity_name")};
  InteractionStates states = update_states(stream, schema);
  const std::size_t d = 8;
  ParamStore store(31);
  StateEncoderParams p = StateEncoderParams::create(store, d);
  std::size_t cols_id = store.add_uniform("cols", {schema.column_count(), d}, -0.5, 0.5);
  scale_params(store, 5.0);
  Graph g(&store);
  LossFn f = [&](ParamStore&, bool with_grad) {
    g.reset();
    std::vector<Var> cols, kw_rows;
    for (std::size_t i = 0; i < schema.column_count(); ++i) {
      cols.push_back(g.param_row(cols_id, i));
    }
    for (std::size_t j = 0; j <= kKeywordCount; ++j) kw_rows.push_back(g.param_row(p.kw_emb, j));
    auto init = encode_schema_states(g, cols, states, schema, g.param(p.w1), kw_rows);
    RgnnEdgeVars edges{g.param(p.w_out),   g.param(p.w_in),      g.param(p.z_out_fk),
                       g.param(p.z_in_fk), g.param(p.z_out_fkt), g.param(p.z_in_fkt)};
    auto final_reprs = rgnn_propagate(g, init, graph, edges);
    auto sql = encode_sql_states(g, kw_rows, states, schema, init, g.param(p.none_k),
                                 g.param(p.w2));
    std::vector<Var> sums;
    for (auto v : final_reprs) sums.push_back(g.sum(v));
    for (auto v : sql) sums.push_back(g.sum(v));
    Var loss = g.sum(g.pack(sums));
    if (with_grad) g.backward(loss);
    return g.scalar(loss);
  };
  return grad_check(f, store);
}

double gradcheck_eq8_to_12() {
  const std::size_t d = 8;
  ParamStore store(20);
  UtteranceEncoderParams p = UtteranceEncoderParams::create(store, d, 3);
  std::size_t cur_id = store.add_uniform("cur", {3, d}, -0.5, 0.5);
  std::size_t hist_id = store.add_uniform("hist", {4, d}, -0.5, 0.5);
  std::size_t cols_id = store.add_uniform("cols", {5, d}, -0.5, 0.5);
  scale_params(store, 5.0);
  Graph g(&store);
  LossFn f = [&](ParamStore&, bool with_grad) {
    g.reset();
    std::vector<Var> current, hist, cols;
    for (std::size_t i = 0; i < 3; ++i) current.push_back(g.param_row(cur_id, i));
    for (std::size_t i = 0; i < 4; ++i) hist.push_back(g.param_row(hist_id, i));
    for (std::size_t i = 0; i < 5; ++i) cols.push_back(g.param_row(cols_id, i));
    std::vector<std::vector<Var>> history = {hist};
    auto enc = encode_history(g, current, history, p);
    auto linked = link_schema(g, enc.outputs, cols, p);
    std::vector<Var> sums;
    for (auto v : linked.outputs) sums.push_back(g.sum(v));
    sums.push_back(attention_diversity_penalty(g, enc.head_alphas));
    sums.push_back(attention_diversity_penalty(g, linked.head_alphas));
    Var loss = g.sum(g.pack(sums));
    if (with_grad) g.backward(loss);
    return g.scalar(loss);
  };
  return grad_check(f, store);
}

double gradcheck_full_loss() {
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
  ModelConfig mc;
  mc.d = 8;
  mc.heads = 3;
  ParamStore store(1);
  Model model(store, Embedder::build_vocab(words), mc);
  scale_params(store, 6.0);
  Graph g(&store);
  LossFn f = [&](ParamStore&, bool with_grad) {
    g.reset();
    auto loss = model.interaction_loss(g, schema, sgraph, utterances, golds);
    if (with_grad) g.backward(loss.loss);
    return loss.loss_value;
  };
  return grad_check(f, store);
}

void criterion_4(Check& c) {
  double e1 = gradcheck_eq3_to_7();
  c.expect(e1 < 1e-4, "state-encoder pipeline rel err " + std::to_string(e1));
  double e2 = gradcheck_eq8_to_12();
  c.expect(e2 < 1e-4, "utterance pipeline rel err " + std::to_string(e2));
  double e3 = gradcheck_full_loss();
  c.expect(e3 < 1e-4, "full training loss rel err " + std::to_string(e3));
  if (c.ok) {
    std::ostringstream os;
    os << "rel errs " << e1 << " / " << e2 << " / " << e3;
    c.detail = os.str();
  }
}

// --------------------------------------------------------------------------
// Criterion 5: metric oracle on 20 hand-crafted pairs.

struct HandPair {
  std::string interaction;
  const char* pred;  // nullptr marks an unparseable prediction
  const char* gold;
  bool expect_qm;
};

void criterion_5(Check& c) {
  Schema schema = dorm_schema();
  // 20 turns over 6 interactions; expected QM flags worked out by hand
  std::vector<HandPair> pairs = {
      // i1: all correct (textual, reordered conjuncts, alias difference)
      {"i1", "select dorm_name from dorm", "select dorm_name from dorm", true},
      {"i1",
       "select dorm_name from dorm where student_capacity > 10 and gender = 'F'",
       "select dorm_name from dorm where gender = 'F' and student_capacity > 10", true},
      {"i1", "select T1.dorm_name from dorm as T1 where T1.gender = 'M'",
       "select dorm_name from dorm where gender = 'M'", true},
      // i2: one wrong turn (missing ORDER BY)
      {"i2", "select dorm_name from dorm", "select dorm_name from dorm order by dorm_name",
       false},
      {"i2", "select gender from dorm group by gender",
       "select gender from dorm group by gender", true},
      // i3: IUEN nesting right and wrong
      {"i3", "select dorm_name from dorm except select dorm_name from dorm where gender = 'F'",
       "select dorm_name from dorm except select dorm_name from dorm where gender = 'F'", true},
      {"i3", "select dorm_name from dorm except select dorm_name from dorm where gender = 'M'",
       "select dorm_name from dorm except select dorm_name from dorm where gender = 'F'", true},
      {"i3", "select dorm_name from dorm union select dorm_name from dorm where gender = 'F'",
       "select dorm_name from dorm except select dorm_name from dorm where gender = 'F'", false},
      // i4: aggregation / distinct / star variations
      {"i4", "select count(*) from dorm", "select count(*) from dorm", true},
      {"i4", "select count(dormid) from dorm", "select count(*) from dorm", false},
      {"i4", "select count(distinct dorm_name) from dorm",
       "select count(distinct dorm_name) from dorm", true},
      {"i4", "select distinct gender from dorm", "select gender from dorm", false},
      // i5: where-operator and literal handling
      {"i5", "select dorm_name from dorm where student_capacity > 100",
       "select dorm_name from dorm where student_capacity > 999", true},  // literals abstract
      {"i5", "select dorm_name from dorm where student_capacity < 100",
       "select dorm_name from dorm where student_capacity > 100", false},
      {"i5", "select dorm_name from dorm where dorm_name like 'A%'",
       "select dorm_name from dorm where dorm_name like 'B%'", true},
      {"i5", "select dorm_name from dorm where dormid in (1, 2)",
       "select dorm_name from dorm where dormid in (3, 4, 5)", false},  // arity differs
      // i6: group/having/order/limit mixtures
      {"i6", "select gender from dorm group by gender having count(dormid) > 1",
       "select gender from dorm group by gender having count(dormid) > 1", true},
      {"i6", "select gender from dorm group by gender",
       "select gender from dorm group by gender having count(dormid) > 1", false},
      {"i6", "select dorm_name from dorm order by student_capacity desc limit 5",
       "select dorm_name from dorm order by student_capacity desc limit 5", true},
      {"i6", nullptr, "select dorm_name from dorm order by student_capacity", false},
  };

  MetricsAccumulator acc;
  std::map<std::string, std::size_t> turn_counters;
  std::map<std::string, bool> interaction_ok;
  std::size_t qm_hits = 0;

  struct Recount {
    std::map<std::string, std::vector<std::string>> pred, gold;
    bool has_pred = false;
  };
  std::vector<Recount> recount;

  for (const auto& hp : pairs) {
    std::size_t turn = ++turn_counters[hp.interaction];
    SqlQuery gold = parse(hp.gold, schema);
    std::optional<SqlQuery> pred;
    if (hp.pred != nullptr) pred = parse(hp.pred, schema);
    TurnResult r = question_match(pred ? &*pred : nullptr, gold, hp.interaction, turn);
    c.expect(r.qm == hp.expect_qm,
             std::string("hand-expected qm mismatch for pred '") +
                 (hp.pred ? hp.pred : "<unparseable>") + "'");
    acc.add_turn(hp.interaction, turn, pred ? &*pred : nullptr, gold);
    qm_hits += hp.expect_qm ? 1 : 0;
    auto [it, fresh] = interaction_ok.try_emplace(hp.interaction, true);
    it->second = it->second && hp.expect_qm;
    (void)fresh;

    Recount rc;
    rc.has_pred = pred.has_value();
    auto flatten = [](const ClauseDecomposition& d) {
      std::map<std::string, std::vector<std::string>> out;
      for (const auto& [k, ms] : d.components) out[k] = {ms.begin(), ms.end()};
      return out;
    };
    if (pred) rc.pred = flatten(decompose(*pred));
    rc.gold = flatten(decompose(gold));
    recount.push_back(std::move(rc));
  }

  MetricsReport report = acc.finish();

  double expect_qm = static_cast<double>(qm_hits) / static_cast<double>(pairs.size());
  std::size_t good_interactions = 0;
  for (const auto& [id, ok] : interaction_ok) good_interactions += ok ? 1 : 0;
  double expect_im =
      static_cast<double>(good_interactions) / static_cast<double>(interaction_ok.size());
  c.expect(report.qm == expect_qm, "qm differs from the recount");
  c.expect(report.im == expect_im, "im differs from the recount");

  // brute-force per-component F1 recount over plain vectors
  for (auto name : ClauseDecomposition::component_names()) {
    std::string key(name);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& rc : recount) {
      std::vector<std::string> p =
          rc.has_pred && rc.pred.count(key) ? rc.pred.at(key) : std::vector<std::string>{};
      std::vector<std::string> g =
          rc.gold.count(key) ? rc.gold.at(key) : std::vector<std::string>{};
      std::size_t inter = 0;
      std::vector<bool> used(g.size(), false);
      for (const auto& e : p) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (!used[i] && g[i] == e) {
            used[i] = true;
            ++inter;
            break;
          }
        }
      }
      tp += inter;
      fp += p.size() - inter;
      fn += g.size() - inter;
    }
    std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) {
      c.expect(!report.clause_f1.count(key), "component " + key + " should be omitted");
    } else {
      double expect_f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
      c.expect(report.clause_f1.count(key) == 1, "component " + key + " missing");
      if (report.clause_f1.count(key)) {
        c.expect(report.clause_f1.at(key) == expect_f1,
                 "F1 for " + key + " differs from the recount");
      }
    }
  }
}

// --------------------------------------------------------------------------
// Criterion 6: learnability at desk scale.

RunConfig acceptance_config() {
  RunConfig config;
  config.seed = 42;
  config.d = 16;
  config.heads = 3;
  config.lambda = 0.01;
  config.lr = 1e-3;
  config.lr_embedder = 1e-3;  // the lookup embedder trains from scratch
  config.patience = 10;
  config.max_len = 100;
  config.epochs = 200;
  return config;
}

void criterion_6(Check& c, double* wall_seconds) {
  SyntheticCorpus corpus = generate_corpus(7, 200, 40);
  RunConfig config = acceptance_config();
  auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train_model(corpus.schemas, corpus.train, corpus.dev, config, nullptr);
  auto preds = predict_interactions(result.store, corpus.schemas, corpus.dev, config.max_len);
  MetricsReport report = evaluate_records(preds, corpus.schemas, corpus.dev);
  *wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream os;
  os << "token acc " << result.best_dev_token_acc << ", qm " << report.qm << ", epochs "
     << result.epochs_run << ", " << *wall_seconds << "s";
  c.detail = os.str();
  c.expect(result.best_dev_token_acc >= 0.95,
           "teacher-forced token accuracy " + std::to_string(result.best_dev_token_acc) +
               " below 0.95");
  c.expect(report.qm >= 0.80, "dev QM " + std::to_string(report.qm) + " below 0.80");
  c.expect(result.epochs_run <= 200, "epoch budget exceeded");
  c.expect(*wall_seconds < 600.0, "wall-clock budget exceeded");
}

// --------------------------------------------------------------------------
// Criterion 7: ablation contract.

void criterion_7(Check& c) {
  SyntheticCorpus corpus = generate_corpus(19, 16, 4);
  for (bool no_schema : {true, false}) {
    bool no_sql = !no_schema;
    RunConfig config = acceptance_config();
    config.epochs = 3;
    config.no_schema_states = no_schema;
    config.no_sql_states = no_sql;
    // end to end: train, predict, evaluate
    TrainResult result = train_model(corpus.schemas, corpus.train, corpus.dev, config, nullptr);
    auto preds = predict_interactions(result.store, corpus.schemas, corpus.dev, config.max_len);
    MetricsReport report = evaluate_records(preds, corpus.schemas, corpus.dev);
    c.expect(report.turn_count == corpus.dev.size() * 3,
             "ablation run did not cover every turn");

    // instrumentation: the downstream representations must be the raw
    // embeddings exactly in the ablated mode
    Model model = Model::from_store(result.store);
    const Schema& schema = find_schema(corpus.schemas, corpus.dev[0].db_id);
    SchemaGraph sgraph = build_graph(schema);
    std::vector<std::vector<std::string>> utterances = {
        tokenize_utterance(corpus.dev[0].turns[0].utterance),
        tokenize_utterance(corpus.dev[0].turns[1].utterance)};
    std::vector<SqlToken> prev = parse(corpus.dev[0].turns[0].query, schema).normalized_tokens;
    Graph g(&result.store);
    auto reprs = model.encode_turn(g, schema, sgraph, utterances, &prev);
    c.expect(reprs.used_schema_states == !no_schema, "schema-state usage flag");
    c.expect(reprs.used_sql_states == !no_sql, "SQL-state usage flag");
    auto equal = [&](Var a, Var b) {
      auto va = g.value(a);
      auto vb = g.value(b);
      return std::equal(va.begin(), va.end(), vb.begin(), vb.end());
    };
    bool cols_raw = true;
    for (std::size_t i = 0; i < reprs.dec.col_reprs.size(); ++i) {
      cols_raw = cols_raw && equal(reprs.dec.col_reprs[i], reprs.raw_column_reprs[i]);
    }
    bool kws_raw = true;
    for (std::size_t j = 0; j < reprs.dec.kw_reprs.size(); ++j) {
      kws_raw = kws_raw && equal(reprs.dec.kw_reprs[j], reprs.raw_kw_reprs[j]);
    }
    c.expect(cols_raw == no_schema, no_schema ? "column scores must use raw representations"
                                              : "column scores must use schema-states");
    c.expect(kws_raw == no_sql, no_sql ? "keyword scores must use raw embeddings"
                                       : "keyword scores must use SQL-states");
  }
}

// --------------------------------------------------------------------------
// Criterion 8: byte-identical reports under a fixed seed.

void criterion_8(Check& c) {
  namespace fs = std::filesystem;
  SyntheticCorpus corpus = generate_corpus(7, 60, 12);
  RunConfig config = acceptance_config();
  config.epochs = 8;

  auto run = [&](const std::string& report_path, const std::string& preds_path) {
    TrainResult result = train_model(corpus.schemas, corpus.train, corpus.dev, config, nullptr);
    auto preds = predict_interactions(result.store, corpus.schemas, corpus.dev, config.max_len);
    MetricsReport report = evaluate_records(preds, corpus.schemas, corpus.dev);
    std::ofstream out(report_path, std::ios::trunc | std::ios::binary);
    out << report.to_json() << "\n";
    std::ofstream pout(preds_path, std::ios::trunc | std::ios::binary);
    for (const auto& pr : preds) {
      pout << pr.interaction_id << "\t" << pr.turn_index << "\t"
           << tokens_to_string(pr.tokens) << "\t" << (pr.sql ? *pr.sql : "-") << "\t"
           << (pr.terminated ? 1 : 0) << "\n";
    }
  };
  auto slurp = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  fs::path r1 = fs::temp_directory_path() / "sqltrack_accept_run1.json";
  fs::path r2 = fs::temp_directory_path() / "sqltrack_accept_run2.json";
  fs::path q1 = fs::temp_directory_path() / "sqltrack_accept_run1.preds";
  fs::path q2 = fs::temp_directory_path() / "sqltrack_accept_run2.preds";
  run(r1.string(), q1.string());
  run(r2.string(), q2.string());
  std::string b1 = slurp(r1), b2 = slurp(r2);
  c.expect(!b1.empty(), "first report is empty");
  c.expect(b1 == b2, "reports differ between identically-seeded runs");
  c.expect(slurp(q1) == slurp(q2), "prediction files differ between identically-seeded runs");
  for (const auto& path : {r1, r2, q1, q2}) fs::remove(path);
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double limit_seconds;  // 0 = no stated limit
    std::function<void(Check&, double*)> run;
  };
  std::vector<Entry> criteria = {
      {1, "state-updater fixture", 1.0, [](Check& c, double*) { criterion_1(c); }},
      {2, "duplicate keyword retention", 0.0, [](Check& c, double*) { criterion_2(c); }},
      {3, "rgnn identity and loop oracle", 5.0, [](Check& c, double*) { criterion_3(c); }},
      {4, "gradient conformance", 60.0, [](Check& c, double*) { criterion_4(c); }},
      {5, "metric oracle", 0.0, [](Check& c, double*) { criterion_5(c); }},
      {6, "learnability at desk scale", 600.0,
       [](Check& c, double* wall) { criterion_6(c, wall); }},
      {7, "ablation contract", 0.0, [](Check& c, double*) { criterion_7(c); }},
      {8, "determinism", 0.0, [](Check& c, double*) { criterion_8(c); }},
  };

  int failures = 0;
  for (auto& entry : criteria) {
    Check check;
    double wall = 0.0;
    auto t0 = std::chrono::steady_clock::now();
    try {
      entry.run(check, &wall);
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (entry.limit_seconds > 0 && elapsed >= entry.limit_seconds) {
      check.ok = false;
      check.detail = "took " + std::to_string(elapsed) + "s, limit " +
                     std::to_string(entry.limit_seconds) + "s";
    }
    std::printf("%s criterion %d: %s (%.2fs)%s%s\n", check.ok ? "PASS" : "FAIL", entry.id,
                entry.name, elapsed, check.detail.empty() ? "" : " -- ", check.detail.c_str());
    std::fflush(stdout);
    failures += check.ok ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
