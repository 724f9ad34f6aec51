#include "sqltrack/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sqltrack/autograd.hpp"
#include "sqltrack/embedder.hpp"
#include "sqltrack/sql_model.hpp"

namespace sqltrack {

using nlohmann::json;

std::vector<InteractionRecord> load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interactions file: " + path);
  std::vector<InteractionRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json doc = json::parse(line);
      InteractionRecord rec;
      rec.id = doc.at("id").get<std::string>();
      rec.db_id = doc.at("db_id").get<std::string>();
      for (const auto& turn : doc.at("turns")) {
        rec.turns.push_back({turn.at("utterance").get<std::string>(),
                             turn.at("query").get<std::string>()});
      }
      if (rec.turns.empty()) {
        throw DataError("interaction '" + rec.id + "' has no turns");
      }
      records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DataError("interactions file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void save_interactions(std::span<const InteractionRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open interactions file for writing: " + path);
  for (const auto& rec : records) {
    json doc;
    doc["id"] = rec.id;
    doc["db_id"] = rec.db_id;
    doc["turns"] = json::array();
    for (const auto& turn : rec.turns) {
      doc["turns"].push_back({{"utterance", turn.utterance}, {"query", turn.query}});
    }
    out << doc.dump() << "\n";
  }
}

Schema dorm_schema() {
  return Schema::make(
      "dorm_1",
      {
          {"dorm", {{"dormid", "number"}, {"dorm_name", "text"}, {"student_capacity", "number"},
                    {"gender", "text"}}},
          {"has_amenity", {{"dormid", "number"}, {"amenid", "number"}}},
          {"dorm_amenity", {{"amenid", "number"}, {"amenity_name", "text"}}},
      },
      {{"has_amenity.dormid", "dorm.dormid"}, {"has_amenity.amenid", "dorm_amenity.amenid"}});
}

Schema concert_schema() {
  return Schema::make(
      "concert_1",
      {
          {"stadium", {{"stadium_id", "number"}, {"stadium_name", "text"},
                       {"capacity", "number"}, {"city", "text"}}},
          {"concert", {{"concert_id", "number"}, {"concert_name", "text"},
                       {"stadium_id", "number"}, {"year", "number"}}},
          {"singer", {{"singer_id", "number"}, {"singer_name", "text"}, {"age", "number"},
                      {"country", "text"}}},
          {"singer_in_concert", {{"concert_id", "number"}, {"singer_id", "number"}}},
      },
      {{"concert.stadium_id", "stadium.stadium_id"},
       {"singer_in_concert.concert_id", "concert.concert_id"},
       {"singer_in_concert.singer_id", "singer.singer_id"}});
}

namespace {

struct SchemaTemplates {
  Schema schema;
  std::vector<std::string> subjects;  // T1 select columns
  std::vector<std::string> filters;   // T2 / except filters
  std::vector<std::string> groups;
  std::vector<std::string> orders;
};

SchemaTemplates dorm_templates() {
  return {dorm_schema(),
          {"dorm.dorm_name", "dorm.gender", "dorm.student_capacity", "dorm_amenity.amenity_name"},
          {"dorm.gender", "dorm.student_capacity", "dorm_amenity.amenity_name", "dorm.dorm_name"},
          {"dorm.gender", "dorm_amenity.amenity_name"},
          {"dorm.student_capacity", "dorm.dorm_name"}};
}

SchemaTemplates concert_templates() {
  return {concert_schema(),
          {"singer.singer_name", "singer.country", "stadium.stadium_name",
           "concert.concert_name", "stadium.city"},
          {"singer.age", "singer.country", "stadium.city", "concert.year", "stadium.capacity"},
          {"singer.country", "stadium.city", "concert.year"},
          {"singer.age", "stadium.capacity", "concert.year"}};
}

std::string words_of(const std::string& qualified) {
  auto dot = qualified.find('.');
  auto words = name_words(qualified.substr(dot + 1));
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += " ";
    out += w;
  }
  return out;
}

std::string table_of(const std::string& qualified) {
  return qualified.substr(0, qualified.find('.'));
}

// Another column of the same table, or the column itself when the table
// has only one usable sibling.
std::string sibling_column(const Schema& schema, const std::string& qualified, Rng& rng) {
  const Schema::Table* table = schema.table(table_of(qualified));
  std::vector<std::string> options;
  for (const auto& [c, ty] : table->columns) {
    (void)ty;
    std::string q = table->name + "." + c;
    if (q != qualified) options.push_back(q);
  }
  if (options.empty()) return qualified;
  return options[rng.below(options.size())];
}

struct TokenStream {
  std::vector<SqlToken> tokens;
  void kw(std::string_view k) { tokens.push_back(keyword_token(k)); }
  void col(const std::string& q) { tokens.push_back(column_token(q)); }
  void val() { tokens.push_back(value_token()); }
};

InteractionRecord make_interaction(const SchemaTemplates& st, std::size_t index, Rng& rng) {
  InteractionRecord rec;
  rec.id = st.schema.db_id() + "_" + std::to_string(index);
  rec.db_id = st.schema.db_id();

  const std::string c1 = st.subjects[rng.below(st.subjects.size())];
  const std::string c2 = sibling_column(st.schema, c1, rng);
  std::string filter = st.filters[rng.below(st.filters.size())];
  while (filter == c1) filter = st.filters[rng.below(st.filters.size())];

  // Turn 1: plain projection.
  TokenStream q1;
  std::string u1;
  if (rng.below(2) == 0) {
    q1.kw("select");
    q1.col(c1);
    u1 = "show the " + words_of(c1) + " of each " + table_of(c1) + " .";
  } else {
    q1.kw("select");
    q1.col(c1);
    q1.col(c2);
    u1 = "list the " + words_of(c1) + " and the " + words_of(c2) + " .";
  }

  // Turn 2: add a filter over the first turn's projection.
  TokenStream q2;
  q2.tokens = q1.tokens;
  std::string u2;
  if (rng.below(2) == 0) {
    q2.kw("where");
    q2.col(filter);
    q2.kw("=");
    q2.val();
    u2 = "only keep rows where " + words_of(filter) + " equals some value .";
  } else {
    q2.kw("where");
    q2.col(filter);
    q2.kw(">");
    q2.val();
    u2 = "which ones have " + words_of(filter) + " above some value ?";
  }

  // Turn 3: aggregate, order, exclude or truncate.
  TokenStream q3;
  std::string u3;
  switch (rng.below(4)) {
    case 0: {
      const std::string g = st.groups[rng.below(st.groups.size())];
      q3.kw("select");
      q3.col(g);
      q3.kw("count");
      q3.col(c1);
      q3.kw("group_by");
      q3.col(g);
      u3 = "how many are there for each " + words_of(g) + " ? | here is the list .";
      break;
    }
    case 1: {
      const std::string o = st.orders[rng.below(st.orders.size())];
      q3.tokens = q2.tokens;
      q3.kw("order_by");
      q3.col(o);
      q3.kw("desc");
      u3 = "sort them by " + words_of(o) + " in descending order .";
      break;
    }
    case 2: {
      std::string e = st.filters[rng.below(st.filters.size())];
      q3.tokens = q2.tokens;
      q3.kw("except");
      q3.kw("select");
      q3.col(c1);
      q3.kw("where");
      q3.col(e);
      q3.kw("=");
      q3.val();
      u3 = "exclude those whose " + words_of(e) + " equals some value .";
      break;
    }
    default: {
      q3.tokens = q2.tokens;
      q3.kw("limit");
      q3.val();
      u3 = "show only a few of them . | sure , here you go .";
      break;
    }
  }

  for (const auto& [u, q] : std::initializer_list<std::pair<std::string, TokenStream>>{
           {u1, q1}, {u2, q2}, {u3, q3}}) {
    SqlQuery assembled = assemble(q.tokens, st.schema);
    rec.turns.push_back({u, serialize(assembled)});
  }
  return rec;
}

}  // namespace

SyntheticCorpus generate_corpus(std::uint64_t seed, std::size_t train_count,
                                std::size_t dev_count) {
  SyntheticCorpus corpus;
  SchemaTemplates dorm = dorm_templates();
  SchemaTemplates concert = concert_templates();
  corpus.schemas = {dorm.schema, concert.schema};
  Rng rng(seed);
  const std::size_t total = train_count + dev_count;
  for (std::size_t i = 0; i < total; ++i) {
    const SchemaTemplates& st = i % 2 == 0 ? dorm : concert;
    InteractionRecord rec = make_interaction(st, i, rng);
    if (i < train_count) {
      corpus.train.push_back(std::move(rec));
    } else {
      corpus.dev.push_back(std::move(rec));
    }
  }
  return corpus;
}

}  // namespace sqltrack
