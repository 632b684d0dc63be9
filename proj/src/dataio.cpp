#include "rii/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "rii/errors.hpp"
#include "rii/preprocess.hpp"
#include "json.hpp"

namespace rii::dataio {

namespace {

// RFC-4180 style: quoted fields may contain the delimiter, doubled quotes
// and embedded newlines.
std::vector<std::vector<std::string>> parse_delimited(const std::string& content,
                                                      char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (row.size() > 1 || !row[0].empty()) rows.push_back(std::move(row));
    row.clear();
  };

  std::size_t i = 0;
  while (i < content.size()) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (!field.empty() || !row.empty()) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    end_row();
  }
  return rows;
}

std::string quote_field(const std::string& s, char delimiter) {
  if (s.find_first_of(std::string("\"\n\r") + delimiter) == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::int64_t parse_count(const std::string& field, const std::string& column,
                         const std::string& id) {
  if (field.empty()) {
    std::fprintf(stderr, "warning: post '%s': missing %s, treated as 0\n", id.c_str(),
                 column.c_str());
    return 0;
  }
  try {
    const std::int64_t v = std::stoll(field);
    return v < 0 ? 0 : v;
  } catch (const std::exception&) {
    std::fprintf(stderr, "warning: post '%s': unparseable %s '%s', treated as 0\n",
                 id.c_str(), column.c_str(), field.c_str());
    return 0;
  }
}

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

// Deterministic Fisher-Yates over raw mt19937_64 draws.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

SchemaMap default_schema() {
  return {{"id", "id"},
          {"user_id", "user_id"},
          {"text", "text"},
          {"num_likes", "num_likes"},
          {"num_comments", "num_comments"},
          {"num_shares", "num_shares"},
          {"timestamp", "timestamp"},
          {"label", "label"}};
}

Corpus load_corpus(const std::string& path, const SchemaMap& schema, char delimiter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto rows = parse_delimited(buf.str(), delimiter);
  if (rows.empty()) throw SchemaMismatch("file " + path + " has no header row");

  const auto& header = rows[0];
  auto column_index = [&](const std::string& logical) -> int {
    const auto it = schema.find(logical);
    const std::string name = it == schema.end() ? logical : it->second;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };

  const int col_id = column_index("id");
  const int col_user = column_index("user_id");
  const int col_text = column_index("text");
  for (const auto& [logical, col] :
       std::initializer_list<std::pair<const char*, int>>{
           {"id", col_id}, {"user_id", col_user}, {"text", col_text}}) {
    if (col < 0) throw SchemaMismatch("required column '" + std::string(logical) +
                                      "' absent in " + path);
  }
  const int col_likes = column_index("num_likes");
  const int col_comments = column_index("num_comments");
  const int col_shares = column_index("num_shares");
  const int col_ts = column_index("timestamp");
  const int col_label = column_index("label");

  auto at = [](const std::vector<std::string>& row, int col) -> std::string {
    if (col < 0 || static_cast<std::size_t>(col) >= row.size()) return {};
    return row[static_cast<std::size_t>(col)];
  };

  Corpus corpus;
  corpus.fully_labeled = col_label >= 0;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    Post post;
    post.id = at(row, col_id);
    if (post.id.empty()) throw SchemaMismatch("empty id at data row " + std::to_string(r));
    if (!seen.insert(post.id).second) throw DuplicateId("id '" + post.id + "'");
    post.user_id = at(row, col_user);
    post.text = at(row, col_text);
    post.num_likes = parse_count(at(row, col_likes), "num_likes", post.id);
    post.num_comments = parse_count(at(row, col_comments), "num_comments", post.id);
    post.num_shares = parse_count(at(row, col_shares), "num_shares", post.id);
    if (const auto ts = at(row, col_ts); !ts.empty()) post.timestamp = ts;
    if (const auto lab = at(row, col_label); !lab.empty()) {
      if (lab != "0" && lab != "1") {
        throw InvalidLabel("post '" + post.id + "' has label '" + lab + "'");
      }
      post.label = lab == "1" ? 1 : 0;
    } else {
      corpus.fully_labeled = false;
    }
    corpus.posts.push_back(std::move(post));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus to " + path);
  const std::string d(1, delimiter);
  out << "id" << d << "user_id" << d << "text" << d << "num_likes" << d << "num_comments"
      << d << "num_shares" << d << "timestamp" << d << "label\n";
  for (const auto& p : corpus.posts) {
    out << quote_field(p.id, delimiter) << d << quote_field(p.user_id, delimiter) << d
        << quote_field(p.text, delimiter) << d << p.num_likes << d << p.num_comments << d
        << p.num_shares << d << quote_field(p.timestamp.value_or(""), delimiter) << d
        << (p.label ? std::to_string(*p.label) : "") << '\n';
  }
}

std::pair<Corpus, Corpus> stratified_split(const Corpus& corpus, double val_fraction,
                                           std::uint64_t seed) {
  if (!corpus.fully_labeled) throw NotLabeled("stratified_split requires full labels");
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
    by_class[*corpus.posts[i].label].push_back(i);
  }
  const std::size_t target_total = round_half_up(
      static_cast<double>(corpus.posts.size()) * val_fraction);
  std::size_t take[2];
  for (int c : {0, 1}) {
    take[c] = round_half_up(static_cast<double>(by_class[c].size()) * val_fraction);
  }
  // Majority class absorbs the rounding correction.
  const int majority = by_class[1].size() > by_class[0].size() ? 1 : 0;
  const std::size_t other = take[1 - majority];
  take[majority] = target_total >= other ? target_total - other : 0;
  take[majority] = std::min(take[majority], by_class[majority].size());

  std::mt19937_64 rng(seed);
  std::set<std::size_t> val_idx;
  for (int c : {0, 1}) {
    auto idx = by_class[c];
    shuffle_indices(idx, rng);
    for (std::size_t i = 0; i < take[c]; ++i) val_idx.insert(idx[i]);
  }

  Corpus train, val;
  train.fully_labeled = val.fully_labeled = true;
  for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
    (val_idx.count(i) ? val : train).posts.push_back(corpus.posts[i]);
  }
  return {std::move(train), std::move(val)};
}

CorpusStats corpus_stats(const Corpus& corpus, std::size_t long_threshold) {
  if (corpus.posts.empty()) throw EmptyCorpus("corpus_stats on empty corpus");
  CorpusStats stats;
  stats.n = corpus.posts.size();
  std::size_t n_long = 0;
  for (const auto& post : corpus.posts) {
    if (post.label && *post.label == 1) ++stats.n_unreliable;
    const auto tokens =
        preprocess::preprocess_text(post.text, preprocess::CasingMode::uncased_flat);
    if (tokens.size() > long_threshold) ++n_long;
  }
  stats.unreliable_fraction =
      static_cast<double>(stats.n_unreliable) / static_cast<double>(stats.n);
  stats.long_fraction = static_cast<double>(n_long) / static_cast<double>(stats.n);
  return stats;
}

std::string stats_to_json(const CorpusStats& stats) {
  nlohmann::json j{{"n", stats.n},
                   {"n_unreliable", stats.n_unreliable},
                   {"unreliable_fraction", stats.unreliable_fraction},
                   {"long_fraction", stats.long_fraction}};
  return j.dump(2);
}

}  // namespace rii::dataio
