#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rii::dataio {

// One social-network post. label: 0 = reliable, 1 = unreliable.
struct Post {
  std::string id;
  std::string user_id;
  std::string text;
  std::int64_t num_likes = 0;
  std::int64_t num_comments = 0;
  std::int64_t num_shares = 0;
  std::optional<std::string> timestamp;
  std::optional<int> label;
};

struct Corpus {
  std::vector<Post> posts;
  bool fully_labeled = false;

  std::size_t size() const { return posts.size(); }
};

struct CorpusStats {
  std::size_t n = 0;
  std::size_t n_unreliable = 0;
  double unreliable_fraction = 0.0;
  double long_fraction = 0.0;
};

// Logical field -> column name. Defaults cover the synthetic corpus schema.
using SchemaMap = std::map<std::string, std::string>;

SchemaMap default_schema();

// Delimited text with a header row, RFC-4180 quoting. Throws SchemaMismatch,
// InvalidLabel, DuplicateId.
Corpus load_corpus(const std::string& path, const SchemaMap& schema = default_schema(),
                   char delimiter = ',');

void save_corpus(const Corpus& corpus, const std::string& path, char delimiter = ',');

// Per-class counts round half up, then the majority class absorbs the
// correction so |val| = round(n * val_fraction). Shuffle within class is
// driven solely by seed.
std::pair<Corpus, Corpus> stratified_split(const Corpus& corpus, double val_fraction,
                                           std::uint64_t seed);

// Token counts use the preprocess pipeline (emoji translation + uncased_flat
// normalization + tweet tokenizer).
CorpusStats corpus_stats(const Corpus& corpus, std::size_t long_threshold = 500);

std::string stats_to_json(const CorpusStats& stats);

}  // namespace rii::dataio
