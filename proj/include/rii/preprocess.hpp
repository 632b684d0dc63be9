#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rii/dataio.hpp"

namespace rii::preprocess {

enum class CasingMode { cased_raw, uncased_flat };

const char* casing_name(CasingMode mode);
CasingMode casing_from_name(const std::string& name);

struct SpecialTokenScheme {
  std::string cls;
  std::string sep;
  std::string pad;
  std::string unk;
  std::string name;  // preset identifier, carried into fingerprints

  static SpecialTokenScheme bert_style();
  static SpecialTokenScheme roberta_style();
  static SpecialTokenScheme from_name(const std::string& name);
};

// Reserved ids: pad=0, unk=1, cls=2, sep=3. Regular tokens start at 4.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr int kClsId = 2;
  static constexpr int kSepId = 3;
  static constexpr int kNumSpecials = 4;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int id_of(const std::string& token) const;  // unk id when absent
  int size() const { return static_cast<int>(tokens_.size()) + kNumSpecials; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, line number = id - 4.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
  std::string content_hash() const;  // FNV-1a over the serialized form

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct EncodedInput {
  std::vector<int> ids;
  std::vector<int> mask;
  int true_length = 0;
};

// Emoji byte-sequence -> CLDR-style short name (without colons).
using EmojiTable = std::map<std::string, std::string>;

// Bundled table, identical to data/emoji_aliases.txt.
const EmojiTable& builtin_emoji_table();
EmojiTable load_emoji_table(const std::string& path);

std::string normalize(const std::string& text, CasingMode mode);

// Leftmost-longest replacement of emoji sequences by ":name:" aliases.
std::string translate_emoji(const std::string& text, const EmojiTable& table);

// Rule-based split: whitespace separates; URLs, @mentions, #hashtags and
// :alias: strings are single tokens; punctuation detaches, runs of one mark
// fuse into one token.
std::vector<std::string> tokenize(const std::string& text);

// translate_emoji + normalize + tokenize with the bundled table.
std::vector<std::string> preprocess_text(const std::string& text, CasingMode mode);

Vocabulary build_vocab(const dataio::Corpus& corpus, CasingMode mode, int min_count,
                       int max_size);

EncodedInput encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                    const SpecialTokenScheme& scheme, int max_len);

std::vector<EncodedInput> chunk_encode(const std::vector<std::string>& tokens,
                                       const Vocabulary& vocab,
                                       const SpecialTokenScheme& scheme, int chunk_len,
                                       int max_chunks);

}  // namespace rii::preprocess
