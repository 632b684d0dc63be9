#include "rii/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "rii/emoji_table_data.hpp"
#include "rii/errors.hpp"

namespace rii::preprocess {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_newline(char c) { return c == '\n' || c == '\r'; }

// Decodes the UTF-8 codepoint at position i; advances i past it. Invalid
// bytes are passed through as single-byte codepoints.
std::uint32_t decode_utf8(const std::string& s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  std::uint32_t cp = b0;
  if ((b0 & 0x80u) == 0) {
    len = 1;
  } else if ((b0 & 0xE0u) == 0xC0u) {
    len = 2;
    cp = b0 & 0x1Fu;
  } else if ((b0 & 0xF0u) == 0xE0u) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if ((b0 & 0xF8u) == 0xF0u) {
    len = 4;
    cp = b0 & 0x07u;
  }
  if (i + len > s.size()) len = 1, cp = b0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0u) != 0x80u) {  // truncated sequence
      cp = b0;
      len = 1;
      break;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80u) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800u) {
    out.push_back(static_cast<char>(0xC0u | (cp >> 6)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else if (cp < 0x10000u) {
    out.push_back(static_cast<char>(0xE0u | (cp >> 12)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  } else {
    out.push_back(static_cast<char>(0xF0u | (cp >> 18)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 12) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | ((cp >> 6) & 0x3Fu)));
    out.push_back(static_cast<char>(0x80u | (cp & 0x3Fu)));
  }
}

// Covers ASCII, Latin-1, Latin Extended-A/B (incl. Ơ/Ư) and Latin Extended
// Additional, which is full coverage for Vietnamese precomposed letters.
std::uint32_t to_lower_cp(std::uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if ((cp >= 0xC0 && cp <= 0xD6) || (cp >= 0xD8 && cp <= 0xDE)) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && cp % 2 == 1) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E && cp % 2 == 1) return cp + 1;
  if (cp == 0x1A0 || cp == 0x1AF) return cp + 1;
  if (cp >= 0x1E00 && cp <= 0x1EFF && cp % 2 == 0) return cp + 1;
  return cp;
}

std::string lowercase_utf8(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    append_utf8(out, to_lower_cp(decode_utf8(s, i)));
  }
  return out;
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

bool is_alias_body_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (std::isalnum(u) != 0 && std::isupper(u) == 0) || c == '_' || c == '+' || c == '-';
}

}  // namespace

const char* casing_name(CasingMode mode) {
  return mode == CasingMode::cased_raw ? "cased_raw" : "uncased_flat";
}

CasingMode casing_from_name(const std::string& name) {
  if (name == "cased_raw") return CasingMode::cased_raw;
  if (name == "uncased_flat") return CasingMode::uncased_flat;
  throw ConfigError("unknown casing mode '" + name + "'");
}

SpecialTokenScheme SpecialTokenScheme::bert_style() {
  return {"[CLS]", "[SEP]", "[PAD]", "[UNK]", "bert_style"};
}

SpecialTokenScheme SpecialTokenScheme::roberta_style() {
  return {"<s>", "</s>", "<pad>", "<unk>", "roberta_style"};
}

SpecialTokenScheme SpecialTokenScheme::from_name(const std::string& name) {
  if (name == "bert_style") return bert_style();
  if (name == "roberta_style") return roberta_style();
  throw ConfigError("unknown special-token scheme '" + name + "'");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  token_to_id_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    token_to_id_.emplace(tokens_[i], static_cast<int>(i) + kNumSpecials);
  }
}

int Vocabulary::id_of(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary to " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary from " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

std::string Vocabulary::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  auto mix = [&h](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 1099511628211ull;
    }
  };
  for (const auto& t : tokens_) {
    mix(t.data(), t.size());
    mix("\n", 1);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const EmojiTable& builtin_emoji_table() {
  static const EmojiTable table = [] {
    EmojiTable t;
    std::istringstream in(detail::kEmojiTableText);
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) continue;
      t.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
    return t;
  }();
  return table;
}

EmojiTable load_emoji_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read emoji table from " + path);
  EmojiTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) continue;
    t.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  return t;
}

std::string normalize(const std::string& text, CasingMode mode) {
  std::string s = mode == CasingMode::uncased_flat ? lowercase_utf8(text) : text;
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_ascii_space(s[i])) {
      bool has_newline = false;
      while (i < s.size() && is_ascii_space(s[i])) {
        has_newline = has_newline || is_newline(s[i]);
        ++i;
      }
      if (out.empty() || i >= s.size()) continue;  // trim ends
      if (mode == CasingMode::cased_raw && has_newline) {
        out.push_back('\n');
      } else {
        out.push_back(' ');
      }
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

std::string translate_emoji(const std::string& text, const EmojiTable& table) {
  if (table.empty()) return text;
  std::size_t max_len = 0;
  for (const auto& [seq, _] : table) max_len = std::max(max_len, seq.size());

  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto u = static_cast<unsigned char>(text[i]);
    if (u >= 0x80) {
      const std::size_t limit = std::min(max_len, text.size() - i);
      bool replaced = false;
      for (std::size_t len = limit; len >= 2 && !replaced; --len) {
        const auto it = table.find(text.substr(i, len));
        if (it != table.end()) {
          out.push_back(':');
          out.append(it->second);
          out.push_back(':');
          i += len;
          replaced = true;
        }
      }
      if (replaced) continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_ascii_space(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    const char c = text[i];

    // :alias: emoji strings
    if (c == ':') {
      std::size_t j = i + 1;
      while (j < n && is_alias_body_byte(text[j])) ++j;
      if (j > i + 1 && j < n && text[j] == ':') {
        tokens.push_back(text.substr(i, j + 1 - i));
        i = j + 1;
        continue;
      }
    }

    // @mentions and #hashtags
    if ((c == '@' || c == '#') && i + 1 < n && is_word_byte(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < n && is_word_byte(text[j])) ++j;
      tokens.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }

    // URLs: alpha scheme followed by "://", token runs to next whitespace
    if (std::isalpha(static_cast<unsigned char>(c)) != 0) {
      std::size_t j = i;
      while (j < n && std::isalpha(static_cast<unsigned char>(text[j])) != 0) ++j;
      if (j + 2 < n && text[j] == ':' && text[j + 1] == '/' && text[j + 2] == '/') {
        j += 3;
        while (j < n && !is_ascii_space(text[j])) ++j;
        tokens.push_back(text.substr(i, j - i));
        i = j;
        continue;
      }
    }

    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < n && is_word_byte(text[j])) ++j;
      tokens.push_back(text.substr(i, j - i));
      i = j;
      continue;
    }

    // Punctuation: a run of the same mark is one token.
    std::size_t j = i;
    while (j < n && text[j] == c) ++j;
    tokens.push_back(text.substr(start, j - start));
    i = j;
  }
  return tokens;
}

std::vector<std::string> preprocess_text(const std::string& text, CasingMode mode) {
  return tokenize(normalize(translate_emoji(text, builtin_emoji_table()), mode));
}

Vocabulary build_vocab(const dataio::Corpus& corpus, CasingMode mode, int min_count,
                       int max_size) {
  if (corpus.posts.empty()) throw EmptyCorpus("build_vocab on empty corpus");
  if (max_size <= Vocabulary::kNumSpecials) {
    throw ConfigError("vocabulary max_size must exceed the 4 reserved specials");
  }
  std::map<std::string, std::int64_t> counts;
  for (const auto& post : corpus.posts) {
    for (auto& tok : preprocess_text(post.text, mode)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& [tok, cnt] : counts) {
    if (cnt >= min_count) ranked.emplace_back(tok, cnt);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const auto cap = static_cast<std::size_t>(max_size - Vocabulary::kNumSpecials);
  if (ranked.size() > cap) ranked.resize(cap);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, _] : ranked) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

EncodedInput encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                    const SpecialTokenScheme& /*scheme*/, int max_len) {
  if (max_len < 3) throw ConfigError("encode requires max_len >= 3");
  EncodedInput out;
  out.ids.reserve(max_len);
  out.ids.push_back(Vocabulary::kClsId);
  const auto capacity = static_cast<std::size_t>(max_len - 2);
  for (std::size_t i = 0; i < std::min(tokens.size(), capacity); ++i) {
    out.ids.push_back(vocab.id_of(tokens[i]));
  }
  out.ids.push_back(Vocabulary::kSepId);
  out.true_length = static_cast<int>(out.ids.size());
  out.ids.resize(static_cast<std::size_t>(max_len), Vocabulary::kPadId);
  out.mask.assign(static_cast<std::size_t>(max_len), 0);
  for (int i = 0; i < out.true_length; ++i) out.mask[static_cast<std::size_t>(i)] = 1;
  return out;
}

std::vector<EncodedInput> chunk_encode(const std::vector<std::string>& tokens,
                                       const Vocabulary& vocab,
                                       const SpecialTokenScheme& scheme, int chunk_len,
                                       int max_chunks) {
  if (chunk_len < 3) throw ConfigError("chunk_encode requires chunk_len >= 3");
  if (max_chunks < 1) throw ConfigError("chunk_encode requires max_chunks >= 1");
  const auto span = static_cast<std::size_t>(chunk_len - 2);
  const std::size_t n = tokens.size();
  std::size_t n_chunks = n == 0 ? 1 : (n + span - 1) / span;
  n_chunks = std::min(n_chunks, static_cast<std::size_t>(max_chunks));

  std::vector<EncodedInput> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t lo = c * span;
    const std::size_t hi = std::min(n, lo + span);
    std::vector<std::string> piece(tokens.begin() + static_cast<std::ptrdiff_t>(lo),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(hi));
    chunks.push_back(encode(piece, vocab, scheme, chunk_len));
  }
  return chunks;
}

}  // namespace rii::preprocess
