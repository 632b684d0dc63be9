#include "rii/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "rii/rng.hpp"

namespace rii::synth {

namespace {

// Filler carries no label signal; the marker pools do.
constexpr std::array<const char*, 24> kFiller = {
    "hôm",  "nay",   "tại",   "thành", "phố",  "người", "dân",   "cho",
    "biết", "thông", "tin",   "về",    "việc", "này",   "đã",    "được",
    "chia", "sẻ",    "trên",  "mạng",  "xã",   "hội",   "nhiều", "lần"};

constexpr std::array<const char*, 8> kUnreliableMarkers = {
    "sốc",     "giật",   "gân",      "chấn",
    "động",    "tuyệt",  "mật",      "lan_truyền"};

constexpr std::array<const char*, 8> kReliableMarkers = {
    "chính", "thức", "xác",    "nhận",
    "báo",   "cáo",  "nguồn",  "kiểm_chứng"};

constexpr std::array<const char*, 6> kEmoji = {"😂", "🔥", "😱", "👍", "❤️", "⚠️"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& pool, rng::Stream& rng) {
  return pool[static_cast<std::size_t>(rng.below(N))];
}

std::string make_text(int label, bool informative, std::size_t n_tokens, rng::Stream& rng) {
  std::string text;
  const std::size_t n_markers = informative ? 2 + rng.below(3) : 0;
  for (std::size_t t = 0; t < n_tokens; ++t) {
    if (!text.empty()) text.push_back(' ');
    if (t < n_markers) {
      text += label == 1 ? pick(kUnreliableMarkers, rng) : pick(kReliableMarkers, rng);
    } else if (rng.below(40) == 0) {
      text += pick(kEmoji, rng);
    } else {
      text += pick(kFiller, rng);
    }
  }
  return text;
}

}  // namespace

dataio::Corpus generate(const SynthConfig& config) {
  rng::Stream rng(config.seed);
  const int n_determined =
      static_cast<int>(config.user_determined_fraction * config.n_users);

  dataio::Corpus corpus;
  corpus.fully_labeled = true;
  char buf[32];
  for (std::size_t i = 0; i < config.n; ++i) {
    const int user = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_users)));
    const bool determined = user < n_determined;
    const int label = determined ? user % 2
                                 : (rng.unit() < config.unreliable_fraction ? 1 : 0);
    const bool is_long = rng.unit() < config.long_fraction;
    const std::size_t lo = static_cast<std::size_t>(std::max(2, config.avg_len / 2));
    const std::size_t hi = static_cast<std::size_t>(std::max(config.avg_len * 3 / 2, 3));
    const std::size_t len =
        is_long ? config.long_len : lo + rng.below(static_cast<std::uint64_t>(hi - lo + 1));

    dataio::Post post;
    std::snprintf(buf, sizeof(buf), "p%06zu", i);
    post.id = buf;
    std::snprintf(buf, sizeof(buf), "u%03d", user);
    post.user_id = buf;
    post.text = make_text(label, !determined, len, rng);
    post.num_likes = static_cast<std::int64_t>(rng.below(5000));
    post.num_comments = static_cast<std::int64_t>(rng.below(800));
    post.num_shares = static_cast<std::int64_t>(rng.below(300));
    post.label = label;
    corpus.posts.push_back(std::move(post));
  }
  return corpus;
}

}  // namespace rii::synth
