#pragma once

#include <cstdint>

#include "rii/dataio.hpp"

namespace rii::synth {

// Seeded stand-in for the non-redistributable evaluation corpus. Labels are
// keyword-determined except for "determined" users, whose texts are pure
// filler and whose labels are fixed per user.
struct SynthConfig {
  std::size_t n = 4372;
  std::uint64_t seed = 0;
  double unreliable_fraction = 0.17;
  double long_fraction = 0.10;
  double user_determined_fraction = 0.0;  // fraction of users, by user index
  int n_users = 100;
  int avg_len = 30;
  std::size_t long_len = 520;  // token count for long posts, > the 500 threshold
};

dataio::Corpus generate(const SynthConfig& config);

}  // namespace rii::synth
