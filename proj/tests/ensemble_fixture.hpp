#pragma once

// Two prediction sets that each carry a reliable score on one half of the
// ids and noise on the other half.

#include <algorithm>

#include "newsrel/ensemble_eval.hpp"
#include "newsrel/random.hpp"

namespace fixtures {

struct ComplementaryPair {
  newsrel::PredictionSet a;
  newsrel::PredictionSet b;
};

inline ComplementaryPair complementary_predictions(std::size_t n, std::uint64_t seed) {
  auto rng = newsrel::make_rng({seed, 0x656e73ULL});
  ComplementaryPair out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double good = std::clamp(0.5 + 0.25 * (2 * y - 1) + 0.15 * newsrel::standard_normal(rng), 0.0, 1.0);
    const double noise = newsrel::uniform01(rng);
    const bool first_half = i < n / 2;
    const std::string id = "p" + std::to_string(i);
    out.a.items.push_back({id, first_half ? noise : good, y});
    out.b.items.push_back({id, first_half ? good : noise, y});
  }
  return out;
}

}  // namespace fixtures
