#pragma once

// Desk-scale stand-in for the shared-task dataset. Background text is drawn
// from a fixed pseudo-Vietnamese syllable inventory; unreliable posts may
// carry tokens from a planted rumor lexicon.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "newsrel/corpus.hpp"
#include "newsrel/embeddings.hpp"
#include "newsrel/error.hpp"
#include "newsrel/random.hpp"

namespace newsrel::synthetic {

inline const std::vector<std::string>& rumor_lexicon() {
  static const std::vector<std::string> words = {
      "sán", "nhiễm", "độc", "khẩn", "cấp", "giả", "lừa", "sốc", "cảnh", "báo",
  };
  return words;
}

inline const std::vector<std::string>& background_syllables() {
  static const std::vector<std::string> syllables = [] {
    const std::vector<std::string> onsets = {"b", "c",  "d",  "đ",  "g",  "h",  "kh",
                                             "l", "m",  "n",  "nh", "ph", "qu", "s",
                                             "t", "th", "tr", "v",  "x"};
    const std::vector<std::string> rimes = {"a",  "à",   "á",    "ân",  "ong", "ương", "iên", "ôi",
                                            "ư",  "ai",  "ao",   "ên",  "inh", "ung",  "ắt"};
    const std::set<std::string> lexicon(rumor_lexicon().begin(), rumor_lexicon().end());
    std::vector<std::string> out;
    for (const auto& o : onsets) {
      for (const auto& r : rimes) {
        auto s = o + r;
        if (!lexicon.count(s)) out.push_back(std::move(s));
      }
    }
    return out;
  }();
  return syllables;
}

// Two-syllable compounds that the generator emits as a unit. They form the
// word-segmentation lexicon for the synthetic corpus.
inline const std::vector<std::string>& compound_words() {
  static const std::vector<std::string> words = [] {
    const auto& syl = background_syllables();
    auto rng = make_rng({0x636f6d706f756e64ULL});
    std::set<std::string> picked;
    while (picked.size() < 40) {
      const auto a = syl[uniform_index(rng, syl.size())];
      const auto b = syl[uniform_index(rng, syl.size())];
      if (a != b) picked.insert(a + " " + b);
    }
    return std::vector<std::string>(picked.begin(), picked.end());
  }();
  return words;
}

// Every whitespace token the generator can produce, sorted.
inline std::vector<std::string> all_tokens() {
  std::set<std::string> s(background_syllables().begin(), background_syllables().end());
  s.insert(rumor_lexicon().begin(), rumor_lexicon().end());
  return {s.begin(), s.end()};
}

// Stand-in for pretrained word vectors over all_tokens(). Every word gets an
// N(0, I) vector; rumor-lexicon words additionally share one random unit
// "topic" direction scaled by topic_strength, mimicking how pretrained
// spaces cluster semantically related words.
inline EmbeddingTable pretrained_vectors(std::size_t dim, std::uint64_t seed, double topic_strength = 2.0) {
  auto rng = make_rng({seed, 0x766563746f7273ULL});
  std::vector<double> topic(dim);
  double norm = 0.0;
  for (auto& x : topic) {
    x = standard_normal(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : topic) x /= norm;
  const std::set<std::string> lexicon(rumor_lexicon().begin(), rumor_lexicon().end());
  EmbeddingTable table(dim);
  for (const auto& w : all_tokens()) {
    std::vector<double> v(dim);
    for (auto& x : v) x = standard_normal(rng);
    if (lexicon.count(w)) {
      for (std::size_t k = 0; k < dim; ++k) v[k] += topic_strength * topic[k];
    }
    table.add(w, std::move(v));
  }
  return table;
}

struct Options {
  std::size_t min_words = 8;
  std::size_t max_words = 24;
  double compound_rate = 0.25;
};

inline Split generate_synthetic_corpus(std::size_t n, double signal_strength, std::uint64_t seed,
                                       const Options& opt = {}) {
  if (n == 0) throw ConfigError("synthetic corpus size must be positive");
  if (!(signal_strength >= 0.0 && signal_strength <= 1.0)) {
    throw ConfigError("signal_strength must lie in [0, 1]");
  }
  auto rng = make_rng({seed, 0x73796e746865ULL});
  const auto& syl = background_syllables();
  const auto& comp = compound_words();
  const auto& lex = rumor_lexicon();

  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) labels[i] = 1;
  shuffle(labels, rng);

  Split split;
  split.name = SplitName::train;
  split.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = opt.min_words + uniform_index(rng, opt.max_words - opt.min_words + 1);
    std::vector<std::string> words;
    while (words.size() < len) {
      if (uniform01(rng) < opt.compound_rate) {
        words.push_back(comp[uniform_index(rng, comp.size())]);
      } else {
        words.push_back(syl[uniform_index(rng, syl.size())]);
      }
    }
    // The signal draw is consumed for every record so both classes see the
    // same stream layout.
    const bool plant = uniform01(rng) < signal_strength;
    const auto n_planted = 1 + uniform_index(rng, 3);
    if (labels[i] == 1 && plant) {
      for (std::uint64_t k = 0; k < n_planted; ++k) {
        const auto pos = uniform_index(rng, words.size() + 1);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos),
                     lex[uniform_index(rng, lex.size())]);
      }
    }
    PostRecord r;
    r.id = std::to_string(i);
    r.user_id = std::to_string(1000000000000000000ULL + uniform_index(rng, 8000000000000000000ULL));
    r.message = text::join(words, " ");
    r.timestamp = 1577836800 + static_cast<std::int64_t>(uniform_index(rng, 31536000));
    r.num_like = static_cast<std::int64_t>(uniform_index(rng, 500));
    r.num_comment = static_cast<std::int64_t>(uniform_index(rng, 100));
    r.num_share = static_cast<std::int64_t>(uniform_index(rng, 50));
    r.label = labels[i];
    split.records.push_back(std::move(r));
  }
  return split;
}

}  // namespace newsrel::synthetic
