#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newsrel/error.hpp"
#include "newsrel/random.hpp"
#include "newsrel/tensor.hpp"
#include "newsrel/text_util.hpp"

namespace newsrel {

enum class OovPolicy { zeros, random_normal };

// Frozen word vectors in word2vec text layout.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 0) : dim_(dimension) {}

  void set_oov_policy(OovPolicy p, std::uint64_t seed = 0) {
    oov_ = p;
    oov_seed_ = seed;
  }
  OovPolicy oov_policy() const { return oov_; }

  void add(const std::string& word, std::vector<double> vec) {
    if (vec.size() != dim_) throw ConfigError("embedding for '" + word + "' has wrong dimension");
    auto [it, inserted] = index_.try_emplace(word, words_.size());
    if (inserted) {
      words_.push_back(word);
      vectors_.push_back(std::move(vec));
    } else {
      vectors_[it->second] = std::move(vec);
    }
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view w) const { return index_.count(std::string(w)) > 0; }
  const std::vector<std::string>& words() const { return words_; }

  const std::vector<double>* find(std::string_view w) const {
    auto it = index_.find(std::string(w));
    return it == index_.end() ? nullptr : &vectors_[it->second];
  }

  // Stored vector, or the OOV vector. Random OOV vectors are a pure function
  // of (seed, word), so repeated lookups agree.
  std::vector<double> lookup(std::string_view w) const {
    if (const auto* v = find(w)) return *v;
    std::vector<double> out(dim_, 0.0);
    if (oov_ == OovPolicy::random_normal) {
      auto rng = make_rng({oov_seed_, text::fnv1a(w)});
      for (auto& x : out) x = standard_normal(rng);
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<std::vector<double>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
  OovPolicy oov_ = OovPolicy::zeros;
  std::uint64_t oov_seed_ = 0;
};

inline EmbeddingTable parse_vectors(std::string_view content, const std::string& origin) {
  const auto lines = text::split(content, '\n');
  std::size_t line_no = 0;
  std::optional<EmbeddingTable> table;
  std::size_t declared = 0;
  for (const auto& raw : lines) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    const auto parts = text::split_whitespace(line);
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (!table) {
      auto count = parts.size() == 2 ? text::parse_int<std::size_t>(parts[0]) : std::nullopt;
      auto dim = parts.size() == 2 ? text::parse_int<std::size_t>(parts[1]) : std::nullopt;
      if (!count || !dim) throw ParseError(where() + "expected header 'count dim'");
      table.emplace(*dim);
      declared = *count;
      continue;
    }
    if (parts.size() != table->dimension() + 1) {
      throw ParseError(where() + "expected " + std::to_string(table->dimension()) + " values, found " +
                       std::to_string(parts.size() - 1));
    }
    std::vector<double> vec(table->dimension());
    for (std::size_t k = 0; k < vec.size(); ++k) {
      auto v = text::parse_double(parts[k + 1]);
      if (!v || !std::isfinite(*v)) throw ParseError(where() + "non-finite or malformed value '" + parts[k + 1] + "'");
      vec[k] = *v;
    }
    table->add(parts[0], std::move(vec));
  }
  if (!table) throw ParseError(origin + ": empty vectors file");
  if (table->size() != declared) {
    throw ParseError(origin + ": header declares " + std::to_string(declared) + " rows, found " +
                     std::to_string(table->size()));
  }
  return std::move(*table);
}

inline EmbeddingTable load_vectors(const std::string& path) {
  return parse_vectors(text::read_file(path), path);
}

inline std::string format_vectors(const EmbeddingTable& table) {
  std::string out = std::to_string(table.size()) + " " + std::to_string(table.dimension()) + "\n";
  char buf[64];
  for (const auto& w : table.words()) {
    out += w;
    for (double v : *table.find(w)) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

// Random "pretrained" vectors for a known word list, seeded.
inline EmbeddingTable random_vectors(const std::vector<std::string>& words, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable t(dim);
  auto rng = make_rng({seed, 0x766563ULL});
  for (const auto& w : words) {
    std::vector<double> v(dim);
    for (auto& x : v) x = standard_normal(rng);
    t.add(w, std::move(v));
  }
  return t;
}

// max_len x dimension; tokens beyond max_len are dropped, padding rows are zero.
inline Matrix embed_sequence(const std::vector<std::string>& tokens, const EmbeddingTable& table,
                             std::size_t max_len) {
  Matrix m(max_len, table.dimension());
  const std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = table.lookup(tokens[i]);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace newsrel
