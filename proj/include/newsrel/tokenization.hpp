#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "newsrel/error.hpp"
#include "newsrel/text_util.hpp"

namespace newsrel {

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr int kNumReserved = 4;

// Dense token<->id map. Ids 0..3 are PAD, UNK, CLS, SEP.
class Vocabulary {
 public:
  Vocabulary() {
    for (auto t : {kPadToken, kUnkToken, kClsToken, kSepToken}) add(std::string(t));
  }

  // Returns the id of token, inserting it if absent.
  int add(const std::string& token) {
    auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  std::optional<int> find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  int id_or_unk(std::string_view token) const { return find(token).value_or(unk_id()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }

  static constexpr int pad_id() { return 0; }
  static constexpr int unk_id() { return 1; }
  static constexpr int cls_id() { return 2; }
  static constexpr int sep_id() { return 3; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

using MergePair = std::pair<std::string, std::string>;

struct SubwordModel {
  Vocabulary vocab;
  std::vector<MergePair> merges;  // application order
};

enum class TokenizerStrategy { whitespace, word_segment_then_subword, subword };

inline std::string_view to_string(TokenizerStrategy s) {
  switch (s) {
    case TokenizerStrategy::whitespace: return "whitespace";
    case TokenizerStrategy::word_segment_then_subword: return "word_segment_then_subword";
    case TokenizerStrategy::subword: return "subword";
  }
  return "?";
}

inline TokenizerStrategy parse_strategy(std::string_view s) {
  if (s == "whitespace") return TokenizerStrategy::whitespace;
  if (s == "word_segment_then_subword") return TokenizerStrategy::word_segment_then_subword;
  if (s == "subword") return TokenizerStrategy::subword;
  throw ConfigError("unknown tokenizer strategy '" + std::string(s) + "'");
}

struct TokenizerSpec {
  TokenizerStrategy strategy = TokenizerStrategy::subword;
  std::size_t vocab_size = 1000;
  std::size_t max_len = 512;

  void validate() const {
    if (max_len < 3) throw ConfigError("max_len must be at least 3 (CLS, one token, SEP)");
    if (vocab_size <= static_cast<std::size_t>(kNumReserved)) {
      throw ConfigError("vocab_size must exceed the reserved token count");
    }
  }
};

struct TokenizedExample {
  std::vector<int> token_ids;
  std::vector<std::uint8_t> attention_mask;
  std::size_t cls_index = 0;
  std::string original_id;

  // Number of leading mask-1 positions (padding is on the right).
  std::size_t length() const {
    return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
  }
};

// Greedy longest-match merging of syllables into lexicon words.
class WordSegmenter {
 public:
  WordSegmenter() = default;
  explicit WordSegmenter(const std::vector<std::string>& entries) {
    for (const auto& e : entries) {
      const auto syl = text::split_whitespace(e);
      if (syl.size() < 2) continue;
      entries_.insert(text::join(syl, " "));
      max_syllables_ = std::max(max_syllables_, syl.size());
    }
  }

  std::vector<std::string> segment(std::string_view input) const {
    const auto syl = text::split_whitespace(input);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < syl.size()) {
      std::size_t take = 1;
      for (std::size_t n = std::min(max_syllables_, syl.size() - i); n >= 2; --n) {
        std::string cand = syl[i];
        for (std::size_t k = 1; k < n; ++k) cand += " " + syl[i + k];
        if (entries_.count(cand)) {
          take = n;
          break;
        }
      }
      std::string word = syl[i];
      for (std::size_t k = 1; k < take; ++k) word += "_" + syl[i + k];
      out.push_back(std::move(word));
      i += take;
    }
    return out;
  }

  std::vector<std::string> entries() const { return {entries_.begin(), entries_.end()}; }
  bool empty() const { return entries_.empty(); }

 private:
  std::set<std::string> entries_;
  std::size_t max_syllables_ = 0;
};

inline std::vector<std::string> word_segment(std::string_view input, const WordSegmenter& seg) {
  return seg.segment(input);
}

namespace detail {

using Symbols = std::vector<std::string>;

inline void apply_merge(Symbols& word, const MergePair& m) {
  Symbols out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i + 1 < word.size() && word[i] == m.first && word[i + 1] == m.second) {
      out.push_back(word[i] + word[i + 1]);
      ++i;
    } else {
      out.push_back(word[i]);
    }
  }
  word = std::move(out);
}

}  // namespace detail

// Byte-pair-style merge learning over code points. Merges never cross
// whitespace. Highest pair frequency wins; ties go to the lexicographically
// smallest (left, right). The seed is accepted for interface symmetry with
// the other trainers; the procedure has no random choices.
inline SubwordModel train_subword(const std::vector<std::string>& corpus, std::size_t vocab_size,
                                  std::uint64_t /*seed*/ = 0) {
  if (corpus.empty()) throw ConfigError("train_subword: empty corpus");

  std::map<std::string, std::uint64_t> word_freq;
  for (const auto& t : corpus) {
    for (auto& w : text::split_whitespace(t)) ++word_freq[w];
  }
  std::vector<std::pair<detail::Symbols, std::uint64_t>> words;
  std::set<std::string> chars;
  for (const auto& [w, f] : word_freq) {
    auto sym = text::utf8_chars(w);
    chars.insert(sym.begin(), sym.end());
    words.emplace_back(std::move(sym), f);
  }

  SubwordModel model;
  if (vocab_size <= kNumReserved + chars.size()) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) + " leaves no room for merges over " +
                      std::to_string(chars.size()) + " distinct characters");
  }
  for (const auto& c : chars) model.vocab.add(c);

  while (model.vocab.size() < vocab_size) {
    std::map<MergePair, std::uint64_t> pair_freq;
    for (const auto& [sym, f] : words) {
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) pair_freq[{sym[i], sym[i + 1]}] += f;
    }
    if (pair_freq.empty()) break;
    // std::map iterates lexicographically, so the first maximum is the tie winner.
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const MergePair merge = best->first;
    model.merges.push_back(merge);
    model.vocab.add(merge.first + merge.second);
    for (auto& [sym, f] : words) detail::apply_merge(sym, merge);
  }
  return model;
}

// Vocabulary of whole whitespace tokens, most frequent first.
inline Vocabulary train_whitespace_vocab(const std::vector<std::string>& corpus, std::size_t vocab_size) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& t : corpus) {
    for (auto& w : text::split_whitespace(t)) ++freq[w];
  }
  std::vector<std::pair<std::string, std::uint64_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary vocab;
  for (const auto& [w, f] : items) {
    if (vocab.size() >= vocab_size) break;
    vocab.add(w);
  }
  return vocab;
}

// Text -> fixed-length id sequence under one of the three strategies.
class Tokenizer {
 public:
  Tokenizer() = default;
  Tokenizer(TokenizerSpec spec, Vocabulary vocab, std::vector<MergePair> merges = {},
            WordSegmenter segmenter = {})
      : spec_(spec), vocab_(std::move(vocab)), merges_(std::move(merges)), segmenter_(std::move(segmenter)) {
    spec_.validate();
    for (std::size_t i = 0; i < merges_.size(); ++i) merge_rank_.try_emplace(merges_[i], i);
  }

  static Tokenizer train(const TokenizerSpec& spec, const std::vector<std::string>& corpus,
                         std::uint64_t seed, WordSegmenter segmenter = {}) {
    spec.validate();
    switch (spec.strategy) {
      case TokenizerStrategy::whitespace:
        return Tokenizer(spec, train_whitespace_vocab(corpus, spec.vocab_size), {}, std::move(segmenter));
      case TokenizerStrategy::subword: {
        auto m = train_subword(corpus, spec.vocab_size, seed);
        return Tokenizer(spec, std::move(m.vocab), std::move(m.merges), std::move(segmenter));
      }
      case TokenizerStrategy::word_segment_then_subword: {
        std::vector<std::string> segmented;
        segmented.reserve(corpus.size());
        for (const auto& t : corpus) segmented.push_back(text::join(segmenter.segment(t), " "));
        auto m = train_subword(segmented, spec.vocab_size, seed);
        return Tokenizer(spec, std::move(m.vocab), std::move(m.merges), std::move(segmenter));
      }
    }
    throw ConfigError("unreachable tokenizer strategy");
  }

  // Surface units before id lookup.
  std::vector<std::string> units(std::string_view input) const {
    switch (spec_.strategy) {
      case TokenizerStrategy::whitespace:
        return text::split_whitespace(input);
      case TokenizerStrategy::subword:
        return subword_units(text::split_whitespace(input));
      case TokenizerStrategy::word_segment_then_subword:
        return subword_units(segmenter_.segment(input));
    }
    return {};
  }

  TokenizedExample encode(std::string_view input, std::string original_id = {}) const {
    const auto u = units(input);
    const std::size_t keep = std::min(u.size(), spec_.max_len - 2);
    TokenizedExample ex;
    ex.original_id = std::move(original_id);
    ex.token_ids.assign(spec_.max_len, Vocabulary::pad_id());
    ex.attention_mask.assign(spec_.max_len, 0);
    ex.token_ids[0] = Vocabulary::cls_id();
    for (std::size_t i = 0; i < keep; ++i) ex.token_ids[i + 1] = vocab_.id_or_unk(u[i]);
    ex.token_ids[keep + 1] = Vocabulary::sep_id();
    std::fill(ex.attention_mask.begin(), ex.attention_mask.begin() + static_cast<std::ptrdiff_t>(keep + 2), 1);
    return ex;
  }

  // Non-special tokens joined by single spaces.
  std::string decode(const TokenizedExample& ex) const {
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < ex.token_ids.size(); ++i) {
      const int id = ex.token_ids[i];
      if (!ex.attention_mask[i] || id < kNumReserved) continue;
      parts.push_back(vocab_.token(id));
    }
    return text::join(parts, " ");
  }

  const TokenizerSpec& spec() const { return spec_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<MergePair>& merges() const { return merges_; }
  const WordSegmenter& segmenter() const { return segmenter_; }

 private:
  std::vector<std::string> subword_units(const std::vector<std::string>& words) const {
    std::vector<std::string> out;
    for (const auto& w : words) {
      auto sym = text::utf8_chars(w);
      while (sym.size() > 1) {
        std::size_t best_rank = SIZE_MAX;
        for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
          auto it = merge_rank_.find({sym[i], sym[i + 1]});
          if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
        }
        if (best_rank == SIZE_MAX) break;
        detail::apply_merge(sym, merges_[best_rank]);
      }
      out.insert(out.end(), sym.begin(), sym.end());
    }
    return out;
  }

  TokenizerSpec spec_;
  Vocabulary vocab_;
  std::vector<MergePair> merges_;
  std::map<MergePair, std::size_t> merge_rank_;
  WordSegmenter segmenter_;
};

// ---- persistence: line-oriented text files ----

inline std::string format_vocabulary(const Vocabulary& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += v.token(static_cast<int>(i)) + "\t" + std::to_string(i) + "\n";
  return out;
}

inline Vocabulary parse_vocabulary(std::string_view content, const std::string& origin) {
  std::vector<std::pair<int, std::string>> entries;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    auto id = tab == std::string::npos ? std::nullopt : text::parse_int<int>(line.substr(tab + 1));
    if (!id) throw ParseError(origin + ":" + std::to_string(line_no) + ": expected token<TAB>id");
    entries.emplace_back(*id, line.substr(0, tab));
  }
  std::sort(entries.begin(), entries.end());
  Vocabulary v;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != static_cast<int>(i)) throw ParseError(origin + ": ids are not dense from 0");
    if (i < static_cast<std::size_t>(kNumReserved)) {
      if (entries[i].second != v.token(static_cast<int>(i))) {
        throw ParseError(origin + ": reserved token mismatch at id " + std::to_string(i));
      }
      continue;
    }
    if (v.add(entries[i].second) != static_cast<int>(i)) {
      throw ParseError(origin + ": duplicate token '" + entries[i].second + "'");
    }
  }
  if (v.size() < static_cast<std::size_t>(kNumReserved)) throw ParseError(origin + ": missing reserved tokens");
  return v;
}

inline std::string format_merges(const std::vector<MergePair>& merges) {
  std::string out;
  for (const auto& [a, b] : merges) out += a + " " + b + "\n";
  return out;
}

inline std::vector<MergePair> parse_merges(std::string_view content, const std::string& origin) {
  std::vector<MergePair> merges;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = text::split(line, ' ');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'left right'");
    }
    merges.emplace_back(parts[0], parts[1]);
  }
  return merges;
}

inline std::vector<std::string> parse_lexicon(std::string_view content) {
  std::vector<std::string> out;
  for (const auto& line : text::split(content, '\n')) {
    const auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline constexpr std::string_view kVocabFile = "vocab.txt";
inline constexpr std::string_view kMergesFile = "merges.txt";
inline constexpr std::string_view kLexiconFile = "lexicon.txt";

inline void save_tokenizer(const Tokenizer& tok, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  text::write_file((dir / kVocabFile).string(), format_vocabulary(tok.vocab()));
  text::write_file((dir / kMergesFile).string(), format_merges(tok.merges()));
  text::write_file((dir / kLexiconFile).string(), text::join(tok.segmenter().entries(), "\n") +
                                                      (tok.segmenter().empty() ? "" : "\n"));
}

inline Tokenizer load_tokenizer(const TokenizerSpec& spec, const std::filesystem::path& dir) {
  const auto vocab_path = dir / kVocabFile;
  if (!std::filesystem::exists(vocab_path)) {
    throw ConfigError("vocabulary file not found: " + vocab_path.string());
  }
  auto vocab = parse_vocabulary(text::read_file(vocab_path.string()), vocab_path.string());
  std::vector<MergePair> merges;
  if (spec.strategy != TokenizerStrategy::whitespace) {
    const auto merges_path = dir / kMergesFile;
    if (!std::filesystem::exists(merges_path)) {
      throw ConfigError("merge table not found: " + merges_path.string());
    }
    merges = parse_merges(text::read_file(merges_path.string()), merges_path.string());
  }
  WordSegmenter seg;
  if (std::filesystem::exists(dir / kLexiconFile)) {
    seg = WordSegmenter(parse_lexicon(text::read_file((dir / kLexiconFile).string())));
  }
  return Tokenizer(spec, std::move(vocab), std::move(merges), std::move(seg));
}

}  // namespace newsrel
