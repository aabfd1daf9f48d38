#include <gtest/gtest.h>

#include <filesystem>

#include "newsrel/synthetic.hpp"
#include "newsrel/tokenization.hpp"
#include "oracles.hpp"

using namespace newsrel;

namespace {

std::vector<std::vector<std::string>> char_words(const std::vector<std::string>& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : corpus) {
    for (const auto& w : text::split_whitespace(t)) out.push_back(text::utf8_chars(w));
  }
  return out;
}

std::vector<std::string> small_corpus() {
  const auto s = synthetic::generate_synthetic_corpus(200, 0.5, 3);
  std::vector<std::string> out;
  for (const auto& r : s.records) out.push_back(*r.message);
  return out;
}

}  // namespace

TEST(Subword, FirstMergeIsMostFrequentPair) {
  const std::vector<std::string> corpus = {"aaab", "aab"};
  const auto m = train_subword(corpus, kNumReserved + 2 + 1);
  ASSERT_EQ(m.merges.size(), 1u);
  const auto expect = oracle::most_frequent_pair(char_words(corpus));
  EXPECT_EQ(m.merges[0], (MergePair{expect.first, expect.second}));
  EXPECT_EQ(m.merges[0], (MergePair{"a", "a"}));
}

TEST(Subword, FirstMergeMatchesOracleOnRandomCorpora) {
  auto rng = make_rng({21});
  const std::vector<std::string> alphabet = {"a", "b", "c", "ă", "đ"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> corpus;
    for (std::size_t i = 0, n = 1 + uniform_index(rng, 6); i < n; ++i) {
      std::string line;
      for (std::size_t j = 0, len = 1 + uniform_index(rng, 12); j < len; ++j) {
        line += uniform01(rng) < 0.2 ? " " : alphabet[uniform_index(rng, alphabet.size())];
      }
      corpus.push_back(line);
    }
    const auto words = char_words(corpus);
    bool has_pair = false;
    for (const auto& w : words) has_pair |= w.size() > 1;
    std::set<std::string> chars;
    for (const auto& w : words) chars.insert(w.begin(), w.end());
    if (!has_pair || chars.empty()) continue;
    const auto m = train_subword(corpus, kNumReserved + chars.size() + 1);
    ASSERT_EQ(m.merges.size(), 1u);
    const auto expect = oracle::most_frequent_pair(words);
    EXPECT_EQ(m.merges[0], (MergePair{expect.first, expect.second})) << "trial " << trial;
  }
}

TEST(Subword, SingleCharacterCorpusHasNoMerges) {
  const auto m = train_subword({"a"}, 100);
  EXPECT_TRUE(m.merges.empty());
  EXPECT_EQ(m.vocab.size(), static_cast<std::size_t>(kNumReserved + 1));
}

TEST(Subword, TooSmallVocabularyIsRejected) {
  EXPECT_THROW(train_subword({"abc"}, kNumReserved + 3), ConfigError);
  EXPECT_THROW(train_subword({}, 100), ConfigError);
}

TEST(Subword, DeterministicAcrossRuns) {
  const auto corpus = small_corpus();
  const auto a = train_subword(corpus, 300, 1);
  const auto b = train_subword(corpus, 300, 1);
  EXPECT_EQ(a.merges, b.merges);
  EXPECT_EQ(a.vocab, b.vocab);
  EXPECT_EQ(format_merges(a.merges), format_merges(b.merges));
}

TEST(Subword, MergesNeverCrossWhitespace) {
  const auto m = train_subword({"ab ab ab", "b a"}, 20);
  for (const auto& mp : m.merges) {
    EXPECT_EQ((mp.first + mp.second).find(' '), std::string::npos);
  }
}

TEST(Encode, EmptyTextIsClsSep) {
  for (auto strat : {TokenizerStrategy::whitespace, TokenizerStrategy::subword,
                     TokenizerStrategy::word_segment_then_subword}) {
    const auto tok = Tokenizer::train({strat, 300, 16}, small_corpus(), 1,
                                      WordSegmenter(synthetic::compound_words()));
    const auto ex = tok.encode("");
    EXPECT_EQ(ex.token_ids[0], Vocabulary::cls_id());
    EXPECT_EQ(ex.token_ids[1], Vocabulary::sep_id());
    EXPECT_EQ(ex.length(), 2u);
    for (std::size_t i = 2; i < 16; ++i) {
      EXPECT_EQ(ex.token_ids[i], Vocabulary::pad_id());
      EXPECT_EQ(ex.attention_mask[i], 0);
    }
  }
}

TEST(Encode, TruncatesToMaxLenWithSepLast) {
  std::vector<std::string> words;
  for (int i = 0; i < 600; ++i) words.push_back("w" + std::to_string(i));
  const auto text = text::join(words, " ");
  const auto tok = Tokenizer::train({TokenizerStrategy::whitespace, 1000, 512}, {text}, 1);
  ASSERT_EQ(tok.units(text).size(), 600u);
  const auto ex = tok.encode(text);
  ASSERT_EQ(ex.token_ids.size(), 512u);
  EXPECT_EQ(ex.token_ids[0], Vocabulary::cls_id());
  EXPECT_EQ(ex.token_ids[511], Vocabulary::sep_id());
  EXPECT_EQ(ex.length(), 512u);
  EXPECT_EQ(tok.vocab().token(ex.token_ids[510]), "w509");
}

TEST(Encode, MaskMatchesNonPadAndShapesAreFixed) {
  const auto corpus = small_corpus();
  const auto tok = Tokenizer::train({TokenizerStrategy::subword, 300, 32}, corpus, 1);
  for (const auto& t : corpus) {
    const auto ex = tok.encode(t);
    ASSERT_EQ(ex.token_ids.size(), 32u);
    ASSERT_EQ(ex.attention_mask.size(), 32u);
    for (std::size_t i = 0; i < 32; ++i) {
      EXPECT_EQ(ex.attention_mask[i] == 1, ex.token_ids[i] != Vocabulary::pad_id());
    }
  }
}

TEST(Encode, WhitespaceDecodeRoundTrip) {
  const auto corpus = small_corpus();
  const auto tok = Tokenizer::train({TokenizerStrategy::whitespace, 100000, 64}, corpus, 1);
  for (const auto& t : corpus) {
    EXPECT_EQ(tok.decode(tok.encode(t)), text::join(text::split_whitespace(t), " "));
  }
}

TEST(Encode, UnknownWordsMapToUnk) {
  const auto tok = Tokenizer::train({TokenizerStrategy::whitespace, 100, 8}, {"xin chào"}, 1);
  const auto ex = tok.encode("xin bạn");
  EXPECT_EQ(ex.token_ids[2], Vocabulary::unk_id());
}

TEST(Segmenter, GreedyLongestMatch) {
  const WordSegmenter seg({"xã hội", "xã hội chủ nghĩa", "tin tức"});
  EXPECT_EQ(word_segment("xã hội tin", seg), (std::vector<std::string>{"xã_hội", "tin"}));
  EXPECT_EQ(word_segment("xã hội chủ nghĩa tin tức", seg),
            (std::vector<std::string>{"xã_hội_chủ_nghĩa", "tin_tức"}));
  EXPECT_EQ(word_segment("", seg), std::vector<std::string>{});
  EXPECT_EQ(word_segment("a b", WordSegmenter{}), (std::vector<std::string>{"a", "b"}));
}

TEST(Segmenter, StrategiesProduceDifferentUnits) {
  const auto corpus = small_corpus();
  const WordSegmenter seg(synthetic::compound_words());
  const auto a = Tokenizer::train({TokenizerStrategy::subword, 300, 64}, corpus, 1, seg);
  const auto b = Tokenizer::train({TokenizerStrategy::word_segment_then_subword, 300, 64}, corpus, 1, seg);
  bool differ = false;
  for (const auto& t : corpus) differ |= a.units(t) != b.units(t);
  EXPECT_TRUE(differ);
}

TEST(TokenizerSpec, Validation) {
  EXPECT_THROW((TokenizerSpec{TokenizerStrategy::subword, 1000, 2}.validate()), ConfigError);
  EXPECT_THROW(parse_strategy("bpe"), ConfigError);
  EXPECT_EQ(parse_strategy("word_segment_then_subword"), TokenizerStrategy::word_segment_then_subword);
}

TEST(Persistence, SaveLoadReproducesEncoding) {
  const auto dir = std::filesystem::temp_directory_path() / "newsrel_tok_rt";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto corpus = small_corpus();
  const TokenizerSpec spec{TokenizerStrategy::word_segment_then_subword, 300, 48};
  const auto tok = Tokenizer::train(spec, corpus, 1, WordSegmenter(synthetic::compound_words()));
  save_tokenizer(tok, dir);
  const auto back = load_tokenizer(spec, dir);
  EXPECT_EQ(back.vocab(), tok.vocab());
  EXPECT_EQ(back.merges(), tok.merges());
  for (const auto& t : corpus) EXPECT_EQ(back.encode(t).token_ids, tok.encode(t).token_ids);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_tokenizer(spec, dir), ConfigError);
}

TEST(Persistence, MalformedFilesAreParseErrors) {
  EXPECT_THROW(parse_merges("onlyone\n", "m"), ParseError);
  EXPECT_THROW(parse_vocabulary("x\tnotanumber\n", "v"), ParseError);
}
