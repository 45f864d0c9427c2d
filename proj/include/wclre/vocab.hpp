#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "wclre/types.hpp"

namespace wclre {

// Word-level vocabulary with nine fixed special tokens at ids 0..8.
struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kHCls = 5;
  static constexpr int kHSep = 6;
  static constexpr int kTCls = 7;
  static constexpr int kTSep = 8;
  static constexpr int kNumSpecial = 9;

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  Vocabulary() {
    id_to_token = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
                   "[H_CLS]", "[H_SEP]", "[T_CLS]", "[T_SEP]"};
    for (int i = 0; i < kNumSpecial; ++i) token_to_id.emplace(id_to_token[i], i);
  }

  std::size_t size() const { return id_to_token.size(); }

  // Lowercased lookup; unknown tokens map to [UNK].
  int id(const std::string& token) const {
    auto it = token_to_id.find(to_lower(token));
    return it == token_to_id.end() ? kUnk : it->second;
  }

  static bool is_special_id(int id) { return id >= 0 && id < kNumSpecial; }

  // [UNK] stands in for a content word, so it stays maskable; the structural
  // specials and entity markers never are.
  static bool maskable_id(int id) { return id == kUnk || id >= kNumSpecial; }

  void add_token(const std::string& token) {
    token_to_id.emplace(token, static_cast<int>(id_to_token.size()));
    id_to_token.push_back(token);
  }
};

// Lowercased tokens with frequency >= min_freq, ordered by descending
// frequency then lexicographically, ids starting after the specials.
template <class TokenRange>
Vocabulary build_vocabulary(const TokenRange& corpus_tokens, std::size_t min_freq = 2) {
  if (min_freq < 1) throw data_error("min_freq must be >= 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& tok : corpus_tokens) ++freq[to_lower(tok)];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, f] : freq)
    if (f >= min_freq) kept.emplace_back(tok, f);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, f] : kept) v.add_token(tok);
  return v;
}

inline Vocabulary build_vocabulary_from_instances(const std::vector<Instance>& instances,
                                                  std::size_t min_freq = 2) {
  std::vector<std::string> all;
  for (const auto& inst : instances)
    all.insert(all.end(), inst.tokens.begin(), inst.tokens.end());
  return build_vocabulary(all, min_freq);
}

// One non-special token per line; line number equals id offset after specials.
inline void save_vocabulary(const Vocabulary& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write vocabulary file: " + path.string());
  for (std::size_t i = Vocabulary::kNumSpecial; i < v.id_to_token.size(); ++i)
    out << v.id_to_token[i] << '\n';
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open vocabulary file: " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) v.add_token(line);
  }
  return v;
}

}  // namespace wclre
