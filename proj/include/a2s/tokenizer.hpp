#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace a2s {

enum class TokenizerMode { Bpe, Char };
enum class CorpusSide { Source, Asm };

struct TokenSeq {
  std::vector<int> ids;
  CorpusSide side = CorpusSide::Source;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

// Subword tokenizer over raw bytes. BPE mode seeds the vocabulary with all
// 256 single bytes, so any byte-representable input encodes without UNK.
// Pre-tokenization: each whitespace byte starts a new pre-token and stays
// glued to the following word as its boundary marker; merges never cross
// pre-token boundaries. Tokens containing a digit are never merged, so any
// token with a digit is exactly that one digit.
class SubwordModel {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;

  // BPE: requires target_vocab > 260 (256 bytes + specials); merges the most
  // frequent adjacent pair until target_vocab is reached or no pair occurs
  // at least twice. Frequency ties break lexicographically on (left, right).
  // Char: vocabulary is the set of observed bytes; target_vocab is ignored.
  // Throws std::runtime_error on an empty corpus.
  static SubwordModel train(std::span<const std::string> corpus, int target_vocab,
                            TokenizerMode mode, CorpusSide side);

  TokenSeq encode(std::string_view text) const;
  // Throws std::out_of_range on an id outside the vocabulary.
  std::string decode(const TokenSeq& seq) const;

  void save(const std::filesystem::path& path) const;
  // Throws std::runtime_error on a corrupt or version-mismatched file.
  static SubwordModel load(const std::filesystem::path& path);

  TokenizerMode mode() const { return mode_; }
  CorpusSide side() const { return side_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }
  std::optional<int> token_id(std::string_view token) const;
  const std::string& token_string(int id) const;

  // Mean characters per token over a corpus; informational.
  double chars_per_token(std::span<const std::string> corpus) const;

 private:
  SubwordModel() = default;

  int intern(const std::string& token);  // existing id or new one

  TokenizerMode mode_ = TokenizerMode::Bpe;
  CorpusSide side_ = CorpusSide::Source;
  std::vector<std::string> vocab_;                // index = id
  std::vector<std::pair<int, int>> merges_;       // token-id pairs, training order
  std::vector<int> merge_result_ids_;             // parallel to merges_
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<int> byte_to_id_;                   // 256 entries; kUnk when unseen (Char)
};

}  // namespace a2s
