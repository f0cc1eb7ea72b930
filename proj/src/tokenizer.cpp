#include "a2s/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace a2s {

namespace {

using json = nlohmann::ordered_json;

bool is_ws_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool has_digit(std::string_view token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

// Split into pre-tokens: a whitespace byte always starts a new pre-token and
// is kept as its first byte, so decoding is plain concatenation.
std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    if (is_ws_byte(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !is_ws_byte(static_cast<unsigned char>(text[i]))) ++i;
    words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::uint64_t pair_key(int left, int right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

// Byte <-> printable codepoint mapping for the model file: printable ASCII
// and upper Latin-1 stay themselves, everything else shifts into a private
// range starting at U+0100 (so a space shows up as "Ġ"-style markers do).
const std::array<std::uint32_t, 256>& byte_to_codepoint() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    std::uint32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      bool printable = (b >= 0x21 && b <= 0x7E) || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
      t[static_cast<std::size_t>(b)] = printable ? static_cast<std::uint32_t>(b) : next++;
    }
    return t;
  }();
  return table;
}

const std::unordered_map<std::uint32_t, unsigned char>& codepoint_to_byte() {
  static const std::unordered_map<std::uint32_t, unsigned char> inverse = [] {
    std::unordered_map<std::uint32_t, unsigned char> m;
    const auto& fwd = byte_to_codepoint();
    for (int b = 0; b < 256; ++b) m[fwd[static_cast<std::size_t>(b)]] = static_cast<unsigned char>(b);
    return m;
  }();
  return inverse;
}

void append_utf8(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string token_display(std::string_view raw) {
  std::string out;
  for (unsigned char c : raw) append_utf8(byte_to_codepoint()[c], out);
  return out;
}

std::string token_from_display(std::string_view display) {
  std::string out;
  std::size_t i = 0;
  while (i < display.size()) {
    unsigned char c = display[i];
    std::uint32_t cp = 0;
    if (c < 0x80) {
      cp = c;
      i += 1;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < display.size()) {
      cp = (static_cast<std::uint32_t>(c & 0x1F) << 6) |
           (static_cast<std::uint32_t>(display[i + 1]) & 0x3F);
      i += 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < display.size()) {
      cp = (static_cast<std::uint32_t>(c & 0x0F) << 12) |
           ((static_cast<std::uint32_t>(display[i + 1]) & 0x3F) << 6) |
           (static_cast<std::uint32_t>(display[i + 2]) & 0x3F);
      i += 3;
    } else {
      throw std::runtime_error("tokenizer model: invalid token encoding");
    }
    auto it = codepoint_to_byte().find(cp);
    if (it == codepoint_to_byte().end()) {
      throw std::runtime_error("tokenizer model: invalid token encoding");
    }
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

const std::array<const char*, 4> kSpecialNames = {"<pad>", "<unk>", "<bos>", "<eos>"};

}  // namespace

int SubwordModel::intern(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = static_cast<int>(vocab_.size());
  vocab_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

SubwordModel SubwordModel::train(std::span<const std::string> corpus, int target_vocab,
                                 TokenizerMode mode, CorpusSide side) {
  SubwordModel m;
  m.mode_ = mode;
  m.side_ = side;
  for (const char* s : kSpecialNames) m.intern(s);
  m.byte_to_id_.assign(256, kUnk);

  // Pre-token frequencies over the whole corpus.
  std::map<std::string, long long> word_counts;
  for (const auto& doc : corpus) {
    for (auto w : pretokenize(doc)) ++word_counts[std::string(w)];
  }
  if (word_counts.empty()) throw std::runtime_error("EmptyCorpus: no tokens to train on");

  if (mode == TokenizerMode::Char) {
    std::set<unsigned char> seen;
    for (const auto& [w, cnt] : word_counts) {
      for (unsigned char c : w) seen.insert(c);
    }
    for (unsigned char c : seen) {
      int id = m.intern(std::string(1, static_cast<char>(c)));
      m.byte_to_id_[c] = id;
    }
    return m;
  }

  if (target_vocab <= 260) {
    throw std::invalid_argument("target_vocab must exceed 260 in BPE mode");
  }
  for (int b = 0; b < 256; ++b) {
    int id = m.intern(std::string(1, static_cast<char>(b)));
    m.byte_to_id_[static_cast<std::size_t>(b)] = id;
  }

  struct Word {
    std::vector<int> symbols;
    long long count;
  };
  std::vector<Word> words;
  words.reserve(word_counts.size());
  for (const auto& [w, cnt] : word_counts) {
    Word word;
    word.count = cnt;
    word.symbols.reserve(w.size());
    for (unsigned char c : w) word.symbols.push_back(m.byte_to_id_[c]);
    words.push_back(std::move(word));
  }

  std::unordered_map<std::uint64_t, long long> pair_counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
  auto add_word_pairs = [&](std::size_t wi, long long sign) {
    const auto& s = words[wi].symbols;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      std::uint64_t key = pair_key(s[i], s[i + 1]);
      long long& c = pair_counts[key];
      c += sign * words[wi].count;
      if (c <= 0) {
        pair_counts.erase(key);
      } else if (sign > 0) {
        where[key].push_back(static_cast<std::uint32_t>(wi));
      }
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) add_word_pairs(wi, +1);

  while (m.vocab_size() < target_vocab) {
    // Best pair: highest count, ties broken lexicographically by the token
    // strings. Pairs touching a digit are never candidates.
    bool found = false;
    long long best_count = 0;
    int best_l = 0, best_r = 0;
    for (const auto& [key, count] : pair_counts) {
      if (count < 2) continue;
      int l = static_cast<int>(key >> 32);
      int r = static_cast<int>(key & 0xFFFFFFFF);
      if (has_digit(m.vocab_[l]) || has_digit(m.vocab_[r])) continue;
      if (!found || count > best_count ||
          (count == best_count &&
           (m.vocab_[l] < m.vocab_[best_l] ||
            (m.vocab_[l] == m.vocab_[best_l] && m.vocab_[r] < m.vocab_[best_r])))) {
        found = true;
        best_count = count;
        best_l = l;
        best_r = r;
      }
    }
    if (!found) break;

    int merged_id = m.intern(m.vocab_[best_l] + m.vocab_[best_r]);
    m.merges_.emplace_back(best_l, best_r);
    m.merge_result_ids_.push_back(merged_id);

    std::uint64_t key = pair_key(best_l, best_r);
    auto occ_it = where.find(key);
    if (occ_it == where.end()) break;  // unreachable: count >= 2
    std::vector<std::uint32_t> occurrences = std::move(occ_it->second);
    std::sort(occurrences.begin(), occurrences.end());
    occurrences.erase(std::unique(occurrences.begin(), occurrences.end()), occurrences.end());
    for (std::uint32_t wi : occurrences) {
      auto& s = words[wi].symbols;
      bool contains = false;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == best_l && s[i + 1] == best_r) {
          contains = true;
          break;
        }
      }
      if (!contains) continue;  // stale occurrence entry
      add_word_pairs(wi, -1);
      std::vector<int> merged;
      merged.reserve(s.size());
      std::size_t i = 0;
      while (i < s.size()) {
        if (i + 1 < s.size() && s[i] == best_l && s[i + 1] == best_r) {
          merged.push_back(merged_id);
          i += 2;
        } else {
          merged.push_back(s[i]);
          ++i;
        }
      }
      s = std::move(merged);
      add_word_pairs(wi, +1);
    }
  }
  return m;
}

TokenSeq SubwordModel::encode(std::string_view text) const {
  TokenSeq seq;
  seq.side = side_;
  if (mode_ == TokenizerMode::Char) {
    seq.ids.reserve(text.size());
    for (unsigned char c : text) seq.ids.push_back(byte_to_id_[c]);
    return seq;
  }

  std::vector<int> word;
  std::unordered_set<std::uint64_t> present;
  auto rebuild_present = [&] {
    present.clear();
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      present.insert(pair_key(word[i], word[i + 1]));
    }
  };

  for (auto pre : pretokenize(text)) {
    word.clear();
    word.reserve(pre.size());
    for (unsigned char c : pre) word.push_back(byte_to_id_[c]);
    rebuild_present();

    // Apply merges in training order; each one replaces its occurrences left
    // to right. The presence set only short-circuits merges that cannot fire.
    for (std::size_t r = 0; r < merges_.size() && word.size() > 1; ++r) {
      const auto [l, rgt] = merges_[r];
      if (!present.contains(pair_key(l, rgt))) continue;
      int merged_id = merge_result_ids_[r];
      std::vector<int> next;
      next.reserve(word.size());
      std::size_t i = 0;
      while (i < word.size()) {
        if (i + 1 < word.size() && word[i] == l && word[i + 1] == rgt) {
          next.push_back(merged_id);
          i += 2;
        } else {
          next.push_back(word[i]);
          ++i;
        }
      }
      word = std::move(next);
      rebuild_present();
    }
    seq.ids.insert(seq.ids.end(), word.begin(), word.end());
  }
  return seq;
}

std::string SubwordModel::decode(const TokenSeq& seq) const {
  std::string out;
  for (int id : seq.ids) {
    if (id < 0 || id >= vocab_size()) {
      throw std::out_of_range("InvalidId: token id " + std::to_string(id) +
                              " outside vocabulary of size " + std::to_string(vocab_size()));
    }
    if (id < kNumSpecials) continue;
    out += vocab_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::optional<int> SubwordModel::token_id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& SubwordModel::token_string(int id) const {
  return vocab_.at(static_cast<std::size_t>(id));
}

double SubwordModel::chars_per_token(std::span<const std::string> corpus) const {
  long long chars = 0, tokens = 0;
  for (const auto& doc : corpus) {
    chars += static_cast<long long>(doc.size());
    tokens += static_cast<long long>(encode(doc).ids.size());
  }
  return tokens == 0 ? 0.0 : static_cast<double>(chars) / static_cast<double>(tokens);
}

void SubwordModel::save(const std::filesystem::path& path) const {
  json doc;
  doc["format"] = "a2s-subword-model";
  doc["version"] = 1;
  doc["mode"] = mode_ == TokenizerMode::Bpe ? "bpe" : "char";
  doc["side"] = side_ == CorpusSide::Source ? "source" : "asm";
  doc["specials"] = {kSpecialNames[0], kSpecialNames[1], kSpecialNames[2], kSpecialNames[3]};
  json vocab = json::array();
  for (std::size_t id = 0; id < vocab_.size(); ++id) {
    vocab.push_back(id < kNumSpecials ? std::string(vocab_[id]) : token_display(vocab_[id]));
  }
  doc["vocab"] = std::move(vocab);
  json merges = json::array();
  for (const auto& [l, r] : merges_) {
    merges.push_back({token_display(vocab_[static_cast<std::size_t>(l)]),
                      token_display(vocab_[static_cast<std::size_t>(r)])});
  }
  doc["merges"] = std::move(merges);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tokenizer model: " + path.string());
  out << doc.dump(1, '\t') << "\n";
}

SubwordModel SubwordModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read tokenizer model: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt tokenizer model " + path.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "a2s-subword-model" || doc.value("version", 0) != 1) {
    throw std::runtime_error("tokenizer model version mismatch: " + path.string());
  }

  SubwordModel m;
  m.mode_ = doc.at("mode") == "bpe" ? TokenizerMode::Bpe : TokenizerMode::Char;
  m.side_ = doc.at("side") == "source" ? CorpusSide::Source : CorpusSide::Asm;
  m.byte_to_id_.assign(256, kUnk);

  const auto& vocab = doc.at("vocab");
  if (vocab.size() < kNumSpecials) throw std::runtime_error("corrupt tokenizer model: vocab too small");
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    std::string token = id < kNumSpecials ? vocab[id].get<std::string>()
                                          : token_from_display(vocab[id].get<std::string>());
    if (id < kNumSpecials && token != kSpecialNames[id]) {
      throw std::runtime_error("corrupt tokenizer model: special tokens out of place");
    }
    if (m.token_to_id_.contains(token)) {
      throw std::runtime_error("corrupt tokenizer model: duplicate token");
    }
    m.intern(token);
    if (id >= kNumSpecials && token.size() == 1) {
      m.byte_to_id_[static_cast<unsigned char>(token[0])] = static_cast<int>(id);
    }
  }
  for (const auto& entry : doc.at("merges")) {
    std::string l = token_from_display(entry.at(0).get<std::string>());
    std::string r = token_from_display(entry.at(1).get<std::string>());
    auto li = m.token_id(l), ri = m.token_id(r), mi = m.token_id(l + r);
    if (!li || !ri || !mi) throw std::runtime_error("corrupt tokenizer model: merge references unknown token");
    m.merges_.emplace_back(*li, *ri);
    m.merge_result_ids_.push_back(*mi);
  }
  if (m.mode_ == TokenizerMode::Bpe) {
    for (int b = 0; b < 256; ++b) {
      if (m.byte_to_id_[static_cast<std::size_t>(b)] == kUnk) {
        throw std::runtime_error("corrupt tokenizer model: missing byte token");
      }
    }
  }
  return m;
}

}  // namespace a2s
