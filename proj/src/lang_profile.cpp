#include "a2s/lang_profile.hpp"

#include <algorithm>
#include <cctype>

namespace a2s {

const std::vector<LanguageProfile>& builtin_profiles() {
  static const std::vector<LanguageProfile> profiles = [] {
    std::vector<LanguageProfile> p;

    LanguageProfile c;
    c.name = "c";
    c.extensions = {".c", ".h"};
    c.line_comment_prefixes = {"//"};
    c.block_comment_delims = {{"/*", "*/"}};
    c.string_delims = {{"\"", "\"", '\\', false}};
    c.char_literal = StringDelim{"'", "'", '\\', false};
    p.push_back(std::move(c));

    LanguageProfile go;
    go.name = "go";
    go.extensions = {".go"};
    go.line_comment_prefixes = {"//"};
    go.block_comment_delims = {{"/*", "*/"}};
    go.string_delims = {{"\"", "\"", '\\', false},
                        {"`", "`", std::nullopt, false}};  // raw strings
    go.char_literal = StringDelim{"'", "'", '\\', false};
    p.push_back(std::move(go));

    LanguageProfile fortran;
    fortran.name = "fortran";
    fortran.extensions = {".f90", ".f95", ".f03", ".f08"};
    fortran.line_comment_prefixes = {"!"};
    fortran.string_delims = {{"'", "'", std::nullopt, true},
                             {"\"", "\"", std::nullopt, true}};
    p.push_back(std::move(fortran));

    LanguageProfile ocaml;
    ocaml.name = "ocaml";
    ocaml.extensions = {".ml", ".mli"};
    ocaml.block_comment_delims = {{"(*", "*)"}};
    ocaml.nested_block_comments = true;
    ocaml.string_delims = {{"\"", "\"", '\\', false}};
    // No char-literal scanning: a lone ' is a type variable or part of an
    // identifier far more often than a char literal.
    p.push_back(std::move(ocaml));

    return p;
  }();
  return profiles;
}

const LanguageProfile* find_profile(std::string_view name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const LanguageProfile* find_profile_by_extension(std::string_view ext) {
  for (const auto& p : builtin_profiles()) {
    if (std::find(p.extensions.begin(), p.extensions.end(), ext) != p.extensions.end()) {
      return &p;
    }
  }
  return nullptr;
}

namespace {

bool starts_with_at(std::string_view text, std::size_t pos, std::string_view token) {
  return token.size() > 0 && text.compare(pos, token.size(), token) == 0;
}

// Scanner intermediate: comments dropped, string contents rewritten to STR.
// Newlines inside block comments survive so line structure is kept, and
// every output line a comment touched is marked so empty leftovers can be
// dropped later.
struct ScanResult {
  std::string text;
  std::vector<bool> comment_removed_on_line;
  int replaced_literals = 0;
  int removed_comment_spans = 0;
  bool suspect = false;
};

// Char literals are matched with a bounded lookahead instead of real string
// state: `'` opens one only if a close appears within a short window on the
// same line. Keeps `int a = '"';` from opening a string without misreading
// ordinary quotes elsewhere.
std::size_t match_char_literal(std::string_view src, std::size_t pos, const StringDelim& d) {
  if (!starts_with_at(src, pos, d.open)) return 0;
  std::size_t i = pos + d.open.size();
  const std::size_t window_end = std::min(src.size(), i + 12);
  bool first = true;
  while (i < window_end) {
    char c = src[i];
    if (c == '\n') return 0;
    if (!first && starts_with_at(src, i, d.close)) return i + d.close.size() - pos;
    if (d.escape && c == *d.escape) {
      i += 2;
    } else {
      ++i;
    }
    first = false;
  }
  return 0;
}

class Scanner {
 public:
  Scanner(std::string_view src, const LanguageProfile& profile)
      : src_(src), profile_(profile) {}

  ScanResult run() {
    const std::size_t n = src_.size();
    std::size_t i = 0;
    while (i < n) {
      if (consume_line_comment(i)) continue;
      if (consume_block_comment(i)) continue;
      if (consume_string(i)) continue;
      if (consume_char_literal(i)) continue;
      emit(src_[i]);
      ++i;
    }
    return std::move(out_);
  }

 private:
  void emit(char c) {
    out_.text.push_back(c);
    if (c == '\n') ++line_;
  }

  void mark_comment_line() {
    if (out_.comment_removed_on_line.size() <= line_) {
      out_.comment_removed_on_line.resize(line_ + 1, false);
    }
    out_.comment_removed_on_line[line_] = true;
  }

  bool consume_line_comment(std::size_t& i) {
    for (const auto& prefix : profile_.line_comment_prefixes) {
      if (starts_with_at(src_, i, prefix)) {
        while (i < src_.size() && src_[i] != '\n') ++i;
        mark_comment_line();
        ++out_.removed_comment_spans;
        return true;
      }
    }
    return false;
  }

  bool consume_block_comment(std::size_t& i) {
    for (const auto& delim : profile_.block_comment_delims) {
      if (!starts_with_at(src_, i, delim.open)) continue;
      int depth = 1;
      i += delim.open.size();
      mark_comment_line();
      while (i < src_.size() && depth > 0) {
        if (profile_.nested_block_comments && starts_with_at(src_, i, delim.open)) {
          ++depth;
          i += delim.open.size();
        } else if (starts_with_at(src_, i, delim.close)) {
          --depth;
          i += delim.close.size();
        } else {
          if (src_[i] == '\n') {
            emit('\n');
            mark_comment_line();
          }
          ++i;
        }
      }
      if (depth > 0) out_.suspect = true;  // unterminated comment
      out_.text.push_back(' ');            // keep neighbors apart
      ++out_.removed_comment_spans;
      return true;
    }
    return false;
  }

  bool consume_string(std::size_t& i) {
    for (const auto& delim : profile_.string_delims) {
      if (!starts_with_at(src_, i, delim.open)) continue;
      i += delim.open.size();
      bool closed = false;
      while (i < src_.size()) {
        if (delim.escape && src_[i] == *delim.escape) {
          i += 2;
          continue;
        }
        if (starts_with_at(src_, i, delim.close)) {
          if (delim.doubled_close_escapes &&
              starts_with_at(src_, i + delim.close.size(), delim.close)) {
            i += 2 * delim.close.size();
            continue;
          }
          i += delim.close.size();
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) out_.suspect = true;
      out_.text += delim.open;
      out_.text += "STR";
      out_.text += delim.close;
      ++out_.replaced_literals;
      return true;
    }
    return false;
  }

  bool consume_char_literal(std::size_t& i) {
    if (!profile_.char_literal) return false;
    std::size_t len = match_char_literal(src_, i, *profile_.char_literal);
    if (len == 0) return false;
    if (profile_.replace_char_literals) {
      out_.text += profile_.char_literal->open;
      out_.text += "STR";
      out_.text += profile_.char_literal->close;
      ++out_.replaced_literals;
    } else {
      out_.text += src_.substr(i, len);
    }
    i += len;
    return true;
  }

  std::string_view src_;
  const LanguageProfile& profile_;
  ScanResult out_;
  std::size_t line_ = 0;
};

void append_normalized_line(std::string_view line, std::string& out) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  std::size_t begin = 0, end = line.size();
  while (begin < end && is_ws(line[begin])) ++begin;
  while (end > begin && is_ws(line[end - 1])) --end;
  bool pending_space = false;
  for (std::size_t i = begin; i < end; ++i) {
    char c = line[i];
    if (is_ws(c)) {
      pending_space = true;
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (true) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(
        start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    append_normalized_line(line, out);
    if (nl == std::string_view::npos) break;
    out.push_back('\n');
    start = nl + 1;
  }
  return out;
}

PreprocessedSource preprocess(std::string_view src, const LanguageProfile& profile) {
  PreprocessedSource result;
  result.original_line_count =
      static_cast<int>(std::count(src.begin(), src.end(), '\n')) +
      ((!src.empty() && src.back() != '\n') ? 1 : 0);

  ScanResult scanned = Scanner(src, profile).run();
  result.replaced_literals = scanned.replaced_literals;
  result.removed_comment_spans = scanned.removed_comment_spans;
  result.suspect = scanned.suspect;

  // Collapse whitespace per line. A line left empty is dropped only when a
  // comment was removed from it; lines blank in the input stay.
  std::string out;
  out.reserve(scanned.text.size());
  std::size_t pos = 0, line_idx = 0;
  bool first_kept = true;
  while (true) {
    std::size_t nl = scanned.text.find('\n', pos);
    std::string_view line =
        std::string_view(scanned.text)
            .substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    std::string norm;
    append_normalized_line(line, norm);
    bool comment_here = line_idx < scanned.comment_removed_on_line.size() &&
                        scanned.comment_removed_on_line[line_idx];
    if (!norm.empty() || !comment_here) {
      if (!first_kept) out.push_back('\n');
      out += norm;
      first_kept = false;
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
    ++line_idx;
  }

  result.text = std::move(out);
  return result;
}

}  // namespace a2s
