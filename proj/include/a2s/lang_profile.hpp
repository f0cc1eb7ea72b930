#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace a2s {

// One string-literal syntax. If `escape` is set, that character escapes the
// next one inside the literal (C-style). If `doubled_close_escapes` is set,
// a doubled close delimiter stands for a literal delimiter (Fortran-style).
struct StringDelim {
  std::string open;
  std::string close;
  std::optional<char> escape;
  bool doubled_close_escapes = false;
};

struct BlockCommentDelim {
  std::string open;
  std::string close;
};

// All the language-specific knowledge the pipeline is allowed to have.
// Adding a language means adding one of these values, no new code.
struct LanguageProfile {
  std::string name;
  std::vector<std::string> extensions;  // ".c", ".h", ...
  std::vector<std::string> line_comment_prefixes;
  std::vector<BlockCommentDelim> block_comment_delims;
  bool nested_block_comments = false;
  std::vector<StringDelim> string_delims;
  // Char literals are scanned (so a quote inside one does not open a string)
  // but their content is only rewritten when replace_char_literals is set.
  std::optional<StringDelim> char_literal;
  bool replace_char_literals = false;
};

struct PreprocessedSource {
  std::string text;
  int original_line_count = 0;
  int replaced_literals = 0;
  int removed_comment_spans = 0;
  bool suspect = false;  // unterminated string or comment
};

// Built-in profiles: c, go, fortran, ocaml.
const std::vector<LanguageProfile>& builtin_profiles();

// nullptr when not found. Extension lookup expects a leading dot (".f90").
const LanguageProfile* find_profile(std::string_view name);
const LanguageProfile* find_profile_by_extension(std::string_view ext);

// Scrub comments, rewrite string-literal content to STR, and normalize
// whitespace. Single pass; never parses the language.
PreprocessedSource preprocess(std::string_view src, const LanguageProfile& profile);

// Whitespace rule alone: collapse intra-line runs of spaces/tabs to one
// space and trim line edges. Newlines pass through.
std::string normalize_whitespace(std::string_view text);

}  // namespace a2s
