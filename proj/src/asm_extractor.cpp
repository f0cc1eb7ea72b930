#include "a2s/asm_extractor.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace a2s {

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

// Cursor over one directive's argument list.
struct ArgCursor {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  std::optional<long> read_int() {
    skip_ws();
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    std::size_t digits = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == digits || pos - digits > 9 ||
        (pos < text.size() && text[pos] != ' ' && text[pos] != '\t')) {
      pos = start;
      return std::nullopt;
    }
    return std::stol(std::string(text.substr(start, pos - start)));
  }
  // GAS-style quoted string with backslash escapes.
  std::optional<std::string> read_quoted() {
    skip_ws();
    if (pos >= text.size() || text[pos] != '"') return std::nullopt;
    std::string out;
    std::size_t i = pos + 1;
    while (i < text.size()) {
      char c = text[i];
      if (c == '\\' && i + 1 < text.size()) {
        char n = text[i + 1];
        switch (n) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '\\': out.push_back('\\'); break;
          case '"': out.push_back('"'); break;
          default: out.push_back(n); break;
        }
        i += 2;
        continue;
      }
      if (c == '"') {
        pos = i + 1;
        return out;
      }
      out.push_back(c);
      ++i;
    }
    return std::nullopt;  // unterminated
  }
};

bool is_label_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$' ||
         std::isdigit(static_cast<unsigned char>(c));
}

bool is_label_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '$';
}

// `.file N "path"` or the DWARF5 form `.file N "dir" "name" [md5 ...]`.
bool parse_file_directive(std::string_view args, AsmLine& out) {
  ArgCursor cur{args};
  auto index = cur.read_int();
  if (!index || *index < 0) return false;
  auto first = cur.read_quoted();
  if (!first) return false;
  std::string path = *first;
  if (auto second = cur.read_quoted()) {
    if (!second->empty() && (*second)[0] == '/') {
      path = *second;
    } else if (path.empty() || path.back() == '/') {
      path += *second;
    } else {
      path += "/" + *second;
    }
  }
  out.kind = AsmLineKind::FileDirective;
  out.file_index = static_cast<int>(*index);
  out.path = std::move(path);
  return true;
}

// `.loc file line [column] [options...]`.
bool parse_loc_directive(std::string_view args, AsmLine& out) {
  ArgCursor cur{args};
  auto file = cur.read_int();
  auto line = cur.read_int();
  if (!file || !line || *file < 0 || *line < 1) return false;
  auto column = cur.read_int();  // optional; trailing options ignored
  out.kind = AsmLineKind::LocDirective;
  out.file_index = static_cast<int>(*file);
  out.line = static_cast<int>(*line);
  out.column = column ? static_cast<int>(*column) : 0;
  return true;
}

AsmLine classify(std::string_view raw) {
  AsmLine out;
  out.raw = std::string(raw);
  std::string_view body = trim(raw);

  // Blank and full-line comments (# on x86 gas) carry nothing.
  if (body.empty() || body[0] == '#') {
    out.kind = AsmLineKind::Blank;
    return out;
  }

  if (body[0] == '.') {
    std::size_t name_end = 0;
    while (name_end < body.size() && body[name_end] != ' ' && body[name_end] != '\t' &&
           body[name_end] != ':') {
      ++name_end;
    }
    std::string_view name = body.substr(0, name_end);
    // A dot-led symbol can still be a label (.L2:).
    if (name_end < body.size() && body[name_end] == ':') {
      out.kind = AsmLineKind::Label;
      out.name = std::string(name);
      return out;
    }
    std::string_view args = body.substr(std::min(body.size(), name_end));
    if (name == ".cfi_startproc") {
      out.kind = AsmLineKind::CfiStartProc;
      return out;
    }
    if (name == ".cfi_endproc") {
      out.kind = AsmLineKind::CfiEndProc;
      return out;
    }
    if (name == ".file") {
      if (parse_file_directive(args, out)) return out;
      // `.file "name"` (no index) is the pre-DWARF logical-name form; it
      // does not join the file table but is a well-formed directive.
      ArgCursor cur{args};
      if (cur.read_quoted() && cur.done()) {
        out.kind = AsmLineKind::Directive;
        out.name = std::string(name);
        return out;
      }
      out.kind = AsmLineKind::Instruction;
      out.name = "malformed";
      return out;
    }
    if (name == ".loc") {
      if (parse_loc_directive(args, out)) return out;
      out.kind = AsmLineKind::Instruction;
      out.name = "malformed";
      return out;
    }
    out.kind = AsmLineKind::Directive;
    out.name = std::string(name);
    return out;
  }

  if (is_label_start(body[0])) {
    std::size_t i = 0;
    while (i < body.size() && is_label_char(body[i])) ++i;
    if (i < body.size() && body[i] == ':') {
      out.kind = AsmLineKind::Label;
      out.name = std::string(body.substr(0, i));
      return out;
    }
  }
  // Quoted labels ("odd name":) appear in hand-written assembly.
  if (body[0] == '"') {
    ArgCursor cur{body};
    if (auto quoted = cur.read_quoted()) {
      if (cur.pos < body.size() && body[cur.pos] == ':') {
        out.kind = AsmLineKind::Label;
        out.name = *quoted;
        return out;
      }
    }
  }

  out.kind = AsmLineKind::Instruction;
  return out;
}

}  // namespace

ParsedAsm parse_asm(std::string_view text) {
  ParsedAsm result;
  if (text.empty()) return result;
  std::size_t start = 0;
  while (true) {
    std::size_t nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    result.lines.push_back(classify(line));
    if (result.lines.back().name == "malformed") ++result.malformed_directives;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  // "a\n" is one line, not two: drop a final empty segment caused by a
  // trailing newline unless the input was empty.
  if (!text.empty() && text.back() == '\n') result.lines.pop_back();
  return result;
}

void ExtractDiagnostics::merge(const ExtractDiagnostics& o) {
  malformed_directives += o.malformed_directives;
  unbalanced_start += o.unbalanced_start;
  stray_endproc += o.stray_endproc;
  unknown_file_index += o.unknown_file_index;
  zero_loc_functions += o.zero_loc_functions;
  missing_source += o.missing_source;
  span_out_of_range += o.span_out_of_range;
  unreadable_asm += o.unreadable_asm;
}

std::size_t ExtractDiagnostics::total() const {
  return malformed_directives + unbalanced_start + stray_endproc + unknown_file_index +
         zero_loc_functions + missing_source + span_out_of_range + unreadable_asm;
}

namespace {

bool is_local_label(std::string_view name) { return name.rfind(".L", 0) == 0; }

RawFunction finish_function(const ParsedAsm& parsed, std::size_t window_begin,
                            std::size_t start_idx, std::size_t end_idx,
                            const std::map<int, std::string>& file_table,
                            ExtractDiagnostics& diag) {
  RawFunction fn;

  for (std::size_t i = start_idx; i-- > window_begin;) {
    const AsmLine& line = parsed.lines[i];
    if (line.kind == AsmLineKind::Label && !is_local_label(line.name)) {
      fn.label = line.name;
      break;
    }
  }

  for (std::size_t i = start_idx + 1; i < end_idx; ++i) {
    fn.asm_lines.push_back(parsed.lines[i].raw);
  }

  // Attribution window: prologue locs between the previous region and the
  // start marker belong to this function (the signature-line loc lives
  // there), plus everything up to the end marker.
  for (std::size_t i = window_begin; i < end_idx; ++i) {
    const AsmLine& line = parsed.lines[i];
    if (line.kind != AsmLineKind::LocDirective) continue;
    if (!file_table.contains(line.file_index)) {
      ++diag.unknown_file_index;
      continue;
    }
    fn.loc_refs.push_back({line.file_index, line.line});
  }

  if (fn.loc_refs.empty()) {
    fn.zero_loc = true;
    ++diag.zero_loc_functions;
    return fn;
  }

  std::map<int, std::size_t> votes;
  for (const auto& ref : fn.loc_refs) ++votes[ref.file_index];
  fn.multi_file = votes.size() > 1;
  int dominant = votes.begin()->first;
  std::size_t best = votes.begin()->second;
  for (const auto& [index, count] : votes) {
    if (count > best) {  // ties keep the lowest index: map iterates ascending
      dominant = index;
      best = count;
    }
  }
  fn.source_file = file_table.at(dominant);

  std::set<int> lines;
  for (const auto& ref : fn.loc_refs) {
    if (ref.file_index == dominant) lines.insert(ref.line);
  }
  fn.line_min = *lines.begin();
  fn.line_max = *lines.rbegin();
  fn.perforated =
      lines.size() != static_cast<std::size_t>(fn.line_max - fn.line_min + 1);
  return fn;
}

}  // namespace

std::vector<RawFunction> extract_functions(const ParsedAsm& parsed, ExtractDiagnostics& diag) {
  diag.malformed_directives += parsed.malformed_directives;

  // The file table is global to the unit; compilers emit .file before use.
  std::map<int, std::string> file_table;
  for (const auto& line : parsed.lines) {
    if (line.kind == AsmLineKind::FileDirective) {
      file_table.emplace(line.file_index, line.path);  // first definition wins
    }
  }

  std::vector<RawFunction> functions;
  std::optional<std::size_t> open_start;
  std::size_t window_begin = 0;
  for (std::size_t i = 0; i < parsed.lines.size(); ++i) {
    switch (parsed.lines[i].kind) {
      case AsmLineKind::CfiStartProc:
        if (open_start) {
          ++diag.unbalanced_start;  // previous start never closed; skip it
          window_begin = i;         // don't inherit the aborted body's locs
        }
        open_start = i;
        break;
      case AsmLineKind::CfiEndProc:
        if (!open_start) {
          ++diag.stray_endproc;
          window_begin = i + 1;
          break;
        }
        functions.push_back(
            finish_function(parsed, window_begin, *open_start, i, file_table, diag));
        open_start.reset();
        window_begin = i + 1;
        break;
      default:
        break;
    }
  }
  if (open_start) ++diag.unbalanced_start;
  return functions;
}

std::string resolve_source(const RawFunction& fn, const std::filesystem::path& root) {
  if (fn.source_file.empty()) {
    throw ResolveError(ResolveError::Reason::MissingSourceFile, "function has no source file");
  }
  std::filesystem::path path(fn.source_file);
  if (path.is_relative()) path = root / path;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ResolveError(ResolveError::Reason::MissingSourceFile,
                       "missing source file: " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);

  if (fn.line_min < 1 || static_cast<std::size_t>(fn.line_max) > lines.size()) {
    throw ResolveError(ResolveError::Reason::SpanOutOfRange,
                       "span " + std::to_string(fn.line_min) + ".." +
                           std::to_string(fn.line_max) + " exceeds " + path.string() + " (" +
                           std::to_string(lines.size()) + " lines)");
  }
  std::string out;
  for (int i = fn.line_min; i <= fn.line_max; ++i) {
    if (i > fn.line_min) out.push_back('\n');
    out += lines[static_cast<std::size_t>(i - 1)];
  }
  return out;
}

std::vector<ExtractedUnit> extract_tree(std::vector<std::filesystem::path> asm_files,
                                        int workers) {
  std::sort(asm_files.begin(), asm_files.end());
  std::vector<ExtractedUnit> units(asm_files.size());

  auto run = [&](std::size_t index) {
    ExtractedUnit& unit = units[index];
    unit.asm_path = asm_files[index];
    std::ifstream in(unit.asm_path, std::ios::binary);
    if (!in) {
      ++unit.diagnostics.unreadable_asm;
      return;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ParsedAsm parsed = parse_asm(buf.str());
    unit.functions = extract_functions(parsed, unit.diagnostics);
  };

  if (workers <= 1 || asm_files.size() <= 1) {
    for (std::size_t i = 0; i < asm_files.size(); ++i) run(i);
    return units;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= units.size()) return;
      run(i);
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(workers, static_cast<int>(asm_files.size()));
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return units;
}

}  // namespace a2s
