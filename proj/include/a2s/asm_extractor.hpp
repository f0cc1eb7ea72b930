#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace a2s {

enum class AsmLineKind {
  CfiStartProc,
  CfiEndProc,
  FileDirective,
  LocDirective,
  Label,
  Directive,
  Instruction,
  Blank,
};

// One classified line of a GNU-assembler-syntax file. Exactly one kind per
// line; the payload fields are meaningful only for the matching kind.
struct AsmLine {
  std::string raw;
  AsmLineKind kind = AsmLineKind::Blank;
  int file_index = -1;   // FileDirective, LocDirective
  std::string path;      // FileDirective (unescaped, dir-joined)
  int line = 0;          // LocDirective
  int column = 0;        // LocDirective
  std::string name;      // Label name / Directive name
};

struct ParsedAsm {
  std::vector<AsmLine> lines;
  std::size_t malformed_directives = 0;  // .file/.loc with unusable arguments
};

// Classify every line. Total: output size equals input line count. Never
// throws; unusable .file/.loc arguments downgrade to Instruction and are
// tallied in malformed_directives.
ParsedAsm parse_asm(std::string_view text);

struct LocRef {
  int file_index = 0;
  int line = 0;
};

struct RawFunction {
  std::string label;                   // nearest preceding non-local label
  std::vector<std::string> asm_lines;  // raw lines between the CFI markers
  std::vector<LocRef> loc_refs;        // refs with a known file index, in order
  std::string source_file;             // dominant file path; empty if zero_loc
  int line_min = 0;
  int line_max = 0;
  bool perforated = false;  // referenced lines don't cover [min,max]
  bool multi_file = false;  // refs span more than one file index
  bool zero_loc = false;
};

struct ExtractDiagnostics {
  std::size_t malformed_directives = 0;
  std::size_t unbalanced_start = 0;  // .cfi_startproc without an end; region skipped
  std::size_t stray_endproc = 0;     // .cfi_endproc with no open region
  std::size_t unknown_file_index = 0;
  std::size_t zero_loc_functions = 0;
  std::size_t missing_source = 0;
  std::size_t span_out_of_range = 0;
  std::size_t unreadable_asm = 0;

  void merge(const ExtractDiagnostics& other);
  std::size_t total() const;
};

// One RawFunction per balanced marker pair, in file order. Prologue .loc
// directives emitted between the previous function and this one's
// .cfi_startproc (compilers put the signature line there) count toward the
// span; only the lines between the markers become asm_lines.
std::vector<RawFunction> extract_functions(const ParsedAsm& parsed, ExtractDiagnostics& diag);

class ResolveError : public std::runtime_error {
 public:
  enum class Reason { MissingSourceFile, SpanOutOfRange };
  ResolveError(Reason r, const std::string& what) : std::runtime_error(what), reason(r) {}
  Reason reason;
};

// Lines [line_min, line_max] of the dominant source file, newline-joined.
// Relative paths resolve under root. Throws ResolveError.
std::string resolve_source(const RawFunction& fn, const std::filesystem::path& root);

struct ExtractedUnit {
  std::filesystem::path asm_path;
  std::vector<RawFunction> functions;
  ExtractDiagnostics diagnostics;
};

// Parse + extract many files, fanning out over `workers` threads. Results
// come back in input-path-sorted order regardless of worker count.
std::vector<ExtractedUnit> extract_tree(std::vector<std::filesystem::path> asm_files,
                                        int workers);

}  // namespace a2s
