#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "a2s/tokenizer.hpp"

namespace a2s {

struct Provenance {
  std::string asm_path;
  std::string function_label;
  std::string source_path;
  int line_min = 0;
  int line_max = 0;
};

struct PairFlags {
  bool perforated = false;
  bool multi_file = false;
  bool zero_loc = false;
  bool suspect = false;
};

// One aligned (assembly, preprocessed source) training sample.
struct FunctionPair {
  std::string id;  // stable hash of (asm_text, source_text)
  std::string language;
  std::string asm_text;
  std::string source_text;
  int src_tokens = 0;
  int asm_tokens = 0;
  Provenance provenance;
  PairFlags flags;
};

// FNV-1a over the two texts, hex; identical texts collide on purpose.
std::string pair_id(std::string_view asm_text, std::string_view source_text);

struct SplitSpec {
  double test_fraction = 0.1;
  std::uint64_t seed = 1;
};

// Flags whose carriers are excluded from a built dataset.
struct FlagPolicy {
  bool drop_perforated = false;
  bool drop_multi_file = true;
  bool drop_zero_loc = true;
  bool drop_suspect = true;

  std::vector<std::string> excluded() const;
  bool drops(const PairFlags& flags) const;
};

struct DatasetManifest {
  std::string name;
  std::string language;
  int max_source_len = 0;  // maxima/sums over exactly the included pairs
  int max_asm_len = 0;
  int source_vocab = 0;
  int asm_vocab = 0;
  long long source_line_count = 0;
  long long source_token_count = 0;
  long long asm_token_count = 0;
  long long function_count = 0;
  SplitSpec split;
  std::string source_tokenizer_ref;
  std::string asm_tokenizer_ref;
  FlagPolicy flag_policy;
};

struct BuildResult {
  std::vector<FunctionPair> pairs;
  DatasetManifest manifest;
  std::map<std::string, std::size_t> dropped;  // reason -> count
};

// Recount tokens under the given models, drop over-length/flagged/duplicate
// pairs, and compute the manifest. Order of surviving pairs is input order.
BuildResult build(std::vector<FunctionPair> pairs, const SubwordModel& source_model,
                  const SubwordModel& asm_model, int max_src_len, int max_asm_len,
                  const FlagPolicy& policy, const std::string& name, const SplitSpec& split_spec);

// Deterministic seeded partition by pair id; duplicates removed first.
// Throws std::runtime_error("DegenerateSplit...") when a side would be empty.
std::pair<std::vector<FunctionPair>, std::vector<FunctionPair>> split(
    std::vector<FunctionPair> pairs, double test_fraction, std::uint64_t seed);

struct Batch {
  std::vector<std::string> sample_ids;
  int max_len_in_batch = 0;
  long long padded_token_cost = 0;  // |sample_ids| * max_len_in_batch
  bool overlong = false;            // single sample above the budget
};

// Sort by token length on the chosen side, then pack greedily so that
// padded cost stays within max_tokens.
std::vector<Batch> batch_by_tokens(std::span<const FunctionPair> samples, long long max_tokens,
                                   CorpusSide side);

struct ContractionStats {
  std::vector<double> per_sample_eta;  // asm_tokens / src_tokens
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<double> bin_edges;       // bins + 1 entries
  std::vector<std::size_t> counts;     // bins entries; sums to sample count
  std::size_t skipped_zero_src = 0;
};

ContractionStats contraction_stats(std::span<const FunctionPair> pairs, int bins);

// Plot-ready table: header + "bin_start,bin_end,count" rows.
std::string contraction_table_csv(const ContractionStats& stats);

struct Dataset {
  DatasetManifest manifest;
  std::vector<FunctionPair> train;
  std::vector<FunctionPair> test;
};

// Directory layout: manifest.json, pairs.train.jsonl, pairs.test.jsonl.
// Tokenizer model files live next to them under the names the manifest
// records. import(export(x)) == x field for field.
void export_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset import_dataset(const std::filesystem::path& dir);

void write_pairs_jsonl(std::span<const FunctionPair> pairs, const std::filesystem::path& path);
std::vector<FunctionPair> read_pairs_jsonl(const std::filesystem::path& path);

std::string manifest_to_json_string(const DatasetManifest& manifest);
DatasetManifest manifest_from_json_string(const std::string& text);

}  // namespace a2s
