#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "a2s/backend.hpp"
#include "a2s/dataset.hpp"
#include "a2s/tokenizer.hpp"

namespace a2s {

// Unit-cost Levenshtein distance over token ids.
int edit_distance(const TokenSeq& a, const TokenSeq& b);

// edit_distance / |truth|; can exceed 1.0 and is never clamped.
// Throws std::invalid_argument("EmptyTruth...") when |truth| == 0.
double normalized_ed(const TokenSeq& pred, const TokenSeq& truth);

struct SampleEval {
  std::string id;
  int edit_distance = 0;
  int truth_len = 0;
  double normalized = 0.0;
};

struct EvalReport {
  std::string backend_name;
  std::string tokenizer_ref;  // which tokenizer produced the numbers
  std::vector<SampleEval> per_sample;  // sorted by pair id
  double aed = 0.0;
  double functions_per_second = 0.0;
  std::size_t sample_count = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
};

// Monotonic seconds; injectable so throughput is testable.
using Clock = std::function<double()>;
Clock steady_clock_seconds();

// Runs every test pair through the backend, scores predictions against the
// ground truth under the source tokenizer, and times backend round-trips
// only (tokenization is excluded from throughput).
EvalReport evaluate(TranslationBackend& backend, std::span<const FunctionPair> test_pairs,
                    const SubwordModel& source_model, Clock clock = {},
                    std::string tokenizer_ref = "");

// Human-readable summary shaped like: model, AED, functions/s.
std::string report_table(const EvalReport& report);
std::string report_to_json_string(const EvalReport& report);

}  // namespace a2s
