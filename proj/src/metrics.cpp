#include "a2s/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace a2s {

namespace {
using json = nlohmann::ordered_json;
}

int edit_distance(const TokenSeq& a, const TokenSeq& b) {
  const auto& s = a.ids;
  const auto& t = b.ids;
  if (s.empty()) return static_cast<int>(t.size());
  if (t.empty()) return static_cast<int>(s.size());

  // Two-row DP over the shorter sequence for the inner dimension.
  const std::vector<int>& inner = t.size() <= s.size() ? t : s;
  const std::vector<int>& outer = t.size() <= s.size() ? s : t;
  std::vector<int> prev(inner.size() + 1), curr(inner.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= outer.size(); ++i) {
    curr[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= inner.size(); ++j) {
      int substitute = prev[j - 1] + (outer[i - 1] == inner[j - 1] ? 0 : 1);
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, substitute});
    }
    std::swap(prev, curr);
  }
  return prev[inner.size()];
}

double normalized_ed(const TokenSeq& pred, const TokenSeq& truth) {
  if (truth.empty()) {
    throw std::invalid_argument("EmptyTruth: ground truth has zero tokens");
  }
  return static_cast<double>(edit_distance(pred, truth)) /
         static_cast<double>(truth.size());
}

Clock steady_clock_seconds() {
  return [] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

EvalReport evaluate(TranslationBackend& backend, std::span<const FunctionPair> test_pairs,
                    const SubwordModel& source_model, Clock clock, std::string tokenizer_ref) {
  if (!clock) clock = steady_clock_seconds();
  EvalReport report;
  report.backend_name = backend.name();
  report.tokenizer_ref = std::move(tokenizer_ref);

  double backend_seconds = 0.0;
  std::int64_t next_request_id = 1;
  for (const auto& pair : test_pairs) {
    TranslateRequest request{next_request_id++, pair.asm_text};
    double t0 = clock();
    TranslateResponse response = backend.translate(request);
    backend_seconds += clock() - t0;

    if (response.error) {
      ++report.skipped;
      ++report.skip_reasons["backend: " + *response.error];
      continue;
    }
    TokenSeq truth = source_model.encode(pair.source_text);
    if (truth.empty()) {
      ++report.skipped;
      ++report.skip_reasons["empty_truth"];
      continue;
    }
    TokenSeq prediction = source_model.encode(response.source_text);
    if (response.token_probs &&
        response.token_probs->size() != prediction.size()) {
      ++report.skip_reasons["token_probs_length_mismatch"];  // noted, not skipped
    }
    SampleEval sample;
    sample.id = pair.id;
    sample.edit_distance = edit_distance(prediction, truth);
    sample.truth_len = static_cast<int>(truth.size());
    sample.normalized = static_cast<double>(sample.edit_distance) / sample.truth_len;
    report.per_sample.push_back(std::move(sample));
  }

  std::sort(report.per_sample.begin(), report.per_sample.end(),
            [](const SampleEval& a, const SampleEval& b) { return a.id < b.id; });
  report.sample_count = report.per_sample.size();
  if (report.sample_count > 0) {
    double sum = 0.0;
    for (const auto& sample : report.per_sample) sum += sample.normalized;
    report.aed = sum / static_cast<double>(report.sample_count);
  }
  report.functions_per_second =
      backend_seconds > 0.0 ? static_cast<double>(report.sample_count) / backend_seconds : 0.0;
  return report;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "Model             AED     functions/s  samples  skipped\n";
  std::snprintf(buf, sizeof(buf), "%-16s  %.4f  %-11.2f  %-7zu  %zu\n",
                report.backend_name.c_str(), report.aed, report.functions_per_second,
                report.sample_count, report.skipped);
  out << buf;
  return out.str();
}

std::string report_to_json_string(const EvalReport& report) {
  json j;
  j["backend"] = report.backend_name;
  j["tokenizer"] = report.tokenizer_ref;
  j["aed"] = report.aed;
  j["functions_per_second"] = report.functions_per_second;
  j["sample_count"] = report.sample_count;
  j["skipped"] = report.skipped;
  json reasons = json::object();
  for (const auto& [reason, count] : report.skip_reasons) reasons[reason] = count;
  j["skip_reasons"] = std::move(reasons);
  json rows = json::array();
  for (const auto& sample : report.per_sample) {
    rows.push_back({{"id", sample.id},
                    {"edit_distance", sample.edit_distance},
                    {"truth_len", sample.truth_len},
                    {"normalized", sample.normalized}});
  }
  j["per_sample"] = std::move(rows);
  return j.dump(1, '\t') + "\n";
}

}  // namespace a2s
