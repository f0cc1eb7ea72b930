#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "a2s/dataset.hpp"
#include "a2s/tokenizer.hpp"

namespace a2s {

struct TranslateRequest {
  std::int64_t request_id = 0;
  std::string asm_text;
};

struct TranslateResponse {
  std::int64_t request_id = 0;
  std::string source_text;
  std::optional<std::vector<double>> token_probs;
  std::optional<std::string> error;
};

// Anything that turns assembly into source. Implementations must answer
// every request; errors ride back in TranslateResponse::error.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::string name() const = 0;
  virtual TranslateResponse translate(const TranslateRequest& request) = 0;
};

struct IndexEntry {
  std::string id;
  std::vector<int> asm_token_set;  // sorted, deduplicated
  std::string source_text;
};

struct RetrievalIndex {
  std::vector<IndexEntry> entries;
  std::string built_from;  // manifest/dataset name
};

// Throws std::runtime_error("EmptyTrainSet...") on an empty training set.
RetrievalIndex build_index(std::span<const FunctionPair> train, const SubwordModel& asm_model,
                           std::string built_from = "");

// Jaccard similarity over assembly token sets; ties go to the lowest id.
TranslateResponse knn_decompile(const RetrievalIndex& index, const TranslateRequest& request,
                                const SubwordModel& asm_model);

class KnnBackend : public TranslationBackend {
 public:
  KnnBackend(RetrievalIndex index, const SubwordModel& asm_model)
      : index_(std::move(index)), asm_model_(asm_model) {}
  std::string name() const override { return "knn"; }
  TranslateResponse translate(const TranslateRequest& request) override {
    return knn_decompile(index_, request, asm_model_);
  }
  const RetrievalIndex& index() const { return index_; }

 private:
  RetrievalIndex index_;
  const SubwordModel& asm_model_;
};

// Control: a uniformly random training source per request, seeded.
class RandomControlBackend : public TranslationBackend {
 public:
  RandomControlBackend(std::span<const FunctionPair> train, std::uint64_t seed);
  std::string name() const override { return "random-control"; }
  TranslateResponse translate(const TranslateRequest& request) override;

 private:
  std::vector<std::string> sources_;
  std::uint64_t state_;
};

// Test boundaries: parrot the ground truth / always answer nothing.
class EchoBackend : public TranslationBackend {
 public:
  explicit EchoBackend(std::span<const FunctionPair> pairs);
  std::string name() const override { return "echo"; }
  TranslateResponse translate(const TranslateRequest& request) override;

 private:
  std::vector<std::pair<std::string, std::string>> by_asm_;  // sorted
};

class EmptyBackend : public TranslationBackend {
 public:
  std::string name() const override { return "empty"; }
  TranslateResponse translate(const TranslateRequest& request) override {
    return {request.request_id, "", std::nullopt, std::nullopt};
  }
};

// Line protocol: one JSON request per line in, one JSON response per line
// out, same order, flushed after every response. Malformed input produces an
// error response (or a diagnostic line when no request_id is recoverable)
// and the session continues.
void serve(TranslationBackend& backend, std::istream& in, std::ostream& out);

std::string request_to_json_line(const TranslateRequest& request);
std::optional<TranslateRequest> request_from_json_line(const std::string& line);
std::string response_to_json_line(const TranslateResponse& response);
std::optional<TranslateResponse> response_from_json_line(const std::string& line);

}  // namespace a2s
