#include "a2s/backend.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace a2s {

namespace {
using json = nlohmann::ordered_json;
}

RetrievalIndex build_index(std::span<const FunctionPair> train, const SubwordModel& asm_model,
                           std::string built_from) {
  if (train.empty()) throw std::runtime_error("EmptyTrainSet: cannot index zero pairs");
  RetrievalIndex index;
  index.built_from = std::move(built_from);
  index.entries.reserve(train.size());
  for (const auto& pair : train) {
    IndexEntry entry;
    entry.id = pair.id;
    entry.source_text = pair.source_text;
    entry.asm_token_set = asm_model.encode(pair.asm_text).ids;
    std::sort(entry.asm_token_set.begin(), entry.asm_token_set.end());
    entry.asm_token_set.erase(
        std::unique(entry.asm_token_set.begin(), entry.asm_token_set.end()),
        entry.asm_token_set.end());
    index.entries.push_back(std::move(entry));
  }
  return index;
}

namespace {

double jaccard(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0, both = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++both;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  std::size_t either = a.size() + b.size() - both;
  if (either == 0) return 1.0;  // two empty sets
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace

TranslateResponse knn_decompile(const RetrievalIndex& index, const TranslateRequest& request,
                                const SubwordModel& asm_model) {
  std::vector<int> query = asm_model.encode(request.asm_text).ids;
  std::sort(query.begin(), query.end());
  query.erase(std::unique(query.begin(), query.end()), query.end());

  const IndexEntry* best = nullptr;
  double best_score = -1.0;
  for (const auto& entry : index.entries) {
    double score = jaccard(query, entry.asm_token_set);
    if (score > best_score || (score == best_score && best && entry.id < best->id)) {
      best = &entry;
      best_score = score;
    }
  }
  TranslateResponse response;
  response.request_id = request.request_id;
  response.source_text = best ? best->source_text : "";
  return response;
}

RandomControlBackend::RandomControlBackend(std::span<const FunctionPair> train,
                                           std::uint64_t seed)
    : state_(seed) {
  for (const auto& pair : train) sources_.push_back(pair.source_text);
  if (sources_.empty()) throw std::runtime_error("EmptyTrainSet: cannot sample zero pairs");
}

TranslateResponse RandomControlBackend::translate(const TranslateRequest& request) {
  // splitmix64 step: tiny, seedable, stable across platforms
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return {request.request_id, sources_[z % sources_.size()], std::nullopt, std::nullopt};
}

EchoBackend::EchoBackend(std::span<const FunctionPair> pairs) {
  for (const auto& pair : pairs) by_asm_.emplace_back(pair.asm_text, pair.source_text);
  std::sort(by_asm_.begin(), by_asm_.end());
}

TranslateResponse EchoBackend::translate(const TranslateRequest& request) {
  auto it = std::lower_bound(by_asm_.begin(), by_asm_.end(), request.asm_text,
                             [](const auto& entry, const std::string& key) {
                               return entry.first < key;
                             });
  TranslateResponse response;
  response.request_id = request.request_id;
  if (it != by_asm_.end() && it->first == request.asm_text) {
    response.source_text = it->second;
  } else {
    response.error = "no ground truth for request";
  }
  return response;
}

std::string request_to_json_line(const TranslateRequest& request) {
  json j;
  j["request_id"] = request.request_id;
  j["asm_text"] = request.asm_text;
  return j.dump();
}

std::optional<TranslateRequest> request_from_json_line(const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.contains("request_id") || !j.at("request_id").is_number_integer()) {
      return std::nullopt;
    }
    TranslateRequest request;
    request.request_id = j.at("request_id").get<std::int64_t>();
    request.asm_text = j.value("asm_text", std::string());
    return request;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::string response_to_json_line(const TranslateResponse& response) {
  json j;
  j["request_id"] = response.request_id;
  if (response.error) {
    j["error"] = *response.error;
    return j.dump();
  }
  j["source_text"] = response.source_text;
  if (response.token_probs) j["token_probs"] = *response.token_probs;
  return j.dump();
}

std::optional<TranslateResponse> response_from_json_line(const std::string& line) {
  try {
    json j = json::parse(line);
    TranslateResponse response;
    response.request_id = j.value("request_id", static_cast<std::int64_t>(-1));
    if (j.contains("error")) {
      response.error = j.at("error").get<std::string>();
      return response;
    }
    response.source_text = j.at("source_text").get<std::string>();
    if (j.contains("token_probs")) {
      response.token_probs = j.at("token_probs").get<std::vector<double>>();
    }
    return response;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void serve(TranslationBackend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto request = request_from_json_line(line);
    if (!request) {
      // Recover a request_id if the line was JSON with one; else diagnose.
      std::int64_t id = -1;
      try {
        json j = json::parse(line);
        if (j.contains("request_id") && j.at("request_id").is_number_integer()) {
          id = j.at("request_id").get<std::int64_t>();
        }
      } catch (const json::exception&) {
      }
      if (id >= 0) {
        out << response_to_json_line({id, "", std::nullopt, "malformed request"}) << "\n";
      } else {
        out << "{\"error\":\"malformed request line\"}\n";
      }
      out.flush();
      continue;
    }
    TranslateResponse response = backend.translate(*request);
    response.request_id = request->request_id;
    out << response_to_json_line(response) << "\n";
    out.flush();
  }
}

}  // namespace a2s
