#include "a2s/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace a2s {

namespace {

using json = nlohmann::ordered_json;

constexpr char kManifestFile[] = "manifest.json";
constexpr char kTrainFile[] = "pairs.train.jsonl";
constexpr char kTestFile[] = "pairs.test.jsonl";

}  // namespace

std::string pair_id(std::string_view asm_text, std::string_view source_text) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(asm_text);
  h ^= 0x1F;  // field separator
  h *= 1099511628211ULL;
  mix(source_text);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<std::string> FlagPolicy::excluded() const {
  std::vector<std::string> out;
  if (drop_perforated) out.push_back("perforated");
  if (drop_multi_file) out.push_back("multi_file");
  if (drop_zero_loc) out.push_back("zero_loc");
  if (drop_suspect) out.push_back("suspect");
  return out;
}

bool FlagPolicy::drops(const PairFlags& flags) const {
  return (drop_perforated && flags.perforated) || (drop_multi_file && flags.multi_file) ||
         (drop_zero_loc && flags.zero_loc) || (drop_suspect && flags.suspect);
}

BuildResult build(std::vector<FunctionPair> pairs, const SubwordModel& source_model,
                  const SubwordModel& asm_model, int max_src_len, int max_asm_len,
                  const FlagPolicy& policy, const std::string& name,
                  const SplitSpec& split_spec) {
  BuildResult result;
  result.manifest.name = name;
  result.manifest.split = split_spec;
  result.manifest.flag_policy = policy;
  result.manifest.source_vocab = source_model.vocab_size();
  result.manifest.asm_vocab = asm_model.vocab_size();

  std::set<std::string> seen_ids;
  for (auto& pair : pairs) {
    if (pair.id.empty()) pair.id = pair_id(pair.asm_text, pair.source_text);
    if (policy.drops(pair.flags)) {
      ++result.dropped["flags"];
      continue;
    }
    pair.src_tokens = static_cast<int>(source_model.encode(pair.source_text).size());
    pair.asm_tokens = static_cast<int>(asm_model.encode(pair.asm_text).size());
    if (pair.src_tokens > max_src_len || pair.asm_tokens > max_asm_len) {
      ++result.dropped["length"];
      continue;
    }
    if (!seen_ids.insert(pair.id).second) {
      ++result.dropped["duplicate"];
      continue;
    }
    result.pairs.push_back(std::move(pair));
  }

  DatasetManifest& m = result.manifest;
  for (const auto& pair : result.pairs) {
    if (m.language.empty()) m.language = pair.language;
    m.max_source_len = std::max(m.max_source_len, pair.src_tokens);
    m.max_asm_len = std::max(m.max_asm_len, pair.asm_tokens);
    m.source_token_count += pair.src_tokens;
    m.asm_token_count += pair.asm_tokens;
    long long lines = pair.source_text.empty()
                          ? 0
                          : std::count(pair.source_text.begin(), pair.source_text.end(), '\n') + 1;
    m.source_line_count += lines;
  }
  m.function_count = static_cast<long long>(result.pairs.size());
  return result;
}

std::pair<std::vector<FunctionPair>, std::vector<FunctionPair>> split(
    std::vector<FunctionPair> pairs, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  }

  std::vector<FunctionPair> unique;
  std::set<std::string> seen;
  for (auto& pair : pairs) {
    if (pair.id.empty()) pair.id = pair_id(pair.asm_text, pair.source_text);
    if (seen.insert(pair.id).second) unique.push_back(std::move(pair));
  }

  // Canonical order, then a hand-rolled Fisher-Yates: std::shuffle is not
  // reproducible across standard libraries.
  std::sort(unique.begin(), unique.end(),
            [](const FunctionPair& a, const FunctionPair& b) { return a.id < b.id; });
  std::mt19937_64 rng(seed);
  for (std::size_t i = unique.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(unique[i - 1], unique[j]);
  }

  std::size_t n = unique.size();
  if (n < 2) throw std::runtime_error("DegenerateSplit: need at least 2 unique pairs");
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<FunctionPair> test(unique.begin(), unique.begin() + static_cast<long>(n_test));
  std::vector<FunctionPair> train(unique.begin() + static_cast<long>(n_test), unique.end());
  return {std::move(train), std::move(test)};
}

std::vector<Batch> batch_by_tokens(std::span<const FunctionPair> samples, long long max_tokens,
                                   CorpusSide side) {
  if (max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  auto len_of = [side](const FunctionPair& p) {
    return side == CorpusSide::Source ? p.src_tokens : p.asm_tokens;
  };

  std::vector<const FunctionPair*> order;
  order.reserve(samples.size());
  for (const auto& s : samples) order.push_back(&s);
  std::sort(order.begin(), order.end(), [&](const FunctionPair* a, const FunctionPair* b) {
    if (len_of(*a) != len_of(*b)) return len_of(*a) < len_of(*b);
    return a->id < b->id;
  });

  std::vector<Batch> batches;
  Batch current;
  for (const FunctionPair* sample : order) {
    long long len = len_of(*sample);
    long long grown =
        (static_cast<long long>(current.sample_ids.size()) + 1) *
        std::max<long long>(current.max_len_in_batch, len);
    if (!current.sample_ids.empty() && grown > max_tokens) {
      batches.push_back(std::move(current));
      current = Batch{};
    }
    current.sample_ids.push_back(sample->id);
    current.max_len_in_batch = std::max<int>(current.max_len_in_batch, static_cast<int>(len));
    current.padded_token_cost = static_cast<long long>(current.sample_ids.size()) *
                                current.max_len_in_batch;
    if (current.padded_token_cost > max_tokens) {
      current.overlong = true;  // only reachable as a singleton
      batches.push_back(std::move(current));
      current = Batch{};
    }
  }
  if (!current.sample_ids.empty()) batches.push_back(std::move(current));
  return batches;
}

ContractionStats contraction_stats(std::span<const FunctionPair> pairs, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be positive");
  ContractionStats stats;
  for (const auto& pair : pairs) {
    if (pair.src_tokens == 0) {
      ++stats.skipped_zero_src;
      continue;
    }
    stats.per_sample_eta.push_back(static_cast<double>(pair.asm_tokens) /
                                   static_cast<double>(pair.src_tokens));
  }
  if (stats.per_sample_eta.empty()) {
    stats.bin_edges.assign(static_cast<std::size_t>(bins) + 1, 0.0);
    stats.counts.assign(static_cast<std::size_t>(bins), 0);
    return stats;
  }

  double sum = 0.0;
  for (double eta : stats.per_sample_eta) sum += eta;
  stats.mean = sum / static_cast<double>(stats.per_sample_eta.size());
  double var = 0.0;
  for (double eta : stats.per_sample_eta) var += (eta - stats.mean) * (eta - stats.mean);
  stats.stddev = std::sqrt(var / static_cast<double>(stats.per_sample_eta.size()));

  auto [lo_it, hi_it] =
      std::minmax_element(stats.per_sample_eta.begin(), stats.per_sample_eta.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;  // degenerate: one distinct value
  stats.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) {
    stats.bin_edges[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  stats.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double eta : stats.per_sample_eta) {
    auto bin = static_cast<std::size_t>((eta - lo) / (hi - lo) * bins);
    if (bin >= static_cast<std::size_t>(bins)) bin = static_cast<std::size_t>(bins) - 1;
    ++stats.counts[bin];
  }
  return stats;
}

std::string contraction_table_csv(const ContractionStats& stats) {
  std::ostringstream out;
  out << "bin_start,bin_end,count\n";
  char buf[64];
  for (std::size_t i = 0; i < stats.counts.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%zu\n", stats.bin_edges[i],
                  stats.bin_edges[i + 1], stats.counts[i]);
    out << buf;
  }
  return out.str();
}

namespace {

json pair_to_json(const FunctionPair& p) {
  json j;
  j["id"] = p.id;
  j["language"] = p.language;
  j["asm"] = p.asm_text;
  j["source"] = p.source_text;
  j["src_tokens"] = p.src_tokens;
  j["asm_tokens"] = p.asm_tokens;
  j["provenance"] = {{"asm_path", p.provenance.asm_path},
                     {"function_label", p.provenance.function_label},
                     {"source_path", p.provenance.source_path},
                     {"line_span", {p.provenance.line_min, p.provenance.line_max}}};
  j["flags"] = {{"perforated", p.flags.perforated},
                {"multi_file", p.flags.multi_file},
                {"zero_loc", p.flags.zero_loc},
                {"suspect", p.flags.suspect}};
  return j;
}

FunctionPair pair_from_json(const json& j) {
  FunctionPair p;
  p.id = j.at("id").get<std::string>();
  p.language = j.at("language").get<std::string>();
  p.asm_text = j.at("asm").get<std::string>();
  p.source_text = j.at("source").get<std::string>();
  p.src_tokens = j.at("src_tokens").get<int>();
  p.asm_tokens = j.at("asm_tokens").get<int>();
  const auto& prov = j.at("provenance");
  p.provenance.asm_path = prov.at("asm_path").get<std::string>();
  p.provenance.function_label = prov.at("function_label").get<std::string>();
  p.provenance.source_path = prov.at("source_path").get<std::string>();
  p.provenance.line_min = prov.at("line_span").at(0).get<int>();
  p.provenance.line_max = prov.at("line_span").at(1).get<int>();
  const auto& flags = j.at("flags");
  p.flags.perforated = flags.at("perforated").get<bool>();
  p.flags.multi_file = flags.at("multi_file").get<bool>();
  p.flags.zero_loc = flags.at("zero_loc").get<bool>();
  p.flags.suspect = flags.at("suspect").get<bool>();
  return p;
}

}  // namespace

void write_pairs_jsonl(std::span<const FunctionPair> pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& pair : pairs) {
    out << pair_to_json(pair).dump() << "\n";
  }
}

std::vector<FunctionPair> read_pairs_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<FunctionPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      pairs.push_back(pair_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": bad pair record: " + e.what());
    }
  }
  return pairs;
}

std::string manifest_to_json_string(const DatasetManifest& m) {
  json j;
  j["name"] = m.name;
  j["language"] = m.language;
  j["max_source_len"] = m.max_source_len;
  j["max_asm_len"] = m.max_asm_len;
  j["source_vocab"] = m.source_vocab;
  j["asm_vocab"] = m.asm_vocab;
  j["source_line_count"] = m.source_line_count;
  j["source_token_count"] = m.source_token_count;
  j["asm_token_count"] = m.asm_token_count;
  j["function_count"] = m.function_count;
  j["split"] = {{"test_fraction", m.split.test_fraction}, {"seed", m.split.seed}};
  j["tokenizers"] = {{"source", m.source_tokenizer_ref}, {"asm", m.asm_tokenizer_ref}};
  j["excluded_flags"] = m.flag_policy.excluded();
  return j.dump(1, '\t') + "\n";
}

DatasetManifest manifest_from_json_string(const std::string& text) {
  json j = json::parse(text);
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  m.language = j.at("language").get<std::string>();
  m.max_source_len = j.at("max_source_len").get<int>();
  m.max_asm_len = j.at("max_asm_len").get<int>();
  m.source_vocab = j.at("source_vocab").get<int>();
  m.asm_vocab = j.at("asm_vocab").get<int>();
  m.source_line_count = j.at("source_line_count").get<long long>();
  m.source_token_count = j.at("source_token_count").get<long long>();
  m.asm_token_count = j.at("asm_token_count").get<long long>();
  m.function_count = j.at("function_count").get<long long>();
  m.split.test_fraction = j.at("split").at("test_fraction").get<double>();
  m.split.seed = j.at("split").at("seed").get<std::uint64_t>();
  m.source_tokenizer_ref = j.at("tokenizers").at("source").get<std::string>();
  m.asm_tokenizer_ref = j.at("tokenizers").at("asm").get<std::string>();
  FlagPolicy policy{false, false, false, false};
  for (const auto& flag : j.at("excluded_flags")) {
    std::string f = flag.get<std::string>();
    if (f == "perforated") policy.drop_perforated = true;
    if (f == "multi_file") policy.drop_multi_file = true;
    if (f == "zero_loc") policy.drop_zero_loc = true;
    if (f == "suspect") policy.drop_suspect = true;
  }
  m.flag_policy = policy;
  return m;
}

void export_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / kManifestFile, std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write manifest under " + dir.string());
  manifest << manifest_to_json_string(dataset.manifest);
  write_pairs_jsonl(dataset.train, dir / kTrainFile);
  write_pairs_jsonl(dataset.test, dir / kTestFile);
}

Dataset import_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest_in(dir / kManifestFile, std::ios::binary);
  if (!manifest_in) throw std::runtime_error("no manifest under " + dir.string());
  std::ostringstream buf;
  buf << manifest_in.rdbuf();
  Dataset dataset;
  dataset.manifest = manifest_from_json_string(buf.str());
  dataset.train = read_pairs_jsonl(dir / kTrainFile);
  dataset.test = read_pairs_jsonl(dir / kTestFile);
  return dataset;
}

}  // namespace a2s
