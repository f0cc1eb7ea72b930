#include "a2s/dataset.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"

using namespace a2s;

namespace {

SubwordModel tiny_model(CorpusSide side) {
  std::vector<std::string> corpus = {"int x = y;\nreturn x;", "movl eax ebx\nret",
                                     "int y = x;\nreturn y;", "push rbp\npop rbp\nret"};
  return SubwordModel::train(corpus, 280, TokenizerMode::Bpe, side);
}

FunctionPair make_pair(const std::string& asm_text, const std::string& source_text,
                       PairFlags flags = {}) {
  FunctionPair p;
  p.id = pair_id(asm_text, source_text);
  p.language = "c";
  p.asm_text = asm_text;
  p.source_text = source_text;
  p.flags = flags;
  p.provenance = {"unit.s", "fn", "unit.c", 1, 3};
  return p;
}

}  // namespace

TEST_CASE("pair ids are deterministic and text-only") {
  std::string a = pair_id("mov", "int x;");
  CHECK(a == pair_id("mov", "int x;"));
  CHECK(a != pair_id("mov", "int y;"));
  CHECK(a != pair_id("movq", "int x;"));
  CHECK(a.size() == 16);
}

TEST_CASE("build keeps clean pairs and computes the manifest") {
  SubwordModel src_model = tiny_model(CorpusSide::Source);
  SubwordModel asm_model = tiny_model(CorpusSide::Asm);

  std::vector<FunctionPair> pairs = {
      make_pair("movl eax ebx\nret", "int x = y;\nreturn x;"),
      make_pair("push rbp\npop rbp\nret", "int y = x;\nreturn y;"),
      make_pair("movl eax ebx", "int x = y;"),
  };
  auto result = build(pairs, src_model, asm_model, 1000, 1000, FlagPolicy{}, "unit", {0.25, 7});

  CHECK(result.pairs.size() == 3);
  CHECK(result.manifest.function_count == 3);
  CHECK(result.manifest.language == "c");
  CHECK(result.manifest.name == "unit");
  CHECK(result.manifest.source_vocab == src_model.vocab_size());
  CHECK(result.manifest.asm_vocab == asm_model.vocab_size());

  // Totals equal hand-summed encode lengths.
  long long src_total = 0, asm_total = 0, lines = 0;
  int src_max = 0, asm_max = 0;
  for (const auto& p : result.pairs) {
    int s = static_cast<int>(src_model.encode(p.source_text).size());
    int a = static_cast<int>(asm_model.encode(p.asm_text).size());
    CHECK(p.src_tokens == s);
    CHECK(p.asm_tokens == a);
    src_total += s;
    asm_total += a;
    src_max = std::max(src_max, s);
    asm_max = std::max(asm_max, a);
    lines += 1 + std::count(p.source_text.begin(), p.source_text.end(), '\n');
  }
  CHECK(result.manifest.source_token_count == src_total);
  CHECK(result.manifest.asm_token_count == asm_total);
  CHECK(result.manifest.max_source_len == src_max);
  CHECK(result.manifest.max_asm_len == asm_max);
  CHECK(result.manifest.source_line_count == lines);
  CHECK(result.dropped.empty());
}

TEST_CASE("build drops by length, flags, and duplicate id") {
  SubwordModel src_model = tiny_model(CorpusSide::Source);
  SubwordModel asm_model = tiny_model(CorpusSide::Asm);

  FunctionPair flagged = make_pair("ret", "int a;");
  flagged.flags.zero_loc = true;
  std::vector<FunctionPair> pairs = {
      make_pair("movl eax ebx\nret", "int x = y;"),
      make_pair("movl eax ebx\nret", "int x = y;"),  // duplicate
      flagged,
      make_pair("push rbp\npop rbp\nret\nret\nret", "int y;"),
  };

  int asm_cap = static_cast<int>(asm_model.encode(pairs[0].asm_text).size());
  auto result = build(pairs, src_model, asm_model, 1000, asm_cap, FlagPolicy{}, "unit", {});
  CHECK(result.pairs.size() == 1);
  CHECK(result.dropped["duplicate"] == 1);
  CHECK(result.dropped["flags"] == 1);
  CHECK(result.dropped["length"] == 1);

  // A single over-cap pair: dropped for length.
  auto only = build({make_pair("ret", "int a;")}, src_model, asm_model, 1000, 0, FlagPolicy{},
                    "unit", {});
  CHECK(only.pairs.empty());
  CHECK(only.manifest.function_count == 0);
  CHECK(only.dropped["length"] == 1);
}

TEST_CASE("flag policy selects what to drop") {
  PairFlags perforated;
  perforated.perforated = true;
  FlagPolicy keep_all{false, false, false, false};
  CHECK_FALSE(keep_all.drops(perforated));
  FlagPolicy defaults;
  CHECK_FALSE(defaults.drops(perforated));  // perforated kept by default
  PairFlags zero;
  zero.zero_loc = true;
  CHECK(defaults.drops(zero));
  CHECK(defaults.excluded() == std::vector<std::string>{"multi_file", "zero_loc", "suspect"});
}

TEST_CASE("split is deterministic, disjoint, and dedups") {
  std::vector<FunctionPair> pairs;
  for (int i = 0; i < 40; ++i) {
    pairs.push_back(make_pair("asm " + std::to_string(i), "src " + std::to_string(i)));
  }
  pairs.push_back(make_pair("asm 0", "src 0"));  // exact duplicate

  auto [train1, test1] = split(pairs, 0.25, 42);
  auto [train2, test2] = split(pairs, 0.25, 42);
  CHECK(train1.size() == 30);
  CHECK(test1.size() == 10);
  REQUIRE(train1.size() == train2.size());
  for (std::size_t i = 0; i < train1.size(); ++i) CHECK(train1[i].id == train2[i].id);
  for (std::size_t i = 0; i < test1.size(); ++i) CHECK(test1[i].id == test2[i].id);

  std::set<std::string> ids;
  for (const auto& p : train1) ids.insert(p.id);
  for (const auto& p : test1) CHECK_FALSE(ids.contains(p.id));
  CHECK(ids.size() + test1.size() == 40);  // duplicate collapsed

  auto [train3, test3] = split(pairs, 0.25, 43);
  bool same = test3.size() == test1.size();
  if (same) {
    same = std::equal(test3.begin(), test3.end(), test1.begin(),
                      [](const FunctionPair& a, const FunctionPair& b) { return a.id == b.id; });
  }
  CHECK_FALSE(same);  // different seed, different picks
}

TEST_CASE("degenerate splits are refused") {
  std::vector<FunctionPair> one = {make_pair("a", "b")};
  CHECK_THROWS_WITH_AS(split(one, 0.5, 1), doctest::Contains("DegenerateSplit"),
                       std::runtime_error);
  std::vector<FunctionPair> two = {make_pair("a", "b"), make_pair("c", "d")};
  auto [train, test] = split(two, 0.01, 1);  // fraction rounds to zero: clamped to 1
  CHECK(train.size() == 1);
  CHECK(test.size() == 1);
  CHECK_THROWS_AS(split(two, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split(two, 1.0, 1), std::invalid_argument);
}

TEST_CASE("batching examples") {
  auto with_len = [](int asm_tokens, const std::string& id) {
    FunctionPair p;
    p.id = id;
    p.asm_tokens = asm_tokens;
    p.src_tokens = asm_tokens;
    return p;
  };

  std::vector<FunctionPair> a = {with_len(10, "a"), with_len(10, "b"), with_len(10, "c")};
  auto batches = batch_by_tokens(a, 30, CorpusSide::Asm);
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].padded_token_cost == 30);
  CHECK_FALSE(batches[0].overlong);

  std::vector<FunctionPair> b = {with_len(10, "a"), with_len(29, "b")};
  batches = batch_by_tokens(b, 30, CorpusSide::Asm);
  REQUIRE(batches.size() == 2);  // padding [29,10] would cost 58
  CHECK(batches[0].sample_ids == std::vector<std::string>{"a"});
  CHECK(batches[1].sample_ids == std::vector<std::string>{"b"});

  std::vector<FunctionPair> c = {with_len(50, "big"), with_len(3, "small")};
  batches = batch_by_tokens(c, 30, CorpusSide::Asm);
  REQUIRE(batches.size() == 2);
  CHECK(batches[1].sample_ids == std::vector<std::string>{"big"});
  CHECK(batches[1].overlong);
  CHECK(batches[1].padded_token_cost == 50);
}

TEST_CASE("batching invariants over random multisets") {
  std::mt19937 rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    long long max_tokens = 50 + rng() % 1000;
    std::size_t n = 1 + rng() % 200;
    std::vector<FunctionPair> samples;
    std::multiset<std::string> input_ids;
    for (std::size_t i = 0; i < n; ++i) {
      FunctionPair p;
      p.id = "s" + std::to_string(i);
      p.asm_tokens = 1 + static_cast<int>(rng() % 100);
      p.src_tokens = 1 + static_cast<int>(rng() % 100);
      input_ids.insert(p.id);
      samples.push_back(p);
    }
    CorpusSide side = (rng() % 2 == 0) ? CorpusSide::Asm : CorpusSide::Source;
    auto batches = batch_by_tokens(samples, max_tokens, side);

    std::multiset<std::string> seen;
    for (const auto& batch : batches) {
      REQUIRE(!batch.sample_ids.empty());
      CHECK(batch.padded_token_cost ==
            static_cast<long long>(batch.sample_ids.size()) * batch.max_len_in_batch);
      if (!batch.overlong) {
        CHECK(batch.padded_token_cost <= max_tokens);
      } else {
        CHECK(batch.sample_ids.size() == 1);
        CHECK(batch.padded_token_cost > max_tokens);
      }
      for (const auto& id : batch.sample_ids) seen.insert(id);
    }
    CHECK(seen == input_ids);  // conservation, no duplicates
  }
}

TEST_CASE("contraction statistics") {
  auto with_counts = [](int asm_tokens, int src_tokens) {
    FunctionPair p;
    p.id = pair_id(std::to_string(asm_tokens), std::to_string(src_tokens));
    p.asm_tokens = asm_tokens;
    p.src_tokens = src_tokens;
    return p;
  };

  // Equal counts: eta exactly 1.
  std::vector<FunctionPair> same = {with_counts(7, 7)};
  auto stats = contraction_stats(same, 4);
  REQUIRE(stats.per_sample_eta.size() == 1);
  CHECK(stats.per_sample_eta[0] == doctest::Approx(1.0));

  // Four pairs with hand-chosen counts: eta = 2, 4, 6, 8.
  std::vector<FunctionPair> four = {with_counts(2, 1), with_counts(4, 1), with_counts(6, 1),
                                    with_counts(8, 1)};
  stats = contraction_stats(four, 2);
  CHECK(stats.mean == doctest::Approx(5.0));
  CHECK(stats.stddev == doctest::Approx(std::sqrt(5.0)));  // population: sqrt((9+1+1+9)/4)
  std::size_t total = 0;
  for (auto c : stats.counts) total += c;
  CHECK(total == stats.per_sample_eta.size());

  // Zero source tokens: skipped and counted.
  std::vector<FunctionPair> with_zero = {with_counts(5, 0), with_counts(6, 2)};
  stats = contraction_stats(with_zero, 2);
  CHECK(stats.skipped_zero_src == 1);
  CHECK(stats.per_sample_eta.size() == 1);

  // Ratio shape from published corpus-level numbers: 5209251 asm tokens over
  // 1106279 source tokens gives roughly 4.71.
  CHECK(5209251.0 / 1106279.0 == doctest::Approx(4.71).epsilon(0.001));

  auto csv = contraction_table_csv(stats);
  CHECK(csv.rfind("bin_start,bin_end,count\n", 0) == 0);
}

TEST_CASE("manifest json roundtrip") {
  DatasetManifest m;
  m.name = "unit";
  m.language = "c";
  m.max_source_len = 11;
  m.max_asm_len = 22;
  m.source_vocab = 300;
  m.asm_vocab = 280;
  m.source_line_count = 5;
  m.source_token_count = 50;
  m.asm_token_count = 111;
  m.function_count = 3;
  m.split = {0.25, 99};
  m.source_tokenizer_ref = "tokenizer.source.json";
  m.asm_tokenizer_ref = "tokenizer.asm.json";
  m.flag_policy = FlagPolicy{};

  DatasetManifest back = manifest_from_json_string(manifest_to_json_string(m));
  CHECK(back.name == m.name);
  CHECK(back.language == m.language);
  CHECK(back.max_source_len == m.max_source_len);
  CHECK(back.max_asm_len == m.max_asm_len);
  CHECK(back.source_vocab == m.source_vocab);
  CHECK(back.asm_vocab == m.asm_vocab);
  CHECK(back.source_line_count == m.source_line_count);
  CHECK(back.source_token_count == m.source_token_count);
  CHECK(back.asm_token_count == m.asm_token_count);
  CHECK(back.function_count == m.function_count);
  CHECK(back.split.test_fraction == m.split.test_fraction);
  CHECK(back.split.seed == m.split.seed);
  CHECK(back.source_tokenizer_ref == m.source_tokenizer_ref);
  CHECK(back.asm_tokenizer_ref == m.asm_tokenizer_ref);
  CHECK(back.flag_policy.drop_zero_loc == m.flag_policy.drop_zero_loc);
  CHECK(back.flag_policy.drop_perforated == m.flag_policy.drop_perforated);
}

TEST_CASE("dataset export/import is field-for-field") {
  Dataset ds;
  ds.manifest.name = "roundtrip";
  ds.manifest.language = "c";
  ds.manifest.function_count = 3;
  ds.manifest.source_tokenizer_ref = "tokenizer.source.json";
  ds.manifest.asm_tokenizer_ref = "tokenizer.asm.json";

  PairFlags flags;
  flags.perforated = true;
  ds.train = {make_pair("mov eax, 1\nret", "int f(void) {\nreturn 1;\n}"),
              make_pair("text with \"quotes\" and \\ slashes", "unicode \xc3\xa9 ok", flags)};
  ds.test = {make_pair("push rbp", "void g(void) {}")};
  ds.train[0].src_tokens = 9;
  ds.train[0].asm_tokens = 17;

  auto dir = testsup::scratch_dir() / "dataset_roundtrip";
  export_dataset(ds, dir);
  Dataset back = import_dataset(dir);

  REQUIRE(back.train.size() == 2);
  REQUIRE(back.test.size() == 1);
  CHECK(back.manifest.name == ds.manifest.name);
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].id == ds.train[i].id);
    CHECK(back.train[i].asm_text == ds.train[i].asm_text);
    CHECK(back.train[i].source_text == ds.train[i].source_text);
    CHECK(back.train[i].src_tokens == ds.train[i].src_tokens);
    CHECK(back.train[i].asm_tokens == ds.train[i].asm_tokens);
    CHECK(back.train[i].flags.perforated == ds.train[i].flags.perforated);
    CHECK(back.train[i].provenance.asm_path == ds.train[i].provenance.asm_path);
    CHECK(back.train[i].provenance.line_min == ds.train[i].provenance.line_min);
  }

  // Byte-identical re-export.
  auto dir2 = testsup::scratch_dir() / "dataset_roundtrip2";
  export_dataset(back, dir2);
  CHECK(testsup::read_file(dir / "pairs.train.jsonl") ==
        testsup::read_file(dir2 / "pairs.train.jsonl"));
  CHECK(testsup::read_file(dir / "manifest.json") == testsup::read_file(dir2 / "manifest.json"));
}
