#include <doctest.h>

#include <algorithm>
#include <map>

#include "layerpainter/errors.hpp"
#include "layerpainter/plans.hpp"
#include "test_util.hpp"

using namespace lp;

namespace {

std::vector<std::size_t> flatten(const ExecutionPlan& p) {
  std::vector<std::size_t> out;
  for (const auto& s : p.stages) out.insert(out.end(), s.layers.begin(), s.layers.end());
  return out;
}

std::vector<std::size_t> iota(std::size_t a, std::size_t b) {
  std::vector<std::size_t> out;
  for (std::size_t i = a; i <= b; ++i) out.push_back(i);
  return out;
}

VariantSpec spec(VariantKind kind, std::size_t n = 0, std::size_t k = 1, std::uint64_t seed = 0,
                 std::size_t probe = 0) {
  return VariantSpec{kind, n, k, seed, probe};
}

}  // namespace

TEST_CASE("middle block anchors") {
  const auto b15 = middle_block(32, 15);
  CHECK(b15.middle == LayerRange{16, 16});
  CHECK(b15.first == LayerRange{1, 15});
  CHECK(b15.last == LayerRange{17, 32});

  const auto b13 = middle_block(32, 13);
  CHECK(b13.middle == LayerRange{14, 18});
  CHECK(b13.middle.size() == 5);
  CHECK(32 - b13.middle.size() == 27);

  CHECK(middle_block(24, 11).middle == LayerRange{12, 12});
  CHECK(center_layer(32) == 16);
  CHECK(center_layer(24) == 12);

  CHECK(middle_block(5, 2).middle.size() == 0);
  CHECK_THROWS_AS(middle_block(32, 16), PlanError);
}

TEST_CASE("middle block segments cover 1..T exactly once") {
  for (std::size_t T = 2; T <= 40; ++T) {
    for (std::size_t N = 0; 2 * N + 1 <= T; ++N) {
      const auto b = middle_block(T, N);
      CHECK(b.first.size() + b.middle.size() + b.last.size() == T);
      CHECK(b.middle.size() == T - 2 * N - 1);
      CHECK(b.first.last + 1 == b.middle.first);
      CHECK(b.middle.last + 1 == b.last.first);
      CHECK(b.last.last == T);
    }
  }
}

TEST_CASE("compile_variant examples") {
  const auto skip = compile_variant(spec(VariantKind::skip, 15), 32);
  CHECK(skip.stages.size() == 31);
  const auto layers = flatten(skip);
  CHECK(std::find(layers.begin(), layers.end(), 16) == layers.end());
  for (const auto& s : skip.stages) CHECK(s.merge == MergeKind::identity);

  const auto repeat = compile_variant(spec(VariantKind::middle_repeat, 11), 24);
  CHECK(flatten(repeat) == iota(1, 24));

  const auto looped = compile_variant(spec(VariantKind::looped_parallel, 15, 3), 32);
  std::vector<std::size_t> expect = iota(1, 15);
  expect.insert(expect.end(), {16, 16, 16});
  const auto tail = iota(17, 32);
  expect.insert(expect.end(), tail.begin(), tail.end());
  CHECK(flatten(looped) == expect);
  CHECK(looped.stages[15] == Stage{{16}, MergeKind::identity});

  const auto rev = compile_variant(spec(VariantKind::reverse, 2), 8);
  CHECK(flatten(rev) == std::vector<std::size_t>{1, 2, 5, 4, 3, 6, 7, 8});

  const auto par = compile_variant(spec(VariantKind::parallel, 2), 8);
  CHECK(plan_to_text(par) == "[1]\n[2]\nmean{3,4,5}\n[6]\n[7]\n[8]\n");

  const auto rep = compile_variant(spec(VariantKind::middle_repeat, 1), 8);
  CHECK(flatten(rep) == std::vector<std::size_t>{1, 4, 4, 4, 4, 4, 7, 8});

  const auto full = compile_variant(spec(VariantKind::full_repeat, 0, 3), 4);
  CHECK(flatten(full) == std::vector<std::size_t>{1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4});

  const auto sw = compile_variant(spec(VariantKind::switch_adjacent, 0, 1, 0, 5), 8);
  CHECK(flatten(sw) == std::vector<std::size_t>{1, 2, 3, 4, 6, 5, 7, 8});
}

TEST_CASE("compile_variant bound errors") {
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::skip, 40), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::skip, 0), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::parallel, 16), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::looped_parallel, 4, 0), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::full_repeat, 0, 0), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::skip_single, 0, 1, 0, 33), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::skip_single, 0, 1, 0, 0), 32), PlanError);
  CHECK_THROWS_AS(compile_variant(spec(VariantKind::switch_adjacent, 0, 1, 0, 32), 32), PlanError);
  try {
    compile_variant(spec(VariantKind::skip, 40), 32);
  } catch (const PlanError& e) {
    CHECK(std::string(e.what()).find("N = 40") != std::string::npos);
  }
}

TEST_CASE("validate_plan") {
  ModelConfig c = testing::small_config(8);
  CHECK_NOTHROW(validate_plan(baseline_plan(8), c));

  ExecutionPlan bad = baseline_plan(8);
  bad.stages[3].layers = {9};
  CHECK_THROWS_AS(validate_plan(bad, c), PlanError);

  ExecutionPlan mean_one = baseline_plan(8);
  mean_one.stages[2].merge = MergeKind::mean;
  CHECK(validate_plan(mean_one, c).stages[2].merge == MergeKind::identity);

  ExecutionPlan ident_two = baseline_plan(8);
  ident_two.stages[2].layers = {3, 4};
  CHECK_THROWS_AS(validate_plan(ident_two, c), PlanError);

  ExecutionPlan unsorted = baseline_plan(8);
  unsorted.stages[2] = Stage{{4, 3}, MergeKind::mean};
  CHECK_THROWS_AS(validate_plan(unsorted, c), PlanError);

  CHECK_THROWS_AS(validate_plan(baseline_plan(7), c), PlanError);
}

TEST_CASE("plan depth") {
  CHECK(plan_depth(baseline_plan(32)) == 32);
  CHECK(plan_depth(compile_variant(spec(VariantKind::parallel, 8), 32)) == 18);
  CHECK(plan_depth(compile_variant(spec(VariantKind::looped_parallel, 8, 3), 32)) == 20);
  for (std::size_t N = 1; N <= 15; ++N) {
    CHECK(plan_depth(compile_variant(spec(VariantKind::parallel, N), 32)) == 2 * N + 2);
    for (std::size_t K = 1; K <= 4; ++K) {
      CHECK(plan_depth(compile_variant(spec(VariantKind::looped_parallel, N, K), 32)) == 2 * N + 1 + K);
    }
    CHECK(plan_depth(compile_variant(spec(VariantKind::skip, N), 32)) == 2 * N + 1);
  }
}

TEST_CASE("random permutation") {
  CHECK(random_permutation({7, 7}, 123) == std::vector<std::size_t>{7});
  CHECK(random_permutation({3, 12}, 42) == random_permutation({3, 12}, 42));
  auto p = random_permutation({3, 12}, 42);
  std::sort(p.begin(), p.end());
  CHECK(p == iota(3, 12));

  // Frequency oracle: all 3! orderings equally likely.
  std::map<std::vector<std::size_t>, int> counts;
  constexpr int draws = 10000;
  for (int s = 0; s < draws; ++s) ++counts[random_permutation({1, 3}, static_cast<std::uint64_t>(s))];
  CHECK(counts.size() == 6);
  for (const auto& [perm, n] : counts) CHECK(std::abs(n / static_cast<double>(draws) - 1.0 / 6.0) <= 0.02);
}

TEST_CASE("plan invariants over all valid N") {
  const std::size_t T = 12;
  for (std::size_t N = 1; T >= 2 * N + 2; ++N) {
    for (VariantKind k : {VariantKind::skip, VariantKind::middle_repeat, VariantKind::reverse,
                          VariantKind::random_order, VariantKind::parallel, VariantKind::looped_parallel}) {
      const auto plan = compile_variant(spec(k, N, 2, N * 31), T);
      CHECK_NOTHROW(validate_plan(plan, testing::small_config(T)));
      const auto b = middle_block(T, N);
      // first and last segments are untouched
      for (std::size_t i = 0; i < N; ++i) CHECK(plan.stages[i] == Stage{{i + 1}, MergeKind::identity});
      for (std::size_t i = 0; i < b.last.size(); ++i) {
        CHECK(plan.stages[plan.stages.size() - 1 - i] == Stage{{T - i}, MergeKind::identity});
      }
      if (k == VariantKind::reverse || k == VariantKind::random_order || k == VariantKind::parallel) {
        auto f = flatten(plan);
        std::sort(f.begin(), f.end());
        CHECK(f == iota(1, T));
      }
    }
    // reversing the reversed middle restores ascending order
    auto rev = compile_variant(spec(VariantKind::reverse, N), T);
    std::reverse(rev.stages.begin() + N, rev.stages.end() - static_cast<std::ptrdiff_t>(N + 1));
    CHECK(rev.stages == baseline_plan(T).stages);
  }
  for (std::size_t n = 1; n <= T; ++n) {
    CHECK(compile_variant(spec(VariantKind::skip_single, 0, 1, 0, n), T).stages.size() == T - 1);
  }
  for (std::size_t n = 1; n < T; ++n) {
    auto f = flatten(compile_variant(spec(VariantKind::switch_adjacent, 0, 1, 0, n), T));
    std::sort(f.begin(), f.end());
    CHECK(f == iota(1, T));
  }
}

TEST_CASE("plan text round trips") {
  for (VariantKind k : {VariantKind::baseline, VariantKind::parallel, VariantKind::looped_parallel,
                        VariantKind::random_order}) {
    const auto plan = compile_variant(spec(k, 3, 2, 9), 10);
    CHECK(parse_plan_text(plan_to_text(plan)) == plan.stages);
  }
  CHECK_THROWS_AS(parse_plan_text("[1]\nmean{2,x}\n"), FormatError);
  CHECK_THROWS_AS(parse_plan_text("{1}\n"), FormatError);
}

TEST_CASE("middle stage span") {
  const auto par = compile_variant(spec(VariantKind::parallel, 8), 32);
  const auto span = middle_stage_span(par);
  CHECK(span.begin == 8);
  CHECK(span.end == 9);
  ExecutionPlan base = baseline_plan(32);
  base.source.start_layer = 8;
  const auto bspan = middle_stage_span(base);
  CHECK(bspan.end - bspan.begin == 15);
  const auto skip = middle_stage_span(compile_variant(spec(VariantKind::skip, 8), 32));
  CHECK(skip.begin == skip.end);
  CHECK_THROWS_AS(middle_stage_span(compile_variant(spec(VariantKind::full_repeat, 0, 2), 32)), PlanError);
}

TEST_CASE("variant names round trip") {
  for (VariantKind k : {VariantKind::baseline, VariantKind::skip, VariantKind::middle_repeat, VariantKind::reverse,
                        VariantKind::random_order, VariantKind::parallel, VariantKind::looped_parallel,
                        VariantKind::full_repeat, VariantKind::skip_single, VariantKind::switch_adjacent}) {
    CHECK(parse_variant_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_variant_kind("shuffle"), PlanError);
}
