// Copyright 2026 The simulst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "simulst/segmentation/plan.hpp"

namespace simulst::segmentation {
namespace {

using B = std::vector<std::size_t>;

std::vector<WordSpan> spans(std::initializer_list<std::pair<std::size_t, std::size_t>> list) {
  std::vector<WordSpan> out;
  for (auto [s, e] : list) out.push_back({"", s, e});
  return out;
}

TEST(FixedPlan, WaitThenStride) {
  EXPECT_EQ(fixed_plan(130, 100, 10).boundaries, (B{100, 110, 120, 130}));
  EXPECT_EQ(fixed_plan(95, 100, 10).boundaries, (B{95}));
  EXPECT_EQ(fixed_plan(125, 100, 10).boundaries, (B{100, 110, 120, 125}));
  EXPECT_EQ(fixed_plan(25, 0, 10).boundaries, (B{10, 20, 25}));
  EXPECT_EQ(fixed_plan(130, 100, 10).wait(), 100u);
}

TEST(FixedPlan, Errors) {
  EXPECT_THROW(fixed_plan(0, 10, 10), ContractError);
  EXPECT_THROW(fixed_plan(10, 10, 0), ContractError);
}

TEST(OraclePlan, CumulativeWait) {
  const auto w = spans({{0, 40}, {40, 80}, {80, 120}});
  EXPECT_EQ(oracle_word_plan(120, w, 100).boundaries, (B{120}));
  EXPECT_EQ(oracle_word_plan(120, w, 0).boundaries, (B{40, 80, 120}));
  EXPECT_EQ(oracle_word_plan(120, w, 50).boundaries, (B{80, 120}));
  EXPECT_EQ(oracle_word_plan(120, w, 80).boundaries, (B{80, 120}));
  EXPECT_EQ(oracle_word_plan(120, w, 500).boundaries, (B{120}));
}

TEST(OraclePlan, TrailingFramesJoinTheLastRead) {
  const auto plan = oracle_word_plan(150, spans({{0, 40}, {40, 80}, {80, 120}}), 0);
  EXPECT_EQ(plan.boundaries, (B{40, 80, 150}));
  ASSERT_EQ(plan.warnings.size(), 1u);
}

TEST(OraclePlan, GapsWarn) {
  const auto plan = oracle_word_plan(100, spans({{0, 30}, {50, 100}}), 0);
  EXPECT_EQ(plan.boundaries, (B{30, 100}));
  EXPECT_EQ(plan.warnings.size(), 1u);
}

TEST(OraclePlan, Errors) {
  EXPECT_THROW(oracle_word_plan(100, {}, 0), ContractError);
  EXPECT_THROW(oracle_word_plan(100, spans({{0, 60}, {50, 100}}), 0), ContractError);
  EXPECT_THROW(oracle_word_plan(100, spans({{0, 120}}), 0), ContractError);
}

TEST(RandomPlan, DegenerateUniform) {
  EXPECT_EQ(random_plan(35, 10, 10, 3).boundaries, (B{10, 20, 30, 35}));
  RandomPlanOptions merge;
  merge.merge_short_tail = true;
  EXPECT_EQ(random_plan(35, 10, 10, 3, merge).boundaries, (B{10, 20, 35}));
}

TEST(RandomPlan, SizesWithinBoundsAndSumToLength) {
  const std::pair<std::size_t, std::size_t> pairs[] = {{5, 10}, {5, 20}, {5, 50}, {5, 100}, {10, 50}, {10, 100}};
  for (auto [lo, hi] : pairs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto plan = random_plan(317, lo, hi, seed);
      plan.validate(317);
      const auto sizes = plan.segment_sizes();
      EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 317u);
      for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        EXPECT_GE(sizes[i], lo);
        EXPECT_LE(sizes[i], hi);
      }
      EXPECT_GE(sizes.back(), 1u);
    }
  }
}

TEST(RandomPlan, SeedReproducible) {
  EXPECT_EQ(random_plan(500, 5, 50, 9).boundaries, random_plan(500, 5, 50, 9).boundaries);
  EXPECT_NE(random_plan(500, 5, 50, 9).boundaries, random_plan(500, 5, 50, 10).boundaries);
  EXPECT_THROW(random_plan(100, 0, 5, 1), ContractError);
  EXPECT_THROW(random_plan(100, 6, 5, 1), ContractError);
}

TEST(Plan, Validate) {
  SegmentationPlan p;
  EXPECT_THROW(p.validate(10), ContractError);
  p.boundaries = {5, 5, 10};
  EXPECT_THROW(p.validate(10), ContractError);
  p.boundaries = {5, 9};
  EXPECT_THROW(p.validate(10), ContractError);
  p.boundaries = {5, 10};
  EXPECT_NO_THROW(p.validate(10));
  EXPECT_EQ(p.segment_sizes(), (B{5, 5}));
}

TEST(Policy, Names) {
  EXPECT_EQ(parse_policy("oracle"), Policy::kOracleWords);
  EXPECT_EQ(to_string(Policy::kRandom), "random");
  EXPECT_THROW(parse_policy("vad"), ConfigError);
}

TEST(BoundaryFile, RoundTrip) {
  std::ostringstream os;
  write_boundaries(os, "utt00001", spans({{0, 24}, {24, 56}}));
  write_boundaries(os, "utt00002", spans({{0, 8}}));
  std::istringstream is(os.str());
  const auto table = parse_boundaries(is);
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table.at("utt00001")[1].start, 24u);
  EXPECT_EQ(table.at("utt00001")[1].end, 56u);
  EXPECT_EQ(table.at("utt00002").size(), 1u);
}

TEST(BoundaryFile, MalformedLinesNameTheLocation) {
  std::istringstream missing_tab("utt1 0:8\n");
  EXPECT_THROW(parse_boundaries(missing_tab, "b.txt"), IoError);
  std::istringstream bad_span("utt1\t0-8\n");
  try {
    parse_boundaries(bad_span, "b.txt");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("b.txt:1"), std::string::npos);
  }
  EXPECT_THROW(load_boundaries("/nonexistent/bnd.txt"), IoError);
}

}  // namespace
}  // namespace simulst::segmentation
