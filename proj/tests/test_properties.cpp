// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "properties.hpp"

namespace {

constexpr int kCases = 1000;

class PropertySuite : public ::testing::TestWithParam<std::size_t> {};

TEST_P(PropertySuite, Holds) {
  const auto suite = props::all_suites().at(GetParam());
  const auto o = suite(kCases, 0x5eed + GetParam());
  EXPECT_GE(o.cases, kCases) << o.name;
  EXPECT_EQ(o.failures, 0) << o.name << ": " << o.first_failure;
}

INSTANTIATE_TEST_SUITE_P(All, PropertySuite,
                         ::testing::Range<std::size_t>(0, props::all_suites().size()));

}  // namespace
