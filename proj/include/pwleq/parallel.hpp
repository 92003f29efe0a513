// Copyright 2026 The pwleq Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace pwleq {

/// Worker count: PWLEQ_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
int thread_budget();

/// Runs fn(0) .. fn(n-1), each exactly once, on up to thread_budget() threads.
/// Callers write results into per-index slots, so any reduction they perform
/// afterwards is in index order and independent of scheduling. The exception
/// from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pwleq
