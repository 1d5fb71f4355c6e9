// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vspan/event.hpp"

namespace vspan {

// A set of per-container trace files loaded together. Events carry the
// header clock offset already applied, so timestamps are comparable across
// traces.
struct Experiment {
  std::vector<TraceFile> traces;
  std::int64_t epoch_ns = 0;  // earliest adjusted timestamp (0 when empty)
  std::int64_t merged_count = 0;
};

// Where a merged event came from: trace index within the experiment plus the
// 1-based line number in its file.
struct MergeSource {
  std::size_t trace_index = 0;
  std::int64_t line = 0;
};

// ts' = ts + offset_ns, everything else unchanged.
TraceEvent apply_clock_offset(TraceEvent ev, std::int64_t offset_ns);

// Loads every *.trace file under `dir` (sorted by file name), applying each
// header's clock offset. `ground_truth.json` and anything else is ignored.
Experiment load_experiment(const std::string& dir);

// K-way merge of the per-file streams into one non-decreasing sequence.
// Ties break by (ts, event service name, file line, trace index), which makes
// merges of the same directory reproducible byte for byte.
void merge_streams(const Experiment& exp,
                   const std::function<void(const TraceEvent&,
                                            const MergeSource&)>& visit);

std::vector<TraceEvent> merge_streams(const Experiment& exp);

}  // namespace vspan
