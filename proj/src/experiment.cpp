// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <queue>

#include "vspan/log.hpp"

namespace vspan {

namespace fs = std::filesystem;

TraceEvent apply_clock_offset(TraceEvent ev, std::int64_t offset_ns) {
  std::int64_t adjusted = 0;
  if (__builtin_add_overflow(ev.ts, offset_ns, &adjusted))
    throw Error(ErrorCode::OverflowedTimestamp,
                "ts " + std::to_string(ev.ts) + " + offset " +
                    std::to_string(offset_ns) + " overflows",
                "ts");
  ev.ts = adjusted;
  return ev;
}

Experiment load_experiment(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error(ErrorCode::IoError, "'" + dir + "' is not a directory");

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".trace")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw Error(ErrorCode::EmptyExperiment,
                "no *.trace files in '" + dir + "'");

  Experiment exp;
  bool any_event = false;
  for (const std::string& path : paths) {
    TraceFile tf = read_trace_file(path);
    for (TraceEvent& ev : tf.events) {
      ev = apply_clock_offset(std::move(ev), tf.header.clock_offset_ns);
      if (!any_event || ev.ts < exp.epoch_ns) exp.epoch_ns = ev.ts;
      any_event = true;
    }
    exp.merged_count += static_cast<std::int64_t>(tf.events.size());
    exp.traces.push_back(std::move(tf));
  }
  log::info("loaded experiment '" + dir + "': " +
            std::to_string(exp.traces.size()) + " traces, " +
            std::to_string(exp.merged_count) + " events");
  return exp;
}

namespace {

struct Cursor {
  std::size_t trace = 0;
  std::size_t index = 0;  // next event within the trace
};

struct CursorOrder {
  const Experiment* exp;

  // std::priority_queue is a max-heap; return true when a sorts AFTER b.
  bool operator()(const Cursor& a, const Cursor& b) const {
    const TraceEvent& ea = exp->traces[a.trace].events[a.index];
    const TraceEvent& eb = exp->traces[b.trace].events[b.index];
    if (ea.ts != eb.ts) return ea.ts > eb.ts;
    if (ea.service != eb.service) return ea.service > eb.service;
    std::int64_t la = static_cast<std::int64_t>(a.index);
    std::int64_t lb = static_cast<std::int64_t>(b.index);
    if (la != lb) return la > lb;
    return a.trace > b.trace;
  }
};

}  // namespace

void merge_streams(const Experiment& exp,
                   const std::function<void(const TraceEvent&,
                                            const MergeSource&)>& visit) {
  std::priority_queue<Cursor, std::vector<Cursor>, CursorOrder> heap{
      CursorOrder{&exp}};
  for (std::size_t i = 0; i < exp.traces.size(); ++i)
    if (!exp.traces[i].events.empty()) heap.push(Cursor{i, 0});

  while (!heap.empty()) {
    Cursor c = heap.top();
    heap.pop();
    const TraceFile& tf = exp.traces[c.trace];
    // Header occupies line 1, so event i sits on line i + 2.
    visit(tf.events[c.index],
          MergeSource{c.trace, static_cast<std::int64_t>(c.index) + 2});
    if (++c.index < tf.events.size()) heap.push(c);
  }
}

std::vector<TraceEvent> merge_streams(const Experiment& exp) {
  std::vector<TraceEvent> out;
  out.reserve(static_cast<std::size_t>(exp.merged_count));
  merge_streams(exp, [&out](const TraceEvent& ev, const MergeSource&) {
    out.push_back(ev);
  });
  return out;
}

}  // namespace vspan
