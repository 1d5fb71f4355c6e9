// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vspan/errors.hpp"

namespace vspan {

// Hierarchical attribute key, e.g. /requests/gateway/7/state.
struct AttributePath {
  std::vector<std::string> segments;

  AttributePath() = default;
  explicit AttributePath(std::vector<std::string> segs)
      : segments(std::move(segs)) {}

  AttributePath child(std::string seg) const;
  std::string str() const;  // "/a/b/c"
  bool has_prefix(const AttributePath& prefix) const;
  void validate() const;  // non-empty, segments non-empty and '/'-free

  auto operator<=>(const AttributePath&) const = default;
};

AttributePath parse_attribute_path(const std::string& s);

// Attribute values are integers, text, or null.
using AttrValue = std::variant<std::monostate, std::int64_t, std::string>;

std::string attr_value_str(const AttrValue& v);

struct Interval {
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;  // inclusive
  AttributePath attr;
  AttrValue value;

  bool operator==(const Interval&) const = default;
};

struct QueryStats {
  std::int64_t nodes_visited = 0;
};

// Interval store for analysis state. Attribute timelines are written
// forward (each new value seals the previous one at t-1); sealed intervals
// land in a balanced tree whose sibling node spans partition time, so a
// point query descends a single root-to-leaf path.
//
// Single writer until close_history(); any number of concurrent readers
// afterwards.
class HistoryTree {
 public:
  struct Config {
    int node_capacity = 64;  // max intervals per node (soft: root may overfill
                             // when many states seal at one timestamp)
    int fanout = 16;         // max children per core node
  };

  explicit HistoryTree(Config cfg = {});

  // Opens state (t, value) for attr; the previous ongoing value, if any,
  // seals as [prev_start, t-1]. Setting again at the same t replaces the
  // ongoing value. Throws BackwardsTime when t precedes the ongoing start.
  void set_attribute(std::int64_t t, const AttributePath& attr,
                     AttrValue value);

  // Seals every ongoing state at t_end and freezes the tree. Idempotent.
  void close_history(std::int64_t t_end);
  bool closed() const { return closed_; }

  // Value of every attribute whose sealed interval contains t.
  std::map<AttributePath, AttrValue> query_at(std::int64_t t,
                                              QueryStats* stats = nullptr) const;

  // All sealed intervals for attr, sorted by start (disjoint by construction).
  std::vector<Interval> query_history(const AttributePath& attr) const;

  // Every known attribute path having `prefix` as a (proper or improper)
  // prefix, lexicographically sorted.
  std::vector<AttributePath> subtree(const AttributePath& prefix) const;

  // All sealed intervals sorted by (attr, start); for --dump-sht and oracles.
  std::vector<Interval> all_intervals() const;

  std::int64_t sealed_end() const { return sealed_end_; }
  std::int64_t current_end() const { return current_end_; }
  int depth() const { return static_cast<int>(branch_.size()); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t interval_count() const { return interval_count_; }
  const Config& config() const { return cfg_; }

  // Structural self-check (containment, sibling partition, per-attribute
  // disjointness). Throws std::logic_error on violation. Closed trees only.
  void validate_tree() const;

 private:
  struct Node {
    std::int64_t start = 0;
    std::int64_t end = 0;
    bool sealed = false;
    int parent = -1;
    std::vector<int> children;
    std::vector<Interval> intervals;
  };

  void insert_sealed(Interval iv);
  void add_sibling(std::size_t level);
  void add_new_root(std::int64_t split_time);
  void seal_branch_from(std::size_t level, std::int64_t split_time);

  Config cfg_;
  std::vector<Node> nodes_;
  std::vector<int> branch_;  // open path, root first
  std::map<AttributePath, std::pair<std::int64_t, AttrValue>> ongoing_;
  std::set<AttributePath> attrs_;
  std::int64_t tree_end_ = 0;     // max sealed interval end so far
  std::int64_t current_end_ = 0;  // latest time seen by set_attribute
  std::int64_t sealed_end_ = 0;
  std::size_t interval_count_ = 0;
  bool closed_ = false;
  bool any_interval_ = false;
};

}  // namespace vspan
