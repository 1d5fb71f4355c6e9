// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/history_tree.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace vspan {

AttributePath AttributePath::child(std::string seg) const {
  AttributePath out = *this;
  out.segments.push_back(std::move(seg));
  return out;
}

std::string AttributePath::str() const {
  std::string out;
  for (const std::string& seg : segments) {
    out += '/';
    out += seg;
  }
  return out;
}

bool AttributePath::has_prefix(const AttributePath& prefix) const {
  if (prefix.segments.size() > segments.size()) return false;
  return std::equal(prefix.segments.begin(), prefix.segments.end(),
                    segments.begin());
}

void AttributePath::validate() const {
  if (segments.empty())
    throw Error(ErrorCode::OutOfRange, "empty attribute path");
  for (const std::string& seg : segments) {
    if (seg.empty())
      throw Error(ErrorCode::OutOfRange, "empty attribute path segment");
    if (seg.find('/') != std::string::npos)
      throw Error(ErrorCode::OutOfRange,
                  "attribute segment '" + seg + "' contains '/'");
  }
}

AttributePath parse_attribute_path(const std::string& s) {
  AttributePath path;
  std::string seg;
  std::size_t i = 0;
  if (!s.empty() && s[0] == '/') i = 1;
  for (; i < s.size(); ++i) {
    if (s[i] == '/') {
      path.segments.push_back(seg);
      seg.clear();
    } else {
      seg += s[i];
    }
  }
  path.segments.push_back(seg);
  path.validate();
  return path;
}

std::string attr_value_str(const AttrValue& v) {
  if (std::holds_alternative<std::monostate>(v)) return "null";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

HistoryTree::HistoryTree(Config cfg) : cfg_(cfg) {
  if (cfg_.node_capacity < 2 || cfg_.fanout < 2)
    throw Error(ErrorCode::OutOfRange,
                "node_capacity and fanout must both be >= 2");
  nodes_.push_back(Node{});  // root starts as the only (leaf) node, span [0, ∞)
  branch_.push_back(0);
}

void HistoryTree::set_attribute(std::int64_t t, const AttributePath& attr,
                                AttrValue value) {
  if (closed_) throw std::logic_error("HistoryTree: write after close");
  attr.validate();
  if (t < 0)
    throw Error(ErrorCode::BackwardsTime, "time " + std::to_string(t) + " < 0");

  auto it = ongoing_.find(attr);
  if (it == ongoing_.end()) {
    ongoing_.emplace(attr, std::make_pair(t, std::move(value)));
    attrs_.insert(attr);
  } else {
    auto& [start, prev] = it->second;
    if (t < start)
      throw Error(ErrorCode::BackwardsTime,
                  "t=" + std::to_string(t) + " precedes ongoing start " +
                      std::to_string(start) + " for " + attr.str());
    if (t == start) {
      prev = std::move(value);  // zero-length predecessor is dropped
    } else {
      insert_sealed(Interval{start, t - 1, attr, std::move(prev)});
      it->second = std::make_pair(t, std::move(value));
    }
  }
  current_end_ = std::max(current_end_, t);
}

void HistoryTree::close_history(std::int64_t t_end) {
  if (closed_) return;
  if (t_end < current_end_)
    throw Error(ErrorCode::BackwardsTime,
                "close at " + std::to_string(t_end) + " precedes current end " +
                    std::to_string(current_end_));
  for (auto& [attr, state] : ongoing_)
    insert_sealed(Interval{state.first, t_end, attr, std::move(state.second)});
  ongoing_.clear();
  for (int id : branch_) {
    nodes_[id].end = t_end;
    nodes_[id].sealed = true;
  }
  sealed_end_ = t_end;
  closed_ = true;
}

// Placement: the interval goes to the deepest open node whose span can start
// it. A full target either grows the tree to the right (when the interval
// begins after every sealed end, so the fresh sibling can hold it) or the
// interval climbs to the nearest ancestor with room. Mass seals at a single
// timestamp therefore pile into ancestors instead of spawning useless levels.
void HistoryTree::insert_sealed(Interval iv) {
  assert(iv.start_ns <= iv.end_ns);
  std::size_t target = 0;
  while (target + 1 < branch_.size() &&
         nodes_[branch_[target + 1]].start <= iv.start_ns)
    ++target;

  Node* node = &nodes_[branch_[target]];
  if (static_cast<int>(node->intervals.size()) >= cfg_.node_capacity) {
    if (iv.start_ns > tree_end_) {
      add_sibling(target);
      node = &nodes_[branch_.back()];  // fresh leaf, starts at tree_end_ + 1
    } else {
      node = &nodes_[branch_[0]];  // fall back to the root (may overfill)
      for (std::size_t i = target; i-- > 0;) {
        if (static_cast<int>(nodes_[branch_[i]].intervals.size()) <
            cfg_.node_capacity) {
          node = &nodes_[branch_[i]];
          break;
        }
      }
    }
  }
  tree_end_ = std::max(tree_end_, iv.end_ns);
  node->intervals.push_back(std::move(iv));
  ++interval_count_;
  any_interval_ = true;
}

void HistoryTree::add_sibling(std::size_t level) {
  if (level == 0) {
    add_new_root(tree_end_);
    return;
  }
  Node& parent = nodes_[branch_[level - 1]];
  if (static_cast<int>(parent.children.size()) >= cfg_.fanout) {
    add_sibling(level - 1);
    return;
  }
  seal_branch_from(level, tree_end_);
}

void HistoryTree::seal_branch_from(std::size_t level, std::int64_t split_time) {
  for (std::size_t i = level; i < branch_.size(); ++i) {
    Node& n = nodes_[branch_[i]];
    assert(n.start <= split_time);
    n.end = split_time;
    n.sealed = true;
  }
  for (std::size_t i = level; i < branch_.size(); ++i) {
    int parent_id = branch_[i - 1];
    int id = static_cast<int>(nodes_.size());
    Node fresh;
    fresh.start = split_time + 1;
    fresh.parent = parent_id;
    nodes_.push_back(std::move(fresh));
    nodes_[parent_id].children.push_back(id);
    branch_[i] = id;
  }
}

void HistoryTree::add_new_root(std::int64_t split_time) {
  for (int id : branch_) {
    Node& n = nodes_[id];
    assert(n.start <= split_time);
    n.end = split_time;
    n.sealed = true;
  }
  int old_root = branch_[0];
  int root_id = static_cast<int>(nodes_.size());
  Node root;
  root.start = 0;
  nodes_.push_back(std::move(root));
  nodes_[old_root].parent = root_id;
  nodes_[root_id].children.push_back(old_root);

  std::size_t old_depth = branch_.size();
  branch_.assign(1, root_id);
  for (std::size_t i = 0; i < old_depth; ++i) {
    int parent_id = branch_.back();
    int id = static_cast<int>(nodes_.size());
    Node fresh;
    fresh.start = split_time + 1;
    fresh.parent = parent_id;
    nodes_.push_back(std::move(fresh));
    nodes_[parent_id].children.push_back(id);
    branch_.push_back(id);
  }
}

std::map<AttributePath, AttrValue> HistoryTree::query_at(
    std::int64_t t, QueryStats* stats) const {
  if (!closed_) throw std::logic_error("HistoryTree: query before close");
  if (t < 0 || t > sealed_end_)
    throw Error(ErrorCode::OutOfRange,
                "t=" + std::to_string(t) + " outside [0, " +
                    std::to_string(sealed_end_) + "]");

  std::map<AttributePath, AttrValue> out;
  std::int64_t visited = 0;
  int id = branch_.empty() ? 0 : branch_[0];
  // Root id is stable: branch_[0] always names the current root.
  while (id >= 0) {
    const Node& n = nodes_[id];
    ++visited;
    for (const Interval& iv : n.intervals)
      if (iv.start_ns <= t && t <= iv.end_ns) out[iv.attr] = iv.value;
    int next = -1;
    for (int child : n.children) {
      const Node& c = nodes_[child];
      if (c.start <= t && t <= c.end) {
        next = child;
        break;
      }
    }
    id = next;
  }
  if (stats) stats->nodes_visited = visited;
  return out;
}

std::vector<Interval> HistoryTree::query_history(
    const AttributePath& attr) const {
  if (!closed_) throw std::logic_error("HistoryTree: query before close");
  if (!attrs_.count(attr))
    throw Error(ErrorCode::UnknownAttribute, "no history for " + attr.str());
  std::vector<Interval> out;
  for (const Node& n : nodes_)
    for (const Interval& iv : n.intervals)
      if (iv.attr == attr) out.push_back(iv);
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) {
    return a.start_ns < b.start_ns;
  });
  return out;
}

std::vector<AttributePath> HistoryTree::subtree(
    const AttributePath& prefix) const {
  prefix.validate();
  std::vector<AttributePath> out;
  // attrs_ is ordered, so the matching range is contiguous; a plain scan of
  // the lower bound suffices at this scale.
  for (auto it = attrs_.lower_bound(prefix); it != attrs_.end(); ++it) {
    if (!it->has_prefix(prefix)) break;
    out.push_back(*it);
  }
  return out;
}

std::vector<Interval> HistoryTree::all_intervals() const {
  std::vector<Interval> out;
  out.reserve(interval_count_);
  for (const Node& n : nodes_)
    for (const Interval& iv : n.intervals) out.push_back(iv);
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) {
    if (a.attr != b.attr) return a.attr < b.attr;
    return a.start_ns < b.start_ns;
  });
  return out;
}

void HistoryTree::validate_tree() const {
  if (!closed_) throw std::logic_error("validate_tree: tree not closed");
  for (const Node& n : nodes_) {
    if (!n.sealed) throw std::logic_error("validate_tree: unsealed node");
    if (any_interval_ && n.parent == -1 && n.start != 0)
      throw std::logic_error("validate_tree: root does not start at 0");
    for (const Interval& iv : n.intervals) {
      if (iv.start_ns > iv.end_ns)
        throw std::logic_error("validate_tree: inverted interval");
      if (iv.start_ns < n.start || iv.end_ns > n.end)
        throw std::logic_error("validate_tree: interval escapes node span");
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const Node& c = nodes_[n.children[i]];
      if (c.start < n.start || c.end > n.end)
        throw std::logic_error("validate_tree: child span escapes parent");
      if (i == 0 && c.start != n.start)
        throw std::logic_error("validate_tree: first child not at parent start");
      if (i + 1 < n.children.size()) {
        const Node& next = nodes_[n.children[i + 1]];
        if (next.start != c.end + 1)
          throw std::logic_error("validate_tree: sibling spans not contiguous");
      } else if (c.end != n.end) {
        throw std::logic_error("validate_tree: last child not at parent end");
      }
    }
  }
  // Per-attribute disjointness.
  std::vector<Interval> all = all_intervals();
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].attr == all[i - 1].attr &&
        all[i].start_ns <= all[i - 1].end_ns)
      throw std::logic_error("validate_tree: overlapping intervals for " +
                             all[i].attr.str());
  }
}

}  // namespace vspan
