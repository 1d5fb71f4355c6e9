// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vspan/event.hpp"

namespace vspan::fsm {

// Attribute values captured while a machine runs (sockid, a2..a6, ...).
using Bindings = std::map<std::string, std::int64_t>;

// One member of the event space F: a named predicate over the bound context
// and the incoming event. Predicates, not raw names, because the matching
// rules relate event fields to previously captured ids.
struct EventClass {
  std::string label;
  std::function<bool(const Bindings&, const TraceEvent&)> matches;
};

// tr(p, f) = (q, b) plus an optional binding directive run on advance.
struct Transition {
  std::string from;
  std::string on;  // EventClass label
  std::string to;
  std::string action;
  std::function<void(Bindings&, const TraceEvent&)> bind;
};

// The sextuple <P, F, B, G, s, tr>. Immutable once built; shareable across
// threads and runs.
class StateMachineDef {
 public:
  StateMachineDef(std::vector<std::string> states,
                  std::vector<EventClass> classes,
                  std::vector<std::string> actions,
                  std::vector<std::string> accepting, std::string initial,
                  std::vector<Transition> table);

  const std::string& initial() const { return initial_; }
  bool is_state(const std::string& s) const { return states_.count(s) > 0; }
  bool accepts(const std::string& s) const { return accepting_.count(s) > 0; }
  const std::vector<Transition>& transitions_from(const std::string& s) const;
  const EventClass& event_class(const std::string& label) const;

 private:
  std::set<std::string> states_;
  std::map<std::string, EventClass> classes_;
  std::set<std::string> actions_;
  std::set<std::string> accepting_;
  std::string initial_;
  std::map<std::string, std::vector<Transition>> by_state_;
  std::vector<Transition> empty_;
};

struct StepResult {
  bool advanced = false;
  std::string state;   // state entered (advanced only)
  std::string action;  // action taken (advanced only)
};

struct TracePosition {
  std::int64_t event_index = -1;
  std::string state_entered;
  std::string action;
};

// A running instance: current state plus captured attribute values.
class MachineRun {
 public:
  explicit MachineRun(const StateMachineDef& def, Bindings initial = {});

  // Applies the unique matching transition, if any. More than one match is a
  // definition bug and throws NondeterministicMatch.
  StepResult step(const TraceEvent& ev, std::int64_t event_index = -1);

  bool is_accepting() const { return def_->accepts(current_); }
  const std::string& current() const { return current_; }
  const Bindings& bindings() const { return bindings_; }
  std::int64_t binding(const std::string& name, std::int64_t fallback = -1) const;
  const std::vector<TracePosition>& trace_positions() const {
    return positions_;
  }

  // Analyzer hook: re-arms the chain after a completed call when fan-out is
  // enabled. The target must be a state of the definition.
  void set_state(const std::string& state);

 private:
  const StateMachineDef* def_;
  std::string current_;
  Bindings bindings_;
  std::vector<TracePosition> positions_;
};

// Folds step over the events. Non-matching events are skipped; the returned
// state sequence starts at the initial state and records every transition.
std::pair<std::vector<std::string>, std::vector<std::string>> run_sequence(
    const StateMachineDef& def, std::span<const TraceEvent> events,
    Bindings initial = {});

}  // namespace vspan::fsm
