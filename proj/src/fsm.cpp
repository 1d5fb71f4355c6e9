// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/fsm.hpp"

#include <stdexcept>

namespace vspan::fsm {

StateMachineDef::StateMachineDef(std::vector<std::string> states,
                                 std::vector<EventClass> classes,
                                 std::vector<std::string> actions,
                                 std::vector<std::string> accepting,
                                 std::string initial,
                                 std::vector<Transition> table)
    : states_(states.begin(), states.end()),
      actions_(actions.begin(), actions.end()),
      initial_(std::move(initial)) {
  for (EventClass& c : classes) {
    if (!c.matches) throw std::invalid_argument("event class without predicate");
    std::string label = c.label;
    classes_.emplace(std::move(label), std::move(c));
  }
  if (!states_.count(initial_))
    throw std::invalid_argument("initial state '" + initial_ +
                                "' not in state space");
  for (std::string& g : accepting) {
    if (!states_.count(g))
      throw std::invalid_argument("accepting state '" + g +
                                  "' not in state space");
    accepting_.insert(std::move(g));
  }
  for (Transition& t : table) {
    if (!states_.count(t.from) || !states_.count(t.to))
      throw std::invalid_argument("transition touches unknown state");
    if (!classes_.count(t.on))
      throw std::invalid_argument("transition uses unknown event class '" +
                                  t.on + "'");
    if (!actions_.count(t.action))
      throw std::invalid_argument("transition uses unknown action '" +
                                  t.action + "'");
    by_state_[t.from].push_back(std::move(t));
  }
}

const std::vector<Transition>& StateMachineDef::transitions_from(
    const std::string& s) const {
  auto it = by_state_.find(s);
  return it == by_state_.end() ? empty_ : it->second;
}

const EventClass& StateMachineDef::event_class(const std::string& label) const {
  return classes_.at(label);
}

MachineRun::MachineRun(const StateMachineDef& def, Bindings initial)
    : def_(&def), current_(def.initial()), bindings_(std::move(initial)) {}

StepResult MachineRun::step(const TraceEvent& ev, std::int64_t event_index) {
  const Transition* matched = nullptr;
  for (const Transition& t : def_->transitions_from(current_)) {
    if (!def_->event_class(t.on).matches(bindings_, ev)) continue;
    if (matched != nullptr)
      throw Error(ErrorCode::NondeterministicMatch,
                  "classes '" + matched->on + "' and '" + t.on +
                      "' both match in state " + current_);
    matched = &t;
  }
  if (matched == nullptr) return StepResult{};

  if (matched->bind) matched->bind(bindings_, ev);
  current_ = matched->to;
  positions_.push_back(TracePosition{event_index, current_, matched->action});
  return StepResult{true, current_, matched->action};
}

std::int64_t MachineRun::binding(const std::string& name,
                                 std::int64_t fallback) const {
  auto it = bindings_.find(name);
  return it == bindings_.end() ? fallback : it->second;
}

void MachineRun::set_state(const std::string& state) {
  if (!def_->is_state(state))
    throw std::invalid_argument("set_state: unknown state '" + state + "'");
  current_ = state;
}

std::pair<std::vector<std::string>, std::vector<std::string>> run_sequence(
    const StateMachineDef& def, std::span<const TraceEvent> events,
    Bindings initial) {
  MachineRun run(def, std::move(initial));
  std::vector<std::string> states{def.initial()};
  std::vector<std::string> actions;
  for (std::size_t i = 0; i < events.size(); ++i) {
    StepResult r = run.step(events[i], static_cast<std::int64_t>(i));
    if (r.advanced) {
      states.push_back(r.state);
      actions.push_back(r.action);
    }
  }
  return {std::move(states), std::move(actions)};
}

}  // namespace vspan::fsm
