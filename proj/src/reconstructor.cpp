// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/reconstructor.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "vspan/log.hpp"

namespace vspan {

namespace {

using fsm::Bindings;
using fsm::EventClass;
using fsm::StateMachineDef;
using fsm::Transition;

std::optional<std::int64_t> bound(const Bindings& b, const char* key) {
  auto it = b.find(key);
  if (it == b.end()) return std::nullopt;
  return it->second;
}

bool async_kind(const TraceEvent& ev, const char* kind) {
  return ev.name == EventName::async_context && ev.async_ctx().kind == kind;
}

StateMachineDef make_ittcr(bool allow_fanout) {
  std::vector<std::string> states{"S1", "S2", "S3", "S4", "S5", "S6", "CLOSED"};

  std::vector<EventClass> classes;
  classes.push_back({"after_in_request_ctx",
                     [](const Bindings& b, const TraceEvent& ev) {
                       return async_kind(ev, "after") &&
                              bound(b, "sockid") == ev.async_ctx().ctx_id;
                     }});
  classes.push_back({"constructor_in_chain",
                     [](const Bindings& b, const TraceEvent& ev) {
                       return async_kind(ev, "constructor") &&
                              bound(b, "a2") == ev.async_ctx().ctx_id;
                     }});
  classes.push_back({"tcpwrap_in_chain",
                     [](const Bindings& b, const TraceEvent& ev) {
                       return async_kind(ev, "TCPWRAP") &&
                              bound(b, "a3") == ev.async_ctx().ctx_id;
                     }});
  classes.push_back({"getaddrinfo_on_socket",
                     [](const Bindings& b, const TraceEvent& ev) {
                       return async_kind(ev, "GETADDRINFOREQWRAP") &&
                              bound(b, "a4") == ev.async_ctx().ctx_id;
                     }});
  classes.push_back({"client_request_follows_lookup",
                     [](const Bindings& b, const TraceEvent& ev) {
                       if (!async_kind(ev, "HTTPCLIENTREQUEST")) return false;
                       auto a5 = bound(b, "a5");
                       return a5 && ev.async_ctx().async_id == *a5 + 1;
                     }});
  classes.push_back({"server_response_on_socket",
                     [](const Bindings& b, const TraceEvent& ev) {
                       return ev.name == EventName::http_server_response &&
                              bound(b, "sockid") == ev.http().sockid;
                     }});
  if (allow_fanout)
    classes.push_back({"client_response_on_socket",
                       [](const Bindings& b, const TraceEvent& ev) {
                         return ev.name == EventName::http_client_response &&
                                bound(b, "a4") == ev.http().sockid;
                       }});

  std::vector<std::string> actions{
      "capture_after",     "capture_constructor",    "capture_socket",
      "capture_addrinfo",  "capture_client_request", "seal_request",
      "arm_next_call"};

  auto capture = [](const char* name) {
    return [name](Bindings& b, const TraceEvent& ev) {
      b[name] = ev.async_ctx().async_id;
    };
  };

  std::vector<Transition> table;
  table.push_back({"S1", "after_in_request_ctx", "S2", "capture_after",
                   capture("a2")});
  table.push_back({"S2", "constructor_in_chain", "S3", "capture_constructor",
                   capture("a3")});
  table.push_back({"S3", "tcpwrap_in_chain", "S4", "capture_socket",
                   capture("a4")});
  table.push_back({"S4", "getaddrinfo_on_socket", "S5", "capture_addrinfo",
                   capture("a5")});
  table.push_back({"S5", "client_request_follows_lookup", "S6",
                   "capture_client_request", capture("a6")});
  for (const char* s : {"S1", "S2", "S3", "S4", "S5", "S6"})
    table.push_back({s, "server_response_on_socket", "CLOSED", "seal_request",
                     nullptr});
  if (allow_fanout)
    table.push_back(
        {"S6", "client_response_on_socket", "S2", "arm_next_call", nullptr});

  return StateMachineDef(std::move(states), std::move(classes),
                         std::move(actions), {"S6", "CLOSED"}, "S1",
                         std::move(table));
}

SubsystemState state_from_label(const std::string& label) {
  if (label == "S1") return SubsystemState::S1_RECEIVED;
  if (label == "S2") return SubsystemState::S2_AFTER;
  if (label == "S3") return SubsystemState::S3_CONSTRUCTED;
  if (label == "S4") return SubsystemState::S4_TCPWRAP;
  if (label == "S5") return SubsystemState::S5_GETADDR;
  if (label == "S6") return SubsystemState::S6_CLIENT_REQ;
  return SubsystemState::CLOSED;
}

// Binding captured on entry to each chain state.
const char* binding_for_state(const std::string& label) {
  if (label == "S2") return "a2";
  if (label == "S3") return "a3";
  if (label == "S4") return "a4";
  if (label == "S5") return "a5";
  if (label == "S6") return "a6";
  return nullptr;
}

std::string http_operation(const TraceEvent& ev) {
  return ev.http().method + " " + ev.http().url;
}

}  // namespace

const char* subsystem_state_str(SubsystemState s) {
  switch (s) {
    case SubsystemState::S1_RECEIVED:
      return "S1";
    case SubsystemState::S2_AFTER:
      return "S2";
    case SubsystemState::S3_CONSTRUCTED:
      return "S3";
    case SubsystemState::S4_TCPWRAP:
      return "S4";
    case SubsystemState::S5_GETADDR:
      return "S5";
    case SubsystemState::S6_CLIENT_REQ:
      return "S6";
    case SubsystemState::CLOSED:
      return "CLOSED";
  }
  return "?";
}

const fsm::StateMachineDef& ittcr_machine(bool allow_fanout) {
  static const StateMachineDef plain = make_ittcr(false);
  static const StateMachineDef with_fanout = make_ittcr(true);
  return allow_fanout ? with_fanout : plain;
}

SubsystemState RequestSubsystem::state() const {
  if (closed) return SubsystemState::CLOSED;
  return state_from_label(run.current());
}

std::string RequestSubsystem::operation() const {
  return http_operation(server_req);
}

Analyzer::Analyzer(Options opt)
    : opt_(opt), def_(ittcr_machine(opt.allow_fanout)), sht_(opt.sht) {}

void Analyzer::record_state(RequestSubsystem& sub, std::int64_t ts,
                            const std::string& state_label) {
  sht_.set_attribute(ts, sub.sht_anchor.child("state"), state_label);
}

std::vector<int>& Analyzer::open_on(const std::string& service) {
  return open_by_service_[service];
}

void Analyzer::drop_open(RequestSubsystem& sub) {
  open_by_sock_.erase({sub.service, sub.sockid});
  for (const CallRecord& call : sub.calls)
    if (call.a4 >= 0 && !call.client_resp)
      awaiting_by_client_sock_.erase({sub.service, call.a4});
  // open_by_service_ entries are skipped lazily and compacted on insert.
}

RequestSubsystem& Analyzer::start_subsystem(const TraceEvent& ev) {
  if (ev.name != EventName::http_server_request)
    throw std::invalid_argument("start_subsystem wants http_server_request");
  const std::int64_t sockid = ev.http().sockid;
  auto key = std::make_pair(ev.service, sockid);
  if (open_by_sock_.count(key))
    throw Error(ErrorCode::DuplicateOpenSocket,
                "service " + ev.service + " already has open subsystem on sockid " +
                    std::to_string(sockid));

  RequestSubsystem sub(def_);
  sub.id = static_cast<int>(subs_.size());
  sub.service = ev.service;
  sub.sockid = sockid;
  sub.server_req = ev;
  sub.start_ns = ev.ts;
  sub.sht_anchor =
      AttributePath({"requests", ev.service, std::to_string(sub.id)});
  sub.run = fsm::MachineRun(def_, Bindings{{"sockid", sockid}});
  subs_.push_back(std::move(sub));
  RequestSubsystem& ref = subs_.back();

  open_by_sock_.emplace(key, ref.id);
  std::vector<int>& open = open_on(ev.service);
  if (open.size() >= 64) {
    std::size_t live = 0;
    for (int id : open)
      if (!subs_[id].closed) ++live;
    if (live * 2 < open.size())
      std::erase_if(open, [this](int id) { return subs_[id].closed; });
  }
  open.push_back(ref.id);

  record_state(ref, ev.ts, "S1");
  sht_.set_attribute(ev.ts, ref.sht_anchor.child("method"), ev.http().method);
  sht_.set_attribute(ev.ts, ref.sht_anchor.child("url"), ev.http().url);
  sht_.set_attribute(ev.ts, ref.sht_anchor.child("sockid"), sockid);
  return ref;
}

bool Analyzer::try_advance(RequestSubsystem& sub, const TraceEvent& ev) {
  if (ev.name != EventName::async_context || sub.closed) return false;
  if (ev.service != sub.service) return false;
  fsm::StepResult r = sub.run.step(ev, event_index_);
  if (!r.advanced) return false;

  record_state(sub, ev.ts, r.state);
  if (const char* name = binding_for_state(r.state))
    sht_.set_attribute(ev.ts, sub.sht_anchor.child(name), sub.run.binding(name));

  if (r.state == "S6") {
    // The chain is complete: snapshot the call and wait for the socket
    // traffic on a4.
    CallRecord call;
    call.a3 = sub.a3();
    call.a4 = sub.a4();
    call.a5 = sub.a5();
    call.a6 = sub.a6();
    sub.calls.push_back(call);
    awaiting_by_client_sock_[{sub.service, call.a4}] = sub.id;
  }
  return true;
}

void Analyzer::attach_client_request(RequestSubsystem& sub,
                                     const TraceEvent& ev) {
  if (ev.name != EventName::http_client_request)
    throw std::invalid_argument("attach_client_request wants http_client_request");
  if (sub.state() != SubsystemState::S6_CLIENT_REQ)
    throw Error(ErrorCode::NoMatchingSubsystem,
                "subsystem " + std::to_string(sub.id) + " is in state " +
                    subsystem_state_str(sub.state()) + ", not S6");
  for (CallRecord& call : sub.calls) {
    if (call.a4 != ev.http().sockid) continue;
    if (call.client_req)
      throw Error(ErrorCode::NoMatchingSubsystem,
                  "client request already attached on sockid " +
                      std::to_string(call.a4));
    call.client_req = ev;
    sht_.set_attribute(ev.ts, sub.sht_anchor.child("client"), call.a4);
    return;
  }
  throw Error(ErrorCode::NoMatchingSubsystem,
              "no S6 subsystem on " + ev.service + " owns client sockid " +
                  std::to_string(ev.http().sockid));
}

RequestSubsystem& Analyzer::correlate_client_response(const TraceEvent& ev) {
  if (ev.name != EventName::http_client_response)
    throw std::invalid_argument(
        "correlate_client_response wants http_client_response");
  auto it = awaiting_by_client_sock_.find({ev.service, ev.http().sockid});
  if (it == awaiting_by_client_sock_.end())
    throw Error(ErrorCode::NoMatchingSubsystem,
                "no open client call on " + ev.service + " for sockid " +
                    std::to_string(ev.http().sockid));
  RequestSubsystem& sub = subs_[it->second];

  CallRecord* open_call = nullptr;
  for (CallRecord& call : sub.calls)
    if (call.a4 == ev.http().sockid && !call.client_resp) open_call = &call;
  if (open_call == nullptr)
    throw Error(ErrorCode::NoMatchingSubsystem,
                "client call on sockid " + std::to_string(ev.http().sockid) +
                    " already closed");

  awaiting_by_client_sock_.erase(it);
  open_call->client_resp = ev;
  sht_.set_attribute(ev.ts, sub.sht_anchor.child("client"), AttrValue{});
  if (opt_.allow_fanout) {
    fsm::StepResult r = sub.run.step(ev, event_index_);
    if (r.advanced) record_state(sub, ev.ts, r.state);
  }
  return sub;
}

RequestSubsystem& Analyzer::correlate_server_response(const TraceEvent& ev) {
  if (ev.name != EventName::http_server_response)
    throw std::invalid_argument(
        "correlate_server_response wants http_server_response");
  auto it = open_by_sock_.find({ev.service, ev.http().sockid});
  if (it == open_by_sock_.end())
    throw Error(ErrorCode::NoMatchingSubsystem,
                "no open subsystem on " + ev.service + " for sockid " +
                    std::to_string(ev.http().sockid));
  RequestSubsystem& sub = subs_[it->second];

  fsm::StepResult r = sub.run.step(ev, event_index_);
  if (!r.advanced || r.state != "CLOSED")
    throw std::logic_error("server response did not close subsystem " +
                           std::to_string(sub.id));
  sub.server_resp = ev;
  sub.end_ns = ev.ts;
  sub.closed = true;
  record_state(sub, ev.ts, "CLOSED");
  drop_open(sub);
  return sub;
}

void Analyzer::handle_async(const TraceEvent& ev) {
  for (int id : open_on(ev.service)) {
    RequestSubsystem& sub = subs_[id];
    if (sub.closed) continue;
    if (try_advance(sub, ev)) return;
  }
  ++ignored_async_;  // ambient VM activity; not an orphan
}

void Analyzer::handle_client_request(const TraceEvent& ev) {
  auto it = awaiting_by_client_sock_.find({ev.service, ev.http().sockid});
  if (it == awaiting_by_client_sock_.end())
    throw Error(ErrorCode::NoMatchingSubsystem,
                "no S6 subsystem on " + ev.service + " owns client sockid " +
                    std::to_string(ev.http().sockid));
  attach_client_request(subs_[it->second], ev);
}

void Analyzer::handle_redis(const TraceEvent& ev) {
  RequestSubsystem* owner = nullptr;
  for (int id : open_on(ev.service)) {
    RequestSubsystem& sub = subs_[id];
    if (sub.closed || sub.start_ns > ev.ts) continue;
    if (owner == nullptr || sub.start_ns > owner->start_ns ||
        (sub.start_ns == owner->start_ns && sub.id > owner->id))
      owner = &sub;
  }
  if (owner == nullptr)
    throw Error(ErrorCode::NoMatchingSubsystem,
                "no open subsystem on " + ev.service + " encloses redis command");

  const RedisCommandPayload& p = ev.redis();
  RedisRecord rec{p.cmd, p.key, ev.ts, p.duration_us * 1000};
  AttributePath attr = owner->sht_anchor.child("redis").child(
      std::to_string(owner->redis.size()));
  sht_.set_attribute(ev.ts, attr, p.cmd);
  sht_.set_attribute(ev.ts + rec.duration_ns, attr, AttrValue{});
  owner->redis.push_back(std::move(rec));
}

void Analyzer::process_event(const TraceEvent& ev) {
  if (finished_) throw std::logic_error("process_event after finish");
  ++event_index_;
  ++events_processed_;
  last_ts_ = std::max(last_ts_, ev.ts);
  try {
    switch (ev.name) {
      case EventName::http_server_request:
        start_subsystem(ev);
        break;
      case EventName::async_context:
        handle_async(ev);
        break;
      case EventName::http_client_request:
        handle_client_request(ev);
        break;
      case EventName::http_client_response:
        correlate_client_response(ev);
        break;
      case EventName::http_server_response:
        correlate_server_response(ev);
        break;
      case EventName::redis_command:
        handle_redis(ev);
        break;
    }
  } catch (const Error& e) {
    orphans_.push_back(OrphanRecord{ev, e.code(), e.message()});
  }
}

void Analyzer::link_cross_service() {
  struct CallRef {
    std::int64_t ts;
    int sub;
    std::size_t call;
  };
  std::vector<CallRef> calls;
  for (const RequestSubsystem& sub : subs_)
    for (std::size_t k = 0; k < sub.calls.size(); ++k)
      if (sub.calls[k].client_req)
        calls.push_back(CallRef{sub.calls[k].client_req->ts, sub.id, k});
  std::sort(calls.begin(), calls.end(), [](const CallRef& a, const CallRef& b) {
    return std::tie(a.ts, a.sub, a.call) < std::tie(b.ts, b.sub, b.call);
  });

  // Candidate server requests grouped by destination tuple, each group in
  // (ts, id) order with a cursor; calls arrive in ts order, so matching is a
  // per-group two-pointer sweep.
  using DstKey = std::tuple<std::string, int, std::string, std::string>;
  struct Group {
    std::vector<int> subs;
    std::size_t next = 0;
  };
  std::map<DstKey, Group> groups;
  {
    std::vector<int> order(subs_.size());
    for (std::size_t i = 0; i < subs_.size(); ++i) order[i] = subs_[i].id;
    std::sort(order.begin(), order.end(), [this](int a, int b) {
      return std::tie(subs_[a].server_req.ts, a) <
             std::tie(subs_[b].server_req.ts, b);
    });
    for (int id : order) {
      const HttpPayload& req = subs_[id].server_req.http();
      groups[DstKey{req.dst_addr, req.dst_port, req.method, req.url}]
          .subs.push_back(id);
    }
  }

  for (const CallRef& ref : calls) {
    RequestSubsystem& caller = subs_[ref.sub];
    CallRecord& call = caller.calls[ref.call];
    const HttpPayload& creq = call.client_req->http();
    auto git = groups.find(
        DstKey{creq.dst_addr, creq.dst_port, creq.method, creq.url});
    bool linked = false;
    if (git != groups.end()) {
      Group& g = git->second;
      while (g.next < g.subs.size() &&
             (subs_[g.subs[g.next]].parent != -1 ||
              subs_[g.subs[g.next]].server_req.ts < ref.ts))
        ++g.next;
      // The caller itself never matches its own call; probe past it without
      // consuming the cursor.
      for (std::size_t i = g.next; i < g.subs.size(); ++i) {
        RequestSubsystem& cand = subs_[g.subs[i]];
        if (cand.parent != -1 || cand.server_req.ts < ref.ts) continue;
        if (cand.id == caller.id) continue;
        cand.parent = caller.id;
        call.child = cand.id;
        linked = true;
        break;
      }
    }
    if (!linked)
      orphans_.push_back(OrphanRecord{
          *call.client_req, ErrorCode::UnlinkedCall,
          "no downstream server request matches " + http_operation(*call.client_req) +
              " at " + creq.dst_addr + ":" + std::to_string(creq.dst_port)});
  }
}

SpanNode Analyzer::build_node(const RequestSubsystem& sub) const {
  SpanNode node;
  node.service = sub.service;
  node.operation = sub.operation();
  node.kind = SpanKind::server;
  node.start_ns = sub.start_ns;
  node.end_ns = sub.closed ? sub.end_ns : sub.start_ns;
  node.complete = sub.closed;
  node.sockid = sub.sockid;

  for (const CallRecord& call : sub.calls) {
    if (call.child != -1) {
      SpanNode child = build_node(subs_[call.child]);
      if (call.client_req) child.call_start_ns = call.client_req->ts;
      if (call.client_resp) child.call_end_ns = call.client_resp->ts;
      node.children.push_back(std::move(child));
    } else if (call.client_req) {
      // Call whose downstream trace never appeared: keep the client span
      // itself, flagged as incomplete linkage.
      SpanNode client;
      client.service = sub.service;
      client.operation = http_operation(*call.client_req);
      client.kind = SpanKind::client;
      client.start_ns = call.client_req->ts;
      client.end_ns =
          call.client_resp ? call.client_resp->ts : call.client_req->ts;
      client.complete = false;
      client.sockid = call.a4;
      node.children.push_back(std::move(client));
    }
  }
  for (const RedisRecord& rec : sub.redis) {
    SpanNode leaf;
    leaf.service = sub.service;
    leaf.operation = "redis:" + rec.cmd;
    leaf.kind = SpanKind::redis;
    leaf.start_ns = rec.ts;
    leaf.end_ns = rec.ts + rec.duration_ns;
    leaf.complete = true;
    node.children.push_back(std::move(leaf));
  }
  std::sort(node.children.begin(), node.children.end(),
            [](const SpanNode& a, const SpanNode& b) {
              return std::tie(a.start_ns, a.operation, a.sockid) <
                     std::tie(b.start_ns, b.operation, b.sockid);
            });
  return node;
}

std::vector<SpanNode> Analyzer::build_span_forest() const {
  std::vector<int> roots;
  for (const RequestSubsystem& sub : subs_)
    if (sub.parent == -1) roots.push_back(sub.id);
  std::sort(roots.begin(), roots.end(), [this](int a, int b) {
    return std::tie(subs_[a].start_ns, subs_[a].service, a) <
           std::tie(subs_[b].start_ns, subs_[b].service, b);
  });
  std::vector<SpanNode> forest;
  forest.reserve(roots.size());
  for (int id : roots) forest.push_back(build_node(subs_[id]));
  return forest;
}

void Analyzer::finish() {
  if (finished_) return;
  link_cross_service();
  sht_.close_history(std::max(last_ts_, sht_.current_end()));
  forest_ = build_span_forest();
  finished_ = true;
  if (!orphans_.empty())
    log::warn(std::to_string(orphans_.size()) + " orphaned events");
}

const std::vector<SpanNode>& Analyzer::forest() const {
  if (!finished_) throw std::logic_error("forest() before finish()");
  return forest_;
}

}  // namespace vspan
