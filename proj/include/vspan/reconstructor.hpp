// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vspan/event.hpp"
#include "vspan/fsm.hpp"
#include "vspan/history_tree.hpp"
#include "vspan/span.hpp"

namespace vspan {

// S1..S6 follow the socket-communication pattern: request received, "after"
// callback, resource construction, TCP wrap, address lookup, outbound client
// request. CLOSED is entered from any state when the server response fires.
enum class SubsystemState {
  S1_RECEIVED,
  S2_AFTER,
  S3_CONSTRUCTED,
  S4_TCPWRAP,
  S5_GETADDR,
  S6_CLIENT_REQ,
  CLOSED,
};

const char* subsystem_state_str(SubsystemState s);

// The matching rules, one concurrent instance per in-flight request:
//   S1->S2  kind "after"              ctx_id == sockid, bind a2 := async_id
//   S2->S3  kind "constructor"        ctx_id == a2,     bind a3 := async_id
//   S3->S4  kind "TCPWRAP"            ctx_id == a3,     bind a4 := async_id
//   S4->S5  kind "GETADDRINFOREQWRAP" ctx_id == a4,     bind a5 := async_id
//   S5->S6  kind "HTTPCLIENTREQUEST"  async_id == a5+1, bind a6 := async_id
//   any->CLOSED on http_server_response with matching sockid
// a4 is the outbound client socket: http_client_request/response carry it.
// With fan-out enabled, a completed call re-arms the chain at S2.
const fsm::StateMachineDef& ittcr_machine(bool allow_fanout);

// One downstream call made by a subsystem (at most one unless fan-out is on).
struct CallRecord {
  std::int64_t a3 = -1;
  std::int64_t a4 = -1;
  std::int64_t a5 = -1;
  std::int64_t a6 = -1;
  std::optional<TraceEvent> client_req;
  std::optional<TraceEvent> client_resp;
  int child = -1;  // linked downstream subsystem id, -1 until linked
};

struct RedisRecord {
  std::string cmd;
  std::string key;
  std::int64_t ts = 0;
  std::int64_t duration_ns = 0;
};

// One concurrent FSM instance tracking a single in-flight request on one
// service.
struct RequestSubsystem {
  int id = -1;
  std::string service;
  fsm::MachineRun run;
  std::int64_t sockid = 0;
  TraceEvent server_req;
  std::optional<TraceEvent> server_resp;
  std::vector<CallRecord> calls;
  std::vector<RedisRecord> redis;
  AttributePath sht_anchor;
  int parent = -1;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;  // meaningful once closed
  bool closed = false;

  explicit RequestSubsystem(const fsm::StateMachineDef& def)
      : run(def) {}

  SubsystemState state() const;
  std::int64_t a2() const { return run.binding("a2"); }
  std::int64_t a3() const { return run.binding("a3"); }
  std::int64_t a4() const { return run.binding("a4"); }
  std::int64_t a5() const { return run.binding("a5"); }
  std::int64_t a6() const { return run.binding("a6"); }
  std::string operation() const;
};

// An event that failed correlation; diagnostics, never fatal.
struct OrphanRecord {
  TraceEvent event;
  ErrorCode code;
  std::string reason;
};

// Consumes the merged stream, drives the per-request machines, records every
// state into the history tree, links cross-service calls, and yields the
// span forest. Single-threaded by design: the algorithm is order-dependent.
class Analyzer {
 public:
  struct Options {
    bool allow_fanout = false;  // repeated S3->S6 sub-cycle per extra call
    HistoryTree::Config sht{};
  };

  explicit Analyzer(Options opt = {});

  // Stream interface. Events must arrive in merged (non-decreasing ts) order.
  // Correlation failures become orphan records; nothing throws here.
  void process_event(const TraceEvent& ev);

  // Links cross-service calls, closes the history, builds the forest.
  void finish();
  bool finished() const { return finished_; }

  // Direct operations; these throw the documented errors.
  RequestSubsystem& start_subsystem(const TraceEvent& ev);
  bool try_advance(RequestSubsystem& sub, const TraceEvent& ev);
  void attach_client_request(RequestSubsystem& sub, const TraceEvent& ev);
  RequestSubsystem& correlate_client_response(const TraceEvent& ev);
  RequestSubsystem& correlate_server_response(const TraceEvent& ev);

  const std::vector<SpanNode>& forest() const;

  const HistoryTree& history() const { return sht_; }
  const std::deque<RequestSubsystem>& subsystems() const { return subs_; }
  const std::vector<OrphanRecord>& orphans() const { return orphans_; }
  std::int64_t events_processed() const { return events_processed_; }
  std::int64_t ignored_async() const { return ignored_async_; }

 private:
  void handle_async(const TraceEvent& ev);
  void handle_client_request(const TraceEvent& ev);
  void handle_redis(const TraceEvent& ev);
  void link_cross_service();
  std::vector<SpanNode> build_span_forest() const;
  SpanNode build_node(const RequestSubsystem& sub) const;
  void record_state(RequestSubsystem& sub, std::int64_t ts,
                    const std::string& state_label);
  std::vector<int>& open_on(const std::string& service);
  void drop_open(RequestSubsystem& sub);

  Options opt_;
  const fsm::StateMachineDef& def_;
  HistoryTree sht_;
  std::deque<RequestSubsystem> subs_;
  std::map<std::pair<std::string, std::int64_t>, int> open_by_sock_;
  std::map<std::pair<std::string, std::int64_t>, int> awaiting_by_client_sock_;
  std::map<std::string, std::vector<int>> open_by_service_;
  std::vector<OrphanRecord> orphans_;
  std::vector<SpanNode> forest_;
  std::int64_t last_ts_ = 0;
  std::int64_t events_processed_ = 0;
  std::int64_t ignored_async_ = 0;
  std::int64_t event_index_ = -1;
  bool finished_ = false;
};

}  // namespace vspan
