// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vspan/errors.hpp"

namespace vspan {

// The tracepoint vocabulary. The five HTTP/async names map one-to-one onto
// the VM tracepoints; redis_command carries the joined datastore timing.
enum class EventName {
  http_server_request,
  http_server_response,
  http_client_request,
  http_client_response,
  async_context,
  redis_command,
};

const char* event_name_str(EventName name);
EventName parse_event_name(const std::string& s);  // throws UnknownEventName
bool is_response(EventName name);
bool is_http(EventName name);

// Shared shape of the four HTTP tracepoints; status is set on responses only.
struct HttpPayload {
  std::string method;
  std::string url;
  std::string src_addr;
  int src_port = 0;
  std::string dst_addr;
  int dst_port = 0;
  std::int64_t sockid = 0;  // async-resource id of the socket involved
  std::optional<int> status;

  bool operator==(const HttpPayload&) const = default;
};

// Lifecycle record of one asynchronous VM resource. `kind` carries both
// lifecycle phases ("after", "constructor") and resource types ("TCPWRAP"),
// mirroring the single type attribute the probes export.
struct AsyncContextPayload {
  std::int64_t async_id = 0;  // id of the resource this record concerns
  std::int64_t ctx_id = 0;    // id of the parent/triggering execution context
  std::string kind;

  bool operator==(const AsyncContextPayload&) const = default;
};

struct RedisCommandPayload {
  std::string cmd;
  std::string key;
  std::int64_t duration_us = 0;

  bool operator==(const RedisCommandPayload&) const = default;
};

using EventPayload =
    std::variant<HttpPayload, AsyncContextPayload, RedisCommandPayload>;

// One timestamped tracepoint record from one service's trace file.
// `ts` is nanoseconds since the experiment epoch (file-local until the
// aggregator applies the header clock offset).
struct TraceEvent {
  std::int64_t ts = 0;
  std::string service;
  std::string host;
  EventName name = EventName::async_context;
  EventPayload payload;
  // Unknown keys found inside "fields": preserved on round trip, never
  // interpreted.
  nlohmann::json extra = nlohmann::json::object();

  const HttpPayload& http() const { return std::get<HttpPayload>(payload); }
  const AsyncContextPayload& async_ctx() const {
    return std::get<AsyncContextPayload>(payload);
  }
  const RedisCommandPayload& redis() const {
    return std::get<RedisCommandPayload>(payload);
  }

  bool operator==(const TraceEvent&) const = default;
};

struct TraceHeader {
  std::string format;  // "vspan-trace/1"
  std::string service;
  std::string host;
  std::int64_t clock_offset_ns = 0;

  bool operator==(const TraceHeader&) const = default;
};

inline constexpr const char* kTraceFormat = "vspan-trace/1";

// Parses one event line. `line_no` (1-based) is attached to errors when known.
TraceEvent parse_event_line(const std::string& line, std::int64_t line_no = -1);
std::string serialize_event(const TraceEvent& ev);

TraceHeader parse_header_line(const std::string& line);
std::string serialize_header(const TraceHeader& header);

// Returns normally iff every type invariant holds; throws the violation
// (MissingField / FieldOutOfRange / ...) otherwise.
void validate_event(const TraceEvent& ev);

struct TraceFile {
  TraceHeader header;
  std::vector<TraceEvent> events;  // in file order; ts raw (pre-offset)
  std::string path;
};

// Reads header + events. Local ts inversions are reported as UnsortedFile
// (with the first offending line), never silently reordered.
TraceFile read_trace_file(const std::string& path);

}  // namespace vspan
