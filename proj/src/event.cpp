// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/event.hpp"

#include <fstream>
#include <set>

namespace vspan {

namespace {

using nlohmann::json;

struct NameEntry {
  EventName name;
  const char* str;
};

constexpr NameEntry kNames[] = {
    {EventName::http_server_request, "http_server_request"},
    {EventName::http_server_response, "http_server_response"},
    {EventName::http_client_request, "http_client_request"},
    {EventName::http_client_response, "http_client_response"},
    {EventName::async_context, "async_context"},
    {EventName::redis_command, "redis_command"},
};

[[noreturn]] void fail(ErrorCode code, const std::string& msg,
                       const std::string& field = {}, std::int64_t line = -1) {
  throw Error(code, msg, field, line);
}

std::int64_t require_int(const json& obj, const char* key, std::int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end())
    fail(ErrorCode::MissingField, std::string("missing field '") + key + "'",
         key, line);
  if (!it->is_number_integer() && !it->is_number_unsigned())
    fail(ErrorCode::MalformedLine,
         std::string("field '") + key + "' is not an integer", key, line);
  return it->get<std::int64_t>();
}

std::string require_str(const json& obj, const char* key, std::int64_t line) {
  auto it = obj.find(key);
  if (it == obj.end())
    fail(ErrorCode::MissingField, std::string("missing field '") + key + "'",
         key, line);
  if (!it->is_string())
    fail(ErrorCode::MalformedLine,
         std::string("field '") + key + "' is not a string", key, line);
  std::string v = it->get<std::string>();
  if (v.empty())
    fail(ErrorCode::MissingField, std::string("field '") + key + "' is empty",
         key, line);
  return v;
}

void check_range(bool ok, const char* key, const std::string& what,
                 std::int64_t line) {
  if (!ok)
    fail(ErrorCode::FieldOutOfRange, std::string("field '") + key + "' " + what,
         key, line);
}

const std::set<std::string>& known_field_keys(EventName name) {
  static const std::set<std::string> request = {
      "method", "url", "src_addr", "src_port", "dst_addr", "dst_port",
      "sockid"};
  static const std::set<std::string> response = {
      "method", "url",      "src_addr", "src_port",
      "dst_addr", "dst_port", "sockid",  "status"};
  static const std::set<std::string> async_ctx = {"async_id", "ctx_id", "kind"};
  static const std::set<std::string> redis = {"cmd", "key", "duration_us"};
  switch (name) {
    case EventName::http_server_request:
    case EventName::http_client_request:
      return request;
    case EventName::http_server_response:
    case EventName::http_client_response:
      return response;
    case EventName::async_context:
      return async_ctx;
    case EventName::redis_command:
      return redis;
  }
  return async_ctx;
}

EventPayload parse_payload(EventName name, const json& fields,
                           std::int64_t line) {
  switch (name) {
    case EventName::http_server_request:
    case EventName::http_server_response:
    case EventName::http_client_request:
    case EventName::http_client_response: {
      HttpPayload p;
      p.method = require_str(fields, "method", line);
      p.url = require_str(fields, "url", line);
      p.src_addr = require_str(fields, "src_addr", line);
      p.src_port = static_cast<int>(require_int(fields, "src_port", line));
      p.dst_addr = require_str(fields, "dst_addr", line);
      p.dst_port = static_cast<int>(require_int(fields, "dst_port", line));
      p.sockid = require_int(fields, "sockid", line);
      if (is_response(name))
        p.status = static_cast<int>(require_int(fields, "status", line));
      return p;
    }
    case EventName::async_context: {
      AsyncContextPayload p;
      p.async_id = require_int(fields, "async_id", line);
      p.ctx_id = require_int(fields, "ctx_id", line);
      p.kind = require_str(fields, "kind", line);
      return p;
    }
    case EventName::redis_command: {
      RedisCommandPayload p;
      p.cmd = require_str(fields, "cmd", line);
      p.key = require_str(fields, "key", line);
      p.duration_us = require_int(fields, "duration_us", line);
      return p;
    }
  }
  fail(ErrorCode::UnknownEventName, "unhandled event name", "name", line);
}

json payload_to_json(const TraceEvent& ev) {
  json fields = ev.extra.is_object() ? ev.extra : json::object();
  switch (ev.name) {
    case EventName::http_server_request:
    case EventName::http_server_response:
    case EventName::http_client_request:
    case EventName::http_client_response: {
      const HttpPayload& p = ev.http();
      fields["method"] = p.method;
      fields["url"] = p.url;
      fields["src_addr"] = p.src_addr;
      fields["src_port"] = p.src_port;
      fields["dst_addr"] = p.dst_addr;
      fields["dst_port"] = p.dst_port;
      fields["sockid"] = p.sockid;
      if (p.status) fields["status"] = *p.status;
      break;
    }
    case EventName::async_context: {
      const AsyncContextPayload& p = ev.async_ctx();
      fields["async_id"] = p.async_id;
      fields["ctx_id"] = p.ctx_id;
      fields["kind"] = p.kind;
      break;
    }
    case EventName::redis_command: {
      const RedisCommandPayload& p = ev.redis();
      fields["cmd"] = p.cmd;
      fields["key"] = p.key;
      fields["duration_us"] = p.duration_us;
      break;
    }
  }
  return fields;
}

void validate_payload(const TraceEvent& ev, std::int64_t line) {
  switch (ev.name) {
    case EventName::http_server_request:
    case EventName::http_server_response:
    case EventName::http_client_request:
    case EventName::http_client_response: {
      const HttpPayload& p = ev.http();
      if (p.method.empty())
        fail(ErrorCode::MissingField, "field 'method' is empty", "method", line);
      if (p.url.empty())
        fail(ErrorCode::MissingField, "field 'url' is empty", "url", line);
      if (p.src_addr.empty())
        fail(ErrorCode::MissingField, "field 'src_addr' is empty", "src_addr",
             line);
      if (p.dst_addr.empty())
        fail(ErrorCode::MissingField, "field 'dst_addr' is empty", "dst_addr",
             line);
      check_range(p.src_port >= 1 && p.src_port <= 65535, "src_port",
                  "outside [1, 65535]", line);
      check_range(p.dst_port >= 1 && p.dst_port <= 65535, "dst_port",
                  "outside [1, 65535]", line);
      check_range(p.sockid > 0, "sockid", "must be > 0", line);
      if (is_response(ev.name)) {
        if (!p.status)
          fail(ErrorCode::MissingField, "missing field 'status'", "status",
               line);
        check_range(*p.status >= 100 && *p.status <= 599, "status",
                    "outside [100, 599]", line);
      }
      break;
    }
    case EventName::async_context: {
      const AsyncContextPayload& p = ev.async_ctx();
      check_range(p.async_id > 0, "async_id", "must be > 0", line);
      check_range(p.ctx_id >= 0, "ctx_id", "must be >= 0", line);
      if (p.kind.empty())
        fail(ErrorCode::MissingField, "field 'kind' is empty", "kind", line);
      break;
    }
    case EventName::redis_command: {
      const RedisCommandPayload& p = ev.redis();
      if (p.cmd.empty())
        fail(ErrorCode::MissingField, "field 'cmd' is empty", "cmd", line);
      if (p.key.empty())
        fail(ErrorCode::MissingField, "field 'key' is empty", "key", line);
      check_range(p.duration_us >= 0, "duration_us", "must be >= 0", line);
      break;
    }
  }
}

json parse_object_line(const std::string& line, std::int64_t line_no) {
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object())
    fail(ErrorCode::MalformedLine, "line is not a JSON object", {}, line_no);
  return doc;
}

}  // namespace

const char* event_name_str(EventName name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.str;
  return "?";
}

EventName parse_event_name(const std::string& s) {
  for (const auto& e : kNames)
    if (s == e.str) return e.name;
  throw Error(ErrorCode::UnknownEventName, "unknown event name '" + s + "'",
              "name");
}

bool is_response(EventName name) {
  return name == EventName::http_server_response ||
         name == EventName::http_client_response;
}

bool is_http(EventName name) {
  return name != EventName::async_context && name != EventName::redis_command;
}

TraceEvent parse_event_line(const std::string& line, std::int64_t line_no) {
  json doc = parse_object_line(line, line_no);

  static const std::set<std::string> top_keys = {"ts", "service", "host",
                                                 "name", "fields"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top_keys.count(it.key()))
      fail(ErrorCode::MalformedLine, "unexpected key '" + it.key() + "'",
           it.key(), line_no);

  TraceEvent ev;
  ev.ts = require_int(doc, "ts", line_no);
  ev.service = require_str(doc, "service", line_no);
  ev.host = require_str(doc, "host", line_no);
  ev.name = parse_event_name(require_str(doc, "name", line_no));

  auto fit = doc.find("fields");
  if (fit == doc.end())
    fail(ErrorCode::MissingField, "missing field 'fields'", "fields", line_no);
  if (!fit->is_object())
    fail(ErrorCode::MalformedLine, "'fields' is not an object", "fields",
         line_no);

  ev.payload = parse_payload(ev.name, *fit, line_no);

  const std::set<std::string>& known = known_field_keys(ev.name);
  for (auto it = fit->begin(); it != fit->end(); ++it)
    if (!known.count(it.key())) ev.extra[it.key()] = it.value();

  check_range(ev.ts >= 0, "ts", "must be >= 0", line_no);
  validate_payload(ev, line_no);
  return ev;
}

std::string serialize_event(const TraceEvent& ev) {
  json doc;
  doc["ts"] = ev.ts;
  doc["service"] = ev.service;
  doc["host"] = ev.host;
  doc["name"] = event_name_str(ev.name);
  doc["fields"] = payload_to_json(ev);
  return doc.dump();
}

TraceHeader parse_header_line(const std::string& line) {
  json doc = parse_object_line(line, 1);
  if (!doc.contains("format"))
    fail(ErrorCode::MissingHeader, "first line carries no 'format' key", {}, 1);
  TraceHeader h;
  h.format = require_str(doc, "format", 1);
  if (h.format != kTraceFormat)
    fail(ErrorCode::MissingHeader,
         "unsupported format '" + h.format + "' (want " + kTraceFormat + ")",
         "format", 1);
  h.service = require_str(doc, "service", 1);
  h.host = require_str(doc, "host", 1);
  h.clock_offset_ns = require_int(doc, "clock_offset_ns", 1);
  return h;
}

std::string serialize_header(const TraceHeader& header) {
  json doc;
  doc["format"] = header.format.empty() ? kTraceFormat : header.format;
  doc["service"] = header.service;
  doc["host"] = header.host;
  doc["clock_offset_ns"] = header.clock_offset_ns;
  return doc.dump();
}

void validate_event(const TraceEvent& ev) {
  if (ev.ts < 0)
    fail(ErrorCode::FieldOutOfRange, "field 'ts' must be >= 0", "ts");
  if (ev.service.empty())
    fail(ErrorCode::MissingField, "field 'service' is empty", "service");
  if (ev.host.empty())
    fail(ErrorCode::MissingField, "field 'host' is empty", "host");
  switch (ev.name) {
    case EventName::async_context:
      if (!std::holds_alternative<AsyncContextPayload>(ev.payload))
        fail(ErrorCode::MissingField, "payload variant mismatch");
      break;
    case EventName::redis_command:
      if (!std::holds_alternative<RedisCommandPayload>(ev.payload))
        fail(ErrorCode::MissingField, "payload variant mismatch");
      break;
    default:
      if (!std::holds_alternative<HttpPayload>(ev.payload))
        fail(ErrorCode::MissingField, "payload variant mismatch");
      break;
  }
  validate_payload(ev, -1);
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");

  TraceFile tf;
  tf.path = path;

  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::MissingHeader, "empty file '" + path + "'", {}, 1);
  tf.header = parse_header_line(line);

  std::int64_t line_no = 1;
  std::int64_t prev_ts = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TraceEvent ev;
    try {
      ev = parse_event_line(line, line_no);
    } catch (const Error& e) {
      throw Error(e.code(),
                  "'" + path + "' line " + std::to_string(line_no) + ": " +
                      e.message(),
                  e.field(), line_no);
    }
    if (ev.ts < prev_ts)
      throw Error(ErrorCode::UnsortedFile,
                  "timestamp inversion in '" + path + "'", "ts", line_no);
    prev_ts = ev.ts;
    tf.events.push_back(std::move(ev));
  }
  return tf;
}

}  // namespace vspan
