// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace vspan {

enum class SpanKind { server, client, redis };

const char* span_kind_str(SpanKind kind);
SpanKind parse_span_kind(const std::string& s);

// One reconstructed span. Server spans carry the accept-socket id; a linked
// child additionally records the caller-side call interval
// [call_start_ns, call_end_ns] so gap time stays recoverable. Client-kind
// nodes appear only for calls whose downstream trace never linked.
struct SpanNode {
  std::string service;
  std::string operation;  // "GET /user/1" or "redis:get"
  SpanKind kind = SpanKind::server;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  bool complete = false;
  std::int64_t sockid = 0;
  std::int64_t call_start_ns = -1;  // -1 when this span is a root
  std::int64_t call_end_ns = -1;
  std::vector<SpanNode> children;  // ordered by start_ns

  std::int64_t duration_ns() const { return end_ns - start_ns; }
  bool operator==(const SpanNode&) const = default;
};

nlohmann::json span_to_json(const SpanNode& span);
SpanNode span_from_json(const nlohmann::json& doc);

// {"spans":[...]}
std::string serialize_forest(const std::vector<SpanNode>& roots);
std::vector<SpanNode> parse_forest(const std::string& text);

std::size_t count_spans(const std::vector<SpanNode>& roots);

}  // namespace vspan
