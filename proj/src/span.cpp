// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/span.hpp"

#include "vspan/errors.hpp"

namespace vspan {

using nlohmann::json;

const char* span_kind_str(SpanKind kind) {
  switch (kind) {
    case SpanKind::server:
      return "server";
    case SpanKind::client:
      return "client";
    case SpanKind::redis:
      return "redis";
  }
  return "?";
}

SpanKind parse_span_kind(const std::string& s) {
  if (s == "server") return SpanKind::server;
  if (s == "client") return SpanKind::client;
  if (s == "redis") return SpanKind::redis;
  throw Error(ErrorCode::MalformedLine, "unknown span kind '" + s + "'",
              "kind");
}

json span_to_json(const SpanNode& span) {
  json doc;
  doc["service"] = span.service;
  doc["operation"] = span.operation;
  doc["kind"] = span_kind_str(span.kind);
  doc["start_ns"] = span.start_ns;
  doc["end_ns"] = span.end_ns;
  doc["complete"] = span.complete;
  doc["sockid"] = span.sockid;
  if (span.call_start_ns >= 0) {
    doc["call_start_ns"] = span.call_start_ns;
    doc["call_end_ns"] = span.call_end_ns;
  }
  json children = json::array();
  for (const SpanNode& child : span.children)
    children.push_back(span_to_json(child));
  doc["children"] = std::move(children);
  return doc;
}

SpanNode span_from_json(const json& doc) {
  if (!doc.is_object())
    throw Error(ErrorCode::MalformedLine, "span is not an object");
  SpanNode span;
  span.service = doc.at("service").get<std::string>();
  span.operation = doc.at("operation").get<std::string>();
  span.kind = parse_span_kind(doc.at("kind").get<std::string>());
  span.start_ns = doc.at("start_ns").get<std::int64_t>();
  span.end_ns = doc.at("end_ns").get<std::int64_t>();
  span.complete = doc.at("complete").get<bool>();
  span.sockid = doc.value("sockid", std::int64_t{0});
  span.call_start_ns = doc.value("call_start_ns", std::int64_t{-1});
  span.call_end_ns = doc.value("call_end_ns", std::int64_t{-1});
  if (doc.contains("children"))
    for (const json& child : doc.at("children"))
      span.children.push_back(span_from_json(child));
  return span;
}

std::string serialize_forest(const std::vector<SpanNode>& roots) {
  json doc;
  json spans = json::array();
  for (const SpanNode& root : roots) spans.push_back(span_to_json(root));
  doc["spans"] = std::move(spans);
  return doc.dump(2) + "\n";
}

std::vector<SpanNode> parse_forest(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("spans"))
    throw Error(ErrorCode::MalformedLine,
                "span document must be {\"spans\":[...]}");
  std::vector<SpanNode> roots;
  for (const json& span : doc.at("spans")) roots.push_back(span_from_json(span));
  return roots;
}

std::size_t count_spans(const std::vector<SpanNode>& roots) {
  std::size_t n = 0;
  for (const SpanNode& root : roots) {
    n += 1;
    n += count_spans(root.children);
  }
  return n;
}

}  // namespace vspan
