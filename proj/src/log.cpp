// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#include "vspan/log.hpp"

#include <cstdlib>
#include <iostream>

namespace vspan::log {

namespace {

Level threshold_from_env() {
  const char* v = std::getenv("VSPAN_LOG");
  if (v == nullptr) return Level::warn;
  std::string s(v);
  if (s == "debug") return Level::debug;
  if (s == "info") return Level::info;
  return Level::warn;
}

Level threshold() {
  static const Level t = threshold_from_env();
  return t;
}

const char* tag(Level level) {
  switch (level) {
    case Level::debug:
      return "debug";
    case Level::info:
      return "info";
    case Level::warn:
      return "warn";
  }
  return "?";
}

}  // namespace

bool enabled(Level level) { return level >= threshold(); }

void write(Level level, const std::string& message) {
  if (!enabled(level)) return;
  std::cerr << "vspan [" << tag(level) << "] " << message << "\n";
}

}  // namespace vspan::log
