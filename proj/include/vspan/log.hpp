// Copyright (c) 2026 vspan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace vspan::log {

enum class Level { debug = 0, info = 1, warn = 2 };

// Threshold comes from VSPAN_LOG=debug|info|warn (default warn), read once.
bool enabled(Level level);
void write(Level level, const std::string& message);

inline void debug(const std::string& m) { write(Level::debug, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }

}  // namespace vspan::log
