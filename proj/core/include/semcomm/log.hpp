#pragma once

#include <functional>
#include <string>

namespace semcomm::log {

enum class Level { info, warning };

using Sink = std::function<void(Level, const std::string&)>;

/// Replaces the process-wide sink (default: stderr). Pass nullptr to restore the default.
void set_sink(Sink sink);

void info(const std::string& message);
void warn(const std::string& message);

}  // namespace semcomm::log
