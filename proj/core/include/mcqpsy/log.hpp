#pragma once

#include <functional>
#include <string_view>

namespace mcqpsy::log {

enum class Level { kInfo, kWarning };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink (stderr by default). Returns the old one.
Sink set_sink(Sink sink);

void info(std::string_view message);
void warning(std::string_view message);

}  // namespace mcqpsy::log
