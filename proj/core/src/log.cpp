#include "mcqpsy/log.hpp"

#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace mcqpsy::log {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

Sink& current_sink() {
  static Sink sink = [](Level level, std::string_view message) {
    std::cerr << (level == Level::kWarning ? "warning: " : "") << message
              << '\n';
  };
  return sink;
}

void emit(Level level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(current_sink(), std::move(sink));
}

void info(std::string_view message) { emit(Level::kInfo, message); }
void warning(std::string_view message) { emit(Level::kWarning, message); }

}  // namespace mcqpsy::log
