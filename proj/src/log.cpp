#include "osteoplan/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace osteoplan {
namespace {

Verbosity initial_level() {
  const char* env = std::getenv("OSTEOPLAN_VERBOSITY");
  if (!env) return Verbosity::Warn;
  if (std::strcmp(env, "quiet") == 0) return Verbosity::Quiet;
  if (std::strcmp(env, "info") == 0) return Verbosity::Info;
  return Verbosity::Warn;
}

std::atomic<int>& level() {
  static std::atomic<int> value{static_cast<int>(initial_level())};
  return value;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

void emit(const char* prefix, std::string_view message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::cerr << prefix << message << '\n';
}

}  // namespace

Verbosity verbosity() { return static_cast<Verbosity>(level().load()); }

void set_verbosity(Verbosity v) { level().store(static_cast<int>(v)); }

void warn(std::string_view message) {
  if (verbosity() >= Verbosity::Warn) emit("warning: ", message);
}

void info(std::string_view message) {
  if (verbosity() >= Verbosity::Info) emit("", message);
}

}  // namespace osteoplan
