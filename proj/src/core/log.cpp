#include "log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

#include "error.hpp"

namespace atls {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

LogSink& current_sink() {
  static LogSink sink = [](LogLevel level, const std::string& message) {
    if (level == LogLevel::Warning) std::cerr << "warning: " << message << '\n';
  };
  return sink;
}

void emit(LogLevel level, const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (current_sink()) current_sink()(level, message);
}

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  return std::exchange(current_sink(), std::move(sink));
}

void log_info(const std::string& message) { emit(LogLevel::Info, message); }
void log_warning(const std::string& message) { emit(LogLevel::Warning, message); }

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::EmptyLoadRegion: return "EmptyLoadRegion";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ZeroMassSubspace: return "ZeroMassSubspace";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::MissingAnalysis: return "MissingAnalysis";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace atls
