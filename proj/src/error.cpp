#include "htefs/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace htefs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateArms: return "DegenerateArms";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::PropensityOutOfRange: return "PropensityOutOfRange";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {
std::atomic<bool> g_muted{false};
std::mutex g_log_mutex;
}  // namespace

void log_warning(std::string_view message) {
  if (g_muted.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << message << '\n';
}

void set_warnings_muted(bool muted) { g_muted.store(muted); }

}  // namespace htefs
