#include "vesselmark/errors.hpp"

#include <atomic>

#include "vesselmark/parallel.hpp"

namespace vm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::InvalidSigma: return "InvalidSigma";
    case ErrorCode::VolumeTooSmall: return "VolumeTooSmall";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::SeedBelowThreshold: return "SeedBelowThreshold";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::InvalidDiameter: return "InvalidDiameter";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::Undefined: return "Undefined";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnitMismatch: return "UnitMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned n) { g_threads = n; }

unsigned thread_count() {
  unsigned n = g_threads.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

}  // namespace vm
