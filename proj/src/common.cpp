#include "lcc/common.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace lcc {

const char* err_name(Err e) {
  switch (e) {
    case Err::BadMagic: return "BadMagic";
    case Err::UnsupportedVersion: return "UnsupportedVersion";
    case Err::TruncatedPayload: return "TruncatedPayload";
    case Err::InvalidHeader: return "InvalidHeader";
    case Err::InvalidClassId: return "InvalidClassId";
    case Err::SchemeDtypeMismatch: return "SchemeDtypeMismatch";
    case Err::OversizeDimension: return "OversizeDimension";
    case Err::MissingPaletteEntry: return "MissingPaletteEntry";
    case Err::IoFailure: return "IoFailure";
    case Err::NotAProbabilityVector: return "NotAProbabilityVector";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::InvalidCode: return "InvalidCode";
    case Err::EmptyEvaluation: return "EmptyEvaluation";
    case Err::EmptyMask: return "EmptyMask";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::NonFiniteValue: return "NonFiniteValue";
    case Err::PatchLargerThanTile: return "PatchLargerThanTile";
    case Err::InfeasibleChangeFraction: return "InfeasibleChangeFraction";
    case Err::OutOfRange: return "OutOfRange";
    case Err::BadConfig: return "BadConfig";
  }
  return "UnknownError";
}

double Rng::normal() {
  // Box-Muller; u1 nudged away from 0 so log stays finite.
  double u1 = f64();
  double u2 = f64();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

namespace {
std::atomic<int> g_jobs{0};
}

int hardware_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : int(n);
}

void set_jobs(int n) {
  if (n < 1) n = hardware_jobs();
  g_jobs.store(n);
  omp_set_num_threads(n);
}

int jobs() {
  int n = g_jobs.load();
  if (n == 0) {
    set_jobs(hardware_jobs());
    n = g_jobs.load();
  }
  return n;
}

LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("LCCHANGE_LOG");
    if (!env) return LogLevel::Warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return lvl;
}

void logf(LogLevel lvl, const char* fmt, ...) {
  if (lvl > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[lcchange %s] ", names[int(lvl)]);
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stderr, fmt, ap);
  va_end(ap);
  std::fputc('\n', stderr);
}

}  // namespace lcc
