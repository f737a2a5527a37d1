#pragma once

#include <cstdarg>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lcc {

inline constexpr const char* kVersion = "1.0.0";

// Error kinds surfaced by the library. The CLI maps these to exit code 2
// (data errors); anything else is an internal error (exit 3).
enum class Err {
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  InvalidHeader,
  InvalidClassId,
  SchemeDtypeMismatch,
  OversizeDimension,
  MissingPaletteEntry,
  IoFailure,
  NotAProbabilityVector,
  DimensionMismatch,
  InvalidCode,
  EmptyEvaluation,
  EmptyMask,
  ShapeMismatch,
  NonFiniteValue,
  PatchLargerThanTile,
  InfeasibleChangeFraction,
  OutOfRange,
  BadConfig,
};

const char* err_name(Err e);

struct Error : std::runtime_error {
  Err kind;
  Error(Err k, const std::string& msg)
      : std::runtime_error(std::string(err_name(k)) + ": " + msg), kind(k) {}
};

// ---------------------------------------------------------------------------
// Seeded RNG. splitmix64 core: portable, bit-stable, cheap to fork into
// independent substreams via hashing, which keeps every sampling site
// deterministic regardless of threading.
// ---------------------------------------------------------------------------

inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t hash2(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }
inline uint64_t hash3(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(a ^ mix64(b ^ mix64(c)));
}

struct Rng {
  uint64_t state;

  explicit Rng(uint64_t seed) : state(seed) {}

  uint64_t next() {
    state += 0x9E3779B97F4A7C15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1), 53-bit resolution
  double f64() { return double(next() >> 11) * 0x1.0p-53; }
  float f32() { return float(next() >> 40) * 0x1.0p-24f; }

  // uniform integer in [0,n)
  uint64_t below(uint64_t n) {
    return uint64_t((__uint128_t(next()) * n) >> 64);
  }

  // standard normal via Box-Muller (no spare caching)
  double normal();
};

// ---------------------------------------------------------------------------
// Job control. jobs() bounds the number of OpenMP threads used by the
// numeric kernels. Work decomposition is always the same fixed block grid,
// so results are bit-identical for any job count.
// ---------------------------------------------------------------------------

int hardware_jobs();
void set_jobs(int n);
int jobs();

// ---------------------------------------------------------------------------
// Logging, controlled by env LCCHANGE_LOG (error|warn|info|debug).
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void logf(LogLevel lvl, const char* fmt, ...);

}  // namespace lcc
