#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "lcc/raster.hpp"

namespace lcc {

inline constexpr int kNlcdClasses = 15;
inline constexpr int kTargetClasses = 4;
inline constexpr int kChangeCodes = 9;  // no-change + 4 losses + 4 gains

// Target class ids
enum : uint8_t { kWater = 0, kTreeCanopy = 1, kLowVegetation = 2, kImpervious = 3 };

inline constexpr int kNoTarget = -1;

struct NlcdClassInfo {
  std::string name;
  Rgb8 color;
  int hard_target;              // kNoTarget for the three unmapped classes
  int diff_target;              // total: every class maps somewhere
  std::array<int, 4> freq_pct;  // W/TC/LV/I percentages as printed, may not sum to 100
};

struct TargetClassInfo {
  std::string name;
  std::string abbrev;
  Rgb8 loss_color;
  Rgb8 gain_color;
};

// Diagnostics counters threaded through the probability ops.
struct CollapseStats {
  uint64_t degenerate_fallbacks = 0;  // pixels resolved by the diff-override fallback
  uint64_t zero_vector_argmax = 0;    // all-zero vectors resolved to id 0
};

// The 15-class NLCD scheme, the 4-class target scheme, all mappings between
// them, per-class mixing frequencies and render colors. Immutable once built.
class TaxonomyTable {
 public:
  static TaxonomyTable builtin();
  static TaxonomyTable load(const std::string& path);
  void save(const std::string& path) const;

  const NlcdClassInfo& nlcd(int id) const { return nlcd_.at(size_t(id)); }
  const TargetClassInfo& target(int id) const { return targets_.at(size_t(id)); }

  int hard_map(int nlcd_id) const { return nlcd(nlcd_id).hard_target; }
  int diff_map(int nlcd_id) const { return nlcd(nlcd_id).diff_target; }

  // Table frequencies normalized to fractions summing to 1.
  std::array<double, 4> mixing(int nlcd_id) const;

  Palette nlcd_palette() const;
  Palette target_palette() const;  // gain colors, by convention
  Palette change_palette() const;  // 0=black, 1-4 loss colors, 5-8 gain colors

 private:
  std::array<NlcdClassInfo, kNlcdClasses> nlcd_;
  std::array<TargetClassInfo, kTargetClasses> targets_;
};

// Standard NLCD numeric codes (11, 21, ...) to dense ids, for converting real
// data. Returns -1 for unknown codes.
int nlcd_id_from_standard_code(int code);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Per-pixel diff-override mapping: 15-class id raster -> 4-class id raster.
Raster nlcd_diff_map(const TaxonomyTable& tax, const Raster& nlcd_ids);

// Collapse one 15-class probability vector to the 4 target classes: zero the
// unmapped classes, renormalize, sum by hard mapping. When the remaining mass
// is below 1e-6 the result falls back to a one-hot of the diff-override of
// the NLCD argmax. Returns true if the fallback fired.
bool collapse_probs(const TaxonomyTable& tax, std::span<const double> p15,
                    std::span<double> out4, CollapseStats* stats = nullptr);

// Raster form: 15-band F32 probabilities -> 4-band F32 probabilities.
Raster collapse_probs_raster(const TaxonomyTable& tax, const Raster& probs15,
                             CollapseStats* stats = nullptr);

// Per-pixel argmax over a 4-band probability raster; ties break to the lowest
// id, all-zero vectors resolve to id 0 and bump the stats counter.
Raster argmax_target(const Raster& probs4, CollapseStats* stats = nullptr);

}  // namespace lcc
