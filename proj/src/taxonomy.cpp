#include "lcc/taxonomy.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lcc {

namespace {

constexpr int W = kWater, TC = kTreeCanopy, LV = kLowVegetation, I = kImpervious;
constexpr int NA = kNoTarget;

struct NlcdRow {
  const char* name;
  uint32_t color;
  int hard;
  int diff;
  int w, tc, lv, i;
};

// Row order, colors, target mappings and mixing frequencies of the 15-class
// scheme. The three classes without a dominant target (Developed Open Space,
// Developed Low Intensity, Barren Land) map to low vegetation / impervious /
// impervious under the diff override.
constexpr NlcdRow kRows[kNlcdClasses] = {
    {"Open Water",                   0x466B9F, W,  W,  98, 2,  0,  0},
    {"Developed, Open Space",        0xDEC5C5, NA, LV, 0,  39, 49, 12},
    {"Developed, Low Intensity",     0xD99282, NA, I,  0,  31, 34, 35},
    {"Developed, Medium Intensity",  0xEB0000, I,  I,  1,  13, 22, 64},
    {"Developed, High Intensity",    0xAB0000, I,  I,  0,  3,  7,  90},
    {"Barren Land",                  0xB3AC9F, NA, I,  5,  13, 43, 40},
    {"Deciduous Forest",             0x68AB5F, TC, TC, 0,  93, 5,  0},
    {"Evergreen Forest",             0x1C5F2C, TC, TC, 0,  95, 4,  0},
    {"Mixed Forest",                 0xB5C58F, TC, TC, 0,  92, 7,  0},
    {"Shrub/Scrub",                  0xCCB879, TC, TC, 0,  58, 38, 4},
    {"Grassland/Herbaceous",         0xDFDFC2, LV, LV, 1,  23, 54, 22},
    {"Pasture/Hay",                  0xDCD939, LV, LV, 0,  12, 83, 3},
    {"Cultivated Crops",             0xAB6C28, LV, LV, 0,  5,  92, 1},
    {"Woody Wetlands",               0xB8D9EB, TC, TC, 0,  94, 5,  0},
    {"Emergent Herbaceous Wetlands", 0x6C9FB8, TC, TC, 8,  86, 5,  0},
};

struct TargetRow {
  const char* name;
  const char* abbrev;
  uint32_t loss_color;
  uint32_t gain_color;
};

constexpr TargetRow kTargets[kTargetClasses] = {
    {"water",          "W",  0xC0C0FF, 0x0000FF},
    {"tree canopy",    "TC", 0x60C060, 0x008000},
    {"low vegetation", "LV", 0xC0FFC0, 0x80FF80},
    {"impervious",     "I",  0xC0C0C0, 0x808080},
};

int target_id_from_abbrev(const std::string& s) {
  for (int t = 0; t < kTargetClasses; t++)
    if (s == kTargets[t].abbrev) return t;
  if (s == "-") return kNoTarget;
  throw Error(Err::BadConfig, "unknown target class abbreviation '" + s + "'");
}

}  // namespace

TaxonomyTable TaxonomyTable::builtin() {
  TaxonomyTable t;
  for (int i = 0; i < kNlcdClasses; i++) {
    const NlcdRow& r = kRows[i];
    t.nlcd_[size_t(i)] = NlcdClassInfo{r.name, rgb_from_hex(r.color), r.hard, r.diff,
                                       {r.w, r.tc, r.lv, r.i}};
  }
  for (int i = 0; i < kTargetClasses; i++) {
    const TargetRow& r = kTargets[i];
    t.targets_[size_t(i)] = TargetClassInfo{r.name, r.abbrev, rgb_from_hex(r.loss_color),
                                            rgb_from_hex(r.gain_color)};
  }
  return t;
}

std::array<double, 4> TaxonomyTable::mixing(int nlcd_id) const {
  const auto& f = nlcd(nlcd_id).freq_pct;
  // rows are labeled approximate and some don't sum to 100; renormalize
  double sum = double(f[0] + f[1] + f[2] + f[3]);
  if (sum <= 0) throw Error(Err::BadConfig, "mixing row sums to zero");
  return {f[0] / sum, f[1] / sum, f[2] / sum, f[3] / sum};
}

Palette TaxonomyTable::nlcd_palette() const {
  Palette p;
  for (int i = 0; i < kNlcdClasses; i++) p.set(uint8_t(i), nlcd_[size_t(i)].color);
  return p;
}

Palette TaxonomyTable::target_palette() const {
  Palette p;
  for (int i = 0; i < kTargetClasses; i++) p.set(uint8_t(i), targets_[size_t(i)].gain_color);
  return p;
}

Palette TaxonomyTable::change_palette() const {
  Palette p;
  p.set(0, Rgb8{0, 0, 0});
  for (int c = 0; c < kTargetClasses; c++) {
    p.set(uint8_t(1 + c), targets_[size_t(c)].loss_color);
    p.set(uint8_t(5 + c), targets_[size_t(c)].gain_color);
  }
  return p;
}

void TaxonomyTable::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  f << "# lcchange taxonomy\n";
  f << "# nlcd: id|name|color|hard|diff|W,TC,LV,I\n";
  char buf[160];
  for (int i = 0; i < kNlcdClasses; i++) {
    const auto& n = nlcd_[size_t(i)];
    const char* hard = n.hard_target == kNoTarget ? "-" : kTargets[n.hard_target].abbrev;
    const char* diff = kTargets[n.diff_target].abbrev;
    std::snprintf(buf, sizeof(buf), "nlcd|%d|%s|%02X%02X%02X|%s|%s|%d,%d,%d,%d\n", i,
                  n.name.c_str(), n.color.r, n.color.g, n.color.b, hard, diff,
                  n.freq_pct[0], n.freq_pct[1], n.freq_pct[2], n.freq_pct[3]);
    f << buf;
  }
  f << "# target: id|name|abbrev|loss_color|gain_color\n";
  for (int i = 0; i < kTargetClasses; i++) {
    const auto& t = targets_[size_t(i)];
    std::snprintf(buf, sizeof(buf), "target|%d|%s|%s|%02X%02X%02X|%02X%02X%02X\n", i,
                  t.name.c_str(), t.abbrev.c_str(), t.loss_color.r, t.loss_color.g,
                  t.loss_color.b, t.gain_color.r, t.gain_color.g, t.gain_color.b);
    f << buf;
  }
  if (!f) throw Error(Err::IoFailure, "write failed: " + path);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Rgb8 parse_hex_color(const std::string& s) {
  if (s.size() != 6) throw Error(Err::BadConfig, "bad color '" + s + "'");
  uint32_t v = uint32_t(std::stoul(s, nullptr, 16));
  return rgb_from_hex(v);
}

}  // namespace

TaxonomyTable TaxonomyTable::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(Err::IoFailure, "cannot open " + path);
  TaxonomyTable t = builtin();  // start from builtin so partial files stay sane
  std::array<bool, kNlcdClasses> seen_nlcd{};
  std::array<bool, kTargetClasses> seen_target{};
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = split(line, '|');
    if (parts[0] == "nlcd") {
      if (parts.size() != 7) throw Error(Err::BadConfig, "bad nlcd line: " + line);
      int id = std::stoi(parts[1]);
      if (id < 0 || id >= kNlcdClasses) throw Error(Err::BadConfig, "nlcd id out of range");
      NlcdClassInfo& n = t.nlcd_[size_t(id)];
      n.name = parts[2];
      n.color = parse_hex_color(parts[3]);
      n.hard_target = target_id_from_abbrev(parts[4]);
      n.diff_target = target_id_from_abbrev(parts[5]);
      if (n.diff_target == kNoTarget)
        throw Error(Err::BadConfig, "diff mapping must be total");
      auto freqs = split(parts[6], ',');
      if (freqs.size() != 4) throw Error(Err::BadConfig, "expected 4 frequencies");
      for (int k = 0; k < 4; k++) n.freq_pct[size_t(k)] = std::stoi(freqs[size_t(k)]);
      seen_nlcd[size_t(id)] = true;
    } else if (parts[0] == "target") {
      if (parts.size() != 6) throw Error(Err::BadConfig, "bad target line: " + line);
      int id = std::stoi(parts[1]);
      if (id < 0 || id >= kTargetClasses) throw Error(Err::BadConfig, "target id out of range");
      TargetClassInfo& tc = t.targets_[size_t(id)];
      tc.name = parts[2];
      tc.abbrev = parts[3];
      tc.loss_color = parse_hex_color(parts[4]);
      tc.gain_color = parse_hex_color(parts[5]);
      seen_target[size_t(id)] = true;
    } else {
      throw Error(Err::BadConfig, "unknown taxonomy line: " + line);
    }
  }
  for (bool b : seen_nlcd)
    if (!b) throw Error(Err::BadConfig, "taxonomy file missing nlcd rows");
  for (bool b : seen_target)
    if (!b) throw Error(Err::BadConfig, "taxonomy file missing target rows");
  return t;
}

int nlcd_id_from_standard_code(int code) {
  switch (code) {
    case 11: return 0;
    case 21: return 1;
    case 22: return 2;
    case 23: return 3;
    case 24: return 4;
    case 31: return 5;
    case 41: return 6;
    case 42: return 7;
    case 43: return 8;
    case 52: return 9;
    case 71: return 10;
    case 81: return 11;
    case 82: return 12;
    case 90: return 13;
    case 95: return 14;
    default: return -1;
  }
}

Raster nlcd_diff_map(const TaxonomyTable& tax, const Raster& nlcd_ids) {
  nlcd_ids.validate();
  if (nlcd_ids.dtype != Dtype::U8 || nlcd_ids.bands != 1)
    throw Error(Err::SchemeDtypeMismatch, "nlcd_diff_map needs single-band U8 ids");
  Raster out = Raster::make_u8(nlcd_ids.width, nlcd_ids.height);
  for (size_t i = 0; i < nlcd_ids.u8.size(); i++) {
    uint8_t id = nlcd_ids.u8[i];
    if (id >= kNlcdClasses)
      throw Error(Err::InvalidClassId, "NLCD id " + std::to_string(id));
    out.u8[i] = uint8_t(tax.diff_map(id));
  }
  return out;
}

bool collapse_probs(const TaxonomyTable& tax, std::span<const double> p15,
                    std::span<double> out4, CollapseStats* stats) {
  if (p15.size() != kNlcdClasses || out4.size() != kTargetClasses)
    throw Error(Err::ShapeMismatch, "collapse_probs needs 15-in/4-out vectors");
  double sum = 0.0;
  for (double v : p15) {
    if (v < 0.0 || !std::isfinite(v))
      throw Error(Err::NotAProbabilityVector, "negative or non-finite entry");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-5)
    throw Error(Err::NotAProbabilityVector, "entries sum to " + std::to_string(sum));

  double mapped_mass = 0.0;
  for (int c = 0; c < kNlcdClasses; c++)
    if (tax.hard_map(c) != kNoTarget) mapped_mass += p15[size_t(c)];

  if (mapped_mass < 1e-6) {
    // Degenerate: all mass on unmapped classes. Fall back to the
    // diff-override of the NLCD argmax, as a one-hot.
    int best = 0;
    for (int c = 1; c < kNlcdClasses; c++)
      if (p15[size_t(c)] > p15[size_t(best)]) best = c;
    for (int t = 0; t < kTargetClasses; t++) out4[size_t(t)] = 0.0;
    out4[size_t(tax.diff_map(best))] = 1.0;
    if (stats) stats->degenerate_fallbacks++;
    return true;
  }

  for (int t = 0; t < kTargetClasses; t++) out4[size_t(t)] = 0.0;
  for (int c = 0; c < kNlcdClasses; c++) {
    int t = tax.hard_map(c);
    if (t != kNoTarget) out4[size_t(t)] += p15[size_t(c)] / mapped_mass;
  }
  return false;
}

Raster collapse_probs_raster(const TaxonomyTable& tax, const Raster& probs15,
                             CollapseStats* stats) {
  probs15.validate();
  if (probs15.dtype != Dtype::F32 || probs15.bands != kNlcdClasses)
    throw Error(Err::ShapeMismatch, "expected 15-band F32 probability raster");
  Raster out = Raster::make_f32(probs15.width, probs15.height, kTargetClasses);
  const size_t npx = probs15.pixel_count();
  double p[kNlcdClasses], q[kTargetClasses];
  for (size_t i = 0; i < npx; i++) {
    for (int c = 0; c < kNlcdClasses; c++) p[c] = probs15.f32[size_t(c) * npx + i];
    collapse_probs(tax, std::span<const double>(p, kNlcdClasses),
                   std::span<double>(q, kTargetClasses), stats);
    for (int t = 0; t < kTargetClasses; t++) out.f32[size_t(t) * npx + i] = float(q[t]);
  }
  return out;
}

Raster argmax_target(const Raster& probs4, CollapseStats* stats) {
  probs4.validate();
  if (probs4.dtype != Dtype::F32 || probs4.bands != kTargetClasses)
    throw Error(Err::ShapeMismatch, "expected 4-band F32 probability raster");
  Raster out = Raster::make_u8(probs4.width, probs4.height);
  const size_t npx = probs4.pixel_count();
  for (size_t i = 0; i < npx; i++) {
    int best = 0;
    float best_v = probs4.f32[i];
    bool all_zero = best_v == 0.f;
    for (int t = 1; t < kTargetClasses; t++) {
      float v = probs4.f32[size_t(t) * npx + i];
      if (v != 0.f) all_zero = false;
      if (v > best_v) {  // strict: ties keep the lowest id
        best_v = v;
        best = t;
      }
    }
    if (all_zero && stats) stats->zero_vector_argmax++;
    out.u8[i] = uint8_t(best);
  }
  return out;
}

}  // namespace lcc
