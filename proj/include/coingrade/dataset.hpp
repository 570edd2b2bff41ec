#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coingrade/features.hpp"

namespace coingrade {

struct ManifestEntry {
  std::string coin_id;
  std::filesystem::path obverse_path;
  std::filesystem::path reverse_path;
  int grade = 0;  // Sheldon grade in [50, 70]
  Service service = Service::PCGS;
  Split split = Split::None;
};

// Delimited text with a required header:
//   coin_id,obverse_path,reverse_path,grade,service[,split]
// Every malformed row raises ParseError with its row number; when
// check_files is set, missing images raise MissingFileError.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path,
                                         bool check_files = true);

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

// Test-set support histogram of the reference per-grade report; used as the
// default imbalance shape of the synthetic corpus.
const std::map<int, int>& reference_support_histogram();

// Scale a histogram shape to a target total with largest-remainder rounding.
std::map<int, int> scale_histogram(const std::map<int, int>& shape, int total);

struct SynthSpec {
  int n_coins = 500;
  std::map<int, int> grade_distribution;  // empty = reference shape scaled
  int image_size = 256;
  std::uint64_t seed = 0;
  bool with_prongs = true;
  // Wear-vs-grade curve: relief smoothing sigma, linear between the two
  // anchors, optionally bent by wear_gamma (>1 compresses high grades).
  double wear_sigma_low_grade = 4.2;   // at grade 50
  double wear_sigma_high_grade = 0.4;  // at grade 68
  double wear_gamma = 1.0;
  // Within-coin variation: relief amplitude jitter (multiplicative) and
  // per-octant texture modulation.
  double amplitude_jitter = 0.28;
  double octant_jitter = 0.12;
  std::filesystem::path out_dir;
};

struct SynthResult {
  std::vector<ManifestEntry> entries;
  std::map<int, int> histogram;
};

// Renders a gold-toned disk with fine radial ridges and coarse engraved
// rings; wear smooths the relief before shading. Deterministic per seed.
SynthResult synth_corpus(const SynthSpec& spec);

// Renders one coin side without touching the filesystem (tests, latency
// probes).
ImageRgb8 render_coin_side(const SynthSpec& spec, int grade,
                           std::uint64_t coin_seed, bool obverse);

struct CacheRecord {
  std::string coin_id;
  std::vector<double> features;  // kFeatureDim values
  int grade = 0;
  Provenance provenance = Provenance::Original;
  Split split = Split::None;
  std::string obverse_path;
  std::string reverse_path;
};

// One CSV row per coin: coin_id, the named feature slots (shortest
// round-trip formatting, bit-exact on re-read), grade, provenance, split,
// image paths, and the layout version tag.
void feature_cache_write(const std::filesystem::path& path,
                         const std::vector<CacheRecord>& records);
std::vector<CacheRecord> feature_cache_read(const std::filesystem::path& path);

Dataset cache_to_dataset(const std::vector<CacheRecord>& records);

}  // namespace coingrade
