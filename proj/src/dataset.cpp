#include "coingrade/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "coingrade/errors.hpp"
#include "coingrade/image_io.hpp"
#include "coingrade/imaging.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const fs::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open manifest: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw ParseError("manifest is empty: " + path.string(), 1);
  line = strip_cr(line);
  const std::vector<std::string> header = split_fields(line);
  const std::vector<std::string> want = {"coin_id", "obverse_path",
                                         "reverse_path", "grade", "service"};
  bool has_split = header.size() == 6 && header[5] == "split";
  if (header.size() != want.size() && !has_split)
    throw ParseError("manifest header must be coin_id,obverse_path,"
                     "reverse_path,grade,service[,split]",
                     1);
  for (std::size_t i = 0; i < want.size(); ++i)
    if (header[i] != want[i])
      throw ParseError("unexpected manifest column '" + header[i] + "'", 1,
                       want[i]);

  std::vector<ManifestEntry> entries;
  std::set<std::string> seen_ids;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_fields(line);
    if (f.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(f.size()),
                       row);

    ManifestEntry e;
    e.coin_id = f[0];
    if (e.coin_id.empty())
      throw ParseError("row " + std::to_string(row) + ": empty coin_id", row,
                       "coin_id");
    if (!seen_ids.insert(e.coin_id).second)
      throw ParseError("row " + std::to_string(row) + ": duplicate coin_id '" +
                           e.coin_id + "'",
                       row, "coin_id");
    e.obverse_path = f[1];
    e.reverse_path = f[2];
    if (e.obverse_path == e.reverse_path)
      throw ParseError("row " + std::to_string(row) +
                           ": obverse and reverse paths must differ",
                       row, "reverse_path");
    int grade = 0;
    auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), grade);
    if (ec != std::errc{} || p != f[3].data() + f[3].size())
      throw ParseError("row " + std::to_string(row) + ": bad grade '" + f[3] + "'",
                       row, "grade");
    if (grade < 50 || grade > 70)
      throw ParseError("row " + std::to_string(row) + ": grade " + f[3] +
                           " outside supported range [50,70]",
                       row, "grade");
    e.grade = grade;
    if (f[4] == "PCGS")
      e.service = Service::PCGS;
    else if (f[4] == "NGC")
      e.service = Service::NGC;
    else
      throw ParseError("row " + std::to_string(row) + ": service must be PCGS "
                           "or NGC, got '" + f[4] + "'",
                       row, "service");
    if (has_split) {
      if (f[5] == "train")
        e.split = Split::Train;
      else if (f[5] == "test")
        e.split = Split::Test;
      else if (f[5].empty())
        e.split = Split::None;
      else
        throw ParseError("row " + std::to_string(row) + ": split must be "
                             "train, test or empty",
                         row, "split");
    }
    if (check_files) {
      for (const fs::path* img : {&e.obverse_path, &e.reverse_path})
        if (!fs::exists(*img))
          throw MissingFileError("row " + std::to_string(row) +
                                 ": missing image file " + img->string());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const fs::path& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest: " + path.string());
  bool any_split = false;
  for (const auto& e : entries) any_split |= e.split != Split::None;
  out << "coin_id,obverse_path,reverse_path,grade,service";
  if (any_split) out << ",split";
  out << "\n";
  for (const auto& e : entries) {
    out << e.coin_id << ',' << e.obverse_path.string() << ','
        << e.reverse_path.string() << ',' << e.grade << ','
        << to_string(e.service);
    if (any_split) out << ',' << to_string(e.split);
    out << "\n";
  }
}

const std::map<int, int>& reference_support_histogram() {
  static const std::map<int, int> hist = {
      {50, 1},  {55, 2},  {57, 3},   {58, 12}, {60, 3},  {61, 12}, {62, 44},
      {63, 108}, {64, 165}, {65, 127}, {66, 52}, {67, 7},  {68, 1}};
  return hist;
}

std::map<int, int> scale_histogram(const std::map<int, int>& shape, int total) {
  double shape_total = 0.0;
  for (const auto& [g, c] : shape) shape_total += c;
  if (shape_total <= 0.0 || total <= 0) return {};

  std::map<int, int> out;
  std::vector<std::pair<double, int>> remainders;  // (-frac, grade)
  int assigned = 0;
  for (const auto& [g, c] : shape) {
    double exact = double(c) * double(total) / shape_total;
    int base = static_cast<int>(std::floor(exact));
    out[g] = base;
    assigned += base;
    remainders.emplace_back(-(exact - base), g);
  }
  std::sort(remainders.begin(), remainders.end());
  for (int i = 0; i < total - assigned; ++i)
    out[remainders[i % remainders.size()].second]++;
  return out;
}

namespace {

double wear_sigma_for(const SynthSpec& spec, int grade) {
  const double t = std::clamp((68.0 - grade) / 18.0, 0.0, 1.0);
  const double shaped = std::pow(t, spec.wear_gamma);
  return spec.wear_sigma_high_grade +
         (spec.wear_sigma_low_grade - spec.wear_sigma_high_grade) * shaped;
}

// Separable Gaussian on a plain raster (no config plumbing); used for the
// wear simulation.
RasterF blur_raster(const RasterF& in, double sigma) {
  if (sigma <= 0.0) return in;
  PreprocessConfig cfg;
  cfg.blur_sigma = sigma;
  return gaussian_blur(in, cfg);
}

// Per-pixel hash noise, independent of evaluation order.
double hash_noise(std::uint64_t seed, int x, int y) {
  std::uint64_t s = seed ^ (std::uint64_t(x) * 0x9E3779B97F4A7C15ULL) ^
                    (std::uint64_t(y) * 0xC2B2AE3D27D4EB4FULL);
  return double(splitmix64(s) >> 11) * 0x1.0p-53;
}

}  // namespace

ImageRgb8 render_coin_side(const SynthSpec& spec, int grade,
                           std::uint64_t coin_seed, bool obverse) {
  const int size = spec.image_size;
  Rng rng(derive_seed(coin_seed, obverse ? 1 : 2));

  const double cx = size / 2.0 + rng.uniform(-0.01, 0.01) * size;
  const double cy = size / 2.0 + rng.uniform(-0.01, 0.01) * size;
  const double radius = 0.40 * size;

  const double hue = rng.uniform(42.0, 52.0);
  const double sat = rng.uniform(0.50, 0.62);
  const double val_base = rng.uniform(0.58, 0.66);
  const double amplitude =
      rng.uniform(1.0 - spec.amplitude_jitter, 1.0 + spec.amplitude_jitter);
  const double phase_fine = rng.uniform(0.0, 2.0 * M_PI);
  const double phase_ring = rng.uniform(0.0, 2.0 * M_PI);
  double octant[8];
  for (double& o : octant)
    o = rng.uniform(1.0 - spec.octant_jitter, 1.0 + spec.octant_jitter);

  const int n_rays = obverse ? 48 : 36;
  const double ring_wavelength = radius / (obverse ? 3.5 : 2.8);
  const double fine_share = obverse ? 0.62 : 0.55;

  // Relief height field, then wear smoothing.
  RasterF relief(size, size, 0.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r = std::sqrt(dx * dx + dy * dy);
      if (r >= radius) continue;
      const double theta = std::atan2(dy, dx);
      const double rn = r / radius;
      const double envelope = std::sin(M_PI * rn);  // fades at center and rim
      int oct = static_cast<int>((theta + M_PI) / (M_PI / 4.0));
      if (oct > 7) oct = 7;
      const double fine =
          std::sin(n_rays * theta + phase_fine) * envelope * octant[oct];
      const double rings =
          std::sin(2.0 * M_PI * r / ring_wavelength + phase_ring);
      double h = amplitude * (fine_share * fine + (1.0 - fine_share) * rings);
      // Raised rim, constant across grades.
      if (rn > 0.90) h += 0.9 * std::sin(M_PI * (rn - 0.90) / 0.10);
      relief.at(x, y) = h;
    }
  }
  relief = blur_raster(relief, wear_sigma_for(spec, grade));

  ImageRgb8 img(size, size);
  const std::uint64_t noise_seed = derive_seed(coin_seed, obverse ? 11 : 12);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r = std::sqrt(dx * dx + dy * dy);
      if (r < radius) {
        double v = val_base * (1.0 + 0.38 * relief.at(x, y));
        v += 0.01 * (hash_noise(noise_seed, x, y) - 0.5);
        img.at(x, y) = hsv_to_rgb(hue, sat, std::clamp(v, 0.0, 1.0));
      } else {
        const double v = 0.05 + 0.02 * hash_noise(noise_seed, x, y);
        img.at(x, y) = hsv_to_rgb(0.0, 0.0, v);
      }
    }
  }

  if (spec.with_prongs) {
    // Thin holder prongs touching the coin edge at fixed angles.
    const double prong_len = 0.06 * size;
    const int half_w = 1;  // 3 px wide
    for (double ang : {M_PI / 4, 3 * M_PI / 4, 5 * M_PI / 4, 7 * M_PI / 4}) {
      const double ux = std::cos(ang), uy = std::sin(ang);
      for (double t = -2.0; t <= prong_len; t += 0.5) {
        const double px = cx + (radius + t) * ux;
        const double py = cy + (radius + t) * uy;
        for (int ox = -half_w; ox <= half_w; ++ox)
          for (int oy = -half_w; oy <= half_w; ++oy) {
            const int ix = static_cast<int>(std::lround(px)) + ox;
            const int iy = static_cast<int>(std::lround(py)) + oy;
            if (ix < 0 || ix >= size || iy < 0 || iy >= size) continue;
            img.at(ix, iy) = hsv_to_rgb(0.0, 0.05, 0.45);
          }
      }
    }
  }
  return img;
}

SynthResult synth_corpus(const SynthSpec& spec) {
  if (spec.out_dir.empty()) throw ConfigError("synth: out_dir required");
  std::map<int, int> dist = spec.grade_distribution.empty()
                                ? scale_histogram(reference_support_histogram(),
                                                  spec.n_coins)
                                : spec.grade_distribution;
  int total = 0, nonzero_grades = 0;
  for (const auto& [g, c] : dist) {
    if (c < 0) throw ConfigError("synth: negative count for grade " +
                                 std::to_string(g));
    if (g < 50 || g > 70)
      throw ConfigError("synth: grade " + std::to_string(g) + " out of range");
    total += c;
    nonzero_grades += c > 0;
  }
  if (total > 0 && nonzero_grades < 2)
    throw ConfigError("synth: need at least 2 grades with nonzero counts");

  fs::create_directories(spec.out_dir / "img");

  SynthResult res;
  struct Item {
    int grade;
    int idx;
  };
  std::vector<Item> items;
  for (const auto& [g, c] : dist)
    for (int i = 0; i < c; ++i) items.push_back({g, static_cast<int>(items.size())});

  res.entries.resize(items.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < items.size(); ++i) {
    const int grade = items[i].grade;
    const std::uint64_t coin_seed = derive_seed(spec.seed, i);
    char id[32];
    std::snprintf(id, sizeof(id), "c%04d", items[i].idx);
    ImageRgb8 obv = render_coin_side(spec, grade, coin_seed, true);
    ImageRgb8 rev = render_coin_side(spec, grade, coin_seed, false);
    fs::path op = spec.out_dir / "img" / (std::string(id) + "_obv.png");
    fs::path rp = spec.out_dir / "img" / (std::string(id) + "_rev.png");
    write_png(op, obv);
    write_png(rp, rev);

    ManifestEntry e;
    e.coin_id = id;
    e.obverse_path = op;
    e.reverse_path = rp;
    e.grade = grade;
    Rng srng(derive_seed(coin_seed, 99));
    e.service = srng.uniform() < 0.5 ? Service::PCGS : Service::NGC;
    res.entries[i] = std::move(e);
  }

  for (const auto& e : res.entries) res.histogram[e.grade]++;
  write_manifest(spec.out_dir / "manifest.csv", res.entries);
  return res;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, int row, const char* col,
                    std::size_t byte_offset) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ParseError("row " + std::to_string(row) + " (byte offset " +
                         std::to_string(byte_offset) + "): bad value '" + s +
                         "' in column " + col,
                     row, col);
  return v;
}

}  // namespace

void feature_cache_write(const fs::path& path,
                         const std::vector<CacheRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature cache: " + path.string());

  out << "coin_id";
  for (const std::string& name : feature_slot_names()) out << ',' << name;
  out << ",grade,provenance,split,obverse_path,reverse_path,pipeline_version\n";
  for (const CacheRecord& r : records) {
    if (r.features.size() != static_cast<std::size_t>(kFeatureDim))
      throw ShapeMismatchError("feature cache: record '" + r.coin_id +
                               "' has " + std::to_string(r.features.size()) +
                               " values, expected " +
                               std::to_string(kFeatureDim));
    out << r.coin_id;
    for (double v : r.features) out << ',' << format_double(v);
    out << ',' << r.grade << ',' << to_string(r.provenance) << ','
        << to_string(r.split) << ',' << r.obverse_path << ',' << r.reverse_path
        << ',' << kPipelineVersion << "\n";
  }
}

std::vector<CacheRecord> feature_cache_read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open feature cache: " + path.string());

  const std::size_t expected_fields = 1 + kFeatureDim + 6;
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line))
    throw ParseError("feature cache is empty: " + path.string(), 1);
  bool header_complete = in.good();  // newline consumed
  line = strip_cr(line);
  if (!header_complete && in.eof())
    throw ParseError("truncated feature cache at byte offset " +
                         std::to_string(offset + line.size()),
                     1);
  if (split_fields(line).size() != expected_fields)
    throw ParseError("feature cache header has wrong column count", 1);
  offset += line.size() + 1;

  std::vector<CacheRecord> records;
  std::string version_seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    const bool had_newline = !in.eof();
    line = strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> f = split_fields(line);
    if (f.size() != expected_fields || !had_newline) {
      throw ParseError("truncated or malformed feature cache row " +
                           std::to_string(row) + " at byte offset " +
                           std::to_string(offset),
                       row);
    }
    CacheRecord r;
    r.coin_id = f[0];
    r.features.resize(kFeatureDim);
    for (int i = 0; i < kFeatureDim; ++i)
      r.features[i] = parse_double(f[1 + i], row,
                                   feature_slot_names()[i].c_str(), offset);
    std::size_t j = 1 + kFeatureDim;
    r.grade = static_cast<int>(parse_double(f[j], row, "grade", offset));
    const std::string& prov = f[j + 1];
    if (prov == "original")
      r.provenance = Provenance::Original;
    else if (prov == "smote")
      r.provenance = Provenance::Smote;
    else if (prov == "noise")
      r.provenance = Provenance::Noise;
    else
      throw ParseError("row " + std::to_string(row) + ": bad provenance '" +
                           prov + "'",
                       row, "provenance");
    const std::string& split = f[j + 2];
    if (split == "train")
      r.split = Split::Train;
    else if (split == "test")
      r.split = Split::Test;
    else if (split.empty())
      r.split = Split::None;
    else
      throw ParseError("row " + std::to_string(row) + ": bad split '" + split +
                           "'",
                       row, "split");
    r.obverse_path = f[j + 3];
    r.reverse_path = f[j + 4];
    const std::string& version = f[j + 5];
    if (version_seen.empty()) {
      version_seen = version;
    } else if (version != version_seen) {
      throw VersionMismatchError("feature cache mixes layout versions '" +
                                 version_seen + "' and '" + version + "'");
    }
    records.push_back(std::move(r));
    offset += line.size() + 1;
  }
  if (!version_seen.empty() && version_seen != kPipelineVersion)
    throw VersionMismatchError("feature cache layout version '" + version_seen +
                               "' does not match expected '" +
                               kPipelineVersion + "'");
  return records;
}

Dataset cache_to_dataset(const std::vector<CacheRecord>& records) {
  Dataset out;
  out.reserve(records.size());
  for (const CacheRecord& r : records) {
    Sample s;
    s.x = r.features;
    s.label = r.grade;
    s.provenance = r.provenance;
    s.split = r.split;
    s.id = r.coin_id;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace coingrade
