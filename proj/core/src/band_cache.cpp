#include "specctrl/band_cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "specctrl/errors.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

using nlohmann::json;

std::string cache_directory() {
  if (const char* env = std::getenv("SPECCTRL_CACHE_DIR"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home)
    return std::string(home) + "/.cache/specctrl";
  return ".specctrl-cache";
}

std::uint64_t band_cache_key(std::uint64_t grid_hash, const std::string& provenance,
                             double lo, double hi, int max_count, double tol) {
  unsigned char buf[8 + 8 + 8 + 8 + 4];
  std::memcpy(buf, &grid_hash, 8);
  std::memcpy(buf + 8, &lo, 8);
  std::memcpy(buf + 16, &hi, 8);
  std::memcpy(buf + 24, &tol, 8);
  std::memcpy(buf + 32, &max_count, 4);
  std::uint64_t h = fnv1a64(buf, sizeof(buf));
  return fnv1a64(provenance.data(), provenance.size(), h);
}

namespace {

std::string entry_path(std::uint64_t key, const std::string& dir) {
  char name[32];
  std::snprintf(name, sizeof(name), "band-%016llx.bin",
                static_cast<unsigned long long>(key));
  return (dir.empty() ? cache_directory() : dir) + "/" + name;
}

}  // namespace

std::optional<EigenBand> load_cached_band(std::uint64_t key, const std::string& dir) {
  std::ifstream in(entry_path(key, dir), std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  json h = json::parse(line, nullptr, false);
  if (h.is_discarded() || h.value("format", "") != "specctrl.band" ||
      h.value("version", 0) != 1)
    return std::nullopt;
  EigenBand band;
  const long n = h.value("n", 0L);
  const long count = h.value("count", -1L);
  if (n <= 0 || count < 0) return std::nullopt;
  band.lo = h.value("lo", 0.0);
  band.hi = h.value("hi", 0.0);
  band.truncated = h.value("truncated", false);
  band.provenance = h.value("provenance", "");
  band.grid_hash = std::strtoull(h.value("grid_hash", "0").c_str(), nullptr, 16);
  band.values.resize(count);
  band.residuals.resize(count);
  band.vectors.resize(n, count);
  auto read_all = [&in](void* dst, std::streamsize bytes) {
    in.read(static_cast<char*>(dst), bytes);
    return in.good() || (bytes == 0);
  };
  if (!read_all(band.values.data(), count * 8)) return std::nullopt;
  if (!read_all(band.residuals.data(), count * 8)) return std::nullopt;
  if (!read_all(band.vectors.data(), n * count * 16)) return std::nullopt;
  in.peek();
  if (!in.eof()) return std::nullopt;
  return band;
}

void store_cached_band(std::uint64_t key, const EigenBand& band, const std::string& dir) {
  const std::string path = entry_path(key, dir);
  std::filesystem::path p(path);
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(band.grid_hash));
  json h{{"format", "specctrl.band"},
         {"version", 1},
         {"n", band.vectors.rows()},
         {"count", band.count()},
         {"lo", band.lo},
         {"hi", band.hi},
         {"truncated", band.truncated},
         {"provenance", band.provenance},
         {"grid_hash", hash_hex}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("band cache: cannot write " + tmp);
    out << h.dump() << '\n';
    out.write(reinterpret_cast<const char*>(band.values.data()), band.count() * 8);
    out.write(reinterpret_cast<const char*>(band.residuals.data()), band.count() * 8);
    out.write(reinterpret_cast<const char*>(band.vectors.data()),
              band.vectors.rows() * band.count() * 16);
    if (!out) throw data_error("band cache: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw data_error("band cache: rename failed for " + path);
}

EigenBand compute_band_cached(const SparseOperator& op, double lo, double hi, int max_count,
                              const BandOptions& opt, bool use_cache,
                              const std::string& dir) {
  const std::uint64_t key =
      band_cache_key(op.grid_hash, op.provenance, lo, hi, max_count, opt.tol);
  if (use_cache) {
    if (auto hit = load_cached_band(key, dir)) {
      if (hit->grid_hash == op.grid_hash && hit->provenance == op.provenance &&
          hit->vectors.rows() == op.n())
        return *hit;
    }
  }
  EigenBand band = compute_band(op, lo, hi, max_count, opt);
  if (use_cache) store_cached_band(key, band, dir);
  return band;
}

}  // namespace specctrl
