#pragma once

#include <optional>
#include <string>

#include "specctrl/spectra.hpp"

namespace specctrl {

// Cache root: SPECCTRL_CACHE_DIR, else $HOME/.cache/specctrl, else
// ./.specctrl-cache. Created on first store.
std::string cache_directory();

std::uint64_t band_cache_key(std::uint64_t grid_hash, const std::string& provenance,
                             double lo, double hi, int max_count, double tol);

// Misses and unreadable or mismatched entries come back empty.
std::optional<EigenBand> load_cached_band(std::uint64_t key, const std::string& dir = {});
void store_cached_band(std::uint64_t key, const EigenBand& band, const std::string& dir = {});

// compute_band with a read-through cache; use_cache=false always recomputes
// and does not write.
EigenBand compute_band_cached(const SparseOperator& op, double lo, double hi, int max_count,
                              const BandOptions& opt = {}, bool use_cache = true,
                              const std::string& dir = {});

}  // namespace specctrl
