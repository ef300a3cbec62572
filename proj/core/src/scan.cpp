#include "specctrl/scan.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "specctrl/errors.hpp"
#include "specctrl/factorization.hpp"
#include "specctrl/singular.hpp"

namespace specctrl {

std::vector<cdouble> default_z_grid(CapFamily family, int points) {
  if (points < 1) throw invalid_argument("default_z_grid: points must be >= 1");
  double lo = 0.9, hi = 1.1;
  if (family == CapFamily::degenerate_well) {
    lo = -0.05;
    hi = 0.05;
  }
  std::vector<cdouble> zs(points);
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.5 : static_cast<double>(i) / (points - 1);
    zs[i] = cdouble(lo + t * (hi - lo), 0.0);
  }
  return zs;
}

namespace {

struct Job {
  double h;
  int mode;  // hyperbolic only
  cdouble z;
};

bool z_less(const cdouble& a, const cdouble& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace

ScanResult run_scan(const ScanConfig& cfg) {
  std::vector<Job> jobs;
  std::vector<cdouble> zs =
      cfg.zs.empty() ? default_z_grid(cfg.family) : cfg.zs;
  std::sort(zs.begin(), zs.end(), z_less);
  if (cfg.refine_levels < 0)
    throw invalid_argument("run_scan: refine_levels must be >= 0");
  if (cfg.refine_levels > 0 && cfg.refine_points < 3)
    throw invalid_argument("run_scan: refine_points must be >= 3");

  if (cfg.family == CapFamily::hyperbolic) {
    if (cfg.modes.empty())
      throw invalid_argument("run_scan: hyperbolic scan needs a mode list");
    std::vector<int> modes = cfg.modes;
    std::sort(modes.begin(), modes.end());
    for (int m : modes) {
      if (m < 1) throw invalid_argument("run_scan: modes must be >= 1");
      for (const cdouble& z : zs) jobs.push_back({1.0 / m, m, z});
    }
  } else {
    if (cfg.hs.empty())
      throw invalid_argument("run_scan: well scan needs an h list");
    if (cfg.well_order < 1)
      throw invalid_argument("run_scan: well_order must be >= 1");
    std::vector<double> hs = cfg.hs;
    std::sort(hs.rbegin(), hs.rend());
    for (double h : hs) {
      if (!(h > 0.0)) throw invalid_argument("run_scan: h must be positive");
      for (const cdouble& z : zs) jobs.push_back({h, 0, z});
    }
  }

  std::vector<std::optional<ScanPoint>> slots(jobs.size());
  std::vector<std::optional<ScanFailure>> fails(jobs.size());
  const unsigned workers = cfg.workers == 0 ? default_workers() : cfg.workers;

  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    try {
      CapModel model =
          cfg.family == CapFamily::hyperbolic
              ? build_cap_hyperbolic(j.mode, j.z, cfg.points_override, 3.0, 1.5,
                                     0.5, cfg.amplitude)
              : build_cap_degenerate_well(j.h, cfg.well_order, j.z,
                                          cfg.points_override, 2.0, 1.0, 0.5,
                                          cfg.amplitude);
      const ResolventNorms norms = resolvent_norms(model, cfg.tol, 5000);
      slots[i] = ScanPoint{j.h, j.z, norms.full, norms.cutoff, norms.iterations};
    } catch (const solver_error& e) {
      fails[i] = ScanFailure{j.h, j.z, e.what()};
    }
  });

  ScanResult out;
  out.family = cfg.family;
  out.well_order = cfg.family == CapFamily::degenerate_well ? cfg.well_order : 0;
  std::vector<std::vector<ScanPoint>> coarse;  // per-h grid rows, out.points order
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (fails[i]) out.failures.push_back(*fails[i]);
    if (!slots[i]) continue;
    const ScanPoint& p = *slots[i];
    if (!out.points.empty() && out.points.back().h == p.h) {
      coarse.back().push_back(p);
      if (p.norm > out.points.back().norm) out.points.back() = p;
    } else {
      out.points.push_back(p);
      coarse.push_back({p});
    }
  }

  if (cfg.refine_levels > 0 && zs.size() > 1) {
    auto build = [&](double h, cdouble z) {
      return cfg.family == CapFamily::hyperbolic
                 ? build_cap_hyperbolic(static_cast<int>(std::lround(1.0 / h)),
                                        z, cfg.points_override, 3.0, 1.5, 0.5,
                                        cfg.amplitude)
                 : build_cap_degenerate_well(h, cfg.well_order, z,
                                             cfg.points_override, 2.0, 1.0, 0.5,
                                             cfg.amplitude);
    };
    struct Cand {
      cdouble z;
      double norm;
    };
    // Search probes estimate only sigma_min (the cutoff norm is filled in by
    // one full evaluation at the winner), which keeps the dense first level
    // affordable.
    auto sigma_probe = [&](double h, cdouble z) -> std::optional<Cand> {
      try {
        const CapModel model = build(h, z);
        const Factorization fact(model.q);
        const SingularEstimate s = smallest_singular(model.q, fact, cfg.tol, 5000);
        return Cand{z, 1.0 / s.value};
      } catch (const solver_error&) {
        return std::nullopt;
      }
    };
    // The peak of ||Q^{-1}|| over real z sits on a resonance and its width
    // shrinks with h (h/log(1/h) for the hyperbolic family, h^{2m/(m+1)} for
    // the order-m wells), so a fixed grid undersamples it and a secondary
    // peak can out-poll the primary — possibly from a basin the grid argmax
    // does not even bracket. The search therefore seeds one candidate per
    // strong coarse basin, samples each bracket at the expected width scale
    // on the first level, and keeps a beam of basins through the later zoom
    // levels rather than chasing a single argmax.
    constexpr std::size_t beam_width = 4;
    const double spacing =
        (zs.back().real() - zs.front().real()) / (zs.size() - 1);
    auto width_hint = [&](double h) {
      if (cfg.family == CapFamily::hyperbolic)
        return h / std::max(1.0, std::log(1.0 / h));
      const double m = cfg.well_order;
      return std::pow(h, 2.0 * m / (m + 1.0));
    };
    parallel_for(out.points.size(), workers, [&](std::size_t r) {
      const double h = out.points[r].h;
      std::vector<Cand> candidates;
      {
        std::vector<ScanPoint> rows = coarse[r];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const ScanPoint& a, const ScanPoint& b) {
                           return a.norm > b.norm;
                         });
        for (const ScanPoint& p : rows) {
          const bool basin_taken =
              std::any_of(candidates.begin(), candidates.end(),
                          [&](const Cand& c) {
                            return std::abs(c.z - p.z) < 1.5 * spacing;
                          });
          if (!basin_taken) candidates.push_back({p.z, p.norm});
          if (candidates.size() == beam_width) break;
        }
      }
      Cand best = candidates.front();
      double w = spacing;
      for (int level = 0; level < cfg.refine_levels && w > 0.0; ++level) {
        int n_probe = cfg.refine_points;
        if (level == 0) {
          const double dense = 2.0 * w / width_hint(h);
          n_probe = std::clamp(static_cast<int>(dense) + 1, cfg.refine_points, 129);
        }
        std::vector<cdouble> grid;
        for (const Cand& c : candidates)
          for (int k = 0; k < n_probe; ++k) {
            const double t = static_cast<double>(k) / (n_probe - 1);
            grid.emplace_back(c.z.real() - w + 2.0 * w * t, c.z.imag());
          }
        std::sort(grid.begin(), grid.end(), z_less);
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        std::vector<Cand> pool = candidates;
        for (const cdouble& z : grid)
          if (const auto p = sigma_probe(h, z)) pool.push_back(*p);
        std::stable_sort(pool.begin(), pool.end(),
                         [](const Cand& a, const Cand& b) {
                           return a.norm > b.norm;
                         });
        const double w_next = 2.0 * w / (n_probe - 1);
        candidates.clear();
        for (const Cand& p : pool) {
          const bool basin_taken =
              std::any_of(candidates.begin(), candidates.end(),
                          [&](const Cand& c) {
                            return std::abs(c.z - p.z) < 2.0 * w_next;
                          });
          if (!basin_taken) candidates.push_back(p);
          if (candidates.size() == beam_width) break;
        }
        if (candidates.empty()) break;
        if (candidates.front().norm > best.norm) best = candidates.front();
        w = w_next;
      }
      // Full evaluation (both norms) at the winner; if its cutoff stage
      // fails to converge, walk down the beam, and keep the coarse row when
      // nothing better survives.
      std::vector<Cand> finals(1, best);
      for (const Cand& c : candidates)
        if (std::abs(c.z - best.z) > 0.0) finals.push_back(c);
      for (const Cand& c : finals) {
        if (c.norm <= out.points[r].norm) break;
        if (std::abs(c.z - out.points[r].z) == 0.0) break;
        try {
          const CapModel model = build(h, c.z);
          const ResolventNorms norms = resolvent_norms(model, cfg.tol, 5000);
          out.points[r] =
              ScanPoint{h, c.z, norms.full, norms.cutoff, norms.iterations};
          break;
        } catch (const solver_error&) {
        }
      }
    });
  }
  return out;
}

std::vector<ReducedPoint> reduce_max_over_z(const ScanResult& r) {
  std::vector<ScanPoint> rows = r.points;
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ScanPoint& a, const ScanPoint& b) { return a.h > b.h; });
  std::vector<ReducedPoint> out;
  for (const ScanPoint& p : rows) {
    if (out.empty() || out.back().h != p.h) {
      out.push_back({p.h, p.norm, p.cutoff_norm});
    } else {
      out.back().norm = std::max(out.back().norm, p.norm);
      out.back().cutoff_norm = std::max(out.back().cutoff_norm, p.cutoff_norm);
    }
  }
  return out;
}

std::vector<double> gap_ratios(const ScanResult& r) {
  std::vector<double> out;
  for (const ReducedPoint& p : reduce_max_over_z(r)) {
    const double g = p.h * p.norm;
    if (g <= 0.0) throw invalid_argument("gap_ratios: nonpositive norm");
    const double gc = p.h * p.cutoff_norm;
    out.push_back(gc * gc / g);
  }
  return out;
}

void save_scan_csv(const ScanResult& r, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("save_scan_csv: cannot open " + path);
  f << "h,z_re,z_im,norm,cutoff_norm,iterations\n";
  for (const ScanPoint& p : r.points)
    f << fmt_g17(p.h) << ',' << fmt_g17(p.z.real()) << ',' << fmt_g17(p.z.imag())
      << ',' << fmt_g17(p.norm) << ',' << fmt_g17(p.cutoff_norm) << ','
      << p.iterations << '\n';
  if (!f.good()) throw data_error("save_scan_csv: write failed on " + path);
}

ScanResult load_scan_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("load_scan_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line) ||
      line != "h,z_re,z_im,norm,cutoff_norm,iterations")
    throw data_error("load_scan_csv: bad header in " + path);

  ScanResult out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 5> vals{};
    const char* s = line.c_str();
    char* end = nullptr;
    for (int k = 0; k < 5; ++k) {
      vals[k] = std::strtod(s, &end);
      if (end == s || *end != ',')
        throw data_error("load_scan_csv: bad row " + std::to_string(lineno) +
                         " in " + path);
      s = end + 1;
    }
    const long it = std::strtol(s, &end, 10);
    if (end == s || *end != '\0')
      throw data_error("load_scan_csv: bad row " + std::to_string(lineno) +
                       " in " + path);
    out.points.push_back(
        {vals[0], cdouble(vals[1], vals[2]), vals[3], vals[4],
         static_cast<int>(it)});
  }
  return out;
}

}  // namespace specctrl
