#include "specctrl/grid.hpp"

#include <cmath>
#include <sstream>

#include "specctrl/errors.hpp"
#include "specctrl/util.hpp"

namespace specctrl {

const char* grid_kind_name(GridKind k) {
  switch (k) {
    case GridKind::interval: return "interval";
    case GridKind::rectangle: return "rectangle";
    case GridKind::stadium: return "stadium";
    case GridKind::cosh_mode: return "cosh_mode";
  }
  return "?";
}

double Grid::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

std::uint64_t Grid::content_hash() const {
  std::uint64_t h = fnv1a64(grid_kind_name(kind));
  const double params[] = {static_cast<double>(dim),
                           static_cast<double>(nx),
                           static_cast<double>(ny),
                           hx,
                           hy,
                           length,
                           height,
                           radius,
                           flat,
                           half_length,
                           static_cast<double>(mode)};
  h = fnv1a64(params, sizeof(params), h);
  h = fnv1a64_vec(coords, h);
  h = fnv1a64_vec(weights, h);
  return h;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << grid_kind_name(kind) << "(n=" << size();
  switch (kind) {
    case GridKind::interval: os << ",length=" << length; break;
    case GridKind::rectangle: os << ",a=" << height; break;
    case GridKind::stadium: os << ",r=" << radius << ",L=" << flat; break;
    case GridKind::cosh_mode:
      os << ",L=" << half_length << ",m=" << mode;
      break;
  }
  os << ")";
  return os.str();
}

Grid build_interval(int n, double length) {
  if (n < 3) throw invalid_argument("build_interval: need n >= 3");
  if (!(length > 0)) throw invalid_argument("build_interval: length <= 0");
  Grid g;
  g.kind = GridKind::interval;
  g.dim = 1;
  g.length = length;
  g.nx = n;
  g.hx = length / (n + 1);
  g.coords.resize(n);
  g.weights.assign(n, g.hx);
  for (int i = 0; i < n; ++i) g.coords[i] = (i + 1) * g.hx;
  return g;
}

Grid build_rectangle(int nx, int ny, double a) {
  if (nx < 3 || ny < 3)
    throw invalid_argument("build_rectangle: need nx, ny >= 3");
  if (!(a > 0)) throw invalid_argument("build_rectangle: height <= 0");
  Grid g;
  g.kind = GridKind::rectangle;
  g.dim = 2;
  g.height = a;
  g.nx = nx;
  g.ny = ny;
  g.hx = 1.0 / (nx + 1);
  g.hy = a / (ny + 1);
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  g.coords.resize(2 * n);
  g.weights.assign(n, g.hx * g.hy);
  g.node_of.resize(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * nx + i;
      g.node_of[idx] = static_cast<std::int32_t>(idx);
      g.coords[2 * idx] = (i + 1) * g.hx;
      g.coords[2 * idx + 1] = (j + 1) * g.hy;
    }
  return g;
}

Grid build_stadium(int n_per_unit, double r, double flat_length) {
  if (!(r > 0) || !(flat_length > 0))
    throw invalid_argument("build_stadium: need r, L > 0");
  if (n_per_unit * 2.0 * r < 6.0)
    throw invalid_argument(
        "build_stadium: resolution too coarse for the discs (need >= 5 "
        "interior nodes across a diameter)");
  const double L = flat_length;
  const double span_x = L + 2 * r;
  const double span_y = 2 * r;
  const int mx = static_cast<int>(std::lround(span_x * n_per_unit));
  const int my = static_cast<int>(std::lround(span_y * n_per_unit));
  Grid g;
  g.kind = GridKind::stadium;
  g.dim = 2;
  g.radius = r;
  g.flat = L;
  g.nx = mx - 1;
  g.ny = my - 1;
  g.hx = span_x / mx;
  g.hy = span_y / my;
  g.node_of.assign(static_cast<std::size_t>(g.nx) * g.ny, -1);
  const double r2 = r * r;
  auto inside = [&](double x, double y) {
    if (x > 0.0 && x < L && std::abs(y) < r) return true;
    if (x * x + y * y < r2) return true;
    const double dx = x - L;
    return dx * dx + y * y < r2;
  };
  std::int32_t next = 0;
  for (int j = 0; j < g.ny; ++j) {
    const double y = -r + (j + 1) * g.hy;
    for (int i = 0; i < g.nx; ++i) {
      const double x = -r + (i + 1) * g.hx;
      if (!inside(x, y)) continue;
      g.node_of[static_cast<std::size_t>(j) * g.nx + i] = next++;
      g.coords.push_back(x);
      g.coords.push_back(y);
      g.weights.push_back(g.hx * g.hy);
    }
  }
  return g;
}

Grid build_cosh_mode(int n, double half_length, int mode) {
  if (n < 3) throw invalid_argument("build_cosh_mode: need n >= 3");
  if (!(half_length > 0)) throw invalid_argument("build_cosh_mode: L <= 0");
  if (mode < 1) throw invalid_argument("build_cosh_mode: mode >= 1 required");
  Grid g;
  g.kind = GridKind::cosh_mode;
  g.dim = 1;
  g.half_length = half_length;
  g.mode = mode;
  g.nx = n;
  const double L = half_length;
  const double d = 2 * L / (n + 1);
  g.hx = d;
  g.coords.resize(n);
  g.weights.resize(n);
  g.metric.resize(n);
  g.metric_mid.resize(n + 1);
  for (int i = 0; i < n; ++i) {
    const double x = -L + (i + 1) * d;
    g.coords[i] = x;
    g.metric[i] = std::cosh(x);
  }
  for (int i = 0; i <= n; ++i) g.metric_mid[i] = std::cosh(-L + (i + 0.5) * d);
  // Exact metric cell integrals: interior node i owns (x_i - d/2, x_i + d/2);
  // the first and last cells extend to the Dirichlet ends so the weights
  // partition (-L, L) and sum to exactly 2 sinh(L).
  const double sh = 2.0 * std::sinh(0.5 * d);
  for (int i = 0; i < n; ++i) g.weights[i] = sh * g.metric[i];
  g.weights[0] += std::sinh(-L + 0.5 * d) - std::sinh(-L);
  g.weights[n - 1] += std::sinh(L) - std::sinh(L - 0.5 * d);
  return g;
}

std::size_t Region::support_count() const {
  std::size_t c = 0;
  for (double v : indicator)
    if (v > 0.0) ++c;
  return c;
}

double cubic_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

Region region_from_predicate(const Grid& g,
                             const std::function<double(double, double)>& level,
                             double ramp_width, std::string label) {
  if (ramp_width < 0)
    throw invalid_argument("region_from_predicate: negative ramp width");
  Region r;
  r.label = std::move(label);
  r.indicator.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double lx = g.x(i);
    const double ly = g.dim == 2 ? g.y(i) : 0.0;
    const double s = level(lx, ly);
    r.indicator[i] =
        ramp_width == 0.0 ? (s > 0.0 ? 1.0 : 0.0) : cubic_ramp(s / ramp_width);
  }
  return r;
}

Region region_from_predicate(const Grid& g,
                             const std::function<bool(double, double)>& inside,
                             std::string label) {
  return region_from_predicate(
      g, [&](double x, double y) { return inside(x, y) ? 1.0 : -1.0; }, 0.0,
      std::move(label));
}

}  // namespace specctrl
