#include "specctrl/grid_io.hpp"

#include <fstream>

#include <json.hpp>

#include "specctrl/errors.hpp"

namespace specctrl {

namespace {

using nlohmann::json;

template <typename T>
void write_raw(std::ofstream& f, const std::vector<T>& v) {
  if (!v.empty())
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& f, std::vector<T>& v, std::size_t count) {
  v.resize(count);
  if (count)
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(count * sizeof(T)));
  if (!f) throw data_error("grid file truncated");
}

GridKind kind_from_name(const std::string& s) {
  if (s == "interval") return GridKind::interval;
  if (s == "rectangle") return GridKind::rectangle;
  if (s == "stadium") return GridKind::stadium;
  if (s == "cosh_mode") return GridKind::cosh_mode;
  throw data_error("unknown grid kind: " + s);
}

}  // namespace

void save_grid(const Grid& g, const std::string& path) {
  json h;
  h["format"] = "specctrl.grid";
  h["version"] = 1;
  h["kind"] = grid_kind_name(g.kind);
  h["dim"] = g.dim;
  h["count"] = g.size();
  h["nx"] = g.nx;
  h["ny"] = g.ny;
  h["hx"] = g.hx;
  h["hy"] = g.hy;
  h["length"] = g.length;
  h["height"] = g.height;
  h["radius"] = g.radius;
  h["flat"] = g.flat;
  h["half_length"] = g.half_length;
  h["mode"] = g.mode;
  h["lattice"] = !g.node_of.empty();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw invalid_argument("cannot open for writing: " + path);
  f << h.dump() << '\n';
  write_raw(f, g.coords);
  write_raw(f, g.weights);
  if (g.kind == GridKind::cosh_mode) {
    write_raw(f, g.metric);
    write_raw(f, g.metric_mid);
  }
  write_raw(f, g.node_of);
  if (!f) throw data_error("short write: " + path);
}

Grid load_grid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw invalid_argument("cannot open grid: " + path);
  std::string line;
  if (!std::getline(f, line)) throw data_error("missing grid header");
  json h = json::parse(line, nullptr, false);
  if (h.is_discarded() || h.value("format", "") != "specctrl.grid")
    throw data_error("not a specctrl grid file: " + path);
  if (h.value("version", 0) != 1)
    throw data_error("unsupported grid version");

  Grid g;
  g.kind = kind_from_name(h.at("kind").get<std::string>());
  g.dim = h.at("dim").get<int>();
  const auto count = h.at("count").get<std::size_t>();
  g.nx = h.value("nx", 0);
  g.ny = h.value("ny", 0);
  g.hx = h.value("hx", 0.0);
  g.hy = h.value("hy", 0.0);
  g.length = h.value("length", 0.0);
  g.height = h.value("height", 0.0);
  g.radius = h.value("radius", 0.0);
  g.flat = h.value("flat", 0.0);
  g.half_length = h.value("half_length", 0.0);
  g.mode = h.value("mode", 0);

  read_raw(f, g.coords, count * g.dim);
  read_raw(f, g.weights, count);
  if (g.kind == GridKind::cosh_mode) {
    read_raw(f, g.metric, count);
    read_raw(f, g.metric_mid, count + 1);
  }
  if (h.value("lattice", false))
    read_raw(f, g.node_of,
             static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny));
  return g;
}

}  // namespace specctrl
