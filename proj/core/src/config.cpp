#include "vesselmark/config.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "vesselmark/format.hpp"
#include "vesselmark/volume_io.hpp"

namespace vm {

void RunConfig::validate() const {
  try {
    grow.validate();
    vesselness.validate();
    region_grow.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  if (phantom_count < 1) throw Error(ErrorCode::BadConfig, "phantom.count must be >= 1");
  if (!(phantom.patch_mm > 0.0) || !(phantom.spacing_mm > 0.0))
    throw Error(ErrorCode::BadConfig, "phantom patch size and spacing must be positive");
  if (threads < 0) throw Error(ErrorCode::BadConfig, "threads must be >= 0");
  for (const auto& o : organs)
    if (!std::isfinite(o.fill_hu)) throw Error(ErrorCode::BadConfig, "organ fill for " + o.name + " is not finite");
}

double RunConfig::organ_fill(const std::string& name) const {
  for (const auto& o : organs)
    if (o.name == name) return o.fill_hu;
  throw Error(ErrorCode::BadConfig, "no fill value configured for organ '" + name + "'");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& where) {
  double d;
  if (!parse_double(v, d) || !std::isfinite(d)) throw Error(ErrorCode::BadConfig, where + ": expected a number, got '" + v + "'");
  return d;
}

long long to_int(const std::string& v, const std::string& where) {
  long long n;
  if (!parse_int(v, n)) throw Error(ErrorCode::BadConfig, where + ": expected an integer, got '" + v + "'");
  return n;
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::BadConfig, where + ": expected true or false, got '" + v + "'");
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t n = 0; n < v.size(); ++n) out += (n ? "," : "") + format_double(v[n]);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = {
      {"grow.lambda1", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.lambda1 = to_double(v, w); }},
      {"grow.lambda2", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.lambda2 = to_double(v, w); }},
      {"grow.f_int", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.f_int = to_double(v, w); }},
      {"grow.iterations",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.iterations = static_cast<int>(to_int(v, w)); }},
      {"grow.init_radius",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.init_radius = to_double(v, w); }},
      {"grow.target_spacing",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.target_spacing = to_double(v, w); }},
      {"grow.window_lo", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.window_lo = to_double(v, w); }},
      {"grow.window_hi", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.window_hi = to_double(v, w); }},
      {"grow.sigma", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.sigma = to_double(v, w); }},
      {"grow.subvolume_mm",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.subvolume_mm = to_double(v, w); }},
      {"grow.max_radius", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.max_radius = to_double(v, w); }},
      {"grow.max_center_drift_mm",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.max_center_drift = to_double(v, w); }},
      {"grow.settle_window",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.settle_window = static_cast<int>(to_int(v, w)); }},
      {"grow.settle_tol", [](RunConfig& c, const std::string& v, const std::string& w) { c.grow.settle_tol = to_double(v, w); }},
      {"vesselness.scales_mm",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.vesselness.scales_mm.clear();
         std::istringstream ss(v);
         std::string tok;
         while (std::getline(ss, tok, ',')) c.vesselness.scales_mm.push_back(to_double(trim(tok), w));
       }},
      {"vesselness.alpha", [](RunConfig& c, const std::string& v, const std::string& w) { c.vesselness.alpha = to_double(v, w); }},
      {"vesselness.beta", [](RunConfig& c, const std::string& v, const std::string& w) { c.vesselness.beta = to_double(v, w); }},
      {"vesselness.c",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         if (v == "auto")
           c.vesselness.c.reset();
         else
           c.vesselness.c = to_double(v, w);
       }},
      {"vesselness.bright_on_dark",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.vesselness.bright_on_dark = to_bool(v, w); }},
      {"region_grow.threshold",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.region_grow.threshold = to_double(v, w); }},
      {"region_grow.connectivity",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         c.region_grow.connectivity = static_cast<int>(to_int(v, w));
       }},
      {"region_grow.max_voxels",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         const long long n = to_int(v, w);
         if (n < 1) throw Error(ErrorCode::BadConfig, w + ": max_voxels must be positive");
         c.region_grow.max_voxels = static_cast<std::size_t>(n);
       }},
      {"seed",
       [](RunConfig& c, const std::string& v, const std::string& w) {
         const long long n = to_int(v, w);
         if (n < 0) throw Error(ErrorCode::BadConfig, w + ": seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(n);
       }},
      {"phantom.count",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.phantom_count = static_cast<int>(to_int(v, w)); }},
      {"phantom.patch_mm", [](RunConfig& c, const std::string& v, const std::string& w) { c.phantom.patch_mm = to_double(v, w); }},
      {"phantom.spacing_mm",
       [](RunConfig& c, const std::string& v, const std::string& w) { c.phantom.spacing_mm = to_double(v, w); }},
      {"output_dir", [](RunConfig& c, const std::string& v, const std::string&) { c.output_dir = v; }},
      {"threads", [](RunConfig& c, const std::string& v, const std::string& w) { c.threads = static_cast<int>(to_int(v, w)); }},
  };
  return m;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool organs_reset = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("organ.", 0) == 0) {
      // The first organ entry replaces the default table.
      if (!organs_reset) {
        cfg.organs.clear();
        organs_reset = true;
      }
      const std::string name = key.substr(6);
      if (name.empty()) throw Error(ErrorCode::BadConfig, where + ": empty organ name");
      cfg.organs.push_back({name, to_double(value, where)});
      continue;
    }
    auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::BadConfig, where + ": unknown key '" + key + "'");
    it->second(cfg, value, where);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::BadConfig, "config file not found: " + path.string());
  return parse_config(read_file(path));
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* key, const std::string& v) { os << key << " = " << v << '\n'; };
  auto num = [&](const char* key, double v) { kv(key, format_double(v)); };
  os << "# sphere growing\n";
  num("grow.lambda1", c.grow.lambda1);
  num("grow.lambda2", c.grow.lambda2);
  num("grow.f_int", c.grow.f_int);
  kv("grow.iterations", std::to_string(c.grow.iterations));
  num("grow.init_radius", c.grow.init_radius);
  num("grow.target_spacing", c.grow.target_spacing);
  num("grow.window_lo", c.grow.window_lo);
  num("grow.window_hi", c.grow.window_hi);
  num("grow.sigma", c.grow.sigma);
  num("grow.subvolume_mm", c.grow.subvolume_mm);
  num("grow.max_radius", c.grow.max_radius);
  num("grow.max_center_drift_mm", c.grow.max_center_drift);
  kv("grow.settle_window", std::to_string(c.grow.settle_window));
  num("grow.settle_tol", c.grow.settle_tol);
  os << "# vesselness fallback\n";
  kv("vesselness.scales_mm", join(c.vesselness.scales_mm));
  num("vesselness.alpha", c.vesselness.alpha);
  num("vesselness.beta", c.vesselness.beta);
  kv("vesselness.c", c.vesselness.c ? format_double(*c.vesselness.c) : "auto");
  kv("vesselness.bright_on_dark", c.vesselness.bright_on_dark ? "true" : "false");
  num("region_grow.threshold", c.region_grow.threshold);
  kv("region_grow.connectivity", std::to_string(c.region_grow.connectivity));
  kv("region_grow.max_voxels", std::to_string(c.region_grow.max_voxels));
  os << "# phantoms\n";
  kv("seed", std::to_string(c.seed));
  kv("phantom.count", std::to_string(c.phantom_count));
  num("phantom.patch_mm", c.phantom.patch_mm);
  num("phantom.spacing_mm", c.phantom.spacing_mm);
  os << "# organ fill values (HU), applied in this order\n";
  for (const auto& o : c.organs) os << "organ." << o.name << " = " << format_double(o.fill_hu) << '\n';
  os << "# run\n";
  kv("output_dir", c.output_dir.string());
  kv("threads", std::to_string(c.threads));
  return os.str();
}

}  // namespace vm
