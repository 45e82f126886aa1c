#pragma once

// Field files, run configuration and JSON reports.
//
// A field file is one line of UTF-8 JSON followed by the raw payload:
//   {"chart":{"box":[[lo,hi],..],"dim":d,"kappa":k,"kind":"conformal"},"degrees":[k,m],
//    "format":"DFF","grid":{"shape":[..]},"ordering":"lex-I-major","version":1}\n
//   <#nodes * C(d,k) * C(d,m) little-endian float64, node-major>
// An optional "face" entry marks a field on one boundary face of the grid.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "elasticity.hpp"
#include "field.hpp"
#include "saint_venant.hpp"
#include "suites.hpp"

namespace dform {

using json = nlohmann::json;

// ------------------------------------------------------------ field files

struct FieldFile {
  std::string header;  // the header line as read, without the newline
  FormField field;
};

namespace detail {

inline void append_le(std::string& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  char b[8];
  std::memcpy(b, &u, 8);
  out.append(b, 8);
}

inline double read_le(const char* p) {
  std::uint64_t u;
  std::memcpy(&u, p, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

inline void write_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    require(static_cast<bool>(f), ErrorKind::Io, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::Io, "cannot move " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

inline std::string read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline json chart_json(const Chart& c) {
  json box = json::array();
  for (auto [lo, hi] : c.box) box.push_back({lo, hi});
  return {{"kind", "conformal"}, {"dim", c.dim}, {"kappa", c.kappa}, {"box", box}};
}

inline Chart chart_from_json(const json& j) {
  require(j.is_object(), ErrorKind::Validation, "chart must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(it.key() == "kind" || it.key() == "dim" || it.key() == "kappa" || it.key() == "box", ErrorKind::Validation,
            "unknown chart key '" + it.key() + "'");
  require(j.value("kind", "") == "conformal", ErrorKind::Validation, "chart kind must be 'conformal'");
  require(j.contains("dim") && j["dim"].is_number_integer(), ErrorKind::Validation, "chart.dim must be an integer");
  require(j.contains("kappa") && j["kappa"].is_number(), ErrorKind::Validation, "chart.kappa must be a number");
  require(j.contains("box") && j["box"].is_array(), ErrorKind::Validation, "chart.box must be an array");
  std::vector<std::pair<double, double>> box;
  for (const auto& iv : j["box"]) {
    require(iv.is_array() && iv.size() == 2 && iv[0].is_number() && iv[1].is_number(), ErrorKind::Validation,
            "chart.box entries must be [min, max]");
    box.emplace_back(iv[0].get<double>(), iv[1].get<double>());
  }
  return Chart::make(j["dim"].get<int>(), j["kappa"].get<double>(), box);
}

inline std::string field_header(const FormField& f) {
  const Patch& p = f.patch();
  json h = {{"format", "DFF"},
            {"version", 1},
            {"chart", chart_json(p.chart)},
            {"grid", {{"shape", p.grid.shape}}},
            {"degrees", {f.k(), f.m()}},
            {"ordering", "lex-I-major"}};
  if (p.is_face()) h["face"] = p.face;
  return h.dump();
}

inline std::string encode_field(const FormField& f, const std::string& header) {
  require(f.finite(), ErrorKind::Validation, "refusing to write a non-finite field");
  std::string out = header;
  out.push_back('\n');
  out.reserve(out.size() + f.data().size() * 8);
  for (double v : f.data()) detail::append_le(out, v);
  return out;
}

inline FieldFile decode_field(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  require(nl != std::string::npos, ErrorKind::Io, "field file has no header line");
  FieldFile ff;
  ff.header = bytes.substr(0, nl);
  json h;
  try {
    h = json::parse(ff.header);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("field header is not valid JSON: ") + e.what());
  }
  require(h.is_object(), ErrorKind::Validation, "field header must be a JSON object");
  static const char* known[] = {"format", "version", "chart", "grid", "degrees", "ordering", "face"};
  for (auto it = h.begin(); it != h.end(); ++it)
    require(std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) != std::end(known),
            ErrorKind::Validation, "unknown header key '" + it.key() + "'");
  require(h.value("format", "") == "DFF", ErrorKind::Validation, "not a DFF file");
  require(h.contains("version") && h["version"] == 1, ErrorKind::Validation, "unsupported DFF version");
  require(h.value("ordering", "") == "lex-I-major", ErrorKind::Validation, "unsupported component ordering");
  const Chart c = chart_from_json(h["chart"]);
  require(h.contains("grid") && h["grid"].is_object() && h["grid"].contains("shape") && h["grid"]["shape"].is_array(),
          ErrorKind::Validation, "grid.shape missing");
  std::vector<int> shape;
  for (const auto& s : h["grid"]["shape"]) {
    require(s.is_number_integer(), ErrorKind::Validation, "grid.shape entries must be integers");
    shape.push_back(s.get<int>());
  }
  const Grid g = Grid::make(c, shape);
  require(h.contains("degrees") && h["degrees"].is_array() && h["degrees"].size() == 2 && h["degrees"][0].is_number_integer() &&
              h["degrees"][1].is_number_integer(),
          ErrorKind::Validation, "degrees must be [k, m]");
  Patch p = Patch::full(c, g);
  if (h.contains("face")) {
    require(h["face"].is_number_integer(), ErrorKind::Validation, "face must be an integer");
    p = Patch::face_of(c, g, h["face"].get<int>());
  }
  ff.field = FormField(p, h["degrees"][0].get<int>(), h["degrees"][1].get<int>());
  const std::size_t want = ff.field.data().size() * 8;
  const std::size_t have = bytes.size() - nl - 1;
  require(have == want, ErrorKind::Io,
          "payload has " + std::to_string(have) + " bytes, header implies " + std::to_string(want));
  const char* q = bytes.data() + nl + 1;
  for (std::size_t i = 0; i < ff.field.data().size(); ++i) ff.field.data()[i] = detail::read_le(q + 8 * i);
  require(ff.field.finite(), ErrorKind::Validation, "field file contains non-finite values");
  return ff;
}

inline FieldFile read_field_file(const std::string& path) { return decode_field(detail::read_all(path)); }
inline FormField read_field(const std::string& path) { return read_field_file(path).field; }

// keeps the header text as read, so read followed by write reproduces the file
inline void write_field_file(const std::string& path, const FieldFile& ff) {
  detail::write_atomic(path, encode_field(ff.field, ff.header.empty() ? field_header(ff.field) : ff.header));
}
inline void write_field(const std::string& path, const FormField& f) { write_field_file(path, {field_header(f), f}); }

// ------------------------------------------------------------ traction files

// JSON: {"rho": [...], "tau": [...]}, one entry per face in face order
// (x1 min, x1 max, x2 min, ..). A number is a constant (tau only 0); a string
// is a field file for that face, relative to the traction file.
inline TractionData read_traction(const std::string& path, const Chart& c, const Grid& g) {
  json j;
  try {
    j = json::parse(detail::read_all(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("traction file is not valid JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("rho") && j.contains("tau"), ErrorKind::Validation, "traction file needs 'rho' and 'tau'");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(it.key() == "rho" || it.key() == "tau", ErrorKind::Validation, "unknown traction key '" + it.key() + "'");
  const int faces = 2 * c.dim;
  require(j["rho"].is_array() && j["tau"].is_array() && static_cast<int>(j["rho"].size()) == faces &&
              static_cast<int>(j["tau"].size()) == faces,
          ErrorKind::Validation, "rho and tau need one entry per face");
  const auto dir = std::filesystem::path(path).parent_path();
  TractionData t;
  for (int f = 0; f < faces; ++f) {
    Patch fp = Patch::face_of(c, g, f);
    auto load = [&](const json& e, int k, const char* what) {
      if (e.is_number()) {
        const double v = e.get<double>();
        require(k == 0 || v == 0.0, ErrorKind::Validation, std::string(what) + " constants other than 0 are not defined");
        return sample(fp, k, 0, [v](const double*, double* o) { o[0] = v; });
      }
      require(e.is_string(), ErrorKind::Validation, std::string(what) + " entries must be numbers or file names");
      FormField ff = read_field((dir / e.get<std::string>()).string());
      require(ff.patch().same_as(fp) && ff.k() == k && ff.m() == 0, ErrorKind::Validation,
              std::string(what) + " file for face " + std::to_string(f) + " does not match the chart, grid or degree");
      return ff;
    };
    t.rho.push_back(load(j["rho"][f], 0, "rho"));
    t.tau.push_back(load(j["tau"][f], 1, "tau"));
  }
  check_traction(t, c, g);
  return t;
}

// ------------------------------------------------------------ configuration

// Text file of `key = value` lines; '#' starts a comment. Flags given on the
// command line override file values.
struct RunConfig {
  double tol = 1e-10;             // linear solver tolerance
  double kill_tol = 0;            // 0 selects 1e-6 |A| h^2
  double residual_tol = 1e-3;     // check-sv and traction-check pass threshold
  double rate_threshold = 1.8;    // refinement studies
  double exact_floor = 1e-9;      // residuals below this on every grid count as exact
  int levels = 3;
  std::uint64_t seed = 7;
  long max_unknowns = 50000;
  long dense_limit = 1000;
  std::string out;
  std::string report;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {"tol",          "kill_tol", "residual_tol", "rate_threshold", "exact_floor", "levels",
                                               "seed",         "max_unknowns", "dense_limit", "out",          "report"};
    return k;
  }

  void set(const std::string& key, const std::string& value) {
    auto num = [&]() {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == value.size() && std::isfinite(v), ErrorKind::Validation, "config '" + key + "' needs a number, got '" + value + "'");
      return v;
    };
    auto integer = [&]() {
      const double v = num();
      require(v == std::floor(v), ErrorKind::Validation, "config '" + key + "' needs an integer");
      return static_cast<long>(v);
    };
    if (key == "tol") tol = num();
    else if (key == "kill_tol") kill_tol = num();
    else if (key == "residual_tol") residual_tol = num();
    else if (key == "rate_threshold") rate_threshold = num();
    else if (key == "exact_floor") exact_floor = num();
    else if (key == "levels") levels = static_cast<int>(integer());
    else if (key == "seed") seed = static_cast<std::uint64_t>(integer());
    else if (key == "max_unknowns") max_unknowns = integer();
    else if (key == "dense_limit") dense_limit = integer();
    else if (key == "out") out = value;
    else if (key == "report") report = value;
    else fail(ErrorKind::Validation, "unknown config key '" + key + "'");
  }

  void validate() const {
    require(tol > 0 && residual_tol > 0 && exact_floor > 0 && rate_threshold > 0, ErrorKind::Validation, "tolerances must be > 0");
    require(kill_tol >= 0, ErrorKind::Validation, "kill_tol must be > 0 (or 0 for the default)");
    require(levels >= 2, ErrorKind::Validation, "levels must be >= 2");
    require(max_unknowns > 0 && dense_limit > 0, ErrorKind::Validation, "solver caps must be positive");
  }

  static RunConfig parse(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, ErrorKind::Validation, "config line " + std::to_string(lineno) + " is not 'key = value'");
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    c.validate();
    return c;
  }

  static RunConfig load(const std::string& path) { return parse(detail::read_all(path)); }

  json to_json() const {
    return {{"tol", tol},         {"kill_tol", kill_tol}, {"residual_tol", residual_tol}, {"rate_threshold", rate_threshold},
            {"exact_floor", exact_floor}, {"levels", levels}, {"seed", seed},   {"max_unknowns", max_unknowns},
            {"dense_limit", dense_limit}, {"out", out},       {"report", report}};
  }
};

// ------------------------------------------------------------ reports

// non-finite numbers become null so reports stay valid JSON
inline double finite_or(double v, double fallback) { return std::isfinite(v) ? v : fallback; }

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Norms& n) { return {{"l2", num(n.l2)}, {"max", num(n.max)}, {"nodes", n.count}}; }

inline json to_json(const SolveStats& s) {
  return {{"unknowns", s.unknowns},
          {"iterations", s.iterations},
          {"relative_residual", num(s.relative_residual)},
          {"normal_residual", num(s.normal_residual)}};
}

inline json to_json(const RateResult& r) {
  json res = json::array(), rates = json::array();
  for (double e : r.residuals) res.push_back(num(e));
  for (double q : r.rates) rates.push_back(num(q));
  json j = {{"identity", r.label}, {"grids", r.grids}, {"residuals", res}, {"rates", rates}, {"exact", r.exact}, {"pass", r.pass}};
  if (!r.detail.empty()) j["case"] = r.detail;
  return j;
}

inline json to_json(const AlgebraReport& a) {
  json checks = json::array();
  for (const auto& c : a.checks) checks.push_back({{"identity", c.name}, {"count", c.count}, {"worst", num(c.worst)}});
  return {{"checks", checks}, {"total", a.total}, {"tol", a.tol}, {"seconds", a.seconds}, {"pass", a.pass}};
}

inline json to_json(const IdentitySuite& s) {
  json res = json::array();
  for (const auto& r : s.results) res.push_back(to_json(r));
  return {{"kappa", s.kappa},   {"dim", s.dim},       {"grids", s.grids},     {"seed", s.seed}, {"rate_threshold", s.rate_threshold},
          {"results", res},     {"failures", s.failures()}, {"seconds", s.seconds}, {"pass", s.pass}};
}

inline json to_json(const KillingBasis& kb) {
  json sv = json::array();
  for (double v : kb.singular_values) sv.push_back(num(v));
  return {{"killing_dim", kb.basis.size()}, {"gap_ratio", num(kb.gap_ratio)}, {"kill_tol", num(kb.kill_tol)},
          {"operator_norm", num(kb.op_norm)}, {"singular_values", sv},      {"dense_limit", kb.dense_limit}};
}

inline json to_json(const StressReport& r) {
  return {{"delta_sigma", to_json(r.delta)},
          {"H_sigma_minus_R", to_json(r.equation)},
          {"rho_error", num(r.rho_error)},
          {"tau_error", num(r.tau_error)},
          {"boundary_lemma_T_star", num(r.lemma_T_star)},
          {"boundary_lemma_F", num(r.lemma_F)},
          {"source_algebraic_curvature", r.source_verified},
          // R in the image of H has no finite certificate for a general source
          {"source_in_image_of_H", "unverified"}};
}

inline void write_json(const std::string& path, const json& j) { detail::write_atomic(path, j.dump(2) + "\n"); }

}  // namespace dform
