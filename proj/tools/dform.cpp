// dform: identity suites, Saint-Venant checks and stress solvers from the
// command line. Reports are JSON on stdout (and --report FILE).
//
// exit codes: 0 pass, 1 identity failure, 2 validation or I/O, 3 solver,
// 4 no spectral gap

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dform/dform.hpp"

using namespace dform;

namespace {

std::string g_command_line;

enum Exit { kPass = 0, kIdentity = 1, kValidation = 2, kSolver = 3, kGap = 4 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::SolverDiverged: return kSolver;
    case ErrorKind::NoSpectralGap: return kGap;
    default: return kValidation;
  }
}

struct Common {
  std::string config_file;
  RunConfig cfg;
  // flags given on the command line; applied over the config file
  std::optional<double> tol, kill_tol, residual_tol, rate_threshold;
  std::optional<int> levels;
  std::optional<std::uint64_t> seed;
  std::optional<long> max_unknowns, dense_limit;
  std::optional<std::string> out, report;

  void resolve() {
    if (!config_file.empty()) cfg = RunConfig::load(config_file);
    if (tol) cfg.tol = *tol;
    if (kill_tol) cfg.kill_tol = *kill_tol;
    if (residual_tol) cfg.residual_tol = *residual_tol;
    if (rate_threshold) cfg.rate_threshold = *rate_threshold;
    if (levels) cfg.levels = *levels;
    if (seed) cfg.seed = *seed;
    if (max_unknowns) cfg.max_unknowns = *max_unknowns;
    if (dense_limit) cfg.dense_limit = *dense_limit;
    if (out) cfg.out = *out;
    if (report) cfg.report = *report;
    cfg.validate();
  }
};

struct Geometry {
  double kappa = 0;
  int dim = 2;
  int n = 33;
  std::vector<double> box{-0.5, 0.5};

  Chart chart() const {
    require(box.size() == 2, ErrorKind::Validation, "--box takes two numbers");
    return Chart::unit_box(dim, kappa, box[0], box[1]);
  }
  Grid grid(const Chart& c) const { return Grid::uniform(c, n); }
  json to_json() const { return {{"kappa", kappa}, {"dim", dim}, {"n", n}, {"box", box}}; }
};

void add_common(CLI::App* sc, Common& c) {
  sc->add_option("--config", c.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  sc->add_option("--tol", c.tol, "linear solver tolerance");
  sc->add_option("--kill-tol", c.kill_tol, "Killing singular-value threshold");
  sc->add_option("--residual-tol", c.residual_tol, "pass threshold for check-sv and traction-check");
  sc->add_option("--rate-threshold", c.rate_threshold, "minimum refinement rate");
  sc->add_option("--levels", c.levels, "grid levels in refinement studies");
  sc->add_option("--seed", c.seed, "seed for random fields");
  sc->add_option("--max-unknowns", c.max_unknowns, "cap for direct solves");
  sc->add_option("--dense-limit", c.dense_limit, "largest dense SVD");
  sc->add_option("--out", c.out, "output field file");
  sc->add_option("--report", c.report, "also write the JSON report here");
}

void add_geometry(CLI::App* sc, Geometry& g, bool with_dim = true) {
  sc->add_option("--kappa", g.kappa, "chart curvature")->capture_default_str();
  if (with_dim) sc->add_option("--dim", g.dim, "dimension")->capture_default_str();
  sc->add_option("--n", g.n, "nodes per axis")->capture_default_str();
  sc->add_option("--box", g.box, "coordinate interval, same on every axis")->expected(2)->capture_default_str();
}

int emit(json report, const Common& c, const std::string& command, json args, int code) {
  report["command"] = command;
  report["command_line"] = g_command_line;
  report["args"] = std::move(args);
  report["config"] = c.cfg.to_json();
  report["threads"] = worker_count();
  report["exit_code"] = code;
  const std::string text = report.dump(2);
  std::cout << text << "\n";
  if (!c.cfg.report.empty()) write_json(c.cfg.report, report);
  return code;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

// ------------------------------------------------------------ commands

int cmd_verify(const Common& c, const Geometry& geo) {
  require(geo.dim == 2 || geo.dim == 3, ErrorKind::WrongDimension, "verify runs in d = 2 or 3");
  suite_chart(geo.dim, geo.kappa);  // validates the chart before any work
  const AlgebraReport alg = run_algebra_suite(c.cfg.seed);
  const IdentitySuite s =
      run_identity_suite(geo.kappa, geo.dim, default_levels(geo.dim, c.cfg.levels), c.cfg.seed, c.cfg.rate_threshold, c.cfg.exact_floor);
  std::vector<std::string> failing = s.failures();
  if (!alg.pass) failing.insert(failing.begin(), "algebra");
  json r = {{"algebra", to_json(alg)}, {"calculus", to_json(s)}, {"failing", failing}, {"pass", failing.empty()}};
  return emit(r, c, "verify", {{"kappa", geo.kappa}, {"dim", geo.dim}}, failing.empty() ? kPass : kIdentity);
}

// JSON {"value": number | file, "normal": [number | file per face]}
AiryBoundary read_airy_boundary(const std::string& path, const Chart& ch, const Grid& g) {
  json j;
  try {
    j = json::parse(detail::read_all(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, std::string("boundary file is not valid JSON: ") + e.what());
  }
  require(j.is_object() && j.contains("value") && j.contains("normal") && j["normal"].is_array() && j["normal"].size() == 4,
          ErrorKind::Validation, "boundary file needs 'value' and four 'normal' entries");
  const auto dir = std::filesystem::path(path).parent_path();
  auto load = [&](const json& e, const Patch& p) {
    if (e.is_number()) {
      const double v = e.get<double>();
      return sample(p, 0, 0, [v](const double*, double* o) { o[0] = v; });
    }
    require(e.is_string(), ErrorKind::Validation, "boundary entries must be numbers or file names");
    FormField f = read_field((dir / e.get<std::string>()).string());
    require(f.patch().same_as(p) && f.k() == 0 && f.m() == 0, ErrorKind::Validation, "boundary field does not match the grid");
    return f;
  };
  AiryBoundary bc;
  bc.value = load(j["value"], Patch::full(ch, g));
  for (int f = 0; f < 4; ++f) bc.normal.push_back(load(j["normal"][f], Patch::face_of(ch, g, f)));
  return bc;
}

json rates_json(const std::vector<RateResult>& rs, bool& pass) {
  json a = json::array();
  for (const auto& r : rs) {
    a.push_back(to_json(r));
    pass = pass && r.pass;
  }
  return a;
}

int cmd_solve_airy(const Common& c, Geometry geo, bool use_default, const std::string& rhs_file, bool zero_bc,
                   const std::string& bc_file, const std::string& mms, const std::string& op_name, std::string sigma_out) {
  geo.dim = 2;
  const AiryOperator op = op_name == "printed" ? AiryOperator::Printed : AiryOperator::Consistent;
  json args = {{"geometry", geo.to_json()}, {"operator", op_name}};
  const Chart ch = geo.chart();
  if (!mms.empty()) {
    require(mms == "sin", ErrorKind::Validation, "--mms supports 'sin'");
    std::vector<int> grids;
    for (int i = 0, n = geo.n; i < c.cfg.levels; ++i, n = 2 * n - 1) grids.push_back(n);
    const AiryStudy s = airy_mms_study(geo.kappa, grids, op, c.cfg.tol, c.cfg.rate_threshold);
    bool pass = true;
    json r = {{"mms", "sin"}, {"studies", rates_json({s.chi_error, s.delta_sigma}, pass)}, {"solver_residual", s.solver_residual}};
    r["pass"] = pass;
    args["mms"] = mms;
    return emit(r, c, "solve-airy", args, pass ? kPass : kIdentity);
  }
  require(use_default != !rhs_file.empty(), ErrorKind::Validation, "give exactly one of --default-source and --rhs");
  require(zero_bc != !bc_file.empty(), ErrorKind::Validation, "give exactly one of --zero-bc and --bc");
  const Grid g = geo.grid(ch);
  const Patch p = Patch::full(ch, g);
  std::optional<FormField> source;
  FormField rhs;
  if (use_default) {
    source = default_source(ch, g);
    rhs = airy_rhs(ch, g, source);
  } else {
    rhs = read_field(rhs_file);
    require(rhs.patch().same_as(p) && rhs.k() == 0 && rhs.m() == 0, ErrorKind::Validation, "rhs must be a scalar on the chosen grid");
  }
  const AiryBoundary bc = zero_bc ? zero_airy_boundary(ch, g) : read_airy_boundary(bc_file, ch, g);
  const AirySolution sol = airy_solve(ch, g, rhs, bc, op, c.cfg.tol);
  const FormField sigma = stress_from_airy(sol.chi);
  double rmin = rhs.at(0)[0], rmax = rmin;
  for (std::size_t q = 0; q < rhs.nodes(); ++q) {
    rmin = std::min(rmin, rhs.at(q)[0]);
    rmax = std::max(rmax, rhs.at(q)[0]);
  }
  // H sigma composes four derivatives of chi, and the one-sided stencils make
  // it O(1/h) within a few nodes of the boundary: measure on a fixed fraction
  const int layer = std::max(3, (geo.n - 1) / 8);
  json r = {{"rhs", {{"min", rmin}, {"max", rmax}}},
            {"solver", to_json(sol.stats)},
            {"chi", {{"l2", l2_norm(sol.chi)}, {"max", region_norms(sol.chi, Region::whole(p)).max}}},
            {"residuals", to_json(stress_residuals(sigma, source, std::nullopt, Region::inset(p, layer)))},
            {"region_layer", layer},
            {"pass", true}};
  if (!use_default) r["residuals"].erase("H_sigma_minus_R");
  if (!c.cfg.out.empty()) {
    if (sigma_out.empty()) sigma_out = sibling(c.cfg.out, "_sigma");
    write_field(c.cfg.out, sol.chi);
    write_field(sigma_out, sigma);
    r["files"] = {{"chi", c.cfg.out}, {"sigma", sigma_out}};
  }
  args["source"] = use_default ? json("default") : json(rhs_file);
  args["bc"] = zero_bc ? json("zero") : json(bc_file);
  return emit(r, c, "solve-airy", args, kPass);
}

FormField read_sigma(const std::string& path) {
  FormField s = read_field(path);
  require(s.k() == 1 && s.m() == 1 && !s.patch().is_face(), ErrorKind::Validation, "sigma must be a (1,1) field on the full grid");
  check_symmetric(s);
  return s;
}

json singular_json(const KillingBasis& kb) {
  json a = json::array();
  for (double v : kb.singular_values) a.push_back(num(v));
  return a;
}

int cmd_check_sv(const Common& c, const std::string& sigma_file) {
  const FormField sigma = read_sigma(sigma_file);
  const Patch& p = sigma.patch();
  const Norms res = compatibility_residual(sigma);
  const KillingBasis kb = killing_basis(p.chart, p.grid, c.cfg.kill_tol, c.cfg.dense_limit);
  const Reconstruction rec = reconstruct_displacement(sigma, kb, c.cfg.tol);
  const bool pass = res.l2 <= c.cfg.residual_tol;
  // both numbers are reported; a small H residual with a large fit residual
  // points at a harmonic component, so there is no single verdict
  json r = {{"h", *std::max_element(p.h.begin(), p.h.end())},
            {"residual_l2", num(res.l2)},
            {"residual_max", num(res.max)},
            {"reconstruction_residual", num(rec.fit_residual)},
            {"normal_residual", num(rec.normal_residual)},
            {"killing_dim", kb.basis.size()},
            {"singular_values", singular_json(kb)},
            {"pass", pass}};
  return emit(r, c, "check-sv", {{"sigma", sigma_file}}, pass ? kPass : kIdentity);
}

int cmd_reconstruct(const Common& c, const std::string& sigma_file) {
  const FormField sigma = read_sigma(sigma_file);
  const Patch& p = sigma.patch();
  const KillingBasis kb = killing_basis(p.chart, p.grid, c.cfg.kill_tol, c.cfg.dense_limit);
  const Reconstruction rec = reconstruct_displacement(sigma, kb, c.cfg.tol);
  json r = {{"normal_residual", num(rec.normal_residual)},
            {"reconstruction_residual", num(rec.fit_residual)},
            {"iterations", rec.iterations},
            {"killing_dim", kb.basis.size()},
            {"Y_l2", num(l2_norm(rec.Y))},
            {"pass", true}};
  if (!c.cfg.out.empty()) {
    write_field(c.cfg.out, rec.Y);
    r["files"] = {{"Y", c.cfg.out}};
  }
  return emit(r, c, "reconstruct", {{"sigma", sigma_file}}, kPass);
}

int cmd_killing(const Common& c, const Geometry& geo) {
  const Chart ch = geo.chart();
  const Grid g = geo.grid(ch);
  const KillingBasis kb = killing_basis(ch, g, c.cfg.kill_tol, c.cfg.dense_limit);
  json r = to_json(kb);
  r["pass"] = true;
  if (!c.cfg.out.empty()) {
    json files = json::array();
    for (std::size_t i = 0; i < kb.basis.size(); ++i) {
      const std::string f = sibling(c.cfg.out, "_" + std::to_string(i));
      write_field(f, kb.basis[i]);
      files.push_back(f);
    }
    r["files"] = files;
  }
  return emit(r, c, "killing", {{"geometry", geo.to_json()}}, kPass);
}

int cmd_traction_check(const Common& c, const Geometry& geo, const std::string& traction_file) {
  const Chart ch = geo.chart();
  const Grid g = geo.grid(ch);
  const TractionData t = read_traction(traction_file, ch, g);
  const KillingBasis kb = killing_basis(ch, g, c.cfg.kill_tol, c.cfg.dense_limit);
  const TractionCheck tc = traction_compatibility(t, kb);
  json ints = json::array();
  for (double v : tc.integrals) ints.push_back(num(v));
  const bool pass = tc.norm <= c.cfg.residual_tol;
  json r = {{"integrals", ints}, {"norm", num(tc.norm)}, {"killing_dim", kb.basis.size()}, {"compatible", pass}, {"pass", pass}};
  return emit(r, c, "traction-check", {{"geometry", geo.to_json()}, {"traction", traction_file}}, pass ? kPass : kIdentity);
}

int cmd_solve_direct(const Common& c, const Geometry& geo) {
  std::vector<int> grids;
  for (int i = 0, n = geo.n; i < c.cfg.levels; ++i, n = 2 * n - 1) grids.push_back(n);
  const DirectStudy s = direct_solve_study(grids, c.cfg.tol, c.cfg.max_unknowns);
  json levels = json::array();
  for (std::size_t i = 0; i < grids.size(); ++i)
    levels.push_back({{"n", grids[i]},
                      {"normal_residual", num(s.normal_residual[i])},
                      {"relative_residual", num(s.relative_residual[i])},
                      {"sigma_error", num(s.sigma_error[i])},
                      {"residuals", to_json(s.reports[i])},
                      {"seconds", s.seconds[i]}});
  bool pass = s.decreasing;
  for (double v : s.normal_residual) pass = pass && v <= 1e-8;
  json r = {{"manufactured", "flat equilibrium from an exact Airy potential"}, {"levels", levels}, {"decreasing", s.decreasing}, {"pass", pass}};
  return emit(r, c, "solve-direct", {{"n", geo.n}}, pass ? kPass : kIdentity);
}

// fixture fields for the other commands
int cmd_fixture(const Common& c, const Geometry& geo, const std::string& kind) {
  require(!c.cfg.out.empty(), ErrorKind::Validation, "fixture needs --out");
  const Chart ch = geo.chart();
  const Grid g = geo.grid(ch);
  const Patch p = Patch::full(ch, g);
  json r = {{"kind", kind}, {"pass", true}};
  if (kind == "lie-metric") {
    SplitMix64 rng(c.cfg.seed);
    write_field(c.cfg.out, lie_metric_exact(p, PolyVector::draw(rng, geo.dim)));
  } else if (kind == "metric") {
    write_field(c.cfg.out, metric_field(p));
  } else if (kind == "random-symmetric") {
    write_field(c.cfg.out, random_smooth_field(p, 1, 1, c.cfg.seed, true));
  } else if (kind == "constant-traction" || kind == "incompatible-traction") {
    // a traction JSON plus one file per face
    json j = {{"rho", json::array()}, {"tau", json::array()}};
    std::optional<KillingBasis> kb;
    if (kind == "incompatible-traction") kb = killing_basis(ch, g, c.cfg.kill_tol, c.cfg.dense_limit);
    for (int f = 0; f < 2 * geo.dim; ++f) {
      if (!kb) {
        j["rho"].push_back(1.0);
        j["tau"].push_back(0.0);
        continue;
      }
      const std::filesystem::path o(c.cfg.out);
      const std::string tf = (o.parent_path() / (o.stem().string() + "_tau" + std::to_string(f) + ".dff")).string();
      write_field(tf, project_boundary(kb->basis.front(), f, Projection::tt));
      j["rho"].push_back(0.0);
      j["tau"].push_back(std::filesystem::path(tf).filename().string());
    }
    write_json(c.cfg.out, j);
  } else {
    fail(ErrorKind::Validation, "unknown fixture kind '" + kind + "'");
  }
  r["files"] = {c.cfg.out};
  return emit(r, c, "fixture", {{"geometry", geo.to_json()}, {"kind", kind}}, kPass);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double forms on constant-curvature charts: identity suites, Saint-Venant and stress solvers"};
  app.require_subcommand(1);
  for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

  Common common;
  Geometry geo;

  auto* verify = app.add_subcommand("verify", "algebra and calculus identity suites with refinement rates");
  add_common(verify, common);
  verify->add_option("--kappa", geo.kappa)->capture_default_str();
  verify->add_option("--dim", geo.dim)->capture_default_str();

  bool default_source = false, zero_bc = false;
  std::string rhs_file, bc_file, mms, op_name = "consistent", sigma_out;
  auto* airy = app.add_subcommand("solve-airy", "2D Airy potential and stress");
  add_common(airy, common);
  add_geometry(airy, geo, false);
  airy->add_flag("--default-source", default_source, "use R = -2 Rm of the chart");
  airy->add_option("--rhs", rhs_file, "scalar right-hand side field file");
  airy->add_flag("--zero-bc", zero_bc, "chi = 0 and d_n chi = 0 on the boundary");
  airy->add_option("--bc", bc_file, "boundary JSON {value, normal[4]}");
  airy->add_option("--mms", mms, "manufactured solution study")->check(CLI::IsMember({"sin"}));
  airy->add_option("--operator", op_name, "consistent or printed")->check(CLI::IsMember({"consistent", "printed"}))->capture_default_str();
  airy->add_option("--sigma-out", sigma_out, "stress output (default: <out>_sigma)");

  std::string sigma_file;
  auto* checksv = app.add_subcommand("check-sv", "Saint-Venant residual and least-squares displacement fit");
  add_common(checksv, common);
  checksv->add_option("sigma", sigma_file, "symmetric (1,1) field file")->required()->check(CLI::ExistingFile);

  auto* recon = app.add_subcommand("reconstruct", "displacement Y with L_Y g closest to sigma");
  add_common(recon, common);
  recon->add_option("sigma", sigma_file, "symmetric (1,1) field file")->required()->check(CLI::ExistingFile);

  auto* killing = app.add_subcommand("killing", "discrete Killing fields of a chart");
  add_common(killing, common);
  add_geometry(killing, geo);

  std::string traction_file;
  auto* traction = app.add_subcommand("traction-check", "Killing integrals of traction data");
  add_common(traction, common);
  add_geometry(traction, geo);
  traction->add_option("traction", traction_file, "traction JSON")->required()->check(CLI::ExistingFile);

  auto* direct = app.add_subcommand("solve-direct", "experimental bilaplacian stress solve on a manufactured equilibrium (d = 2, flat)");
  add_common(direct, common);
  direct->add_option("--n", geo.n, "coarsest nodes per axis")->capture_default_str();

  std::string kind;
  auto* fixture = app.add_subcommand("fixture", "write test inputs: lie-metric, metric, random-symmetric, constant-traction, incompatible-traction");
  add_common(fixture, common);
  add_geometry(fixture, geo);
  fixture->add_option("kind", kind)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kValidation;
  }

  try {
    common.resolve();
    if (verify->parsed()) return cmd_verify(common, geo);
    if (airy->parsed()) return cmd_solve_airy(common, geo, default_source, rhs_file, zero_bc, bc_file, mms, op_name, sigma_out);
    if (checksv->parsed()) return cmd_check_sv(common, sigma_file);
    if (recon->parsed()) return cmd_reconstruct(common, sigma_file);
    if (killing->parsed()) return cmd_killing(common, geo);
    if (traction->parsed()) return cmd_traction_check(common, geo, traction_file);
    if (direct->parsed()) return cmd_solve_direct(common, geo);
    if (fixture->parsed()) return cmd_fixture(common, geo, kind);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    json r = {{"error", e.what()}, {"kind", to_string(e.kind())}, {"command_line", g_command_line}, {"exit_code", code}};
    std::cerr << e.what() << "\n";
    std::cout << r.dump(2) << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
