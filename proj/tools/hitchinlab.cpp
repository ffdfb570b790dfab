#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hitchinlab/decayfit.hpp"
#include "hitchinlab/gaugesolve.hpp"
#include "hitchinlab/localmodel.hpp"
#include "hitchinlab/parweights.hpp"
#include "hitchinlab/pathconn.hpp"
#include "hitchinlab/radialsolve.hpp"
#include "hitchinlab/report.hpp"
#include "hitchinlab/residual.hpp"
#include "hitchinlab/scans.hpp"
#include "hitchinlab/wkb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hitchinlab;

namespace {

struct CheckList {
  Json items = Json::array();
  bool all_pass = true;

  void add(const std::string& name, bool pass, Json measured, Json limit) {
    items.push(Json::object()
                   .set("name", Json::of(name))
                   .set("pass", Json::of(pass))
                   .set("measured", std::move(measured))
                   .set("limit", std::move(limit)));
    all_pass = all_pass && pass;
  }
};

Json envelope(const char* subcommand, const std::string& raw_config, long long seed) {
  return Json::object()
      .set("subcommand", Json::of(subcommand))
      .set("versions", Json::object()
                           .set("library", Json::of(kLibraryVersion))
                           .set("report_schema", Json::of(kReportSchemaVersion)))
      .set("config_hash", Json::of(fnv1a64_hex(raw_config)))
      .set("seed", Json::of(seed));
}

int finalize(const std::string& out_dir, Json& report, const CheckList& checks) {
  report.set("checks", checks.items).set("all_pass", Json::of(checks.all_pass));
  write_text_file(out_dir + "/report.json", report.dump());
  std::printf("report: %s/report.json  [%s]\n", out_dir.c_str(),
              checks.all_pass ? "all checks pass" : "CHECKS FAILED");
  return checks.all_pass ? 0 : 1;
}

Json rational_json(const Rational& r) {
  return Json::object().set("exact", Json::of(to_string(r))).set("value", Json::of(to_double(r)));
}

Rational parse_rational(const json& v, const char* field) {
  if (v.is_number_integer()) return make_rational(v.get<long long>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return make_rational(std::stoll(s));
      const long long num = std::stoll(s.substr(0, slash));
      const long long den = std::stoll(s.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("zero denominator");
      return make_rational(num, den);
    } catch (const std::invalid_argument&) {
    } catch (const std::out_of_range&) {
    }
  }
  throw std::invalid_argument(std::string(field) + ": expected an integer or a \"p/q\" string");
}

cplx parse_complex(const json& v, const char* field) {
  if (!(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()))
    throw std::invalid_argument(std::string(field) + ": expected [re, im]");
  return cplx(v[0].get<double>(), v[1].get<double>());
}

// A component series is either one constant [re, im] or one pair per node.
std::vector<cplx> parse_series(const json& v, int nodes, const char* field) {
  std::vector<cplx> out(static_cast<size_t>(nodes));
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    const cplx c = parse_complex(v, field);
    std::fill(out.begin(), out.end(), c);
    return out;
  }
  if (v.is_array() && static_cast<int>(v.size()) == nodes) {
    for (int k = 0; k < nodes; ++k) out[static_cast<size_t>(k)] = parse_complex(v[k], field);
    return out;
  }
  throw std::invalid_argument(std::string(field) + ": expected [re, im] or one [re, im] per node");
}

// ---------------------------------------------------------------------------
// weights

GlobalSpectralSpec spectral_spec_from_json(const json& cfg) {
  GlobalSpectralSpec spec;
  int idx = 0;
  for (const json& z : cfg.at("zeros")) {
    ZeroDatum d;
    d.label = z.value("label", "P" + std::to_string(idx));
    d.m = z.at("m").get<int>();
    d.ell = z.at("ell").get<int>();
    spec.zeros.push_back(d);
    ++idx;
  }
  spec.degE = cfg.at("deg_e").get<long long>();
  spec.d1 = cfg.at("d1").get<long long>();
  spec.d2 = cfg.at("d2").get<long long>();
  spec.validate();
  return spec;
}

GlobalSpectralSpec random_stable_spec(std::mt19937_64& rng) {
  GlobalSpectralSpec spec;
  long long lsum = 0;
  do {
    spec.zeros.clear();
    lsum = 0;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < n; ++i) {
      ZeroDatum z;
      z.label = "P" + std::to_string(i);
      z.m = std::uniform_int_distribution<int>(0, 4)(rng);
      z.ell = std::uniform_int_distribution<int>(0, z.m)(rng);
      lsum += z.ell;
      spec.zeros.push_back(z);
    }
  } while (lsum == 0);
  spec.d1 = std::uniform_int_distribution<long long>(-5, 5)(rng);
  spec.d2 = spec.d1 + std::uniform_int_distribution<long long>(0, lsum - 1)(rng);
  spec.degE = spec.d1 + spec.d2 - lsum;
  return spec;
}

int run_weights(const json& cfg, const std::string& raw, const std::string& out_dir,
                long long seed) {
  const GlobalSpectralSpec spec = spectral_spec_from_json(cfg);
  const Stability verdict = stability_check(spec);
  const WeightAssignment wa = weights(spec);
  const auto degs = parabolic_degrees(spec, wa);
  const Rational half(BigInt(spec.degE), BigInt(2));

  Json report = envelope("weights", raw, seed);
  report.set("inputs", Json::object()
                           .set("zeros", Json::of(static_cast<long long>(spec.zeros.size())))
                           .set("deg_e", Json::of(spec.degE))
                           .set("d1", Json::of(spec.d1))
                           .set("d2", Json::of(spec.d2)));

  CsvTable table;
  table.columns = {"zero", "m", "ell", "a_P", "weight1", "weight2"};
  Json zeros_json = Json::array();
  bool in_range = true;
  for (size_t i = 0; i < spec.zeros.size(); ++i) {
    const ZeroDatum& z = spec.zeros[i];
    const Rational zero(0), ell_rat(BigInt(z.ell), BigInt(1));
    in_range = in_range && wa.weight1[i] >= zero && wa.weight1[i] <= ell_rat &&
               wa.weight2[i] >= zero && wa.weight2[i] <= ell_rat;
    zeros_json.push(Json::object()
                        .set("label", Json::of(z.label))
                        .set("m", Json::of(z.m))
                        .set("ell", Json::of(z.ell))
                        .set("a_P", rational_json(z.a_P()))
                        .set("weight1", rational_json(wa.weight1[i]))
                        .set("weight2", rational_json(wa.weight2[i])));
    table.rows.push_back({static_cast<double>(i), static_cast<double>(z.m),
                          static_cast<double>(z.ell), to_double(z.a_P()),
                          to_double(wa.weight1[i]), to_double(wa.weight2[i])});
  }

  Json results = Json::object()
                     .set("stability", Json::of(to_string(verdict)))
                     .set("a_star", rational_json(wa.a_star))
                     .set("zeros", std::move(zeros_json))
                     .set("parabolic_degree_1", rational_json(degs.first))
                     .set("parabolic_degree_2", rational_json(degs.second));

  CheckList checks;
  checks.add("parabolic_degrees_equal_half_degE", degs.first == half && degs.second == half,
             Json::of(to_string(degs.first) + ", " + to_string(degs.second)),
             Json::of(to_string(half)));
  checks.add("weights_within_level_range", in_range, Json::of(in_range), Json::of("0 <= w <= ell"));

  const long long n_random = cfg.value("random_specs", 0ll);
  if (n_random > 0) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    long long exact = 0;
    for (long long k = 0; k < n_random; ++k) {
      const GlobalSpectralSpec rspec = random_stable_spec(rng);
      const auto rdegs = parabolic_degrees(rspec, weights(rspec));
      const Rational rhalf(BigInt(rspec.degE), BigInt(2));
      if (rdegs.first == rhalf && rdegs.second == rhalf) ++exact;
    }
    results.set("random_specs", Json::of(n_random));
    checks.add("random_degrees_exact", exact == n_random, Json::of(exact), Json::of(n_random));
  }

  write_text_file(out_dir + "/weights.csv", table.dump());
  report.set("results", std::move(results));
  return finalize(out_dir, report, checks);
}

// ---------------------------------------------------------------------------
// solve-local / decouple / limit

LocalModelSpec local_spec_from_json(const json& j) {
  LocalModelSpec spec;
  spec.m = j.at("m").get<int>();
  spec.ell = j.at("ell").get<int>();
  if (j.contains("c")) spec.c = parse_rational(j.at("c"), "spec.c");
  spec.validate();
  return spec;
}

SolveConfig solve_config_from_json(const json& cfg) {
  SolveConfig sc;
  const json& g = cfg.at("grid");
  sc.grid = PolarGrid::disc(g.at("r_max").get<double>(), g.at("nr").get<int>());
  sc.tolerance = cfg.at("tolerance").get<double>();
  if (cfg.contains("boundary")) {
    const std::string b = cfg.at("boundary").get<std::string>();
    if (b == "neumann")
      sc.boundary = BoundaryMode::neumann_weights;
    else if (b == "dirichlet")
      sc.boundary = BoundaryMode::dirichlet_decoupled;
    else
      throw std::invalid_argument("boundary: expected \"neumann\" or \"dirichlet\"");
  }
  sc.frame_scale = cfg.value("frame_scale", sc.frame_scale);
  sc.init_perturbation = cfg.value("init_perturbation", sc.init_perturbation);
  sc.max_iterations = cfg.value("max_iterations", sc.max_iterations);
  sc.flow_batch = cfg.value("flow_batch", sc.flow_batch);
  return sc;
}

Json solve_inputs_json(const LocalModelSpec& spec, const SolveConfig& sc) {
  const int n = static_cast<int>(sc.grid.radii.size());
  const double dr = sc.grid.radii[1] - sc.grid.radii[0];
  return Json::object()
      .set("spec", Json::object()
                       .set("m", Json::of(spec.m))
                       .set("ell", Json::of(spec.ell))
                       .set("c", Json::of(to_string(spec.c))))
      .set("grid", Json::object()
                       .set("kind", Json::of("disc"))
                       .set("r_max", Json::of(sc.grid.radii[static_cast<size_t>(n - 1)] + 0.5 * dr))
                       .set("nr", Json::of(n)))
      .set("tolerance", Json::of(sc.tolerance));
}

Json solve_report_json(const SolveReport& rep) {
  return Json::object()
      .set("converged", Json::of(rep.converged))
      .set("flow_iterations", Json::of(rep.flow_iterations))
      .set("newton_iterations", Json::of(rep.newton_iterations))
      .set("residual_sup", Json::of(rep.residual_sup))
      .set("residual_l2", Json::of(rep.residual_l2))
      .set("equation_inf", Json::of(rep.equation_inf))
      .set("boundary_defect", Json::of(rep.boundary_defect));
}

Json profile_checkpoint_json(const LocalModelSpec& spec, const RadialMetricProfile& p) {
  const int n = p.nr();
  const double dr = p.grid.radii[1] - p.grid.radii[0];
  Json radii = Json::array(), f1 = Json::array(), f2 = Json::array();
  Json g_re = Json::array(), g_im = Json::array();
  for (int k = 0; k < n; ++k) {
    radii.push(Json::of(p.grid.radius(k)));
    f1.push(Json::of(p.f1(k)));
    f2.push(Json::of(p.f2(k)));
    g_re.push(Json::of(p.g[static_cast<size_t>(k)].real()));
    g_im.push(Json::of(p.g[static_cast<size_t>(k)].imag()));
  }
  return Json::object()
      .set("spec", Json::object()
                       .set("m", Json::of(spec.m))
                       .set("ell", Json::of(spec.ell))
                       .set("c", Json::of(to_string(spec.c))))
      .set("grid", Json::object()
                       .set("kind", Json::of("disc"))
                       .set("r_max", Json::of(p.grid.radii[static_cast<size_t>(n - 1)] + 0.5 * dr))
                       .set("nr", Json::of(n)))
      .set("radii", std::move(radii))
      .set("f1", std::move(f1))
      .set("f2", std::move(f2))
      .set("g_re", std::move(g_re))
      .set("g_im", std::move(g_im));
}

void write_profile_files(const std::string& out_dir, const LocalModelSpec& spec,
                         const SolveOutcome& out) {
  write_text_file(out_dir + "/profile.json", profile_checkpoint_json(spec, out.profile).dump());
  CsvTable prof;
  prof.columns = {"r", "f1", "f2", "g_re", "g_im", "v1_sq", "v2_sq", "cross_abs"};
  for (int k = 0; k < out.profile.nr(); ++k) {
    const cplx g = out.profile.g[static_cast<size_t>(k)];
    prof.rows.push_back({out.profile.grid.radius(k), out.profile.f1(k), out.profile.f2(k),
                         g.real(), g.imag(), out.profile.v1_sq(k), out.profile.v2_sq(k),
                         std::abs(out.profile.v_cross(k))});
  }
  write_text_file(out_dir + "/profile.csv", prof.dump());
}

Json fit_json(bool computed, const DecayFit& fit) {
  if (!computed) return Json::null();
  return Json::object()
      .set("C", Json::of(fit.C))
      .set("eps", Json::of(fit.eps))
      .set("r_squared", Json::of(fit.r_squared));
}

int run_solve_local(const json& cfg, const std::string& raw, const std::string& out_dir,
                    long long seed) {
  const LocalModelSpec spec = local_spec_from_json(cfg.at("spec"));
  const SolveConfig sc = solve_config_from_json(cfg);
  const double window = cfg.value("bc_window", 0.2);

  Json report = envelope("solve-local", raw, seed);
  report.set("inputs", solve_inputs_json(spec, sc));

  const SolveOutcome out = solve_harmonic(spec, sc);
  const BcEstimate bc = extract_bc(out.profile, spec, window);

  write_profile_files(out_dir, spec, out);
  CsvTable trace;
  trace.columns = {"iteration", "dt", "residual_l2"};
  for (const FlowTracePoint& pt : out.report.trace)
    trace.rows.push_back({static_cast<double>(pt.iteration), pt.dt, pt.residual_l2});
  write_text_file(out_dir + "/trace.csv", trace.dump());

  report.set("results",
             Json::object()
                 .set("solve", solve_report_json(out.report))
                 .set("bc", Json::object()
                                .set("value", Json::of(bc.value))
                                .set("spread", Json::of(bc.spread))
                                .set("window_begin", Json::of(bc.window_begin))));

  CheckList checks;
  checks.add("converged", out.report.converged, Json::of(out.report.residual_sup),
             Json::of(sc.tolerance));
  bool profile_ok = true;
  try {
    out.profile.validate();
  } catch (const std::exception&) {
    profile_ok = false;
  }
  checks.add("profile_valid", profile_ok, Json::of(profile_ok), Json::of(true));
  return finalize(out_dir, report, checks);
}

struct ScanWindow {
  std::vector<double> t_list;
  double r_lo = 0, r_hi = 0;
  int samples = 96;
};

ScanWindow scan_window_from_json(const json& cfg) {
  ScanWindow w;
  w.t_list = cfg.at("t_list").get<std::vector<double>>();
  const json& win = cfg.at("window");
  if (!(win.is_array() && win.size() == 2))
    throw std::invalid_argument("window: expected [r_lo, r_hi]");
  w.r_lo = win[0].get<double>();
  w.r_hi = win[1].get<double>();
  w.samples = cfg.value("samples", 96);
  return w;
}

Json scan_table_json(const std::vector<std::pair<double, double>>& rows, const char* value_key) {
  Json table = Json::array();
  for (const auto& [t, v] : rows)
    table.push(Json::object().set("t", Json::of(t)).set(value_key, Json::of(v)));
  return table;
}

void decay_checks(CheckList& checks, const std::vector<std::pair<double, double>>& rows,
                  const DecayFit& fit, const char* monotone_name) {
  bool decreasing = true;
  double top = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    top = std::max(top, rows[i].second);
    if (i) decreasing = decreasing && rows[i].second < rows[i - 1].second;
  }
  const bool all_zero = top == 0;
  checks.add(monotone_name, decreasing || all_zero, Json::of(decreasing), Json::of(true));
  bool positive = true;
  for (const auto& r : rows) positive = positive && r.second > 0;
  checks.add("decay_rate_positive", all_zero || (positive && fit.eps > 0),
             Json::of(all_zero ? 0.0 : fit.eps), Json::of("eps > 0"));
}

int run_decouple(const json& cfg, const std::string& raw, const std::string& out_dir,
                 long long seed) {
  const LocalModelSpec spec = local_spec_from_json(cfg.at("spec"));
  const SolveConfig sc = solve_config_from_json(cfg);
  const ScanWindow w = scan_window_from_json(cfg);

  Json report = envelope("decouple", raw, seed);
  report.set("inputs", solve_inputs_json(spec, sc));

  const SolveOutcome out = solve_harmonic(spec, sc);
  const DecouplingScan scan =
      decoupling_scan(out.profile, spec, w.t_list, w.r_lo, w.r_hi, w.samples);
  write_text_file(out_dir + "/profile.json", profile_checkpoint_json(spec, out.profile).dump());

  CsvTable table;
  table.columns = {"t", "sup"};
  bool positive = true;
  for (const auto& [t, sup] : scan.sup_by_t) {
    table.rows.push_back({t, sup});
    positive = positive && sup > 0;
  }
  write_text_file(out_dir + "/decoupling.csv", table.dump());

  report.set("results", Json::object()
                            .set("solve", solve_report_json(out.report))
                            .set("table", scan_table_json(scan.sup_by_t, "sup"))
                            .set("fit", fit_json(positive, scan.fit)));

  CheckList checks;
  decay_checks(checks, scan.sup_by_t, scan.fit, "sup_strictly_decreasing");
  return finalize(out_dir, report, checks);
}

int run_limit(const json& cfg, const std::string& raw, const std::string& out_dir,
              long long seed) {
  const LocalModelSpec spec = local_spec_from_json(cfg.at("spec"));
  const SolveConfig sc = solve_config_from_json(cfg);
  const ScanWindow w = scan_window_from_json(cfg);

  Json report = envelope("limit", raw, seed);
  report.set("inputs", solve_inputs_json(spec, sc));

  const SolveOutcome out = solve_harmonic(spec, sc);
  const double b_c = cfg.contains("b_c")
                         ? cfg.at("b_c").get<double>()
                         : extract_bc(out.profile, spec, cfg.value("bc_window", 0.2)).value;
  const LimitScan scan =
      limit_convergence_check(out.profile, spec, b_c, w.t_list, w.r_lo, w.r_hi, w.samples);
  write_text_file(out_dir + "/profile.json", profile_checkpoint_json(spec, out.profile).dump());

  CsvTable table;
  table.columns = {"t", "dist"};
  bool positive = true;
  for (const auto& [t, dist] : scan.dist_by_t) {
    table.rows.push_back({t, dist});
    positive = positive && dist > 0;
  }
  write_text_file(out_dir + "/limit.csv", table.dump());

  report.set("results", Json::object()
                            .set("solve", solve_report_json(out.report))
                            .set("b_c_used", Json::of(b_c))
                            .set("table", scan_table_json(scan.dist_by_t, "dist"))
                            .set("fit", fit_json(positive, scan.fit)));

  CheckList checks;
  decay_checks(checks, scan.dist_by_t, scan.fit, "dist_strictly_decreasing");
  return finalize(out_dir, report, checks);
}

// ---------------------------------------------------------------------------
// wkb

int run_wkb(const json& cfg, const std::string& raw, const std::string& out_dir, long long seed,
            int jobs) {
  const int rank = cfg.at("rank").get<int>();
  const int nodes = cfg.at("nodes").get<int>();
  if (rank < 1 || nodes < 7) throw std::invalid_argument("wkb: need rank >= 1 and nodes >= 7");

  const json& a_cfg = cfg.at("a");
  if (!(a_cfg.is_array() && static_cast<int>(a_cfg.size()) == rank))
    throw std::invalid_argument("a: expected one series per component");
  std::vector<std::vector<cplx>> a_series, b_series;
  for (int j = 0; j < rank; ++j) a_series.push_back(parse_series(a_cfg[j], nodes, "a"));
  if (cfg.contains("b")) {
    const json& b_cfg = cfg.at("b");
    if (!(b_cfg.is_array() && static_cast<int>(b_cfg.size()) == rank))
      throw std::invalid_argument("b: expected one series per component");
    for (int j = 0; j < rank; ++j) b_series.push_back(parse_series(b_cfg[j], nodes, "b"));
  } else {
    b_series.assign(static_cast<size_t>(rank), std::vector<cplx>(static_cast<size_t>(nodes)));
  }

  PathConnectionData base;
  base.rank = rank;
  base.nodes = nodes;
  base.t = 0.0;
  base.a.assign(static_cast<size_t>(nodes), Vec::Zero(rank));
  base.b.assign(static_cast<size_t>(nodes), Vec::Zero(rank));
  base.B.assign(static_cast<size_t>(nodes), Mat::Zero(rank, rank));
  for (int k = 0; k < nodes; ++k)
    for (int j = 0; j < rank; ++j) {
      base.a[static_cast<size_t>(k)](j) = a_series[static_cast<size_t>(j)][static_cast<size_t>(k)];
      base.b[static_cast<size_t>(k)](j) = b_series[static_cast<size_t>(j)][static_cast<size_t>(k)];
    }
  if (cfg.contains("B_entries"))
    for (const json& e : cfg.at("B_entries")) {
      const int i = e.at("i").get<int>(), j = e.at("j").get<int>();
      if (i == j || i < 0 || j < 0 || i >= rank || j >= rank)
        throw std::invalid_argument("B_entries: indices must be off-diagonal and in range");
      const std::vector<cplx> series = parse_series(e.at("value"), nodes, "B_entries.value");
      for (int k = 0; k < nodes; ++k) base.B[static_cast<size_t>(k)](i, j) = series[static_cast<size_t>(k)];
    }
  base.validate();
  const NonCriticalReport nc = check_noncritical(base);

  const std::vector<double> t_list = cfg.at("t_list").get<std::vector<double>>();
  if (t_list.empty()) throw std::invalid_argument("t_list: must be nonempty");
  GaugeSolveOptions opt;
  opt.smallness = cfg.value("smallness", opt.smallness);

  Json report = envelope("wkb", raw, seed);
  report.set("inputs", Json::object()
                           .set("rank", Json::of(rank))
                           .set("nodes", Json::of(nodes))
                           .set("gap", Json::of(nc.gap))
                           .set("B_sup", Json::of(sup_norm(base.B))));

  struct StepOut {
    double t = 0, err = 0;
    RealVec kappa, target;
  };
  const std::vector<StepOut> steps = parallel_map<StepOut>(
      t_list.size(), jobs, [&](std::size_t k) {
        const WkbReport rep = wkb_compare(base, {t_list[k]}, std::nullopt, std::nullopt, opt);
        return StepOut{t_list[k], rep.steps[0].err_inf, rep.steps[0].kappa_over_t, rep.target};
      });
  const RealVec& target = steps[0].target;

  CsvTable table;
  table.columns = {"t", "err_inf"};
  for (int j = 1; j <= rank; ++j) table.columns.push_back("kappa_" + std::to_string(j));
  for (int j = 1; j <= rank; ++j) table.columns.push_back("target_" + std::to_string(j));
  Json steps_json = Json::array();
  std::vector<std::pair<double, double>> positive_pts;
  bool all_zero = true, nonincreasing = true;
  for (size_t k = 0; k < steps.size(); ++k) {
    const StepOut& st = steps[k];
    std::vector<double> row{st.t, st.err};
    for (int j = 0; j < rank; ++j) row.push_back(st.kappa(j));
    for (int j = 0; j < rank; ++j) row.push_back(target(j));
    table.rows.push_back(std::move(row));
    steps_json.push(Json::object()
                        .set("t", Json::of(st.t))
                        .set("err_inf", Json::of(st.err))
                        .set("kappa", Json::number_array(st.kappa.data(), st.kappa.data() + rank)));
    if (st.err > 0) positive_pts.emplace_back(st.t, st.err);
    all_zero = all_zero && st.err == 0;
    if (k) nonincreasing = nonincreasing && st.err <= steps[k - 1].err * (1.0 + 1e-12);
  }
  write_text_file(out_dir + "/wkb.csv", table.dump());

  const bool fit_computed = positive_pts.size() >= 3 && positive_pts.size() == steps.size();
  DecayFit fit;
  if (fit_computed) fit = fit_exponential_decay(positive_pts);

  report.set("results",
             Json::object()
                 .set("target", Json::number_array(target.data(), target.data() + rank))
                 .set("steps", std::move(steps_json))
                 .set("fit", fit_json(fit_computed, fit)));

  CheckList checks;
  checks.add("errors_nonincreasing", nonincreasing, Json::of(nonincreasing), Json::of(true));
  checks.add("decay_rate_positive", all_zero || (fit_computed && fit.eps > 0),
             Json::of(all_zero ? 0.0 : fit.eps), Json::of("eps > 0"));
  if (cfg.value("halving", false)) {
    bool halves = true;
    int pairs = 0;
    for (size_t k = 1; k < steps.size(); ++k) {
      if (std::abs(steps[k].t - 2.0 * steps[k - 1].t) > 1e-12 * steps[k].t) continue;
      ++pairs;
      halves = halves && steps[k].err <= 0.5 * steps[k - 1].err;
    }
    checks.add("errors_halve_per_doubling", pairs > 0 && halves, Json::of(halves),
               Json::of("err(2t) <= err(t)/2"));
  }
  return finalize(out_dir, report, checks);
}

// ---------------------------------------------------------------------------
// hkappa

int run_hkappa(const json& cfg, const std::string& raw, const std::string& out_dir,
               long long seed, int jobs) {
  const LocalModelSpec spec = local_spec_from_json(cfg.at("spec"));
  const int L = cfg.at("L").get<int>();
  const std::vector<double> kappas = cfg.at("kappa_list").get<std::vector<double>>();
  if (kappas.empty()) throw std::invalid_argument("kappa_list: must be nonempty");
  const json& g = cfg.at("grid");
  const double r_max = g.at("r_max").get<double>();
  const int nr = g.at("nr").get<int>();
  const double sup_radius = cfg.value("sup_radius", 1.0);
  if (!(sup_radius <= r_max))
    throw std::invalid_argument("sup_radius: must lie inside the grid");
  const PolarGrid grid = PolarGrid::disc(r_max, nr, 1, {0, -spec.ell});

  Json report = envelope("hkappa", raw, seed);
  report.set("inputs", Json::object()
                           .set("spec", Json::object()
                                            .set("m", Json::of(spec.m))
                                            .set("ell", Json::of(spec.ell)))
                           .set("L", Json::of(L))
                           .set("grid", Json::object()
                                            .set("r_max", Json::of(r_max))
                                            .set("nr", Json::of(nr)))
                           .set("sup_radius", Json::of(sup_radius)));

  const std::vector<double> sups = parallel_map<double>(
      kappas.size(), jobs, [&](std::size_t i) {
        const double kappa = kappas[i];
        // Conjugating by diag(kappa^L, kappa^-L) leaves the defect norms
        // invariant and keeps every matrix slot O(1).
        const double kl = std::pow(kappa, L);
        Mat d = Mat::Zero(2, 2);
        d(0, 0) = kl;
        d(1, 1) = 1.0 / kl;
        const MetricField metric = [&, kappa, d](cplx z) {
          return hkappa_metric(kappa, L, spec, z).pullback(d);
        };
        const EndoField higgs = [&, d](cplx z) {
          const Mat th = higgs_matrix(spec, FrameTag::e_frame, z);
          return Mat(d.inverse() * th * d);
        };
        const ResidualField field = hitchin_residual(metric, higgs, grid);
        double sup = 0;
        for (int k = field.first_radial; k <= field.last_radial; ++k) {
          if (grid.radius(k) > sup_radius) continue;
          for (int j = 0; j < field.ntheta; ++j) sup = std::max(sup, field.norm_at(k, j));
        }
        return sup;
      });

  CsvTable table;
  table.columns = {"kappa", "residual_sup"};
  Json table_json = Json::array();
  for (size_t i = 0; i < kappas.size(); ++i) {
    table.rows.push_back({kappas[i], sups[i]});
    table_json.push(Json::object()
                        .set("kappa", Json::of(kappas[i]))
                        .set("residual_sup", Json::of(sups[i])));
  }
  write_text_file(out_dir + "/hkappa.csv", table.dump());

  const double bound = std::pow(2.0, -(L - 1));
  CheckList checks;
  Json ratios = Json::array();
  int pairs = 0;
  for (size_t i = 0; i + 1 < kappas.size(); ++i) {
    if (std::abs(kappas[i + 1] - 0.5 * kappas[i]) > 1e-12 * kappas[i]) continue;
    const double ratio = sups[i + 1] / sups[i];
    ratios.push(Json::object()
                    .set("kappa", Json::of(kappas[i]))
                    .set("ratio", Json::of(ratio)));
    checks.add("halving_ratio_" + std::to_string(pairs), ratio <= bound, Json::of(ratio),
               Json::of(bound));
    ++pairs;
  }
  checks.add("halving_pairs_present", pairs > 0, Json::of(static_cast<long long>(pairs)),
             Json::of("at least one (kappa, kappa/2) pair"));

  report.set("results", Json::object().set("table", std::move(table_json)).set("ratios", std::move(ratios)));
  return finalize(out_dir, report, checks);
}

// ---------------------------------------------------------------------------
// fit

int run_fit(const json& cfg, const std::string& raw, const std::string& out_dir, long long seed) {
  std::vector<std::pair<double, double>> samples;
  for (const json& s : cfg.at("samples")) {
    if (!(s.is_array() && s.size() == 2 && s[0].is_number() && s[1].is_number()))
      throw std::invalid_argument("samples: expected [x, y] pairs");
    samples.emplace_back(s[0].get<double>(), s[1].get<double>());
  }
  const DecayFit fit = fit_exponential_decay(samples);

  Json report = envelope("fit", raw, seed);
  report.set("inputs", Json::object().set("samples", Json::of(static_cast<long long>(samples.size()))));
  report.set("results", Json::object()
                            .set("C", Json::of(fit.C))
                            .set("eps", Json::of(fit.eps))
                            .set("r_squared", Json::of(fit.r_squared)));

  CheckList checks;
  if (cfg.contains("min_r_squared"))
    checks.add("r_squared_at_least", fit.r_squared >= cfg.at("min_r_squared").get<double>(),
               Json::of(fit.r_squared), Json::of(cfg.at("min_r_squared").get<double>()));
  if (cfg.value("require_positive_rate", false))
    checks.add("decay_rate_positive", fit.eps > 0, Json::of(fit.eps), Json::of("eps > 0"));
  return finalize(out_dir, report, checks);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"experiment runner for the limiting-configuration toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed = 0;
  int jobs_flag = 0;
  const char* descriptions[][2] = {
      {"weights", "exact parabolic weights and degrees of a spectral configuration"},
      {"solve-local", "relax a radial harmonic metric and extract its asymptotic constant"},
      {"decouple", "commutator decay of the rescaled Higgs field family"},
      {"limit", "distance of rescaled solutions to the decoupled limit"},
      {"wkb", "distance-vector asymptotics of path transport at large t"},
      {"hkappa", "curvature scaling of the interpolating approximate solutions"},
      {"fit", "least-squares exponential decay fit of (x, y) samples"},
  };
  for (const auto& d : descriptions) {
    CLI::App* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "seed for randomized sweeps, recorded in the report");
    sub->add_option("--jobs", jobs_flag, "worker threads (fallback: HITCHINLAB_JOBS, then 1)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string raw = read_text_file(config_path);
    const json cfg = json::parse(raw);
    fs::create_directories(out_dir);
    const int jobs = resolve_jobs(jobs_flag);

    if (app.got_subcommand("weights")) return run_weights(cfg, raw, out_dir, seed);
    if (app.got_subcommand("solve-local")) return run_solve_local(cfg, raw, out_dir, seed);
    if (app.got_subcommand("decouple")) return run_decouple(cfg, raw, out_dir, seed);
    if (app.got_subcommand("limit")) return run_limit(cfg, raw, out_dir, seed);
    if (app.got_subcommand("wkb")) return run_wkb(cfg, raw, out_dir, seed, jobs);
    if (app.got_subcommand("hkappa")) return run_hkappa(cfg, raw, out_dir, seed, jobs);
    if (app.got_subcommand("fit")) return run_fit(cfg, raw, out_dir, seed);
    std::fprintf(stderr, "error: unknown subcommand\n");
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const HarmonicSolveError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const GaugeSolveError& e) {
    std::fprintf(stderr, "numerical failure: %s (defect %.3e, contraction %.3e)\n", e.what(),
                 e.last_defect, e.last_contraction);
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
