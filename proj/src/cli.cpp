#include "strata/cli.hpp"

#include "strata/acceptance.hpp"
#include "strata/beta.hpp"
#include "strata/covering.hpp"
#include "strata/field_io.hpp"
#include "strata/frequency.hpp"
#include "strata/harmonic_basis.hpp"
#include "strata/minkowski.hpp"
#include "strata/parallel.hpp"
#include "strata/reifenberg.hpp"
#include "strata/stratify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

namespace strata {

namespace {

double parse_number(const std::string& s) {
  static const std::regex dyadic(R"(\s*2\^(-?\d+)\s*)");
  std::smatch m;
  if (std::regex_match(s, m, dyadic)) return std::ldexp(1.0, std::stoi(m[1]));
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("not a number: '" + s + "'");
  }
  require(s.find_first_not_of(" \t", used) == std::string::npos, "not a number: '" + s + "'");
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::vector<double> to_std(const Vector& x) { return {x.data(), x.data() + x.size()}; }

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) j.push_back(to_std(m.col(c)));
  return j;
}

Vector point_for(const FieldPtr& v, const std::string& text) {
  if (text.empty()) return Vector::Zero(v->dim());
  const Vector p = parse_point(text);
  require(p.size() == v->dim(), "point has " + std::to_string(p.size()) + " coordinates, field dimension is " +
                                    std::to_string(v->dim()));
  return p;
}

std::optional<Box> parse_window(const std::string& text, int n) {
  if (text.empty()) return std::nullopt;
  const std::vector<std::string> parts = split(text, ':');
  require(parts.size() == 2, "window must read lo:hi");
  const double lo = parse_number(parts[0]), hi = parse_number(parts[1]);
  require(lo < hi, "window needs lo < hi");
  return Box{Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

struct Globals {
  int threads = 0;
  std::uint64_t seed = 0;
  int order = 0;
  std::string out;
};

}  // namespace

std::vector<double> parse_radii(const std::string& text) {
  static const std::regex range(R"(\s*2\^(-?\d+)\s*\.\.\s*2\^(-?\d+)\s*)");
  std::smatch m;
  std::vector<double> out;
  if (std::regex_match(text, m, range)) {
    const int a = std::stoi(m[1]), b = std::stoi(m[2]);
    for (int e = a;; e += a <= b ? 1 : -1) {
      out.push_back(std::ldexp(1.0, e));
      if (e == b) break;
    }
    return out;
  }
  for (const std::string& s : split(text, ',')) out.push_back(parse_number(s));
  require(!out.empty(), "empty radius list");
  for (double r : out) require(r > 0.0 && std::isfinite(r), "radii must be positive");
  return out;
}

Vector parse_point(const std::string& text) {
  const std::vector<std::string> parts = split(text, ',');
  require(!parts.empty(), "empty point");
  Vector p(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) p[static_cast<Eigen::Index>(i)] = parse_number(parts[i]);
  return p;
}

std::vector<Vector> read_points(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<Vector> out;
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    nlohmann::json j = read_json_file(path);
    if (j.is_object()) {
      for (const auto& [key, _] : j.items())
        require(key == "schema" || key == "points", path + ": unknown key '" + key + "'");
      require(j.contains("points"), path + ": missing 'points'");
      j = j.at("points");
    }
    require(j.is_array(), path + ": expected an array of points");
    for (const auto& row : j) {
      require(row.is_array() && !row.empty(), path + ": each point must be a non-empty array");
      std::vector<double> x;
      try {
        x = row.get<std::vector<double>>();
      } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(path + ": coordinates must be numbers");
      }
      out.emplace_back(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      for (char& c : line)
        if (c == ',') c = ' ';
      std::istringstream row(line);
      std::vector<double> x;
      std::string tok;
      while (row >> tok) {
        if (tok[0] == '#') break;
        try {
          x.push_back(parse_number(tok));
        } catch (const InvalidArgument&) {
          throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
        }
      }
      if (!x.empty()) out.emplace_back(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
    }
  }
  for (const Vector& p : out)
    require(p.size() == out.front().size(), path + ": points have different dimensions");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frequency, symmetry and stratification experiments for harmonic-type fields", "strata"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML file; unknown keys are rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);
  bool print_config = false;
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: STRATA_THREADS, then all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for every random choice");
  app.add_option("--order", g.order, "Quadrature order for frequency integrals (0 picks a default)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output path (default: standard output)");
  app.add_flag("--print-config", print_config, "Print the effective configuration as TOML and exit");

  std::ostringstream result;
  std::function<void()> action;
  bool degenerate = false;  // output is written, but the exit code reports the degeneracy

  // basis
  auto* basis = app.add_subcommand("basis", "Orthonormal basis of homogeneous harmonic polynomials (JSON)");
  int b_n = 3, b_d = 2;
  basis->add_option("--n", b_n, "Dimension")->required()->check(CLI::PositiveNumber);
  basis->add_option("--d", b_d, "Degree")->required()->check(CLI::NonNegativeNumber);
  basis->callback([&] {
    action = [&] {
      nlohmann::json j = basis_to_json(b_n, b_d);
      j["dimension"] = harmonic_dimension(b_n, b_d);
      result << j.dump(2) << '\n';
    };
  });

  // frequency
  auto* freq = app.add_subcommand("frequency", "H, D, N and lambda at a point (CSV)");
  std::string f_field, f_p, f_r = "1";
  freq->add_option("--field", f_field, "Field spec (JSON)")->required();
  freq->add_option("--p", f_p, "Center, comma separated (default: origin)");
  freq->add_option("--r", f_r, "Radius or radius list (a,b,c or 2^-a..2^-b)");
  freq->callback([&] {
    action = [&] {
      const FieldPtr v = load_field(f_field);
      const Vector p = point_for(v, f_p);
      std::vector<FrequencyRecord> recs;
      for (double r : parse_radii(f_r)) {
        recs.push_back(frequency_record(*v, p, r, g.order));
        degenerate = degenerate || recs.back().degenerate;
      }
      write_frequency_csv(result, recs);
    };
  });

  // profile
  auto* prof = app.add_subcommand("profile", "Frequency over geometric scales (CSV)");
  std::string pr_field, pr_p;
  double pr_min = 1.0 / 64, pr_max = 1.0, pr_q = 2.0;
  prof->add_option("--field", pr_field, "Field spec (JSON)")->required();
  prof->add_option("--p", pr_p, "Center (default: origin)");
  prof->add_option("--rmin", pr_min, "Smallest scale")->check(CLI::PositiveNumber);
  prof->add_option("--rmax", pr_max, "Largest scale")->check(CLI::PositiveNumber);
  prof->add_option("--q", pr_q, "Scale ratio")->check(CLI::PositiveNumber);
  prof->callback([&] {
    action = [&] {
      const FieldPtr v = load_field(pr_field);
      const FrequencyProfile fp = frequency_profile(*v, point_for(v, pr_p), pr_min, pr_max, pr_q, g.order);
      degenerate = std::all_of(fp.records.begin(), fp.records.end(), [](const FrequencyRecord& r) { return r.degenerate; });
      write_frequency_csv(result, fp.records);
    };
  });

  // stratify
  auto* strat = app.add_subcommand("stratify", "Symmetry distances and strata on a lattice in a ball (CSV)");
  std::string s_field, s_center;
  double s_radius = 0.25, s_spacing = 0.0625;
  StratifyOptions s_opts;
  strat->add_option("--field", s_field, "Field spec (JSON)")->required();
  strat->add_option("--center", s_center, "Ball center (default: origin)");
  strat->add_option("--radius", s_radius, "Ball radius")->check(CLI::PositiveNumber);
  strat->add_option("--spacing", s_spacing, "Lattice spacing")->check(CLI::PositiveNumber);
  strat->add_option("--eps", s_opts.eps, "Symmetry tolerance")->check(CLI::PositiveNumber);
  strat->add_option("--r", s_opts.r, "Smallest scale")->check(CLI::PositiveNumber);
  strat->add_option("--q", s_opts.q, "Scale ratio")->check(CLI::PositiveNumber);
  strat->add_flag("--exhaustive", s_opts.exhaustive, "Scan every scale instead of stopping early");
  strat->callback([&] {
    action = [&] {
      const FieldPtr v = load_field(s_field);
      StratifyOptions o = s_opts;
      o.threads = g.threads;
      o.symmetry.seed = g.seed;
      write_stratify_csv(result, stratify(*v, lattice_in_ball(point_for(v, s_center), s_radius, s_spacing), o));
    };
  });

  // beta
  auto* beta = app.add_subcommand("beta", "Jones beta number of a discrete measure (JSON)");
  std::string bt_measure, bt_p;
  double bt_r = 1.0;
  int bt_k = -1;
  bool bt_brute = false;
  beta->add_option("--measure", bt_measure, "Measure (JSON with k and atoms)")->required();
  beta->add_option("--p", bt_p, "Ball center (default: origin)");
  beta->add_option("--r", bt_r, "Ball radius")->check(CLI::PositiveNumber);
  beta->add_option("--k", bt_k, "Plane dimension (default: the measure's k)");
  beta->add_flag("--bruteforce", bt_brute, "Also run the direct plane search");
  beta->callback([&] {
    action = [&] {
      const DiscreteMeasure mu = measure_from_json(read_json_file(bt_measure));
      const int n = mu.dim();
      require(n > 0, "beta: measure has no atoms");
      const Vector p = bt_p.empty() ? Vector::Zero(n) : parse_point(bt_p);
      require(p.size() == n, "beta: point dimension does not match the measure");
      const int k = bt_k < 0 ? mu.k : bt_k;
      const BetaResult b = beta_number(mu, p, bt_r, k);
      nlohmann::json j = {{"schema", 1},         {"k", k},           {"r", bt_r},           {"p", to_std(p)},
                          {"beta_sq", b.beta_sq}, {"mass", b.mass},   {"count", b.count},    {"empty", b.empty},
                          {"center", b.empty ? std::vector<double>{} : to_std(b.X)},
                          {"eigenvalues", b.empty ? std::vector<double>{} : to_std(b.eigvals)},
                          {"plane", b.empty ? nlohmann::json::array() : matrix_json(b.plane)}};
      if (bt_brute) j["bruteforce"] = beta_bruteforce(mu, p, bt_r, k, 32, static_cast<unsigned>(g.seed));
      result << j.dump(2) << '\n';
    };
  });

  // reifenberg
  auto* reif = app.add_subcommand("reifenberg", "Reifenberg hypothesis sums and packing mass (JSON)");
  std::string rf_measure;
  std::vector<double> rf_family;
  PackingOptions rf_opts;
  reif->add_option("--measure", rf_measure, "Measure (JSON)");
  reif->add_option("--family", rf_family, "Lattice family n,k,tau,spacing,extent[,jitter]")->delimiter(',')->expected(5, 6);
  reif->add_option("--eps-k", rf_opts.eps_k, "Mass threshold")->check(CLI::PositiveNumber);
  reif->add_option("--lattice-spacing", rf_opts.lattice_spacing, "Extra scan centers in B_2")->check(CLI::PositiveNumber);
  reif->add_option("--max-level", rf_opts.max_level, "Deepest dyadic level (-1: truncation level)");
  reif->callback([&] {
    action = [&] {
      require(rf_measure.empty() != rf_family.empty(), "reifenberg: give exactly one of --measure and --family");
      DiscreteMeasure mu;
      if (!rf_measure.empty()) {
        mu = measure_from_json(read_json_file(rf_measure));
      } else {
        const auto& f = rf_family;
        require(f[0] == std::floor(f[0]) && f[1] == std::floor(f[1]), "reifenberg: n and k must be integers");
        mu = lattice_family(static_cast<int>(f[0]), static_cast<int>(f[1]), f[2], f[3], f[4], f.size() > 5 ? f[5] : 0.0,
                            g.seed);
      }
      PackingOptions o = rf_opts;
      o.threads = g.threads;
      nlohmann::json j = packing_report_json(packing_report(mu, o));
      j["atoms"] = mu.atoms.size();
      result << j.dump(2) << '\n';
    };
  });

  // cover
  auto* cover = app.add_subcommand("cover", "Good/bad tree covering of a stratum (JSON)");
  std::string c_field;
  CoveringParams cp;
  double c_E = std::numeric_limits<double>::quiet_NaN();
  cover->add_option("--field", c_field, "Field spec (JSON)")->required();
  cover->add_option("--k", cp.k, "Stratum index")->check(CLI::NonNegativeNumber);
  cover->add_option("--eps", cp.eps, "Symmetry tolerance")->check(CLI::PositiveNumber);
  cover->add_option("--R", cp.R, "Stop scale");
  cover->add_option("--E", c_E, "Frequency bound (default: measured over the unit ball)");
  cover->add_option("--rho", cp.rho, "Scale ratio");
  cover->add_option("--gamma", cp.gamma, "Classification scale factor");
  cover->add_option("--eta-prime", cp.eta_prime, "Good-ball pinching");
  cover->add_option("--eta0", cp.eta0, "High-frequency pinching");
  cover->add_option("--eta", cp.eta, "Stop ball factor");
  cover->add_option("--max-depth", cp.max_depth, "Level and alternation cap");
  cover->add_option("--spacing", cp.sample_spacing, "Stratum sample spacing (default: R/2)");
  cover->callback([&] {
    action = [&] {
      const FieldPtr v = load_field(c_field);
      CoveringParams p = cp;
      p.E = c_E;
      p.order = g.order;
      p.stratify.threads = g.threads;
      p.stratify.symmetry.seed = g.seed;
      result << cover_report_json(build_cover(*v, p)).dump(2) << '\n';
    };
  });

  // scaling
  auto* scal = app.add_subcommand("scaling", "Tube volume of a stratum against R (CSV and fitted exponent)");
  std::string sc_field, sc_R = "2^-2..2^-5";
  int sc_k = 1;
  double sc_eps = 0.05;
  ScalingOptions sc_opts;
  scal->add_option("--field", sc_field, "Field spec (JSON)")->required();
  scal->add_option("--k", sc_k, "Stratum index")->check(CLI::NonNegativeNumber);
  scal->add_option("--eps", sc_eps, "Symmetry tolerance")->check(CLI::PositiveNumber);
  scal->add_option("--R", sc_R, "Radii (a,b,c or 2^-a..2^-b)");
  scal->add_option("--ball", sc_opts.ball, "Stratum restricted to this ball about the origin")->check(CLI::PositiveNumber);
  scal->add_option("--stratum-scale", sc_opts.stratum_scale, "Stratum scale as a multiple of R")->check(CLI::PositiveNumber);
  scal->add_option("--spacing-factor", sc_opts.spacing_factor, "Sample spacing as a multiple of R")->check(CLI::PositiveNumber);
  scal->callback([&] {
    action = [&] {
      const FieldPtr v = load_field(sc_field);
      ScalingOptions o = sc_opts;
      o.stratify.threads = g.threads;
      o.stratify.symmetry.seed = g.seed;
      o.volume.seed = g.seed;
      const ScalingFit f = scaling_fit(*v, sc_k, sc_eps, parse_radii(sc_R), o);
      result << std::setprecision(12) << "R,volume,points,monte_carlo\n";
      for (const ScalingRow& r : f.rows) result << r.R << ',' << r.volume << ',' << r.points << ',' << r.monte_carlo << '\n';
      result << "# exponent," << f.exponent << (f.degenerate ? ",degenerate" : "") << '\n';
    };
  });

  // minkowski
  auto* mink = app.add_subcommand("minkowski", "Tube volumes, Minkowski content, dimension and porosity of a point set");
  std::string mk_points, mk_radii = "2^-3..2^-6", mk_window;
  double mk_s = -1.0, mk_alpha = 0.0, mk_r0 = std::ldexp(1.0, -8);
  mink->add_option("--points", mk_points, "Point set (JSON or whitespace/comma rows)")->required();
  mink->add_option("--radii", mk_radii, "Radii, geometric, at least four");
  mink->add_option("--s", mk_s, "Content exponent (default: fitted dimension)");
  mink->add_option("--window", mk_window, "Measure inside the cube lo:hi only");
  mink->add_option("--porous-alpha", mk_alpha, "Check the porous volume bound with this alpha (JSON output)");
  mink->add_option("--r0", mk_r0, "Smallest porosity scale")->check(CLI::PositiveNumber);
  mink->callback([&] {
    action = [&] {
      const std::vector<Vector> E = read_points(mk_points);
      require(!E.empty(), "minkowski: empty point set");
      const int n = static_cast<int>(E.front().size());
      if (mk_alpha > 0.0) {
        const PorousBound b = porous_volume_bound_check(E, n, mk_alpha, mk_r0);
        result << nlohmann::json{{"schema", 1},
                                 {"alpha", mk_alpha},
                                 {"r0", mk_r0},
                                 {"k", b.k},
                                 {"k_prime", b.k_prime},
                                 {"N", b.N},
                                 {"bound", b.bound},
                                 {"measured", b.measured},
                                 {"measured_alpha", b.measured_alpha},
                                 {"porous", b.porous},
                                 {"holds", b.holds()}}
                      .dump(2)
               << '\n';
        return;
      }
      TubeVolumeOptions vo;
      vo.seed = g.seed;
      const std::optional<Box> window = parse_window(mk_window, n);
      const DimensionFit f = dimension_fit(E, n, parse_radii(mk_radii), window, vo);
      const double s = mk_s >= 0.0 ? mk_s : f.dimension;
      result << std::setprecision(12) << "r,volume,content_s\n";
      for (const MinkowskiRow& r : f.rows) result << r.r << ',' << r.volume << ',' << r.volume / std::pow(2.0 * r.r, n - s) << '\n';
      result << "# dimension," << f.dimension << ",s," << s << (f.monotone ? "" : ",non_monotone")
             << (f.dropped_largest ? ",dropped_largest" : "") << '\n';
    };
  });

  // selftest
  auto* self = app.add_subcommand("selftest", "Run the acceptance criteria and print one line per criterion");
  std::vector<int> st_only;
  self->add_option("--only", st_only, "Criterion ids")->delimiter(',')->check(CLI::Range(1, acceptance_criteria));
  bool self_failed = false;
  self->callback([&] {
    action = [&] {
      AcceptanceOptions o;
      o.seed = g.seed;
      o.threads = g.threads;
      o.only = st_only;
      int passed = 0, total = 0;
      run_acceptance(o, [&](const CriterionResult& r) {
        out << format_result(r) << std::endl;
        result << format_result(r) << '\n';
        ++total;
        passed += r.passed;
      });
      out << passed << "/" << total << " criteria passed" << std::endl;
      self_failed = passed != total;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_invalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  }
  if (print_config) {
    app.get_option("--print-config")->configurable(false);
    out << app.config_to_str(false, false);
    return exit_ok;
  }
  if (g.threads > 0) set_default_threads(g.threads);
  try {
    action();
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return exit_invalid;
  } catch (const NumericDegeneracy& e) {
    err << "numeric degeneracy: " << e.what() << '\n';
    return exit_degenerate;
  }
  const bool selftest = app.got_subcommand("selftest");
  if (!g.out.empty()) {
    std::ofstream file(g.out, std::ios::binary);
    if (!file) {
      err << "error: cannot write '" << g.out << "'\n";
      return exit_invalid;
    }
    file << result.str();
  } else if (!selftest) {
    out << result.str();
  }
  if (degenerate) {
    err << "numeric degeneracy: zero height, frequency undefined\n";
    return exit_degenerate;
  }
  return self_failed ? exit_selftest_failed : exit_ok;
}

}  // namespace strata
