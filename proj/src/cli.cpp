#include <mfd/cli.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include <mfd/analysis.hpp>
#include <mfd/denoise.hpp>
#include <mfd/graph.hpp>
#include <mfd/point_cloud.hpp>
#include <mfd/sgw.hpp>

namespace mfd::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Bad invocation discovered after parsing (e.g. k too large for the input).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DenoiseFlags {
  std::size_t k = 30;
  std::size_t levels = 5;
  double energy_threshold = 0.99;
  std::optional<int> cheb_order;
  std::optional<double> sigma;
  double cg_tol = 1e-8;
  int cg_max_iter = 500;

  void add_to(CLI::App& app, std::size_t default_k) {
    k = default_k;
    app.add_option("--k", k, "neighbors per point")->capture_default_str();
    app.add_option("--levels", levels, "wavelet scales J")->capture_default_str();
    app.add_option("--energy-threshold", energy_threshold, "retained energy fraction in (0, 1]")
        ->capture_default_str();
    app.add_option("--cheb-order", cheb_order, "Chebyshev order (default max(ceil(k/2), 20))");
    app.add_option("--sigma", sigma, "fixed Gaussian bandwidth (default: mean edge length)");
    app.add_option("--cg-tol", cg_tol, "relative CG residual")->capture_default_str();
    app.add_option("--cg-max-iter", cg_max_iter, "CG iteration cap")->capture_default_str();
  }

  DenoiseConfig resolve(Eigen::Index n_points) const {
    if (k < 1 || static_cast<Eigen::Index>(k) > n_points - 1)
      throw UsageError("--k must lie in [1, " + std::to_string(n_points - 1) + "] for " + std::to_string(n_points) +
                       " points (got " + std::to_string(k) + ")");
    if (levels < 1) throw UsageError("--levels must be at least 1");
    if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
      throw UsageError("--energy-threshold must lie in (0, 1]");
    if (cheb_order && *cheb_order < 1) throw UsageError("--cheb-order must be at least 1");
    if (sigma && !(*sigma > 0.0)) throw UsageError("--sigma must be positive");
    if (!(cg_tol > 0.0)) throw UsageError("--cg-tol must be positive");
    if (cg_max_iter < 1) throw UsageError("--cg-max-iter must be positive");
    DenoiseConfig cfg;
    cfg.k = k;
    cfg.j_scales = levels;
    cfg.energy_threshold = energy_threshold;
    cfg.cg_tol = cg_tol;
    cfg.cg_max_iterations = cg_max_iter;
    if (sigma) cfg.sigma_mode = SigmaMode::fixed_value(*sigma);
    cfg.cheb_order = cheb_order ? *cheb_order : cfg.resolved_cheb_order();
    return cfg;
  }
};

json config_json(const DenoiseConfig& cfg) {
  return {{"k", cfg.k},
          {"levels", cfg.j_scales},
          {"energy_threshold", cfg.energy_threshold},
          {"cheb_order", cfg.resolved_cheb_order()},
          {"sigma", cfg.sigma_mode.fixed ? json(*cfg.sigma_mode.fixed) : json("auto")},
          {"cg_tol", cfg.cg_tol},
          {"cg_max_iter", cfg.cg_max_iterations}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, end);
}

// Input cloud plus its ground truth when the sibling file exists.
PointCloud load_with_truth(const fs::path& path) {
  PointCloud pc = load_csv(path);
  const fs::path truth = truth_sibling(path);
  if (!fs::exists(truth)) return pc;
  Matrix t = load_matrix_csv(truth);
  if (t.rows() != pc.n_points() || t.cols() != pc.ambient_dim())
    throw std::runtime_error("'" + truth.string() + "' does not match the shape of '" + path.string() + "'");
  return PointCloud(pc.coords(), std::move(t));
}

struct Context {
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;
};

json base_echo(const Context& ctx, const std::string& command) {
  return {{"command", command}, {"argv", ctx.argv}};
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string kind;
  Eigen::Index n = 1000;
  double noise_var = 0.0;
  std::uint64_t seed = 0;
  fs::path out;
  ManifoldParams params;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  app.add_option("--kind", a.kind, "circle | helix | swiss-roll-with-hole | fish-bowl | sphere | sinus-highdim")
      ->required();
  app.add_option("--n", a.n, "number of points")->capture_default_str();
  app.add_option("--noise-var", a.noise_var, "Gaussian noise variance per coordinate")->capture_default_str();
  app.add_option("--seed", a.seed, "random seed")->capture_default_str();
  app.add_option("--out", a.out, "output CSV; ground truth goes to <name>.truth.csv")->required();
  app.add_option("--radius", a.params.radius, "circle / helix / sphere / fish-bowl radius")->capture_default_str();
}

int run_generate(const GenerateArgs& a, const Context& ctx) {
  ManifoldKind kind;
  try {
    kind = parse_manifold_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.n < 2) throw UsageError("--n must be at least 2");
  if (!(a.noise_var >= 0.0)) throw UsageError("--noise-var must be nonnegative");

  json echo = base_echo(ctx, "generate");
  echo["kind"] = to_string(kind);
  echo["n"] = a.n;
  echo["noise_var"] = a.noise_var;
  echo["seed"] = a.seed;
  echo["radius"] = a.params.radius;
  echo["out"] = a.out.string();
  echo["truth"] = truth_sibling(a.out).string();

  const PointCloud clean = sample_manifold(kind, a.n, a.params, a.seed);
  // Noise stream is decoupled from the sampling stream so either can change alone.
  const PointCloud noisy = add_gaussian_noise(clean, a.noise_var, a.seed ^ 0x9e3779b97f4a7c15ull);
  save_csv(noisy.coords(), a.out);
  save_csv(noisy.ground_truth(), truth_sibling(a.out));
  ctx.out << echo.dump(2) << '\n';
  return kOk;
}

// ---- denoise ----------------------------------------------------------------

struct DenoiseArgs {
  fs::path in, out;
  std::optional<fs::path> report, edges;
  DenoiseFlags flags;
};

void add_denoise(CLI::App& app, DenoiseArgs& a) {
  app.add_option("--in", a.in, "input CSV")->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "denoised CSV")->required();
  app.add_option("--report", a.report, "band report JSON (default <out>.bands.json)");
  app.add_option("--edges", a.edges, "also write the graph edge list");
  a.flags.add_to(app, 30);
}

json band_report(const std::vector<BandSelection>& selections) {
  auto bands = json::array();
  for (std::size_t r = 0; r < selections.size(); ++r) {
    const auto& s = selections[r];
    bands.push_back({{"dimension", r}, {"energies", s.energies}, {"retained", s.retained}, {"cut_index", s.cut_index}});
  }
  return bands;
}

int run_denoise(const DenoiseArgs& a, const Context& ctx) {
  const PointCloud pc = load_with_truth(a.in);
  const DenoiseConfig cfg = a.flags.resolve(pc.n_points());
  const fs::path report_path = a.report ? *a.report : fs::path(a.out.string() + ".bands.json");

  json echo = base_echo(ctx, "denoise");
  echo["in"] = a.in.string();
  echo["out"] = a.out.string();
  echo["report"] = report_path.string();
  echo["denoise"] = config_json(cfg);

  const WeightedGraph g = build_knn_graph(pc, cfg.k, cfg.sigma_mode);
  const DenoiseResult result = mfd_denoise(pc, g, cfg);
  save_csv(result.cloud.coords(), a.out);
  if (a.edges) save_edge_list(g, *a.edges);

  json report;
  report["config"] = echo;
  report["graph_checksum"] = hex(result.graph_checksum);
  report["sigma_d"] = g.sigma_d();
  report["warnings"] = result.warnings;
  report["bands"] = band_report(result.selections);
  if (pc.has_ground_truth()) {
    report["rmse_input"] = rmse(pc.coords(), pc.ground_truth());
    report["rmse_denoised"] = rmse(result.cloud.coords(), pc.ground_truth());
  }
  write_text(report_path, report.dump(2) + "\n");
  for (const auto& w : result.warnings) ctx.err << "warning: " << w << '\n';
  ctx.out << echo.dump(2) << '\n';
  return kOk;
}

// ---- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  fs::path in, out;
  std::size_t k = 10;
  std::size_t levels = 5;
  std::optional<double> tau;
  double c_const = 1.0;
  std::optional<double> covering_radius;
  std::string translate = "auto";
  std::size_t trials = 500;
  double mc_var = 0.1;
  std::uint64_t seed = 0;
};

void add_analyze(CLI::App& app, AnalyzeArgs& a) {
  app.add_option("--in", a.in, "input CSV (ground truth read from <name>.truth.csv when present)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "report JSON")->required();
  app.add_option("--k", a.k, "neighbors per point")->capture_default_str();
  app.add_option("--levels", a.levels, "wavelet scales J")->capture_default_str();
  app.add_option("--tau", a.tau, "reach of the manifold (radius for circles and spheres)")->required();
  app.add_option("--c", a.c_const, "smoothness constant C >= 1")->capture_default_str();
  app.add_option("--covering-radius", a.covering_radius, "T (default: sample resolution of the clean cloud)");
  app.add_option("--translate", a.translate, "coordinate offset: auto (2 x diameter), none, or a number")
      ->capture_default_str();
  app.add_option("--trials", a.trials, "Monte Carlo trials for the noise check (0 skips it)")->capture_default_str();
  app.add_option("--mc-var", a.mc_var, "noise variance of the Monte Carlo check")->capture_default_str();
  app.add_option("--seed", a.seed, "Monte Carlo seed")->capture_default_str();
}

int run_analyze(const AnalyzeArgs& a, const Context& ctx) {
  PointCloud input = load_with_truth(a.in);
  if (a.k < 1 || static_cast<Eigen::Index>(a.k) > input.n_points() - 1)
    throw UsageError("--k must lie in [1, " + std::to_string(input.n_points() - 1) + "] (got " +
                     std::to_string(a.k) + ")");
  if (a.levels < 1) throw UsageError("--levels must be at least 1");
  if (input.n_points() > kDenseEigenCap)
    throw UsageError("analyze uses a dense eigensolve and accepts at most " + std::to_string(kDenseEigenCap) +
                     " points");
  if (a.trials == 1) throw UsageError("--trials must be 0 or at least 2");

  const Matrix clean_coords = input.has_ground_truth() ? input.ground_truth() : input.coords();
  double offset = 0.0;
  if (a.translate == "auto") {
    offset = 2.0 * diameter(clean_coords);
  } else if (a.translate != "none") {
    try {
      offset = std::stod(a.translate);
    } catch (const std::exception&) {
      throw UsageError("--translate expects auto, none, or a number (got '" + a.translate + "')");
    }
  }
  input = translate(input, offset);
  const PointCloud clean(input.has_ground_truth() ? input.ground_truth() : input.coords());

  ManifoldMeta meta;
  meta.tau = *a.tau;
  meta.c_const = a.c_const;
  meta.covering_radius = a.covering_radius ? *a.covering_radius : estimate_covering_radius(clean);
  try {
    meta.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  json echo = base_echo(ctx, "analyze");
  echo["in"] = a.in.string();
  echo["out"] = a.out.string();
  echo["k"] = a.k;
  echo["levels"] = a.levels;
  echo["tau"] = meta.tau;
  echo["c"] = meta.c_const;
  echo["covering_radius"] = meta.covering_radius;
  echo["translate"] = offset;
  echo["trials"] = a.trials;
  echo["mc_var"] = a.mc_var;
  echo["seed"] = a.seed;

  const WeightedGraph g = build_knn_graph(clean, a.k);
  const Laplacian l = laplacian(g);
  const EigenSystem es = eigensystem(l);
  const FilterBank fb = design_filterbank(l.lambda_max_estimate, a.levels);

  TheoryReport report;
  report.meta = meta;
  report.k = a.k;
  report.neighbor_violations = check_lemma1(clean, g, meta);
  for (Eigen::Index r = 0; r < clean.ambient_dim(); ++r) {
    const Vector f = clean.coords().col(r);
    report.gradient.push_back(check_lemma2(l, f, meta));
    report.band_bounds.push_back(check_theorem1(fb, es, f, meta));
  }
  if (a.trials > 0) report.noise_energy = check_lemma3(fb, es, a.mc_var, a.trials, a.seed);
  if (input.has_ground_truth()) report.noisy_bounds = check_theorem2(input, a.k, meta, a.levels);

  json j = to_json(report);
  j["config"] = echo;
  j["warnings"] = json::array();
  if (!meta.resolution_ok()) {
    const std::string w = "T / tau >= 1/4; the sampling condition does not hold";
    j["warnings"].push_back(w);
    ctx.err << "warning: " << w << '\n';
  }
  write_text(a.out, j.dump(2) + "\n");
  ctx.out << echo.dump(2) << '\n';
  return kOk;
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  fs::path in, out;
  std::vector<std::size_t> k_values = {20, 22, 24, 26, 28, 30, 32, 34, 36, 38, 40, 42, 44, 46, 48, 50};
  DenoiseFlags flags;
};

void add_sweep(CLI::App& app, SweepArgs& a) {
  app.add_option("--in", a.in, "noisy CSV with a <name>.truth.csv sibling")->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "k,rmse CSV")->required();
  app.add_option("--k-values", a.k_values, "neighbor counts to sweep")->delimiter(',')->capture_default_str();
  a.flags.add_to(app, 30);
}

int run_sweep(const SweepArgs& a, const Context& ctx) {
  const PointCloud pc = load_with_truth(a.in);
  if (!pc.has_ground_truth()) throw UsageError("sweep needs '" + truth_sibling(a.in).string() + "'");
  if (a.k_values.empty()) throw UsageError("--k-values is empty");
  DenoiseFlags probe = a.flags;
  for (std::size_t k : a.k_values) {
    probe.k = k;
    probe.resolve(pc.n_points());
  }
  DenoiseConfig cfg = a.flags.resolve(pc.n_points());
  if (!a.flags.cheb_order) cfg.cheb_order.reset();  // resolved per k

  json echo = base_echo(ctx, "sweep");
  echo["in"] = a.in.string();
  echo["out"] = a.out.string();
  echo["k_values"] = a.k_values;
  json dc = config_json(cfg);
  dc.erase("k");
  if (!a.flags.cheb_order) dc["cheb_order"] = "max(ceil(k/2), 20)";
  echo["denoise"] = dc;

  save_sweep_csv(k_sweep(pc, a.k_values, cfg), a.out);
  ctx.out << echo.dump(2) << '\n';
  return kOk;
}

// ---- spectrum ---------------------------------------------------------------

struct SpectrumArgs {
  fs::path in, out;
  std::optional<fs::path> coeffs;
  std::size_t coeff_dim = 0;
  DenoiseFlags flags;
};

void add_spectrum(CLI::App& app, SpectrumArgs& a) {
  app.add_option("--in", a.in, "input CSV")->required()->check(CLI::ExistingFile);
  app.add_option("--out", a.out, "band energy CSV")->required();
  app.add_option("--coeffs", a.coeffs, "also dump band,vertex,value coefficients of one dimension");
  app.add_option("--coeff-dim", a.coeff_dim, "dimension for --coeffs")->capture_default_str();
  a.flags.add_to(app, 30);
}

int run_spectrum(const SpectrumArgs& a, const Context& ctx) {
  const PointCloud pc = load_csv(a.in);
  const DenoiseConfig cfg = a.flags.resolve(pc.n_points());
  if (a.coeffs && static_cast<Eigen::Index>(a.coeff_dim) >= pc.ambient_dim())
    throw UsageError("--coeff-dim must be below " + std::to_string(pc.ambient_dim()));

  json echo = base_echo(ctx, "spectrum");
  echo["in"] = a.in.string();
  echo["out"] = a.out.string();
  echo["denoise"] = config_json(cfg);
  echo["denoise"].erase("energy_threshold");
  if (a.coeffs) {
    echo["coeffs"] = a.coeffs->string();
    echo["coeff_dim"] = a.coeff_dim;
  }

  const WeightedGraph g = build_knn_graph(pc, cfg.k, cfg.sigma_mode);
  const Laplacian l = laplacian(g);
  if (!(l.lambda_max_estimate > 0.0)) throw std::runtime_error("graph has no weighted edges");
  const FilterBank fb = design_filterbank(l.lambda_max_estimate, cfg.j_scales);
  const auto coeffs = forward_chebyshev_block(approximate(fb, cfg.resolved_cheb_order()), l, pc.coords());

  std::ostringstream csv;
  csv << "dimension,band,scale,energy,fraction\n";
  for (std::size_t r = 0; r < coeffs.size(); ++r) {
    const Vector e = coeffs[r].band_energies();
    const EnergyProfile p = band_energy_profile(coeffs[r]);
    for (Eigen::Index b = 0; b < e.size(); ++b) {
      const double scale = b == 0 ? 0.0 : fb.scales()[static_cast<std::size_t>(b - 1)];
      csv << r << ',' << b << ',' << fmt(scale) << ',' << fmt(e(b)) << ','
          << fmt(p.fractions[static_cast<std::size_t>(b)]) << '\n';
    }
  }
  write_text(a.out, csv.str());
  if (a.coeffs) save_coefficients(coeffs[a.coeff_dim], *a.coeffs);
  ctx.out << echo.dump(2) << '\n';
  return kOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool allow_replay);

int replay(const fs::path& path, std::ostream& out, std::ostream& err) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  // Accept either the echoed config itself or a report that embeds it.
  const json* cfg = &j;
  if (!j.contains("argv") && j.contains("config")) cfg = &j["config"];
  if (!cfg->contains("argv") || !(*cfg)["argv"].is_array())
    throw UsageError("'" + path.string() + "' has no argv to replay");
  return dispatch((*cfg)["argv"].get<std::vector<std::string>>(), out, err, false);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool allow_replay) {
  CLI::App app{"Manifold denoising with spectral graph wavelets", "mfd"};
  app.require_subcommand(0, 1);
  std::optional<fs::path> replay_path;
  if (allow_replay) app.add_option("--replay", replay_path, "re-run the config echoed by an earlier run");

  GenerateArgs gen;
  DenoiseArgs den;
  AnalyzeArgs ana;
  SweepArgs swp;
  SpectrumArgs spe;
  auto* c_gen = app.add_subcommand("generate", "sample a manifold, optionally with noise");
  auto* c_den = app.add_subcommand("denoise", "denoise a point cloud");
  auto* c_ana = app.add_subcommand("analyze", "check the band-energy bounds on a cloud");
  auto* c_swp = app.add_subcommand("sweep", "denoised RMSE as a function of k");
  auto* c_spe = app.add_subcommand("spectrum", "per-band wavelet energy of every dimension");
  add_generate(*c_gen, gen);
  add_denoise(*c_den, den);
  add_analyze(*c_ana, ana);
  add_sweep(*c_swp, swp);
  add_spectrum(*c_spe, spe);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const Context ctx{args, out, err};
  if (replay_path) {
    if (!app.get_subcommands().empty()) throw UsageError("--replay cannot be combined with a command");
    return replay(*replay_path, out, err);
  }
  if (*c_gen) return run_generate(gen, ctx);
  if (*c_den) return run_denoise(den, ctx);
  if (*c_ana) return run_analyze(ana, ctx);
  if (*c_swp) return run_sweep(swp, ctx);
  if (*c_spe) return run_spectrum(spe, ctx);
  err << "error: a command is required (generate, denoise, analyze, sweep, spectrum); see --help\n";
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, true);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace mfd::cli
