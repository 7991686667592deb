// pwadc: generate explicit MPC laws, decompose PWA functions into convex
// differences, verify and benchmark the results.

#include "pwadc/dc_eval.hpp"
#include "pwadc/decomp_folds.hpp"
#include "pwadc/decomp_novel.hpp"
#include "pwadc/decomp_opt.hpp"
#include "pwadc/empc.hpp"
#include "pwadc/io.hpp"
#include "pwadc/verify.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace pwadc;
using io::json;

enum Exit : int { kOk = 0, kUsage = 2, kInfeasible = 3, kNumerical = 4, kValidation = 5 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 42;
  bool seed_given = false;
  bool verbose = false;
  std::size_t samples = 10000;
};

void apply_config(Globals& g) {
  if (g.config.empty()) return;
  const json j = io::read_file(g.config);
  auto& tol = tolerances();
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    tol.feas = t.value("feas", tol.feas);
    tol.geo = t.value("geo", tol.geo);
    tol.dim = t.value("dim", tol.dim);
    tol.cont = t.value("cont", tol.cont);
  }
  tol.cell_cap = j.value("cell_cap", tol.cell_cap);
  tol.region_cap = j.value("region_cap", tol.region_cap);
  g.samples = j.value("samples", g.samples);
  if (!g.seed_given) g.seed = j.value("seed", g.seed);
  try {
    tol.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (g.samples < 1) throw UsageError("config: samples must be >= 1");
}

MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw io::FormatError(std::string(what) + ": expected a nonempty array of rows");
  const VectorXd r0 = io::vector_from_json(j[0], what);
  MatrixXd M(static_cast<Index>(j.size()), r0.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const VectorXd row = io::vector_from_json(j[r], what);
    if (row.size() != r0.size()) throw io::FormatError(std::string(what) + ": ragged rows");
    M.row(static_cast<Index>(r)) = row.transpose();
  }
  return M;
}

// --spec overrides for the case-study defaults: A, B, Q, R as row arrays,
// X and U as polyhedra. P and T are recomputed.
empc::MpcSpec load_spec(const std::string& path, int horizon) {
  auto spec = empc::MpcSpec::double_integrator(horizon);
  if (path.empty()) return spec;
  const json j = io::read_file(path);
  if (j.contains("A")) spec.A = matrix_from_json(j.at("A"), "A");
  if (j.contains("B")) spec.B = matrix_from_json(j.at("B"), "B");
  if (j.contains("Q")) spec.Q = matrix_from_json(j.at("Q"), "Q");
  if (j.contains("R")) spec.R = matrix_from_json(j.at("R"), "R");
  if (j.contains("X")) spec.X = io::polyhedron_from_json(j.at("X"));
  if (j.contains("U")) spec.U = io::polyhedron_from_json(j.at("U"));
  spec.complete_terminal();
  try {
    spec.check();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

int cmd_mpc_gen(const Globals& g, int horizon, const std::string& out, const std::string& spec_path) {
  if (horizon < 1) throw UsageError("--horizon must be >= 1");
  const auto spec = load_spec(spec_path, horizon);
  empc::ExploreOptions eo;
  eo.verbose = g.verbose;
  const auto qp = empc::condense(spec);
  const auto ex = empc::explore(qp, eo);
  ValidateOptions vo;
  vo.seed = g.seed;
  vo.coverage_samples = g.samples;
  const PwaFunction f = empc::make_pwa(ex.regions, true, vo);
  io::write_file(out, io::to_json(f));
  std::cout << "regions=" << f.size() << " skipped_degenerate=" << ex.skipped_degenerate << " out=" << out << "\n";
  return kOk;
}

struct DecomposeArgs {
  std::string input, out, method = "novel", objective = "feasibility";
  bool no_regularize = false;
};

int cmd_decompose(const Globals& g, const DecomposeArgs& a) {
  const PwaFunction f = io::pwa_from_json(io::read_file(a.input));
  Objective obj;
  if (a.objective == "feasibility")
    obj = Objective::FeasibilityOnly;
  else if (a.objective == "l1")
    obj = Objective::L1Coefficients;
  else
    throw UsageError("--objective must be feasibility or l1");

  Decomposition d;
  switch (method_from_string(a.method)) {
    case Method::Folds:
      d = decompose_folds(f);
      break;
    case Method::Optim: {
      auto r = decompose_optim(f, obj, !a.no_regularize);
      if (!r.decomposition) {
        std::cout << "status: infeasible (" << lp::to_string(r.status) << ")\n";
        return kInfeasible;
      }
      if (g.verbose) std::cerr << "solved via " << r.route << "\n";
      d = std::move(*r.decomposition);
      break;
    }
    case Method::Novel:
      try {
        d = decompose_novel(f, obj);
      } catch (const NovelInfeasible& e) {
        std::cout << "status: infeasible (" << e.what() << ")\n";
        return kInfeasible;
      }
      break;
  }
  if (!a.out.empty()) io::write_file(a.out, io::to_json(d));
  std::cout << "method=" << to_string(d.method) << " cells_g=" << d.stats.cells_g << " cells_h=" << d.stats.cells_h
            << " wall_time=" << d.stats.wall_time;
  if (d.method == Method::Optim) std::cout << " regularized=" << (d.regularized ? "true" : "false");
  if (d.arrangement) std::cout << " hyperplanes=" << d.arrangement->hyperplanes;
  std::cout << "\n";
  return kOk;
}

int cmd_verify(const Globals& g, const std::string& f_path, const std::string& d_path, double tol) {
  const PwaFunction f = io::pwa_from_json(io::read_file(f_path));
  const Decomposition d = io::decomposition_from_json(io::read_file(d_path));
  if (d.g.n != f.n || d.h.n != f.n) throw UsageError("dimension mismatch between function and decomposition");
  VerifyOptions vo;
  vo.samples = g.samples;
  vo.seed = g.seed;
  vo.tol = tol;
  bool ok = true;
  for (const auto& r : verify_decomposition(f, d, vo)) {
    std::cout << r.line() << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kValidation;
}

int cmd_bench(const Globals& g, const std::string& f_path, const std::string& d_path, std::size_t samples,
              const std::string& csv) {
  if (samples < kMinBenchSamples) throw UsageError("--samples must be >= " + std::to_string(kMinBenchSamples));
  const PwaFunction f = io::pwa_from_json(io::read_file(f_path));
  const DcForm dc = to_dc(io::decomposition_from_json(io::read_file(d_path)));
  if (dc.n != f.n) throw UsageError("dimension mismatch between function and decomposition");
  const BenchReport r = bench(f, dc, samples, g.seed);
  std::cout << std::fixed << std::setprecision(1);
  std::cout << "point_location mean_ns=" << r.point_location.mean_ns << " p99_ns=" << r.point_location.p99_ns
            << " floats=" << r.point_location.floats_stored << "\n";
  std::cout << "dc             mean_ns=" << r.dc.mean_ns << " p99_ns=" << r.dc.p99_ns << " floats=" << r.dc.floats_stored
            << "\n";
  std::cout << std::setprecision(2) << "speedup=" << r.speedup << " storage_ratio=" << r.storage_ratio
            << " g_pieces=" << dc.g_pieces.size() << " h_pieces=" << dc.h_pieces.size() << "\n";
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv);
    out << "method,mean_ns,p99_ns,floats_stored\n";
    out << std::setprecision(3) << "point_location," << r.point_location.mean_ns << "," << r.point_location.p99_ns << ","
        << r.point_location.floats_stored << "\n";
    out << "dc," << r.dc.mean_ns << "," << r.dc.p99_ns << "," << r.dc.floats_stored << "\n";
  }
  return kOk;
}

struct GridArgs {
  std::string input, out, which = "f";
  int nx = 101, ny = 101;
  std::vector<double> box;  // x1lo x1hi x2lo x2hi
};

int cmd_export_grid(const GridArgs& a) {
  const json j = io::read_file(a.input);
  std::optional<PwaFunction> single;
  std::optional<Decomposition> dec;
  if (j.contains("method"))
    dec = io::decomposition_from_json(j);
  else
    single = io::pwa_from_json(j);
  const PwaFunction& ref = dec ? dec->g : *single;
  if (ref.n != 2) throw UsageError("export-grid needs a 2-D function");
  if (a.nx < 2 || a.ny < 2) throw UsageError("--nx and --ny must be >= 2");
  if (!dec && a.which != "f") throw UsageError("--which g|h needs a decomposition file");
  if (a.which != "f" && a.which != "g" && a.which != "h") throw UsageError("--which must be f, g or h");

  Eigen::Vector4d bx;
  if (a.box.empty()) {
    const Box& b = ref.domain.bounding_box();
    bx << b.lo[0], b.hi[0], b.lo[1], b.hi[1];
  } else if (a.box.size() == 4) {
    bx << a.box[0], a.box[1], a.box[2], a.box[3];
  } else {
    throw UsageError("--box takes x1lo x1hi x2lo x2hi");
  }

  auto value = [&](const VectorXd& x) -> std::optional<double> {
    auto at = [&](const PwaFunction& p) -> std::optional<double> {
      const long i = p.locate(x, tolerances().geo);
      if (i < 0) return std::nullopt;
      return p.pieces[static_cast<std::size_t>(i)](x);
    };
    if (!dec) return at(*single);
    const auto gv = at(dec->g), hv = at(dec->h);
    if (!gv || !hv) return std::nullopt;
    if (a.which == "g") return gv;
    if (a.which == "h") return hv;
    return *gv - *hv;
  };

  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << "x1,x2,value\n" << std::setprecision(17);
  for (int ix = 0; ix < a.nx; ++ix)
    for (int iy = 0; iy < a.ny; ++iy) {
      VectorXd x(2);
      x << bx[0] + (bx[1] - bx[0]) * ix / (a.nx - 1), bx[2] + (bx[3] - bx[2]) * iy / (a.ny - 1);
      const auto v = value(x);
      out << x[0] << "," << x[1] << ",";
      if (v) out << *v;
      out << "\n";
    }
  std::cout << "rows=" << a.nx * a.ny << " out=" << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex decompositions of piecewise-affine functions"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON file with tolerances, caps, samples, seed")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_flag("--verbose,-v", g.verbose, "diagnostics on stderr");

  int horizon = 0;
  std::string gen_out, spec_path;
  auto* gen = app.add_subcommand("mpc-gen", "explicit MPC law of the double integrator as PWA JSON");
  gen->add_option("--horizon,-N", horizon, "prediction horizon N >= 1")->required();
  gen->add_option("--out,-o", gen_out, "output file")->required();
  gen->add_option("--spec", spec_path, "JSON overriding A, B, Q, R, X, U")->check(CLI::ExistingFile);

  DecomposeArgs da;
  auto* dec = app.add_subcommand("decompose", "write g, h with f = g - h");
  dec->add_option("input", da.input, "PWA function JSON")->required()->check(CLI::ExistingFile);
  dec->add_option("--method,-m", da.method, "folds | optim | novel")
      ->check(CLI::IsMember({"folds", "optim", "novel", "Folds", "Optim", "Novel"}))
      ->capture_default_str();
  dec->add_flag("--no-regularize", da.no_regularize, "optim: report infeasibility instead of regularizing");
  dec->add_option("--objective", da.objective, "feasibility | l1")->capture_default_str();
  dec->add_option("--out,-o", da.out, "decomposition JSON");

  std::string vf, vd;
  double vtol = 1e-6;
  auto* ver = app.add_subcommand("verify", "sampled identity, convexity and partition checks");
  ver->add_option("function", vf, "PWA function JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("decomposition", vd, "decomposition JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("--tol", vtol, "relative tolerance")->capture_default_str();
  std::optional<std::size_t> ver_samples;
  ver->add_option("--samples", ver_samples, "sample count (default from config or 10000)");

  std::string bf, bd, bcsv;
  std::size_t bsamples = 100000;
  auto* ben = app.add_subcommand("bench", "time point location against max-minus-max evaluation");
  ben->add_option("--pwa", bf, "PWA function JSON")->required()->check(CLI::ExistingFile);
  ben->add_option("--dc", bd, "decomposition JSON")->required()->check(CLI::ExistingFile);
  ben->add_option("--samples", bsamples, "evaluations per pass")->capture_default_str();
  ben->add_option("--csv", bcsv, "CSV report");

  GridArgs ga;
  auto* grid = app.add_subcommand("export-grid", "sample f, g or h on a 2-D grid as CSV");
  grid->add_option("input", ga.input, "PWA function or decomposition JSON")->required()->check(CLI::ExistingFile);
  grid->add_option("--which", ga.which, "f | g | h")->capture_default_str();
  grid->add_option("--nx", ga.nx, "grid points along x1")->capture_default_str();
  grid->add_option("--ny", ga.ny, "grid points along x2")->capture_default_str();
  grid->add_option("--box", ga.box, "x1lo x1hi x2lo x2hi (default: bounding box of F)")->expected(4);
  grid->add_option("--out,-o", ga.out, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    g.seed_given = seed_opt->count() > 0;
    apply_config(g);
    if (*gen) return cmd_mpc_gen(g, horizon, gen_out, spec_path);
    if (*dec) return cmd_decompose(g, da);
    if (*ver) {
      if (ver_samples) g.samples = *ver_samples;
      return cmd_verify(g, vf, vd, vtol);
    }
    if (*ben) return cmd_bench(g, bf, bd, bsamples, bcsv);
    if (*grid) return cmd_export_grid(ga);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const empc::ValidationFailed& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
