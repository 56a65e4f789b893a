// Command-line front end: precompute, simulate, reconstruct, planewave-check,
// phantom-render, compare.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tato/densities.hpp"
#include "tato/forward.hpp"
#include "tato/io.hpp"
#include "tato/phantom.hpp"
#include "tato/spectral.hpp"

namespace {

using namespace tato;
namespace fs = std::filesystem;

constexpr int kExitMismatch = 2;

struct RunConfig {
  std::string geometry = "1";
  std::optional<double> roi_radius, arc_radius, x_right, z_right;
  int detectors = 500;
  std::optional<int> collocation;
  int grid = 129;
  std::optional<int> radii;
  bool grid_radii = false;
  int n_theta = 400;
  std::optional<int> n_lambda;
  double K = 1.5;
  std::string method = "svd";
  std::string filter = "none";
  double noise = 0.0;
  std::uint64_t seed = 1;
  std::string phantom = "two-bump";
  int quadrature = 2048;
  bool strict = false;
  std::string densities, projections, out, reference, image;
  std::optional<double> lambda, theta;

  AcquisitionGeometry acquisition() const {
    AcquisitionGeometry g;
    if (geometry == "1")
      g = AcquisitionGeometry::geometry1(detectors);
    else if (geometry == "2")
      g = AcquisitionGeometry::geometry2(detectors);
    else if (geometry == "full")
      g = AcquisitionGeometry::full_circle(detectors);
    else
      throw Error("unknown geometry '" + geometry + "' (expected 1, 2 or full)");
    if (roi_radius) g.roi_radius = *roi_radius;
    if (arc_radius) g.arc_radius = *arc_radius;
    if (x_right) g.x_right = *x_right;
    if (z_right) g.z_right = *z_right;
    g.n_collocation = collocation.value_or(2 * detectors);
    g.validate();
    return g;
  }

  GridSpec grid_spec() const {
    if (grid < 17) throw Error("grid size must be at least 17");
    GridSpec s{grid, 1.0};
    s.validate();
    return s;
  }

  FilterKind filter_kind() const {
    if (filter == "none") return FilterKind::none;
    if (filter == "cosine") return FilterKind::cosine;
    throw Error("unknown filter '" + filter + "' (expected none or cosine)");
  }
};

const std::string& require(const std::string& path, const char* flag) {
  if (path.empty()) throw Error(std::string("missing required option ") + flag);
  return path;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_image_outputs(const std::string& out, const io::ImageFile& f) {
  io::write_image(out, f);
  fs::path pgm = out;
  pgm += ".pgm";
  const auto win = io::write_pgm(pgm, f.image);
  std::printf("wrote %s and %s (window %.6g .. %.6g)\n", out.c_str(), pgm.c_str(), win.min, win.max);
}

bool is_tato_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  return in.read(magic, 4) && std::equal(magic, magic + 4, io::kMagic);
}

/// Reference image: either a TATO image file or a phantom rendered on `grid`.
Image reference_image(const std::string& spec, const GridSpec& grid) {
  if (fs::exists(spec) && is_tato_file(spec)) {
    auto f = io::read_image(spec);
    return f.image;
  }
  return render(io::load_phantom(spec), grid);
}

int cmd_precompute(const RunConfig& c) {
  const std::string& out = require(c.out, "--out");
  const auto g = c.acquisition();
  const auto grid = c.grid_spec();
  if (!(c.K > 1)) throw Error("K must exceed 1");
  DensityMethod method;
  if (c.method == "svd")
    method = DensityMethod::svd;
  else if (c.method == "exact")
    method = DensityMethod::exact_series;
  else
    throw Error("unknown method '" + c.method + "' (expected svd or exact)");
  const PolarGrid pg = c.n_lambda ? PolarGrid::uniform(grid.nyquist(), *c.n_lambda, c.n_theta)
                                  : PolarGrid::for_grid(grid, c.n_theta);
  std::printf("precompute: %zu frequencies x %d angles, %d detectors, K = %g, %u worker(s)\n",
              pg.lambdas.size(), pg.n_theta, g.n_detectors, c.K, worker_count());
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t done = 0;
  const auto set = precompute_densities(g, pg, c.K, method, [&](std::size_t) {
    ++done;
    std::fprintf(stderr, "\r  %zu/%zu", done, pg.lambdas.size());
  });
  std::fprintf(stderr, "\n");
  std::printf("done in %.1f s\n", seconds_since(t0));

  std::printf("%10s %12s %12s %8s %8s\n", "lambda", "res_max", "res_mean", "jmax_lo", "jmax_hi");
  std::map<int, int> hist;
  constexpr int bin = 50;
  for (std::size_t i = 0; i < set.n_lambda(); ++i) {
    double rmax = 0.0, rsum = 0.0;
    int jlo = 1 << 30, jhi = 0;
    for (std::size_t j = 0; j < set.n_stored(); ++j) {
      rmax = std::max(rmax, set.residual(i, j));
      rsum += set.residual(i, j);
      jlo = std::min<int>(jlo, set.jmax(i, j));
      jhi = std::max<int>(jhi, set.jmax(i, j));
      ++hist[set.jmax(i, j) / bin];
    }
    std::printf("%10.4f %12.4e %12.4e %8d %8d\n", set.lambdas[i], rmax, rsum / set.n_stored(), jlo, jhi);
  }
  std::printf("jmax histogram (per stored direction):\n");
  for (auto [b, count] : hist) std::printf("  [%4d, %4d): %d\n", b * bin, (b + 1) * bin, count);
  io::write_densities(out, set);
  std::printf("wrote %s (geometry hash %016llx)\n", out.c_str(),
              static_cast<unsigned long long>(io::geometry_hash(g)));
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const std::string& out = require(c.out, "--out");
  const auto g = c.acquisition();
  const auto grid = c.grid_spec();
  const Phantom f = io::load_phantom(c.phantom);
  if (!support_inside_roi(f, g)) {
    if (c.strict) throw Error("phantom support is not inside the region of interest");
    std::fprintf(stderr, "warning: phantom support extends outside the region of interest\n");
  }
  SimulationOptions opt;
  opt.radial = default_radial_sampling(g, grid, c.grid_radii);
  if (c.radii) opt.radial.n_radii = *c.radii;
  opt.quadrature = c.quadrature;
  auto p = simulate(f, g, opt);
  if (c.noise > 0) {
    p = add_noise(std::move(p), c.noise, c.seed);
    std::printf("noise: level %g, seed %llu\n", c.noise, static_cast<unsigned long long>(c.seed));
  }
  io::write_projections(out, p);
  std::printf("wrote %s (%d detectors x %d radii, r_step %.6g)\n", out.c_str(), g.n_detectors, p.n_radii(),
              p.r_step);
  return 0;
}

int cmd_reconstruct(const RunConfig& c) {
  const std::string& dpath = require(c.densities, "--densities");
  const std::string& ppath = require(c.projections, "--projections");
  const std::string& out = require(c.out, "--out");
  const auto grid = c.grid_spec();
  const auto hd = io::peek_header(dpath);
  const auto hp = io::peek_header(ppath);
  if (hd.hash != hp.hash) {
    std::fprintf(stderr, "error: geometry hash mismatch: densities %016llx, projections %016llx\n",
                 static_cast<unsigned long long>(hd.hash), static_cast<unsigned long long>(hp.hash));
    return kExitMismatch;
  }
  auto t0 = std::chrono::steady_clock::now();
  const auto set = io::read_densities(dpath);
  const auto proj = io::read_projections(ppath);
  std::printf("read inputs in %.2f s\n", seconds_since(t0));
  t0 = std::chrono::steady_clock::now();
  io::ImageFile f;
  f.geometry = set.geometry;
  f.filter = c.filter_kind();
  f.image = reconstruct(proj, set, f.filter, grid);
  std::printf("reconstructed in %.3f s\n", seconds_since(t0));
  write_image_outputs(out, f);
  if (!c.reference.empty()) {
    const auto e = error_metrics(f.image, reference_image(c.reference, grid), set.geometry);
    std::printf("max_abs_error %.6e\nrel_l2_error %.6e\n", e.max_abs, e.rel_l2);
  }
  return 0;
}

int cmd_planewave_check(const RunConfig& c) {
  const auto set = io::read_densities(require(c.densities, "--densities"));
  const auto grid = c.grid_spec();
  const double want_l = c.lambda.value_or(set.lambdas.back());
  const double want_t = c.theta.value_or(0.5 * std::numbers::pi);
  std::size_t i = 0;
  for (std::size_t k = 1; k < set.n_lambda(); ++k)
    if (std::abs(set.lambdas[k] - want_l) < std::abs(set.lambdas[i] - want_l)) i = k;
  const double two_pi = 2.0 * std::numbers::pi;
  const double t = std::fmod(std::fmod(want_t, two_pi) + two_pi, two_pi);
  const double dt = two_pi / set.n_theta;
  const auto j = static_cast<std::size_t>(std::lround(t / dt)) % static_cast<std::size_t>(set.n_theta);
  if (std::abs(set.lambdas[i] - want_l) > 1e-9 * want_l || std::abs(set.theta(j) - t) > 1e-9)
    std::fprintf(stderr, "warning: (%g, %g) is not on the cached grid; using nearest node (%g, %g)\n", want_l,
                 want_t, set.lambdas[i], set.theta(j));
  const auto rep = planewave_residual(set.geometry, set.pair(i, j), polar(set.lambdas[i], set.theta(j)), grid);
  std::printf("lambda %.6f theta %.6f jmax %d\nmax_residual %.6e\nl2_residual %.6e\n", set.lambdas[i],
              set.theta(j), set.jmax(i, j), rep.max_error, rep.l2_error);
  return 0;
}

int cmd_phantom_render(const RunConfig& c) {
  const std::string& out = require(c.out, "--out");
  io::ImageFile f;
  f.geometry = c.acquisition();
  f.image = render(io::load_phantom(c.phantom), c.grid_spec());
  write_image_outputs(out, f);
  return 0;
}

int cmd_compare(const RunConfig& c) {
  const auto a = io::read_image(require(c.image, "--image"));
  const auto b = io::read_image(require(c.reference, "--reference"));
  if (!(a.geometry == b.geometry)) {
    std::fprintf(stderr, "error: images belong to different geometries\n");
    return kExitMismatch;
  }
  const auto e = error_metrics(a.image, b.image, a.geometry);
  std::printf("max_abs_error %.6e\nrel_l2_error %.6e\n", e.max_abs, e.rel_l2);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermoacoustic tomography reconstruction from circular integrals on an open arc"};
  app.set_config("--config", "", "key = value file with any of the long options below");
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig c;

  app.add_option("--geometry", c.geometry, "1, 2 or full")->capture_default_str();
  app.add_option("--roi-radius", c.roi_radius, "override ROI radius R");
  app.add_option("--arc-radius", c.arc_radius, "override detector circle radius");
  app.add_option("--x-right", c.x_right, "override ROI truncation abscissa");
  app.add_option("--z-right", c.z_right, "override arc truncation abscissa");
  app.add_option("--detectors", c.detectors, "number of detectors")->capture_default_str();
  app.add_option("--collocation", c.collocation, "boundary collocation points (default 2 x detectors)");
  app.add_option("--grid", c.grid, "reconstruction grid size n (n x n over [-1,1]^2)")->capture_default_str();
  app.add_option("--radii", c.radii, "number of sampled radii");
  app.add_flag("--grid-radii", c.grid_radii, "use n radii instead of enough to cover the ROI");
  app.add_option("--n-theta", c.n_theta, "polar grid angles over [0, 2pi)")->capture_default_str();
  app.add_option("--n-lambda", c.n_lambda, "polar grid frequencies (default ceil(n/2))");
  app.add_option("-K,--K", c.K, "regularization constant, K > 1")->capture_default_str();
  app.add_option("--method", c.method, "svd or exact (closed circle only)")->capture_default_str();
  app.add_option("--filter", c.filter, "none or cosine")->capture_default_str();
  app.add_option("--noise", c.noise, "relative L2 noise level")->capture_default_str();
  app.add_option("--seed", c.seed, "noise seed")->capture_default_str();
  app.add_option("--phantom", c.phantom, "two-bump, disks, half-disks, or a phantom file")->capture_default_str();
  app.add_option("--quadrature", c.quadrature, "angular nodes per circle for smooth phantoms")->capture_default_str();
  app.add_flag("--strict", c.strict, "refuse phantoms not supported inside the ROI");
  app.add_option("--densities", c.densities, "density cache file");
  app.add_option("--projections", c.projections, "projections file");
  app.add_option("-o,--out", c.out, "output file");
  app.add_option("--reference", c.reference, "reference image file or phantom");
  app.add_option("--image", c.image, "image file to compare");
  app.add_option("--lambda", c.lambda, "frequency for planewave-check (default: largest)");
  app.add_option("--theta", c.theta, "direction for planewave-check (default: pi/2)");

  auto* pre = app.add_subcommand("precompute", "compute and cache the densities for a geometry");
  auto* sim = app.add_subcommand("simulate", "simulate circular integrals of a phantom");
  auto* rec = app.add_subcommand("reconstruct", "reconstruct an image from projections and a density cache");
  auto* pwc = app.add_subcommand("planewave-check", "plane-wave residual of one cached density pair");
  auto* ren = app.add_subcommand("phantom-render", "sample a phantom on the grid");
  auto* cmp = app.add_subcommand("compare", "error metrics of an image against a reference image");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) return cmd_precompute(c);
    if (*sim) return cmd_simulate(c);
    if (*rec) return cmd_reconstruct(c);
    if (*pwc) return cmd_planewave_check(c);
    if (*ren) return cmd_phantom_render(c);
    if (*cmp) return cmd_compare(c);
  } catch (const MismatchError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitMismatch;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
