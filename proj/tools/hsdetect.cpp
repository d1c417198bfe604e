// hsdetect command-line front end.
//
// Exit codes: 0 success, 2 input error, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hsdetect/cube.hpp"
#include "hsdetect/dictionary.hpp"
#include "hsdetect/error.hpp"
#include "hsdetect/experiments.hpp"
#include "hsdetect/fdr.hpp"
#include "hsdetect/io.hpp"
#include "hsdetect/nullmodel.hpp"
#include "hsdetect/pfabound.hpp"
#include "hsdetect/pipeline.hpp"
#include "hsdetect/simulate.hpp"
#include "hsdetect/teststat.hpp"

namespace fs = std::filesystem;
using namespace hsdetect;

namespace {

constexpr int kInputError = 2;
constexpr int kNumericError = 3;

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string similarity;  // empty: command default
  std::string config_path;
  KeyValueConfig config;
};

SimilarityKind similarity_or(const Globals& g, SimilarityKind fallback) {
  return g.similarity.empty() ? fallback : parse_similarity(g.similarity);
}

std::vector<std::size_t> parse_sizes(const std::string& text, std::size_t count,
                                     const char* what) {
  std::vector<std::size_t> out;
  for (auto f : split(text, ',')) {
    long long v = parse_int(trim(f));
    if (v < 0) throw InputError(std::string(what) + ": negative entry");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.size() != count)
    throw InputError(std::string(what) + ": expected " + std::to_string(count) + " values");
  return out;
}

NoiseModel parse_noise(const std::string& text) {
  auto parts = split(text, ':');
  if (parts.size() == 2 && trim(parts[0]) == "gaussian")
    return NoiseModel::gaussian(parse_double(parts[1]));
  if (parts.size() == 2 && trim(parts[0]) == "student") {
    double nu = parse_double(parts[1]);
    if (!(nu > 2.0)) throw InputError("student noise needs nu > 2");
    return NoiseModel::student(nu);
  }
  throw InputError("noise must be gaussian:<sigma> or student:<nu>, got '" + text + "'");
}

ShiftMode parse_shift_mode(const std::string& text) {
  if (text == "integer") return ShiftMode::IntegerBand;
  if (text == "continuous") return ShiftMode::Continuous;
  throw InputError("shift mode must be integer or continuous");
}

// One value per line or comma separated; the centre band defaults to the peak.
ReferenceAtom load_reference(const fs::path& path, std::optional<int> center) {
  std::vector<double> v;
  for (const auto& line : read_lines(path))
    for (auto f : split(line, ','))
      if (!trim(f).empty()) v.push_back(parse_double(trim(f)));
  if (v.empty()) throw InputError("empty reference file " + path.string());
  int c = center ? *center
                 : static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  return ReferenceAtom(std::move(v), c);
}

FsfKernel parse_fsf(const std::string& text) {
  auto parts = split(text, ':');
  auto name = trim(parts[0]);
  if (name == "delta" && parts.size() == 1) return FsfKernel::delta();
  if (name == "uniform" && parts.size() == 2)
    return FsfKernel::uniform(static_cast<std::size_t>(parse_int(parts[1])));
  if (name == "gaussian" && parts.size() == 3)
    return FsfKernel::gaussian(static_cast<std::size_t>(parse_int(parts[1])),
                               parse_double(parts[2]));
  throw InputError("fsf must be delta, uniform:<k> or gaussian:<k>:<fwhm>");
}

CubeFormat parse_format(const std::string& text) {
  if (text == "binary") return CubeFormat::Binary;
  if (text == "csv") return CubeFormat::CsvDirectory;
  throw InputError("format must be binary or csv");
}

void write_map(const fs::path& dir, const std::string& name, std::size_t rows,
               std::size_t cols, const std::vector<double>& values, double lo,
               double hi) {
  write_grid_csv(dir / (name + ".csv"), rows, cols, values);
  write_pgm(dir / (name + ".pgm"), rows, cols, values, lo, hi);
}

// Short form for file names and messages.
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> as_doubles(const std::vector<std::uint8_t>& flags) {
  return {flags.begin(), flags.end()};
}

void reject_unused(const KeyValueConfig& cfg) {
  auto extra = cfg.unused();
  if (extra.empty()) return;
  std::string msg = "unknown config keys:";
  for (const auto& k : extra) msg += " " + k;
  throw InputError(msg);
}

// ---- region and dictionary options shared by null-fit and detect ----------

struct RegionArgs {
  std::string center;  // y,x,band
  std::size_t half_width = 25, half_bands = 15, fit_half_width = 100;

  void add(CLI::App* app) {
    app->add_option("--center", center, "region centre y,x,band")->required();
    app->add_option("--half-width", half_width, "test region half width")->capture_default_str();
    app->add_option("--half-bands", half_bands, "half spectral window")->capture_default_str();
    app->add_option("--fit-half-width", fit_half_width, "null-fit region half width")
        ->capture_default_str();
  }
  RegionSpec spec() const {
    auto c = parse_sizes(center, 3, "--center");
    RegionSpec r;
    r.center_y = c[0];
    r.center_x = c[1];
    r.center_band = c[2];
    r.half_width = half_width;
    r.half_bands = half_bands;
    r.fit_half_width = fit_half_width;
    return r;
  }
};

struct DictArgs {
  std::string dictionary, reference, mode = "integer";
  std::optional<int> reference_center;
  std::size_t m = 15, n_center_pixels = 5;
  double tau = 7.0;

  void add(CLI::App* app) {
    app->add_option("--dictionary", dictionary, "dictionary CSV (overrides the rest)");
    app->add_option("--reference", reference, "reference spectrum file");
    app->add_option("--reference-center", reference_center, "centre band of the reference");
    app->add_option("--m", m, "atoms")->capture_default_str();
    app->add_option("--tau", tau, "maximum shift in bands")->capture_default_str();
    app->add_option("--shift-mode", mode, "integer or continuous")->capture_default_str();
    app->add_option("--n-center-pixels", n_center_pixels, "pixels averaged into the reference")
        ->capture_default_str();
  }
  DictParams params() const {
    DictParams p;
    p.m = m;
    p.tau = tau;
    p.mode = parse_shift_mode(mode);
    p.n_center_pixels = n_center_pixels;
    if (!reference.empty()) p.reference = load_reference(reference, reference_center);
    if (!dictionary.empty()) p.dictionary = Dictionary::load_csv(dictionary);
    return p;
  }
};

Dictionary resolve_dictionary(const Cube& cube, const RegionSpec& region, const DictParams& p) {
  if (p.dictionary) return *p.dictionary;
  ReferenceAtom ref = p.reference ? *p.reference
                                  : estimate_reference(cube, region, p.n_center_pixels).atom;
  return build_lss(clip_negative(ref), p.m, p.tau, p.mode);
}

// ---- commands ---------------------------------------------------------------

FILE* open_csv(const fs::path& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot write " + path.string());
  return f;
}

struct CsvFile {
  explicit CsvFile(const fs::path& p) : f(open_csv(p)) {}
  ~CsvFile() { std::fclose(f); }
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;
  FILE* f;
};


void cmd_ingest(const std::string& in, const std::string& out, const std::string& format,
                const std::string& box) {
  Cube cube = load_cube(in, detect_format(in));
  std::printf("cube %zu x %zu x %zu, band origin %d, %zu masked pixels, variance %s\n",
              cube.ny(), cube.nx(), cube.bands(), cube.band_origin(),
              cube.pixels() - cube.unmasked_count(), cube.has_variance() ? "yes" : "no");
  if (!box.empty()) {
    auto b = parse_sizes(box, 6, "--subcube");
    cube = cube.subcube(b[0], b[1], b[2], b[3], b[4], b[5]);
    std::printf("subcube %zu x %zu x %zu, band origin %d\n", cube.ny(), cube.nx(), cube.bands(),
                cube.band_origin());
  }
  if (!out.empty()) save_cube(cube, out, parse_format(format));
}

void cmd_preprocess(const std::string& in, const std::string& out, const std::string& format,
                    const std::string& fsf, std::size_t baseline, const std::string& variance) {
  PreprocessOptions opt;
  if (baseline > 0) {
    opt.subtract_baseline = true;
    opt.baseline_window = baseline;
  }
  if (variance == "auto") opt.variance = VarianceReduction::Auto;
  else if (variance == "required") opt.variance = VarianceReduction::Required;
  else if (variance == "off") opt.variance = VarianceReduction::Off;
  else throw InputError("--variance must be auto, required or off");
  if (!fsf.empty()) opt.fsf = parse_fsf(fsf);
  save_cube(preprocess(load_cube(in, detect_format(in)), opt), out, parse_format(format));
}

void cmd_null_fit(const Globals& g, const std::string& cube_path, const RegionArgs& ra,
                  const DictArgs& da, const fs::path& out) {
  Cube cube = load_cube(cube_path, detect_format(cube_path));
  RegionSpec region = ra.spec();
  region.validate(cube);
  Dictionary dict = resolve_dictionary(cube, region, da.params());
  auto box = region.fit_box();
  Cube fit = cube.subcube(box.y0, box.x0, box.h, box.w, region.band_start(), region.band_count());
  auto field = compute_field(fit, dict, similarity_or(g, SimilarityKind::SpectralAngle), g.threads);
  auto model = fit_null(field);
  fs::create_directories(out);
  model.save_csv(out / "null.csv");
  dict.save_csv(out / "dictionary.csv");
  field.save_csv(out / "fit_field.csv");
  std::printf("fit %zu pixels: mu0_hat %s, pi0_hat %s, n0 %zu\n", field.tested(),
              brief(model.mu0_hat).c_str(), brief(model.pi0_hat).c_str(), model.n0);
}

void cmd_detect(const Globals& g, const std::string& cube_path, const RegionArgs& ra,
                const DictArgs& da, double q, const std::string& pi0,
                const std::string& null_path, const fs::path& out) {
  Cube cube = load_cube(cube_path, detect_format(cube_path));
  RunOptions opt;
  opt.q = q;
  opt.kind = similarity_or(g, SimilarityKind::SpectralAngle);
  opt.pi0 = Pi0Choice::parse(pi0);
  opt.threads = g.threads;
  if (!null_path.empty()) opt.null_model = NullModel::load_csv(null_path);
  auto run = run_detection(cube, ra.spec(), da.params(), opt);

  fs::create_directories(out);
  const auto& r = run.result;
  write_map(out, "pvalues", run.rows, run.cols, r.pvalues, 0.0, 1.0);
  write_map(out, "qvalues", run.rows, run.cols, r.qvalues, 0.0, 1.0);
  write_map(out, "detected", run.rows, run.cols, as_doubles(r.detected), 0.0, 1.0);
  for (const auto& [level, map] : run.contours)
    write_map(out, "contour_q" + brief(level), run.rows, run.cols, as_doubles(map), 0.0,
              1.0);
  run.test_field.save_csv(out / "test_field.csv");
  run.null_model.save_csv(out / "null.csv");
  run.dictionary.save_csv(out / "dictionary.csv");
  {
    // Pixels averaged into an estimated reference; they are tested like the rest.
    CsvFile f(out / "reference_pixels.csv");
    std::fprintf(f.f, "row,col\n");
    for (std::size_t p : run.reference_pixels)
      std::fprintf(f.f, "%zu,%zu\n", p / cube.nx(), p % cube.nx());
  }
  std::printf("%zu of %zu pixels detected at q %s (pi0 used %s, mu0_hat %s)\n", r.k_hat,
              run.test_field.tested(), brief(q).c_str(), brief(r.pi0_used).c_str(),
              brief(run.null_model.mu0_hat).c_str());
}

Dictionary study_dictionary(const KeyValueConfig& cfg) {
  auto path = cfg.get("dictionary", "");
  return path.empty() ? default_study_dictionary() : Dictionary::load_csv(path);
}

std::string fmt(double v) { return format_double(v); }

void sim_fdr_sweep(const Globals& g, const KeyValueConfig& cfg, std::size_t runs,
                   const fs::path& out) {
  FdrSweepConfig c;
  c.fit_side = static_cast<std::size_t>(cfg.get_int("fit_side", static_cast<long long>(c.fit_side)));
  c.test_side = static_cast<std::size_t>(cfg.get_int("test_side", static_cast<long long>(c.test_side)));
  if (cfg.has("noise")) c.noise = parse_noise(cfg.get("noise", ""));
  c.kernel_size = static_cast<std::size_t>(cfg.get_int("kernel_size", static_cast<long long>(c.kernel_size)));
  c.kernel_on_signal = cfg.get_bool("kernel_on_signal", c.kernel_on_signal);
  c.pi0 = cfg.get_double("pi0", c.pi0);
  c.amp_min = cfg.get_double("amp_min", c.amp_min);
  c.amp_max = cfg.get_double("amp_max", c.amp_max);
  c.snr_points = cfg.get_doubles("snr_points", c.snr_points);
  c.q_levels = cfg.get_doubles("q_levels", c.q_levels);
  auto shift = cfg.get("shift_draw", "fixed");
  if (shift != "fixed" && shift != "uniform") throw InputError("shift_draw must be fixed or uniform");
  c.shift_draw = shift == "fixed" ? ShiftDraw::FixedAtom : ShiftDraw::UniformAtom;
  c.oracle = cfg.get_bool("oracle", c.oracle);
  c.oracle_cubes = static_cast<std::size_t>(cfg.get_int("oracle_cubes", static_cast<long long>(c.oracle_cubes)));
  c.kind = similarity_or(g, c.kind);
  c.runs = runs;
  c.seed = g.seed;
  c.threads = g.threads;
  auto dict = study_dictionary(cfg);
  reject_unused(cfg);
  auto r = run_fdr_sweep(c, dict);

  CsvFile per(out / "runs.csv");
  std::fprintf(per.f, "snr_target,run,snr_realized,pi0_hat,pi0_true,q,fdp,power,oracle_fdp,oracle_power\n");
  for (const auto& run : r.runs)
    for (std::size_t k = 0; k < c.q_levels.size(); ++k)
      std::fprintf(per.f, "%s,%zu,%s,%s,%s,%s,%s,%s,%s,%s\n", fmt(c.snr_points[run.snr_index]).c_str(),
                   run.run, fmt(run.snr_realized).c_str(), fmt(run.pi0_hat).c_str(),
                   fmt(run.pi0_true).c_str(), fmt(c.q_levels[k]).c_str(), fmt(run.fdp[k]).c_str(),
                   fmt(run.power[k]).c_str(),
                   run.oracle_fdp.empty() ? "" : fmt(run.oracle_fdp[k]).c_str(),
                   run.oracle_power.empty() ? "" : fmt(run.oracle_power[k]).c_str());
  CsvFile agg(out / "aggregate.csv");
  std::fprintf(agg.f, "snr_target,snr_realized,q,fdr,fdr_se,power,power_se,oracle_fdr,oracle_power\n");
  for (const auto& cell : r.cells)
    std::fprintf(agg.f, "%s,%s,%s,%s,%s,%s,%s,%s,%s\n", fmt(cell.snr_target).c_str(),
                 fmt(cell.snr_realized).c_str(), fmt(cell.q).c_str(), fmt(cell.fdr.mean).c_str(),
                 fmt(cell.fdr.se).c_str(), fmt(cell.power.mean).c_str(), fmt(cell.power.se).c_str(),
                 fmt(cell.oracle_fdr.mean).c_str(), fmt(cell.oracle_power.mean).c_str());
}

void sim_null_fidelity(const Globals& g, const KeyValueConfig& cfg, std::size_t runs,
                       const fs::path& out) {
  NullFidelityConfig c;
  c.side = static_cast<std::size_t>(cfg.get_int("side", static_cast<long long>(c.side)));
  if (cfg.has("noise")) c.noise = parse_noise(cfg.get("noise", ""));
  c.pi0 = cfg.get_double("pi0", c.pi0);
  c.amp_min = cfg.get_double("amp_min", c.amp_min);
  c.amp_max = cfg.get_double("amp_max", c.amp_max);
  c.mc_runs = static_cast<std::size_t>(cfg.get_int("mc_runs", static_cast<long long>(c.mc_runs)));
  c.kind = similarity_or(g, c.kind);
  c.replicates = runs;
  c.seed = g.seed;
  c.threads = g.threads;
  auto dict = study_dictionary(cfg);
  reject_unused(cfg);
  auto r = run_null_fidelity(c, dict);

  CsvFile per(out / "runs.csv");
  std::fprintf(per.f, "run,pi0_hat,mu0_hat,qq_max_dev,upper_tail_excess\n");
  std::vector<double> pi0, dev;
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& x = r.runs[i];
    std::fprintf(per.f, "%zu,%s,%s,%s,%s\n", i, fmt(x.pi0_hat).c_str(), fmt(x.mu0_hat).c_str(),
                 fmt(x.qq_max_dev).c_str(), fmt(x.upper_tail_excess).c_str());
    pi0.push_back(x.pi0_hat);
    dev.push_back(x.qq_max_dev);
  }
  auto sp = summarize(pi0), sd = summarize(dev);
  CsvFile agg(out / "aggregate.csv");
  std::fprintf(agg.f, "true_pi0,pi0_hat,pi0_hat_se,qq_max_dev,qq_max_dev_worst,mc_median\n");
  std::fprintf(agg.f, "%s,%s,%s,%s,%s,%s\n", fmt(r.true_pi0).c_str(), fmt(sp.mean).c_str(),
               fmt(sp.se).c_str(), fmt(sd.mean).c_str(),
               fmt(*std::max_element(dev.begin(), dev.end())).c_str(), fmt(r.mc_median).c_str());
}

void sim_source_study(const Globals& g, const KeyValueConfig& cfg, std::size_t runs,
                const fs::path& out) {
  SourceStudyConfig c;
  c.fit_side = static_cast<std::size_t>(cfg.get_int("fit_side", static_cast<long long>(c.fit_side)));
  c.test_side = static_cast<std::size_t>(cfg.get_int("test_side", static_cast<long long>(c.test_side)));
  if (cfg.has("noise")) c.noise = parse_noise(cfg.get("noise", ""));
  c.kernel_size = static_cast<std::size_t>(cfg.get_int("kernel_size", static_cast<long long>(c.kernel_size)));
  c.source_pixels = static_cast<std::size_t>(cfg.get_int("source_pixels", static_cast<long long>(c.source_pixels)));
  c.amp_peak = cfg.get_double("amp_peak", c.amp_peak);
  c.amp_edge = cfg.get_double("amp_edge", c.amp_edge);
  c.shift_span = cfg.get_double("shift_span", c.shift_span);
  c.pfa_levels = cfg.get_doubles("pfa_levels", c.pfa_levels);
  c.q = cfg.get_double("q", c.q);
  c.kind = similarity_or(g, c.kind);
  c.regions = runs;
  c.seed = g.seed;
  c.threads = g.threads;
  auto dict = study_dictionary(cfg);
  reject_unused(cfg);
  auto r = run_source_study(c, dict);

  CsvFile agg(out / "aggregate.csv");
  std::fprintf(agg.f, "method,noise_false,noise_true,source_false,source_true,source_fdp,source_power\n");
  for (const auto& col : r.columns)
    std::fprintf(agg.f, "%s,%s,%s,%s,%s,%s,%s\n", col.method.c_str(), fmt(col.noise_false).c_str(),
                 fmt(col.noise_true).c_str(), fmt(col.source_false).c_str(),
                 fmt(col.source_true).c_str(), fmt(col.source_fdp).c_str(),
                 fmt(col.source_power).c_str());
}

// One synthetic cube plus its ground truth, for the ingest/detect commands.
void sim_cube(const Globals& g, const KeyValueConfig& cfg, const fs::path& out) {
  SimConfig c;
  c.ny = static_cast<std::size_t>(cfg.get_int("ny", static_cast<long long>(c.ny)));
  c.nx = static_cast<std::size_t>(cfg.get_int("nx", static_cast<long long>(c.nx)));
  if (cfg.has("noise")) c.noise = parse_noise(cfg.get("noise", ""));
  c.kernel_size = static_cast<std::size_t>(cfg.get_int("kernel_size", 0));
  if (c.kernel_size > 0) c.kernel = variance_preserving_uniform_kernel(c.kernel_size);
  c.kernel_on_signal = cfg.get_bool("kernel_on_signal", c.kernel_on_signal);
  c.pi0 = cfg.get_double("pi0", c.pi0);
  c.amp_min = cfg.get_double("amp_min", c.amp_min);
  c.amp_max = cfg.get_double("amp_max", c.amp_max);
  auto shift = cfg.get("shift_draw", "fixed");
  if (shift != "fixed" && shift != "uniform") throw InputError("shift_draw must be fixed or uniform");
  c.shift_draw = shift == "fixed" ? ShiftDraw::FixedAtom : ShiftDraw::UniformAtom;
  auto dict = study_dictionary(cfg);
  c.fixed_atom = static_cast<std::size_t>(cfg.get_int("fixed_atom", static_cast<long long>(dict.size() / 2)));
  c.seed = g.seed;
  reject_unused(cfg);
  auto [cube, truth] = generate(c, dict);
  save_cube(cube, out / "cube.fdc1", CubeFormat::Binary);
  dict.save_csv(out / "dictionary.csv");
  CsvFile t(out / "truth.csv");
  std::fprintf(t.f, "row,col,h1,amplitude,shift,atom\n");
  for (std::size_t i = 0; i < truth.h1.size(); ++i)
    std::fprintf(t.f, "%zu,%zu,%d,%s,%s,%d\n", i / truth.cols, i % truth.cols, truth.h1[i],
                 fmt(truth.amplitude[i]).c_str(), fmt(truth.shift[i]).c_str(), truth.atom[i]);
  std::printf("cube %zu x %zu x %zu with %zu H1 pixels\n", cube.ny(), cube.nx(), cube.bands(),
              truth.h1_count());
}

void cmd_simulate(const Globals& g, std::size_t runs, const fs::path& out) {
  KeyValueConfig cfg = g.config;
  auto experiment = cfg.get("experiment", "fdr-sweep");
  if (runs == 0) throw InputError("--runs must be positive");
  fs::create_directories(out);
  if (experiment == "fdr-sweep") sim_fdr_sweep(g, cfg, runs, out);
  else if (experiment == "null-fidelity") sim_null_fidelity(g, cfg, runs, out);
  else if (experiment == "source-study") sim_source_study(g, cfg, runs, out);
  else if (experiment == "cube") sim_cube(g, cfg, out);
  else throw InputError("experiment must be fdr-sweep, null-fidelity, source-study or cube");
  std::printf("wrote %s\n", out.c_str());
}

void cmd_pfa_bound(const std::string& reference, std::optional<int> center, double tau,
                   const std::string& range, double alpha, double gain_amp,
                   const std::string& mode_text, const std::string& out) {
  ReferenceAtom ref = reference.empty() ? gaussian_reference(30, 14, 5.0, 6.0)
                                        : load_reference(reference, center);
  ShiftMode mode = mode_text.empty()
                       ? (ref.has_profile() ? ShiftMode::Continuous : ShiftMode::IntegerBand)
                       : parse_shift_mode(mode_text);
  auto dots = range.find("..");
  if (dots == std::string::npos) throw InputError("--m-range must look like a..b");
  long long a = parse_int(range.substr(0, dots)), b = parse_int(range.substr(dots + 2));
  if (a < 2 || b < a) throw InputError("--m-range needs 2 <= a <= b");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");

  std::string text = "m,eta_bound,eta_orthogonal,expected_gain,coherence\n";
  for (long long m = a; m <= b; ++m) {
    auto n = static_cast<std::size_t>(m);
    auto d = build_lss(ref, n, tau, mode);
    double ortho = normal_quantile(std::pow(1.0 - alpha, 1.0 / static_cast<double>(n)));
    text += std::to_string(m) + "," + fmt(threshold_for_pfa(d, alpha)) + "," + fmt(ortho) + "," +
            fmt(expected_max_gain(ref, n, tau, gain_amp, mode)) + "," + fmt(d.coherence()) + "\n";
  }
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream f(out);
    if (!(f << text)) throw InputError("cannot write " + out);
  }
}

void cmd_glr_compare(const Globals& g, std::size_t runs, const fs::path& out) {
  KeyValueConfig cfg = g.config;
  GlrCompareConfig c;
  c.fit_side = static_cast<std::size_t>(cfg.get_int("fit_side", static_cast<long long>(c.fit_side)));
  c.test_side = static_cast<std::size_t>(cfg.get_int("test_side", static_cast<long long>(c.test_side)));
  if (cfg.has("noise")) c.noise = parse_noise(cfg.get("noise", ""));
  c.pi0 = cfg.get_double("pi0", c.pi0);
  c.amp_min = cfg.get_double("amp_min", c.amp_min);
  c.amp_max = cfg.get_double("amp_max", c.amp_max);
  c.q_levels = cfg.get_doubles("q_levels", c.q_levels);
  c.calibration_runs = static_cast<std::size_t>(
      cfg.get_int("calibration_runs", static_cast<long long>(c.calibration_runs)));
  auto variance = cfg.get("glr_variance", "robust");
  if (variance != "robust" && variance != "sample")
    throw InputError("glr_variance must be robust or sample");
  c.variance = variance == "robust" ? GlrCompareConfig::Variance::Robust
                                    : GlrCompareConfig::Variance::Sample;
  c.calibrate_per_run = cfg.get_bool("calibrate_per_run", c.calibrate_per_run);
  c.kind = similarity_or(g, c.kind);
  if (runs == 0) throw InputError("--runs must be positive");
  c.runs = runs;
  c.seed = g.seed;
  c.threads = g.threads;
  auto dict = study_dictionary(cfg);
  reject_unused(cfg);
  auto r = run_glr_compare(c, dict);

  fs::create_directories(out);
  {
    CsvFile per(out / "runs.csv");
    std::fprintf(per.f, "run,q,glr_fdp,glr_power,prop_fdp,prop_power\n");
    for (std::size_t i = 0; i < r.runs.size(); ++i)
      for (std::size_t k = 0; k < c.q_levels.size(); ++k)
        std::fprintf(per.f, "%zu,%s,%s,%s,%s,%s\n", i, fmt(c.q_levels[k]).c_str(),
                     fmt(r.runs[i].glr_fdp[k]).c_str(), fmt(r.runs[i].glr_power[k]).c_str(),
                     fmt(r.runs[i].prop_fdp[k]).c_str(), fmt(r.runs[i].prop_power[k]).c_str());
  }
  CsvFile agg(out / "aggregate.csv");
  std::fprintf(agg.f, "q,glr_fdr,glr_fdr_se,glr_power,prop_fdr,prop_fdr_se,prop_power\n");
  for (const auto& cell : r.cells)
    std::fprintf(agg.f, "%s,%s,%s,%s,%s,%s,%s\n", fmt(cell.q).c_str(), fmt(cell.glr_fdr.mean).c_str(),
                 fmt(cell.glr_fdr.se).c_str(), fmt(cell.glr_power.mean).c_str(),
                 fmt(cell.prop_fdr.mean).c_str(), fmt(cell.prop_fdr.se).c_str(),
                 fmt(cell.prop_power.mean).c_str());
  std::printf("wrote %s\n", out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection of faint shifted spectral lines with FDR control"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads, 0 for all cores")->capture_default_str();
  app.add_option("--similarity", g.similarity, "mf or sad (default depends on the command)")
      ->check(CLI::IsMember({"mf", "sad"}));
  app.add_option("--config", g.config_path, "flat key=value file");

  std::string in, out, format = "binary", box, fsf, variance = "auto", cube_path, pi0 = "empirical",
                   null_path;
  std::size_t baseline = 0, runs = 0;
  double q = 0.2;
  RegionArgs region;
  DictArgs dict;

  auto* ingest = app.add_subcommand("ingest", "validate a cube and convert or cut it");
  ingest->add_option("--in", in, "cube file or CSV directory")->required();
  ingest->add_option("--out", out, "output path");
  ingest->add_option("--format", format, "binary or csv")->capture_default_str();
  ingest->add_option("--subcube", box, "y0,x0,h,w,b0,nb");

  auto* prep = app.add_subcommand("preprocess", "variance reduction, robust scaling, FSF");
  prep->add_option("--in", in, "input cube")->required();
  prep->add_option("--out", out, "output cube")->required();
  prep->add_option("--format", format, "binary or csv")->capture_default_str();
  prep->add_option("--fsf", fsf, "delta, uniform:<k> or gaussian:<k>:<fwhm>");
  prep->add_option("--baseline", baseline, "moving-median window, 0 for none")
      ->capture_default_str();
  prep->add_option("--variance", variance, "auto, required or off")->capture_default_str();

  auto* nullfit = app.add_subcommand("null-fit", "fit the empirical null on the fit region");
  nullfit->add_option("--cube", cube_path, "preprocessed cube")->required();
  nullfit->add_option("--out", out, "output directory")->required();
  region.add(nullfit);
  dict.add(nullfit);

  auto* detect = app.add_subcommand("detect", "FDR-controlled detection on the test region");
  detect->add_option("--cube", cube_path, "preprocessed cube")->required();
  detect->add_option("--out", out, "output directory")->required();
  detect->add_option("--q", q, "nominal FDR level")->capture_default_str();
  detect->add_option("--pi0", pi0, "empirical, one or storey:<zeta>")->capture_default_str();
  detect->add_option("--null", null_path, "null model CSV from null-fit");
  region.add(detect);
  dict.add(detect);

  auto* sim = app.add_subcommand("simulate", "synthetic studies (experiment key in --config)");
  sim->add_option("--runs", runs, "runs, replicates or regions")->required();
  sim->add_option("--out", out, "output directory")->required();

  std::string reference, m_range = "2..20", mode;
  std::optional<int> ref_center;
  double tau = 8.0, alpha = 0.05, gain_amp = 2.7;
  auto* pfa = app.add_subcommand("pfa-bound", "threshold table from the PFA bound");
  pfa->add_option("--reference", reference, "reference spectrum (default Gaussian line)");
  pfa->add_option("--reference-center", ref_center, "centre band of the reference");
  pfa->add_option("--tau", tau, "maximum shift in bands")->capture_default_str();
  pfa->add_option("--m-range", m_range, "a..b")->capture_default_str();
  pfa->add_option("--alpha", alpha, "false-alarm level")->capture_default_str();
  pfa->add_option("--gain-amplitude", gain_amp, "amplitude for the expected gain column")
      ->capture_default_str();
  pfa->add_option("--shift-mode", mode, "integer or continuous");
  pfa->add_option("--out", out, "CSV path (stdout when absent)");

  auto* glr = app.add_subcommand("glr-compare", "GLR baseline against the empirical null");
  glr->add_option("--runs", runs, "runs")->required();
  glr->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (!g.config_path.empty()) g.config = KeyValueConfig::load(g.config_path);
    if (*ingest) cmd_ingest(in, out, format, box);
    else if (*prep) cmd_preprocess(in, out, format, fsf, baseline, variance);
    else if (*nullfit) cmd_null_fit(g, cube_path, region, dict, out);
    else if (*detect) cmd_detect(g, cube_path, region, dict, q, pi0, null_path, out);
    else if (*sim) cmd_simulate(g, runs, out);
    else if (*pfa) cmd_pfa_bound(reference, ref_center, tau, m_range, alpha, gain_amp, mode, out);
    else if (*glr) cmd_glr_compare(g, runs, out);
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputError;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumericError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumericError;
  }
  return 0;
}
