#include "patchwork/checkpoint.hpp"
#include "patchwork/error.hpp"
#include "patchwork/export.hpp"
#include "patchwork/extract.hpp"
#include "patchwork/init.hpp"
#include "patchwork/io.hpp"
#include "patchwork/mesh.hpp"
#include "patchwork/metrics.hpp"
#include "patchwork/parallel.hpp"
#include "patchwork/run.hpp"
#include "patchwork/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace patchwork;

namespace {

// Exit codes (also listed in the README).
enum Exit : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kIo = 3,
  kInvalidData = 4,
  kMemory = 5,
  kCheckpoint = 6,
  kNumerical = 7,
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedFormat:
      return kIo;
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonFiniteParameter:
    case ErrorCode::EmptyInput:
    case ErrorCode::NonUnitNormal:
    case ErrorCode::DegenerateMesh:
    case ErrorCode::DegenerateBBox:
    case ErrorCode::InvalidConfig:
      return kInvalidData;
    case ErrorCode::MemoryBudgetExceeded:
      return kMemory;
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptCheckpoint:
      return kCheckpoint;
    case ErrorCode::DegenerateGradient:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::NumericalDegeneracy:
    case ErrorCode::FitAborted:
      return kNumerical;
  }
  return kOther;
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::optional<fs::path> run_dir;
  bool json = false;
  bool paper_scale = false;
  int verbose = 0;
  bool quiet = false;
};

// Desk-scale defaults and the values used for the published tables.
struct Scale {
  std::size_t samples;
  int resolution;
  std::size_t metric_samples;
};

Scale scale_for(const Globals& g) {
  if (g.paper_scale) return {16384, 512, kPaperMetricSamples};
  return {1024, 128, kDeskMetricSamples};
}

void emit(const Globals& g, const json& report, const std::string& text) {
  if (g.json) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

bool has_ext(const fs::path& p, const char* ext) { return p.extension() == ext; }

bool is_checkpoint(const fs::path& p) {
  return p.extension() == ".json";
}

std::size_t parameter_count(const PatchworkModel& m) {
  return static_cast<std::size_t>(m.dim + 1) * m.active_count() + 2;
}

// Point clouds are PLY files whose vertices carry normals; anything else is
// read as a mesh and sampled.
bool ply_has_normals(const fs::path& p) {
  if (!has_ext(p, ".ply")) return false;
  std::ifstream in(p, std::ios::binary);
  std::string line;
  bool face = false, normals = false;
  while (std::getline(in, line)) {
    if (line.rfind("end_header", 0) == 0) break;
    if (line.rfind("element face", 0) == 0) face = true;
    if (line.find(" nx") != std::string::npos) normals = true;
  }
  return normals && !face;
}

OrientedSampleSet load_samples(const fs::path& input, std::size_t count,
                               std::uint64_t seed, int dim) {
  if (ply_has_normals(input)) {
    auto cloud = load_point_cloud(input, dim);
    TriangleMesh bounds;
    bounds.vertices = cloud.points;
    const auto tf = normalize_to_box(bounds).transform;
    for (auto& p : cloud.points) p = tf.apply(p);
    return cloud;
  }
  if (dim != 3) raise(ErrorCode::InvalidArgument, "meshes can only be fitted in 3D");
  const auto normalized = normalize_to_box(load_mesh(input));
  std::mt19937_64 rng(seed);
  auto s = sample_mesh_surface(normalized.mesh, count, rng);
  s.source = input.string();
  return s;
}

json report_json(const MetricReport& r) { return json::parse(metrics_json(r)); }

std::string file_stem(const fs::path& p) {
  std::string stem = p.stem().string();
  const auto dot = stem.find('.');
  return dot == std::string::npos ? stem : stem.substr(0, dot);
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  fs::path input;
  std::optional<fs::path> config;
  std::optional<std::size_t> samples;
  std::optional<int> iterations;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<int> prune_interval;
  int dim = 3;
  bool no_prune = false;
  bool no_surface = false;
  bool no_normal = false;
  bool no_occupancy = false;
  bool no_geometric_init = false;
};

FitConfig make_config(const Globals& g, const FitArgs& a) {
  FitConfig cfg = a.config ? load_fit_config(*a.config) : FitConfig{};
  cfg.seed = g.seed;
  if (a.iterations) cfg.iterations = *a.iterations;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.batch) cfg.batch_size = *a.batch;
  if (a.prune_interval) cfg.prune_interval = *a.prune_interval;
  if (a.no_prune) {
    cfg.pruning = false;
    cfg.losses.prune = false;
  }
  if (a.no_surface) cfg.losses.surface = false;
  if (a.no_normal) cfg.losses.normal = false;
  if (a.no_occupancy) cfg.losses.occupancy = false;
  if (a.no_geometric_init) cfg.geometric_init = false;
  cfg.validate();
  return cfg;
}

struct FitOutputs {
  fs::path checkpoint, trace, manifest;
};

FitOutputs write_fit(const fs::path& dir, const FitResult& r, RunManifest manifest) {
  FitOutputs out{dir / "model.ckpt.json", dir / "trace.csv", dir / "manifest.json"};
  save_checkpoint(r.model, out.checkpoint);
  save_text(out.trace, r.report.to_csv());
  manifest.finished_at = utc_timestamp();
  manifest.outputs = {out.checkpoint.filename().string(), out.trace.filename().string()};
  save_text(out.manifest, manifest.to_json());
  return out;
}

json fit_summary(const FitResult& r, const FitOutputs& out) {
  json j;
  j["initial_terms"] = r.report.initial_terms;
  j["final_active_terms"] = r.report.final_active_terms;
  j["initial_parameters"] = r.report.initial_parameter_count();
  j["final_parameters"] = r.report.final_parameter_count();
  j["skipped_steps"] = r.report.skipped_steps;
  j["disabled_by_pruning"] = r.report.disabled_by_pruning;
  if (!r.report.trace.empty()) {
    const auto& last = r.report.trace.back();
    j["final_loss"] = {{"surface", last.surface}, {"normal", last.normal},
                       {"occupancy", last.occupancy}, {"prune", last.prune},
                       {"total", last.total}};
  }
  j["checkpoint"] = out.checkpoint.string();
  j["trace"] = out.trace.string();
  j["manifest"] = out.manifest.string();
  return j;
}

int cmd_fit(const Globals& g, const FitArgs& a) {
  const FitConfig cfg = make_config(g, a);
  const std::size_t m = a.samples.value_or(scale_for(g).samples);
  const fs::path dir = resolve_run_dir(g.run_dir, file_stem(a.input));
  RunDirLock lock(dir);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.tool_version = library_version();
  manifest.config_json = fit_config_to_json(cfg);
  manifest.input_path = a.input.string();
  manifest.input_hash = file_hash(a.input);
  manifest.seed = g.seed;
  manifest.threads = thread_count();
  manifest.started_at = utc_timestamp();

  const auto samples = load_samples(a.input, m, g.seed, a.dim);
  const FitResult r = fit(samples, cfg);
  const auto out = write_fit(dir, r, manifest);

  const json j = fit_summary(r, out);
  std::ostringstream text;
  text << "terms " << r.report.initial_terms << " -> " << r.report.final_active_terms
       << " active, parameters " << r.report.initial_parameter_count() << " -> "
       << r.report.final_parameter_count() << '\n'
       << "wrote " << out.checkpoint.string() << ", " << out.trace.string() << ", "
       << out.manifest.string() << '\n';
  emit(g, j, text.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  fs::path checkpoint;
  std::vector<std::string> points;
  std::optional<fs::path> points_file;
};

Vec3 parse_point(const std::string& s, int dim) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      raise(ErrorCode::ParseError, "bad coordinate '" + item + "' in '" + s + "'");
    }
  }
  if (static_cast<int>(v.size()) != dim) {
    raise(ErrorCode::DimensionMismatch, "point '" + s + "' needs " + std::to_string(dim) +
                                            " coordinates");
  }
  return to_point(dim, v);
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto model = load_checkpoint(a.checkpoint);
  std::vector<std::string> specs = a.points;
  if (a.points_file) {
    std::ifstream in(*a.points_file);
    if (!in) raise(ErrorCode::IoError, "cannot open '" + a.points_file->string() + "'");
    std::string line;
    while (std::getline(in, line)) {
      for (char& c : line) {
        if (c == ' ' || c == '\t') c = ',';
      }
      if (!line.empty()) specs.push_back(line);
    }
  }
  if (specs.empty()) raise(ErrorCode::EmptyInput, "no evaluation points given");
  json rows = json::array();
  std::ostringstream text;
  for (const auto& s : specs) {
    const Vec3 x = parse_point(s, model.dim);
    const FieldEval e = eval_field(model, x);
    const double t = eval_tropical(model, x);
    json grad = json::array();
    for (int k = 0; k < model.dim; ++k) grad.push_back(e.grad_x[k]);
    rows.push_back({{"x", s}, {"value", e.value}, {"tropical", t}, {"grad", grad}});
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-24s F=% .12g  f=% .12g\n", s.c_str(), e.value, t);
    text << buf;
  }
  emit(g, json{{"points", rows}}, text.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
  fs::path checkpoint;
  std::string mode = "mc";
  std::optional<int> resolution;
  std::optional<double> beta;
  std::optional<fs::path> out;
};

BBox extraction_box(int dim) {
  // A margin around the normalized box keeps surfaces that touch [-1, 1]
  // closed.
  return BBox::unit(dim, 1.05);
}

int cmd_extract(const Globals& g, const ExtractArgs& a) {
  auto model = load_checkpoint(a.checkpoint);
  if (a.beta) model.beta_plus = model.beta_minus = *a.beta;
  const int res = a.resolution.value_or(scale_for(g).resolution);
  const std::string stem = file_stem(a.checkpoint);
  json j;
  j["mode"] = a.mode;
  std::ostringstream text;
  if (a.mode == "mc") {
    const ScalarGrid grid = sample_grid(model, res, extraction_box(model.dim));
    if (model.dim == 2) {
      const auto soup = marching_squares(grid);
      const fs::path out = a.out.value_or(resolve_run_dir(g.run_dir, stem) / (stem + ".mc.svg"));
      save_svg(out, soup);
      if (soup.segments.empty()) spdlog::warn("the zero set is empty; wrote an empty SVG");
      j["segments"] = soup.segments.size();
      j["output"] = out.string();
      text << soup.segments.size() << " segments -> " << out.string() << '\n';
    } else {
      const auto mesh = marching_cubes(grid);
      const fs::path out = a.out.value_or(resolve_run_dir(g.run_dir, stem) / (stem + ".mc.obj"));
      save_obj(out, mesh);
      if (mesh.triangles.empty()) spdlog::warn("the zero set is empty; wrote an empty OBJ");
      j["triangles"] = mesh.triangles.size();
      j["output"] = out.string();
      text << mesh.triangles.size() << " triangles -> " << out.string() << '\n';
    }
    j["resolution"] = res;
  } else if (a.mode == "tropical") {
    const auto cx = extract_tropical(model);
    const char* ext = model.dim == 2 ? ".tropical.svg" : ".tropical.obj";
    const fs::path out = a.out.value_or(resolve_run_dir(g.run_dir, stem) / (stem + ext));
    if (model.dim == 2) {
      save_svg(out, cx.segments());
      fs::path side = out;
      side.replace_extension(".labels.json");
      save_text(side, extracted_labels_json(cx));
      j["labels"] = side.string();
    } else {
      j["labels"] = save_extracted(out, cx).string();
    }
    if (cx.facets.empty()) spdlog::warn("no active facets; wrote an empty file");
    j["facets"] = cx.facets.size();
    j["degeneracies"] = cx.degeneracy_count;
    j["output"] = out.string();
    text << cx.facets.size() << " facets";
    if (cx.degeneracy_count > 0) text << " (" << cx.degeneracy_count << " degeneracies)";
    text << " -> " << out.string() << '\n';
  } else {
    raise(ErrorCode::InvalidArgument, "mode must be mc or tropical");
  }
  emit(g, j, text.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
  fs::path reference;
  fs::path candidate;
  std::optional<std::size_t> samples;
  std::optional<int> resolution;
  std::string format = "table";
};

// Candidate geometry: a mesh file, or a checkpoint extracted with marching
// cubes.
TriangleMesh candidate_mesh(const fs::path& p, int res, std::optional<std::size_t>* params) {
  if (!is_checkpoint(p)) return load_mesh(p);
  const auto model = load_checkpoint(p);
  if (model.dim != 3) raise(ErrorCode::DimensionMismatch, "metrics need a 3D checkpoint");
  *params = parameter_count(model);
  return marching_cubes(sample_grid(model, res, extraction_box(3)));
}

int cmd_metrics(const Globals& g, const MetricsArgs& a) {
  const Scale sc = scale_for(g);
  const auto reference = load_mesh(a.reference);
  std::optional<std::size_t> params;
  const auto candidate = candidate_mesh(a.candidate, a.resolution.value_or(sc.resolution), &params);
  MetricReport r = compare_meshes(reference, candidate, a.samples.value_or(sc.metric_samples), g.seed);
  r.parameters = params;
  const std::string text = a.format == "csv" ? metrics_csv(r) : metrics_table(r);
  emit(g, report_json(r), text);
  return kOk;
}

// ---------------------------------------------------------------------------
// construct

struct ConstructArgs {
  std::string kind;
  int n = 10;
  std::optional<std::string> shape;
  bool render = false;
  std::optional<fs::path> out;
};

// Sutherland-Hodgman clip of a convex polygon by <normal, x> + offset <= 0.
PointList clip(const PointList& poly, const Halfspace& h) {
  PointList out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % poly.size()];
    const double fp = h.normal.dot(p) + h.offset;
    const double fq = h.normal.dot(q) + h.offset;
    if (fp <= 0.0) out.push_back(p);
    if ((fp < 0.0) != (fq < 0.0) && fp != fq) out.push_back(p + fp / (fp - fq) * (q - p));
  }
  return out;
}

std::vector<SvgFill> interior_fills(const ExtractedComplex& cx, const BBox& view) {
  std::vector<SvgFill> fills;
  for (const auto& cell : cx.interior_cells) {
    PointList poly{Vec3(view.lo.x(), view.lo.y(), 0), Vec3(view.hi.x(), view.lo.y(), 0),
                   Vec3(view.hi.x(), view.hi.y(), 0), Vec3(view.lo.x(), view.hi.y(), 0)};
    for (const auto& h : cell.halfspaces) {
      poly = clip(poly, h);
      if (poly.size() < 3) break;
    }
    if (poly.size() >= 3) fills.push_back({poly, true});
  }
  return fills;
}

int cmd_construct(const Globals& g, const ConstructArgs& a) {
  PatchworkModel model;
  std::string shape;
  if (a.kind == "grid2") {
    shape = a.shape.value_or("circle(0.6)");
    model = digital_curve_grid(a.n, oracle_by_name(shape));
  } else if (a.kind == "hex2") {
    shape = a.shape.value_or("circle(0.6)");
    model = digital_curve_hex(a.n, oracle_by_name(shape));
  } else if (a.kind == "grid3") {
    shape = a.shape.value_or("sphere(0.6)");
    model = digital_surface_grid(a.n, oracle_by_name(shape));
  } else {
    raise(ErrorCode::InvalidArgument, "kind must be grid2, hex2 or grid3");
  }
  const std::string stem = a.kind + "_n" + std::to_string(a.n);
  const fs::path dir = resolve_run_dir(g.run_dir, stem);
  const fs::path ckpt = a.out.value_or(dir / (stem + ".ckpt.json"));
  save_checkpoint(model, ckpt);

  json j;
  j["kind"] = a.kind;
  j["n"] = a.n;
  j["shape"] = shape;
  j["terms"] = model.terms.size();
  j["plus"] = model.active_count(Group::Plus);
  j["minus"] = model.active_count(Group::Minus);
  j["checkpoint"] = ckpt.string();
  std::ostringstream text;
  text << model.terms.size() << " terms (" << model.active_count(Group::Minus)
       << " inside) -> " << ckpt.string() << '\n';
  if (a.render) {
    const auto cx = extract_tropical(model);
    fs::path render = ckpt;
    render.replace_extension();
    render.replace_extension(model.dim == 2 ? ".svg" : ".obj");
    if (model.dim == 2) {
      SvgOptions opt;
      opt.view = BBox::unit(2, 1.2);
      save_svg(render, cx.segments(), interior_fills(cx, opt.view), opt);
    } else {
      save_extracted(render, cx);
    }
    j["render"] = render.string();
    j["facets"] = cx.facets.size();
    text << cx.facets.size() << " facets -> " << render.string() << '\n';
  }
  emit(g, j, text.str());
  return kOk;
}

// ---------------------------------------------------------------------------
// demo

struct DemoArgs {
  std::optional<int> iterations;
  int construct_n = 10;
};

std::string metrics_row(const std::string& name, const MetricReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.4f,%s\n", name.c_str(), r.chamfer_scaled(),
                r.hausdorff_scaled(), r.fscore,
                r.parameters ? std::to_string(*r.parameters).c_str() : "");
  return buf;
}

int cmd_demo(const Globals& g, const DemoArgs& a) {
  const Scale sc = scale_for(g);
  const fs::path dir = resolve_run_dir(g.run_dir, "demo");
  RunDirLock lock(dir);
  const TriangleMesh gt = make_icosphere(0.8, 5);
  save_obj(dir / "sphere.obj", gt);

  FitConfig cfg;
  cfg.seed = g.seed;
  if (a.iterations) cfg.iterations = *a.iterations;
  cfg.validate();

  RunManifest manifest;
  manifest.command = "demo";
  manifest.tool_version = library_version();
  manifest.config_json = fit_config_to_json(cfg);
  manifest.input_path = "icosphere(r=0.8, subdivisions=5)";
  manifest.input_hash = file_hash(dir / "sphere.obj");
  manifest.seed = g.seed;
  manifest.threads = thread_count();
  manifest.started_at = utc_timestamp();

  std::mt19937_64 rng(g.seed);
  const auto samples = sample_mesh_surface(gt, sc.samples, rng);
  const auto init = geometric_init(samples);
  const FitResult fitted = fit(samples, cfg);
  const auto out = write_fit(dir, fitted, manifest);

  // Explicit construction of the same sphere for comparison.
  const auto built = digital_surface_grid(a.construct_n, sphere_oracle(0.8));
  const auto built_mesh = extract_tropical(built).polygons().triangulate();

  const BBox box = extraction_box(3);
  const auto init_mesh = marching_cubes(sample_grid(init, sc.resolution, box));
  const auto fit_mesh = marching_cubes(sample_grid(fitted.model, sc.resolution, box));
  save_obj(dir / "fit.mc.obj", fit_mesh);

  auto measure = [&](const TriangleMesh& m, const PatchworkModel& model) {
    MetricReport r = compare_meshes(gt, m, sc.metric_samples, g.seed);
    r.parameters = parameter_count(model);
    return r;
  };
  const MetricReport r_built = measure(built_mesh, built);
  MetricReport r_init = measure(init_mesh, init);
  r_init.parameters = fitted.report.initial_parameter_count();
  const MetricReport r_fit = measure(fit_mesh, fitted.model);

  std::string csv = "model,CH_x1e3,HD_x1e2,FS_percent,params\n";
  csv += metrics_row("construct_grid3_n" + std::to_string(a.construct_n), r_built);
  csv += metrics_row("geometric_init", r_init);
  csv += metrics_row("fit", r_fit);
  save_text(dir / "metrics.csv", csv);

  json j = fit_summary(fitted, out);
  j["metrics"] = {{"construct", report_json(r_built)},
                  {"init", report_json(r_init)},
                  {"fit", report_json(r_fit)}};
  j["metrics_csv"] = (dir / "metrics.csv").string();
  std::ostringstream text;
  text << csv << "wrote " << dir.string() << '\n';
  emit(g, j, text.str());
  return kOk;
}

void setup_logging(const Globals& g) {
  auto logger = spdlog::stderr_color_mt("patchwork");
  spdlog::set_default_logger(logger);
  if (g.quiet) {
    spdlog::set_level(spdlog::level::err);
  } else if (g.verbose >= 2) {
    spdlog::set_level(spdlog::level::trace);
  } else if (g.verbose == 1) {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patchwork shape representation: fit, evaluate, extract and measure"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", library_version());

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--run-dir", g.run_dir,
                 "Output directory (default $" + std::string(kRunRootEnv) + "/<name> or ./runs/<name>)");
  app.add_flag("--json", g.json, "Machine-readable report on stdout");
  app.add_flag("--paper-scale", g.paper_scale,
               "Use m=16384, 512^3 marching and 1M metric samples");
  app.add_flag("-v,--verbose", g.verbose, "More logging (repeatable)");
  app.add_flag("-q,--quiet", g.quiet, "Errors only");

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a mesh or oriented point cloud");
  fit_cmd->add_option("input", fa.input, "OBJ/PLY mesh or PLY point cloud with normals")
      ->required();
  fit_cmd->add_option("--config", fa.config, "FitConfig JSON (flags override it)");
  fit_cmd->add_option("--samples,-m", fa.samples, "Surface samples (default 1024)");
  fit_cmd->add_option("--iterations", fa.iterations);
  fit_cmd->add_option("--lr", fa.lr, "Adam learning rate");
  fit_cmd->add_option("--batch", fa.batch);
  fit_cmd->add_option("--prune-interval", fa.prune_interval);
  fit_cmd->add_option("--dim", fa.dim, "2 for planar point clouds")->check(CLI::IsMember({2, 3}));
  fit_cmd->add_flag("--no-prune", fa.no_prune, "Disable pruning and its loss");
  fit_cmd->add_flag("--no-surface", fa.no_surface);
  fit_cmd->add_flag("--no-normal", fa.no_normal);
  fit_cmd->add_flag("--no-occupancy", fa.no_occupancy);
  fit_cmd->add_flag("--no-geometric-init", fa.no_geometric_init, "Random initialization");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint at points");
  eval_cmd->add_option("checkpoint", ea.checkpoint)->required();
  eval_cmd->add_option("--point,-p", ea.points, "x,y[,z] (repeatable)");
  eval_cmd->add_option("--points-file", ea.points_file, "One point per line");

  ExtractArgs xa;
  auto* extract_cmd = app.add_subcommand("extract", "Extract the zero set of a checkpoint");
  extract_cmd->add_option("checkpoint", xa.checkpoint)->required();
  extract_cmd->add_option("--mode", xa.mode)->check(CLI::IsMember({"mc", "tropical"}))
      ->capture_default_str();
  extract_cmd->add_option("--resolution,-r", xa.resolution, "Marching grid nodes per axis")
      ->check(CLI::Range(2, 4096));
  extract_cmd->add_option("--beta", xa.beta, "Override both sharpness values")
      ->check(CLI::PositiveNumber);
  extract_cmd->add_option("--out,-o", xa.out);

  MetricsArgs ma;
  auto* metrics_cmd = app.add_subcommand("metrics", "Chamfer, Hausdorff and F-score");
  metrics_cmd->add_option("reference", ma.reference, "Ground-truth mesh")
      ->required();
  metrics_cmd->add_option("candidate", ma.candidate, "Mesh or checkpoint")
      ->required();
  metrics_cmd->add_option("--samples", ma.samples, "Points per surface");
  metrics_cmd->add_option("--resolution,-r", ma.resolution)->check(CLI::Range(2, 4096));
  metrics_cmd->add_option("--format", ma.format)->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  ConstructArgs ca;
  auto* construct_cmd = app.add_subcommand("construct", "Explicit grid constructions");
  construct_cmd->add_option("kind", ca.kind)->required()->check(
      CLI::IsMember({"grid2", "hex2", "grid3"}));
  construct_cmd->add_option("-n,--n", ca.n, "Lattice size N")->check(CLI::PositiveNumber)
      ->capture_default_str();
  construct_cmd->add_option("--shape", ca.shape,
                            "circle(r), square(s), sphere(r), torus(R,r) or mesh(path)");
  construct_cmd->add_flag("--render", ca.render, "Also write the tropical zero set");
  construct_cmd->add_option("--out,-o", ca.out);

  DemoArgs da;
  auto* demo_cmd = app.add_subcommand("demo", "Sphere pipeline: construct, fit, extract, measure");
  demo_cmd->add_option("--iterations", da.iterations);
  demo_cmd->add_option("--construct-n", da.construct_n)->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  setup_logging(g);
  try {
    set_thread_count(g.threads);
    if (*fit_cmd) return cmd_fit(g, fa);
    if (*eval_cmd) return cmd_eval(g, ea);
    if (*extract_cmd) return cmd_extract(g, xa);
    if (*metrics_cmd) return cmd_metrics(g, ma);
    if (*construct_cmd) return cmd_construct(g, ca);
    if (*demo_cmd) return cmd_demo(g, da);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
  return kOther;
}
