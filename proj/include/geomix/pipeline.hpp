#pragma once

#include "geomix/clustering.hpp"
#include "geomix/error.hpp"
#include "geomix/fem_operator.hpp"
#include "geomix/flow_map.hpp"
#include "geomix/flow_models.hpp"
#include "geomix/heat_flow.hpp"
#include "geomix/io.hpp"
#include "geomix/mesh.hpp"
#include "geomix/mixing_geometry.hpp"
#include "geomix/spectral.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace geomix {

enum class Stage { flowmap = 0, tensor = 1, spectrum = 2, cluster = 3, heatflow = 4 };

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::flowmap: return "flowmap";
    case Stage::tensor: return "tensor";
    case Stage::spectrum: return "spectrum";
    case Stage::cluster: return "cluster";
    case Stage::heatflow: return "heatflow";
  }
  return "?";
}

struct RunConfig {
  // model
  std::string model = "double_gyre";
  std::string velocity_data;  // path; replaces `model` when set
  ParamMap params;
  // material grid
  int nx = 101;
  int ny = 101;
  std::optional<Box> bounds;  // default: model domain
  // time sampling
  std::optional<double> t0;
  std::optional<double> t_end;
  int n_instants = 21;
  double max_step = 5e-3;
  bool adaptive = false;
  double fd_offset = 0.0;  // 0: grid spacing / 100
  TimeWeighting weighting = TimeWeighting::uniform;
  // operator and spectrum
  OperatorVariant variant = OperatorVariant::mixing_lb;
  int k_eigen = 21;
  int scan_depth = 21;
  GapRule gap_rule = GapRule::first_significant;
  double eig_tol = 1e-10;
  /// Load D_bar from a previous run's d_bar_* fields instead of integrating.
  std::string tensor_input;
  // clustering
  int k_clusters = 0;  // 0: eigengap, which must have confidence >= 2
  int restarts = 20;
  std::uint64_t seed = 0;
  bool drop_first = false;
  // heat flow
  double heat_eps = 1e-3;
  double heat_dt = 0.0;  // 0: total time 1 / (eps |lambda_2|) split into heat_steps
  int heat_steps = 0;
  int frame_stride = 10;
  std::string heat_initial = "cluster:smallest";  // or cluster:<id>, box:x0,x1,y0,y1
  // output
  std::string output_dir;  // empty: nothing is written
  bool render = true;
  double anisotropy_clip = 0.0;  // > 0: upper clip for the anisotropy image
};

/// Protocols for the three benchmark flows.
inline RunConfig benchmark_preset(const std::string& name) {
  RunConfig c;
  c.model = name;
  if (name == "double_gyre") {
    c.nx = c.ny = 101;
    c.n_instants = 21;
    c.max_step = 5e-3;
    c.heat_steps = 40;
    c.frame_stride = 10;
    c.anisotropy_clip = 2.0;
  } else if (name == "cylinder") {
    c.nx = 181;
    c.ny = 91;
    c.n_instants = 41;
    c.max_step = 2e-2;
    c.k_clusters = 3;  // two gyres plus background
  } else if (name == "bickley") {
    c.nx = 241;
    c.ny = 73;
    c.n_instants = 81;
    c.max_step = 2.5e-2;
  } else {
    throw Error("unknown benchmark '" + name + "' (double_gyre, cylinder, bickley)");
  }
  return c;
}

inline void validate(const RunConfig& c) {
  if (c.n_instants < 2) throw Error("config: n_instants must be >= 2");
  if (c.nx < 2 || c.ny < 2) throw Error("config: nx, ny must be >= 2");
  if (c.k_eigen < 2) throw Error("config: k_eigen must be >= 2");
  if (c.scan_depth < 3) throw Error("config: scan_depth must be >= 3");
  if (c.k_clusters < 0 || c.k_clusters == 1) throw Error("config: k_clusters must be 0 or >= 2");
  if (c.k_clusters > c.k_eigen) throw Error("config: k_clusters must not exceed k_eigen");
  if (c.restarts < 1) throw Error("config: restarts must be positive");
  if (!(c.max_step > 0.0)) throw Error("config: max_step must be positive");
  if (c.heat_steps < 0 || c.frame_stride < 0) throw Error("config: heat counts must be >= 0");
  if (!(c.heat_eps > 0.0)) throw Error("config: heat_eps must be positive");
  if (!c.velocity_data.empty() && !std::filesystem::exists(c.velocity_data)) {
    throw Error("config: velocity data '" + c.velocity_data + "' not found");
  }
  if (!c.tensor_input.empty() && !std::filesystem::is_directory(c.tensor_input)) {
    throw Error("config: tensor input directory '" + c.tensor_input + "' not found");
  }
}

struct PipelineResult {
  FlowModel model;
  MaterialGrid grid;
  std::optional<FlowMapSample> flowmap;
  std::optional<MixingMetricField> field;
  std::optional<TriMesh> mesh;
  std::optional<DiscreteOperatorPair> pair;
  std::optional<SpectralResult> spectrum;
  std::optional<ClusterAssignment> clusters;  // labels per dof
  std::vector<HeatState> heat;
  std::optional<double> leakage;
  std::vector<std::string> written;  // files, in write order
};

using Logger = std::function<void(const std::string&)>;

namespace detail {

inline FlowModel resolve_model(const RunConfig& c) {
  if (!c.velocity_data.empty()) return parse_velocity_data(c.velocity_data);
  return make_model(c.model, c.params);
}

inline std::vector<int> parse_box_set(const std::string& spec, const MaterialGrid& g,
                                      const TriMesh& mesh) {
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(parse_double(tok, "heat_initial box"));
  if (v.size() != 4) throw Error("heat_initial box needs x0,x1,y0,y1");
  std::vector<int> ind(mesh.num_dofs, 0);
  for (int node = 0; node < g.size(); ++node) {
    const Vec2& p = g.nodes[node];
    if (p.x() >= v[0] && p.x() <= v[1] && p.y() >= v[2] && p.y() <= v[3]) {
      ind[mesh.dof_of_vertex[node]] = 1;
    }
  }
  return ind;
}

}  // namespace detail

/// Run the stages up to and including `last`. Files go to
/// `config.output_dir` (when set) in stage order. Failures are rethrown as
/// StageError tagged with the failing stage.
inline PipelineResult run_pipeline(const RunConfig& config, Stage last = Stage::heatflow,
                                   const Logger& log = {}) {
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  Stage current = Stage::flowmap;
  PipelineResult r;
  const bool write = !config.output_dir.empty();
  const std::filesystem::path out(config.output_dir);
  auto path = [&](const std::string& name) { return (out / name).string(); };
  auto note = [&](const std::string& name) { r.written.push_back(name); };

  try {
    validate(config);
    if (write) std::filesystem::create_directories(out);
    r.model = detail::resolve_model(config);
    const Box bounds = config.bounds.value_or(r.model.domain);
    r.grid = MaterialGrid::uniform(bounds, config.nx, config.ny, r.model.periodic);
    auto field_of = [&](const std::string& name, std::vector<double> values,
                        DType dt = DType::f64) {
      return GridField{name, r.grid.nx, r.grid.ny, r.grid.bounds, dt, std::move(values)};
    };

    // flow map and tensors
    if (config.tensor_input.empty()) {
      const double t0 = config.t0.value_or(r.model.t0);
      const double t1 = config.t_end.value_or(r.model.t1);
      const auto times = equidistant_times(t0, t1, config.n_instants);
      StepControl sc;
      sc.max_step = config.max_step;
      sc.adaptive = config.adaptive;
      say("flowmap: " + std::to_string(r.grid.size()) + " nodes, " + std::to_string(times.size()) +
          " instants");
      r.flowmap = sample_flow(r.model, r.grid, times, sc, config.fd_offset);
      if (write) {
        std::ofstream os(path("flowmap_manifest.txt"));
        write_flowmap_manifest(os, *r.flowmap);
        note("flowmap_manifest.txt");
      }
      if (last == Stage::flowmap) return r;

      current = Stage::tensor;
      MetricFieldOptions mo;
      mo.weighting = config.weighting;
      r.field = build_metric_field(*r.flowmap, mo);
    } else {
      current = Stage::tensor;
      say("tensor: loading D_bar from " + config.tensor_input);
      const std::filesystem::path in(config.tensor_input);
      const GridField xx = load_grid_field((in / "d_bar_xx.field").string());
      const GridField xy = load_grid_field((in / "d_bar_xy.field").string());
      const GridField yy = load_grid_field((in / "d_bar_yy.field").string());
      if (xx.nx != r.grid.nx || xx.ny != r.grid.ny) {
        throw Error("tensor input grid " + std::to_string(xx.nx) + "x" + std::to_string(xx.ny) +
                    " does not match nx, ny");
      }
      std::vector<Mat2> d(xx.values.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] << xx.values[i], xy.values[i], xy.values[i], yy.values[i];
      }
      r.field = field_from_tensors(std::move(d));
    }
    if (write && config.tensor_input.empty()) {
      const auto& f = *r.field;
      const std::size_t n = f.D_bar.size();
      std::vector<double> aniso(n), dens(n), eff(n), vx(n), vy(n), dxx(n), dxy(n), dyy(n);
      for (std::size_t i = 0; i < n; ++i) {
        aniso[i] = f.diag[i].log10_anisotropy;
        dens[i] = f.diag[i].density;
        eff[i] = f.diag[i].eff_diffusivity;
        vx[i] = f.diag[i].v_max.x();
        vy[i] = f.diag[i].v_max.y();
        dxx[i] = f.D_bar[i](0, 0);
        dxy[i] = f.D_bar[i](0, 1);
        dyy[i] = f.D_bar[i](1, 1);
      }
      const std::vector<GridField> fields{
          field_of("log10_anisotropy", aniso), field_of("density", dens),
          field_of("eff_diffusivity", eff),    field_of("v_max_x", vx),
          field_of("v_max_y", vy),             field_of("d_bar_xx", dxx),
          field_of("d_bar_xy", dxy),           field_of("d_bar_yy", dyy)};
      for (const auto& gf : fields) {
        save_grid_field(path(gf.name + ".field"), gf);
        note(gf.name + ".field");
      }
      if (config.render) {
        std::optional<std::pair<double, double>> clip;
        if (config.anisotropy_clip > 0.0) clip = std::make_pair(0.0, config.anisotropy_clip);
        save_bytes(path("log10_anisotropy.ppm"), render_heatmap(fields[0], Colormap::viridis, clip));
        save_bytes(path("density.ppm"), render_heatmap(fields[1], Colormap::viridis));
        note("log10_anisotropy.ppm");
        note("density.ppm");
      }
    }
    if (last == Stage::tensor) return r;

    // spectrum
    current = Stage::spectrum;
    r.mesh = build_mesh(r.grid.bounds, r.grid.nx, r.grid.ny, r.grid.periodic);
    r.pair = assemble(*r.mesh, *r.field, config.variant);
    say(std::string("spectrum: ") + to_string(config.variant) + ", " +
        std::to_string(r.mesh->num_dofs) + " dofs, " + std::to_string(config.k_eigen) +
        " eigenpairs");
    SpectrumOptions so;
    so.tol = config.eig_tol;
    so.scan_depth = config.scan_depth;
    so.gap_rule = config.gap_rule;
    r.spectrum = solve_spectrum(*r.pair, config.k_eigen, so);
    const SpectralResult& sp = *r.spectrum;
    if (write) {
      {
        std::ofstream os(path("spectrum.txt"));
        write_spectrum(os, sp.eigenvalues);
      }
      note("spectrum.txt");
      {
        std::ofstream os(path("eigengap.txt"));
        char buf[128];
        std::snprintf(buf, sizeof buf, "k %d\nconfidence %.6g\nrule %s\n", sp.gap.k,
                      sp.gap.confidence, to_string(sp.gap.rule));
        os << buf;
      }
      note("eigengap.txt");
      for (int c = 0; c < sp.count(); ++c) {
        char name[16];
        std::snprintf(name, sizeof name, "w%02d", c + 1);
        const GridField gf = field_of(name, dofs_to_vertices(*r.mesh, sp.eigenfunctions.col(c)));
        save_grid_field(path(std::string(name) + ".field"), gf);
        note(std::string(name) + ".field");
      }
    }
    if (last == Stage::spectrum) return r;

    // clustering
    current = Stage::cluster;
    int k = config.k_clusters;
    if (k == 0) {
      if (sp.gap.confidence < 2.0) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "eigengap at k = %d is ambiguous (confidence %.3g < 2); set k_clusters",
                      sp.gap.k, sp.gap.confidence);
        throw Error(buf);
      }
      k = sp.gap.k;
    }
    say("cluster: k = " + std::to_string(k));
    KMeansOptions ko;
    ko.restarts = config.restarts;
    ko.seed = config.seed;
    r.clusters = kmeans(make_embedding(sp, k, config.drop_first), k, ko);
    if (write) {
      std::vector<double> lab(r.grid.size());
      for (int v = 0; v < r.grid.size(); ++v) lab[v] = r.clusters->labels[r.mesh->dof_of_vertex[v]];
      const GridField gf = field_of("labels", lab, DType::i32);
      save_grid_field(path("labels.field"), gf);
      note("labels.field");
      if (config.render) {
        GridField shown = gf;
        shown.dtype = DType::f64;
        save_bytes(path("labels.ppm"), render_heatmap(shown, Colormap::coolwarm));
        note("labels.ppm");
      }
    }
    if (last == Stage::cluster || config.heat_steps == 0) return r;

    // heat flow
    current = Stage::heatflow;
    std::vector<int> indicator;
    const std::string& init = config.heat_initial;
    if (init.rfind("box:", 0) == 0) {
      indicator = detail::parse_box_set(init.substr(4), r.grid, *r.mesh);
    } else if (init.rfind("cluster:", 0) == 0) {
      const std::string which = init.substr(8);
      std::vector<int> size(k, 0);
      for (int l : r.clusters->labels) ++size[l];
      int id = 0;
      if (which == "smallest") {
        id = static_cast<int>(std::min_element(size.begin(), size.end()) - size.begin());
      } else {
        id = static_cast<int>(detail::parse_double(which, "heat_initial cluster id"));
        if (id < 0 || id >= k) throw Error("heat_initial cluster id out of range");
      }
      indicator.assign(r.mesh->num_dofs, 0);
      for (int d = 0; d < r.mesh->num_dofs; ++d) indicator[d] = r.clusters->labels[d] == id;
    } else {
      throw Error("heat_initial must be cluster:<id|smallest> or box:x0,x1,y0,y1");
    }
    double dt = config.heat_dt;
    if (dt <= 0.0) {
      const double l2 = std::abs(sp.eigenvalues[1]);
      if (!(l2 > 0.0)) throw Error("lambda_2 is zero; set heat_dt");
      dt = 1.0 / (config.heat_eps * l2) / config.heat_steps;
    }
    say("heatflow: " + std::to_string(config.heat_steps) + " steps, dt = " + std::to_string(dt));
    std::ofstream manifest;
    if (write) manifest.open(path("heat_manifest.txt"));
    if (write) manifest << "# frame t min max total_mass\n";
    int frame = 0;
    r.heat = evolve(*r.pair, indicator_vector(indicator), config.heat_eps, dt, config.heat_steps,
                    config.frame_stride, [&](const HeatState& s) {
                      if (!write) return;
                      char name[32];
                      std::snprintf(name, sizeof name, "heat_%04d", frame);
                      const GridField gf = field_of(name, dofs_to_vertices(*r.mesh, s.u));
                      save_grid_field(path(std::string(name) + ".field"), gf);
                      note(std::string(name) + ".field");
                      char buf[160];
                      std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g\n", frame, s.t,
                                    s.u.minCoeff(), s.u.maxCoeff(), s.total_mass);
                      manifest << buf;
                      ++frame;
                    });
    r.leakage = leakage(r.heat.back(), indicator, *r.pair);
    if (write) {
      note("heat_manifest.txt");
      std::ofstream os(path("leakage.txt"));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g\n", *r.leakage);
      os << buf;
      note("leakage.txt");
    }
    return r;
  } catch (const StageError&) {
    throw;
  } catch (const NodeFailures& e) {
    throw StageError(to_string(current), e.what());
  } catch (const std::exception& e) {
    throw StageError(to_string(current), e.what());
  }
}

}  // namespace geomix
