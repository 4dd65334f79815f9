// geomix command-line driver.
//
//   geomix flowmap|tensor|spectrum|cluster|heatflow [options]
//   geomix benchmark <double_gyre|cylinder|bickley> [options]
//   geomix render --input F --output P [--colormap C] [--clip LO HI]
//
// Every subcommand accepts --config FILE (INI/TOML, keys = long flag names).

#include "geomix/geomix.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using geomix::RunConfig;

struct CliState {
  RunConfig cfg;
  std::vector<std::string> params;  // key=value
  std::vector<double> bounds;
  double t0 = 0.0, t_end = 0.0;
  std::string variant = "mixing_lb";
  std::string weighting = "uniform";
  std::string gap_rule = "first_significant";
  bool quiet = false;
};

void add_run_options(CLI::App* sub, CliState& st) {
  RunConfig& c = st.cfg;
  sub->add_option("--model", c.model, "double_gyre, cylinder, bickley, rigid_rotation, linear_shear, identity")
      ->capture_default_str();
  sub->add_option("--velocity-data", c.velocity_data, "gridded velocity file (replaces --model)");
  sub->add_option("--param", st.params, "model parameter override key=value (repeatable)");
  sub->add_option("--nx", c.nx, "material grid nodes along x")->capture_default_str();
  sub->add_option("--ny", c.ny, "material grid nodes along y")->capture_default_str();
  sub->add_option("--bounds", st.bounds, "xmin xmax ymin ymax (default: model domain)")
      ->expected(4);
  sub->add_option("--t0", st.t0, "first sampled instant (default: model start)");
  sub->add_option("--t-end", st.t_end, "last sampled instant (default: model end)");
  sub->add_option("--n-instants", c.n_instants, "number of equidistant instants")->capture_default_str();
  sub->add_option("--max-step", c.max_step, "largest integrator step")->capture_default_str();
  sub->add_flag("--adaptive", c.adaptive, "use the adaptive Dormand-Prince pair");
  sub->add_option("--fd-offset", c.fd_offset, "Jacobian finite-difference offset (0: spacing/100)");
  sub->add_option("--weighting", st.weighting, "uniform or trapezoidal")->capture_default_str();
  sub->add_option("--variant", st.variant, "mixing_lb or dynamic_laplacian")->capture_default_str();
  sub->add_option("--k-eigen", c.k_eigen, "number of eigenpairs")->capture_default_str();
  sub->add_option("--scan-depth", c.scan_depth, "eigengap scan depth")->capture_default_str();
  sub->add_option("--gap-rule", st.gap_rule, "first_significant or relative_jump")->capture_default_str();
  sub->add_option("--eig-tol", c.eig_tol, "relative eigen-residual tolerance")->capture_default_str();
  sub->add_option("--tensor-input", c.tensor_input, "directory with d_bar_* fields from a tensor run");
  sub->add_option("--k-clusters", c.k_clusters, "number of clusters (0: eigengap)")->capture_default_str();
  sub->add_option("--restarts", c.restarts, "k-means restarts")->capture_default_str();
  sub->add_option("--seed", c.seed, "k-means seed")->capture_default_str();
  sub->add_flag("--drop-first", c.drop_first, "leave the flat eigenfunction out of the embedding");
  sub->add_option("--heat-eps", c.heat_eps, "diffusivity")->capture_default_str();
  sub->add_option("--heat-dt", c.heat_dt, "time step (0: 1/(eps |lambda_2|) / heat-steps)");
  sub->add_option("--heat-steps", c.heat_steps, "number of implicit Euler steps")->capture_default_str();
  sub->add_option("--frame-stride", c.frame_stride, "write every n-th state")->capture_default_str();
  sub->add_option("--heat-initial", c.heat_initial, "cluster:<id|smallest> or box:x0,x1,y0,y1")
      ->capture_default_str();
  sub->add_option("--output", c.output_dir, "output directory")->required();
  sub->add_flag("!--no-render", c.render, "skip PPM previews");
  sub->add_option("--anisotropy-clip", c.anisotropy_clip, "upper clip for the anisotropy image");
  sub->add_flag("--quiet", st.quiet, "no progress messages");
}

void finalize(CLI::App* sub, CliState& st) {
  RunConfig& c = st.cfg;
  for (const auto& kv : st.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw geomix::Error("--param expects key=value, got '" + kv + "'");
    c.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  if (st.bounds.size() == 4) c.bounds = geomix::Box{st.bounds[0], st.bounds[1], st.bounds[2], st.bounds[3]};
  if (sub->count("--t0")) c.t0 = st.t0;
  if (sub->count("--t-end")) c.t_end = st.t_end;
  c.variant = geomix::parse_variant(st.variant);
  c.gap_rule = geomix::parse_gap_rule(st.gap_rule);
  if (st.weighting == "uniform") {
    c.weighting = geomix::TimeWeighting::uniform;
  } else if (st.weighting == "trapezoidal") {
    c.weighting = geomix::TimeWeighting::trapezoidal;
  } else {
    throw geomix::Error("unknown weighting '" + st.weighting + "'");
  }
}

void print_summary(const geomix::PipelineResult& r, const RunConfig& c) {
  if (r.spectrum) {
    const auto& sp = *r.spectrum;
    std::printf("spectrum (%s):\n", geomix::to_string(c.variant));
    for (int i = 0; i < sp.count(); ++i) std::printf("  %3d  % .9e\n", i + 1, sp.eigenvalues[i]);
    if (sp.count() >= 3) {
      std::printf("eigengap: k = %d, confidence %.3g (%s)%s\n", sp.gap.k, sp.gap.confidence,
                  geomix::to_string(sp.gap.rule),
                  sp.gap.confidence < 2.0 ? "  [ambiguous, inspect the spectrum]" : "");
    }
  }
  if (r.clusters) {
    std::printf("clusters: k = %d, inertia %.6g\n", static_cast<int>(r.clusters->centroids.rows()),
                r.clusters->inertia);
  }
  if (r.leakage) std::printf("leakage: %.6g\n", *r.leakage);
  if (!c.output_dir.empty()) std::printf("wrote %zu files to %s\n", r.written.size(), c.output_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry of mixing: harmonic-mean metrics, spectra and coherent structures"};
  app.set_config("--config", "", "INI/TOML file with option values");
  app.require_subcommand(1);

  CliState st;
  const std::map<std::string, geomix::Stage> stages{{"flowmap", geomix::Stage::flowmap},
                                                    {"tensor", geomix::Stage::tensor},
                                                    {"spectrum", geomix::Stage::spectrum},
                                                    {"cluster", geomix::Stage::cluster},
                                                    {"heatflow", geomix::Stage::heatflow}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, stage] : stages) {
    subs[name] = app.add_subcommand(name, "run the pipeline up to the " + name + " stage");
    add_run_options(subs[name], st);
  }

  std::string bench_name;
  CLI::App* bench = app.add_subcommand("benchmark", "run a benchmark flow with its preset protocol");
  bench->add_option("name", bench_name, "double_gyre, cylinder or bickley")->required();
  add_run_options(bench, st);

  std::string r_in, r_out, r_cmap = "viridis";
  std::vector<double> r_clip;
  CLI::App* render = app.add_subcommand("render", "render a grid field as a PPM image");
  render->add_option("--input", r_in, "grid field file")->required();
  render->add_option("--output", r_out, "PPM output path")->required();
  render->add_option("--colormap", r_cmap, "gray, viridis or coolwarm")->capture_default_str();
  render->add_option("--clip", r_clip, "lower and upper value bound")->expected(2);

  // A benchmark run starts from the preset; the name is the first positional.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "benchmark") {
      try {
        st.cfg = geomix::benchmark_preset(argv[i + 1]);
      } catch (const geomix::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
      }
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (render->parsed()) {
      const geomix::GridField f = geomix::load_grid_field(r_in);
      std::optional<std::pair<double, double>> clip;
      if (r_clip.size() == 2) clip = std::make_pair(r_clip[0], r_clip[1]);
      geomix::save_bytes(r_out, geomix::render_heatmap(f, geomix::parse_colormap(r_cmap), clip));
      return 0;
    }
    CLI::App* used = bench->parsed() ? bench : nullptr;
    geomix::Stage last = geomix::Stage::heatflow;
    for (const auto& [name, stage] : stages) {
      if (subs[name]->parsed()) {
        used = subs[name];
        last = stage;
      }
    }
    finalize(used, st);
    const bool quiet = st.quiet;
    const auto result = geomix::run_pipeline(st.cfg, last, [quiet](const std::string& s) {
      if (!quiet) std::fprintf(stderr, "%s\n", s.c_str());
    });
    print_summary(result, st.cfg);
  } catch (const geomix::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: [config] %s\n", e.what());
    return 2;
  }
  return 0;
}
