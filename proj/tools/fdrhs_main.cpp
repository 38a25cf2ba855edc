// fdrhs command-line toolkit: synth, fit, baseline, metrics, render, gridsearch.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fdrhs/fdrhs.hpp"

namespace fs = std::filesystem;
using namespace fdrhs;

namespace {

struct LoadedInputs {
  Manifest manifest;
  std::array<int, 3> dims;
  VoxelGrid grid;
  Dataset data;
  std::optional<TruthSets> truth;
};

LoadedInputs load_inputs(const std::string& manifest_path, bool with_data = true) {
  Manifest m = Manifest::load(manifest_path);
  const std::array<int, 3> dims = m.get_dims();
  VoxelGrid grid = read_mask_csv(m.resolve("mask"), dims);

  Dataset data;
  if (with_data) {
    data.y = read_labels_csv(m.resolve("labels"));
    const std::string format = m.get_or("data_format", "csv");
    if (format == "raw64")
      data.x = read_data_raw64(m.resolve("data"), static_cast<long>(data.y.size()),
                               static_cast<long>(grid.size()));
    else if (format == "csv")
      data.x = read_data_csv(m.resolve("data"));
    else
      throw io_error("unknown data_format '" + format + "'");
    if (static_cast<std::size_t>(data.x.rows()) != data.y.size())
      throw io_error("data rows do not match label count");
    if (static_cast<std::size_t>(data.x.cols()) != grid.size())
      throw io_error("data columns do not match mask voxel count");
    data.validate();
  }

  std::optional<TruthSets> truth;
  if (m.has("truth")) {
    truth = read_truth_csv(m.resolve("truth"));
    if (truth->p != static_cast<int>(grid.size()))
      throw io_error("truth voxel count does not match mask");
  }
  return LoadedInputs{std::move(m), dims, std::move(grid), std::move(data), std::move(truth)};
}

std::vector<FitRow> make_fit_rows(const ZScores& zs, const FitState& state,
                                  const std::vector<int>& selected) {
  std::vector<FitRow> rows(static_cast<std::size_t>(zs.z.size()));
  for (Eigen::Index i = 0; i < zs.z.size(); ++i) {
    FitRow& r = rows[static_cast<std::size_t>(i)];
    r.t = zs.t[i];
    r.z = zs.z[i];
    r.beta = state.beta[i];
    r.c = state.c[i];
    r.lfdr = state.lfdr[i];
  }
  for (int v : selected) {
    rows[static_cast<std::size_t>(v)].selected = true;
    rows[static_cast<std::size_t>(v)].group = zs.z[v] <= 0 ? "bias" : "lesion";
  }
  return rows;
}

std::array<int, 3> parse_triple(const std::string& s, const std::string& what) {
  const auto f = io::split_csv_line(s);
  if (f.size() != 3) throw CLI::ValidationError(what, "expected three comma-separated integers");
  return {static_cast<int>(io::parse_long(f[0], what)), static_cast<int>(io::parse_long(f[1], what)),
          static_cast<int>(io::parse_long(f[2], what))};
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  const auto f = io::split_csv_line(s);
  if (f.empty()) throw CLI::ValidationError(what, "expected a comma-separated list");
  std::vector<double> out;
  for (const auto& v : f) out.push_back(io::parse_double(v, what));
  return out;
}

// "cx,cy,cz,radius,effect"
template <typename T>
T parse_region(const std::string& s, const std::string& what) {
  const auto f = io::split_csv_line(s);
  if (f.size() != 5)
    throw CLI::ValidationError(what, "expected cx,cy,cz,radius,effect");
  T r;
  r.center = {static_cast<int>(io::parse_long(f[0], what)), static_cast<int>(io::parse_long(f[1], what)),
              static_cast<int>(io::parse_long(f[2], what))};
  r.radius = io::parse_double(f[3], what);
  r.effect = io::parse_double(f[4], what);
  return r;
}

void write_fit_outputs(const fs::path& dir, const std::string& stem, const VoxelGrid& grid,
                       const PipelineResult& r) {
  write_fit_csv((dir / (stem + ".csv")).string(), grid, make_fit_rows(r.zs, r.fit.state, r.fit.selected));
  write_trace_csv((dir / (stem + "_trace.csv")).string(), r.fit.state.objective_trace);
}

int run_synth(const std::string& out_dir, const PhantomSpec& spec, bool raw64,
              const std::string& connectivity) {
  fs::create_directories(out_dir);
  PhantomData ph = generate_phantom(spec);
  const fs::path dir(out_dir);

  if (raw64)
    write_data_raw64((dir / "data.f64").string(), ph.data.x);
  else
    write_data_csv((dir / "data.csv").string(), ph.data.x);
  write_labels_csv((dir / "labels.csv").string(), ph.data.y);
  write_mask_csv((dir / "mask.csv").string(), ph.grid);
  write_truth_csv((dir / "truth.csv").string(), static_cast<int>(ph.grid.size()), ph.lesion_truth,
                  ph.bias_truth);

  Manifest m;
  m.set("data", raw64 ? "data.f64" : "data.csv");
  m.set("data_format", raw64 ? "raw64" : "csv");
  m.set("labels", "labels.csv");
  m.set("mask", "mask.csv");
  m.set("truth", "truth.csv");
  std::ostringstream dims;
  dims << spec.dims[0] << ',' << spec.dims[1] << ',' << spec.dims[2];
  m.set("dims", dims.str());
  m.set("n_subjects", std::to_string(2 * spec.n_per_class));
  m.set("connectivity", connectivity);
  m.set("seed", std::to_string(spec.seed));
  m.save((dir / "manifest.txt").string());

  std::cerr << "synth: p=" << ph.grid.size() << " lesion=" << ph.lesion_truth.size()
            << " bias=" << ph.bias_truth.size() << " subjects=" << 2 * spec.n_per_class << "\n";
  return 0;
}

struct FitFlags {
  HsParams params;
  std::string connectivity = "face6";
  bool constant_prior = false;
  bool theoretical_null = false;
  double bandwidth = 0;
  int folds = 0;
};

PipelineOptions make_options(const FitFlags& flags) {
  PipelineOptions opt;
  opt.connectivity = connectivity_from_string(flags.connectivity);
  opt.model.theoretical_null = flags.theoretical_null;
  opt.model.bandwidth = flags.bandwidth;
  opt.constant_prior = flags.constant_prior;
  return opt;
}

int run_fit(const std::string& manifest_path, const std::string& out_dir, const FitFlags& flags) {
  LoadedInputs in = load_inputs(manifest_path);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const PipelineOptions opt = make_options(flags);

  PipelineResult full = run_fdrhs(in.data, in.grid, flags.params, opt);
  for (const auto& w : full.fit.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "fit: " << (full.fit.converged ? "converged" : "did not converge") << " after "
            << full.fit.iterations << " EM iterations; selected " << full.fit.selected.size()
            << " (" << full.fit.group_bias.size() << " bias, " << full.fit.group_lesion.size()
            << " lesion)\n";
  write_fit_outputs(dir, "fit", in.grid, full);

  for (int k = 0; k < flags.folds; ++k) {
    const Dataset sub = subset_subjects(in.data, stratified_fold_keep(in.data.y, flags.folds, k));
    PipelineResult r = run_fdrhs(sub, in.grid, flags.params, opt);
    write_fit_outputs(dir, "fit_fold" + std::to_string(k + 1), in.grid, r);
  }
  return 0;
}

int run_baseline(const std::string& manifest_path, const std::string& out_dir,
                 const std::string& method, double p_threshold, double q, const FitFlags& flags) {
  LoadedInputs in = load_inputs(manifest_path);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const PipelineOptions opt = make_options(flags);

  const auto run_one = [&](const Dataset& data, const std::string& stem) {
    ZScores zs = compute_zscores(data);
    BaselineResult res;
    Eigen::VectorXd beta_col = Eigen::VectorXd::Zero(zs.z.size());
    Eigen::VectorXd c_col = Eigen::VectorXd::Zero(zs.z.size());
    if (method == "ttest") {
      res = ttest_select(zs.t, zs.df, p_threshold);
    } else if (method == "bh") {
      res = bh_select(two_sided_p(zs.t, zs.df), q);
    } else {
      TwoGroupsModel model = make_two_groups_model(zs.z, opt.model);
      res = localfdr_select(zs.z, model, flags.params.gamma);
      beta_col.setConstant(logit(model.cbar()));
      c_col.setConstant(sigmoid(logit(model.cbar())));  // matches the constant-prior fit path
    }
    std::vector<FitRow> rows(static_cast<std::size_t>(zs.z.size()));
    for (Eigen::Index i = 0; i < zs.z.size(); ++i) {
      FitRow& r = rows[static_cast<std::size_t>(i)];
      r.t = zs.t[i];
      r.z = zs.z[i];
      r.beta = beta_col[i];
      r.c = c_col[i];
      r.lfdr = res.scores[i];
    }
    for (int v : res.selected) {
      rows[static_cast<std::size_t>(v)].selected = true;
      rows[static_cast<std::size_t>(v)].group = zs.z[v] <= 0 ? "bias" : "lesion";
    }
    write_fit_csv((dir / (stem + ".csv")).string(), in.grid, rows);
    std::cerr << stem << ": selected " << res.selected.size() << "\n";
  };

  run_one(in.data, "baseline_" + method);
  for (int k = 0; k < flags.folds; ++k) {
    const Dataset sub = subset_subjects(in.data, stratified_fold_keep(in.data.y, flags.folds, k));
    run_one(sub, "baseline_" + method + "_fold" + std::to_string(k + 1));
  }
  return 0;
}

int run_metrics(const std::string& manifest_path, const std::vector<std::string>& selection_files,
                const std::string& denominator, const std::string& out_file) {
  LoadedInputs in = load_inputs(manifest_path, /*with_data=*/false);
  if (selection_files.empty()) throw io_error("metrics needs at least one --selection file");

  std::vector<FitTable> tables;
  for (const auto& f : selection_files) {
    FitTable t = read_fit_csv(f);
    if (t.rows.size() != in.grid.size() || t.coords != in.grid.coords())
      throw io_error("mismatched voxel universe in " + f);
    tables.push_back(std::move(t));
  }

  const EdgeDenominator mode =
      denominator == "oracle" ? EdgeDenominator::oracle : EdgeDenominator::paper;
  const int p = static_cast<int>(in.grid.size());

  std::vector<std::array<std::string, 3>> report;
  const auto add = [&](const std::string& metric, const std::string& group, double value) {
    report.push_back({metric, group, io::fmt_double(value)});
  };

  if (in.truth) {
    std::vector<int> truth_all = in.truth->lesion;
    truth_all.insert(truth_all.end(), in.truth->bias.begin(), in.truth->bias.end());
    std::sort(truth_all.begin(), truth_all.end());
    double fdp_all = 0, pow_all = 0, fdp_les = 0, pow_les = 0, fdp_bias = 0, pow_bias = 0;
    for (const auto& t : tables) {
      const auto [fa, pa] = fdp_power(t.selected(), truth_all, p);
      const auto [fl, pl] = fdp_power(t.selected_group("lesion"), in.truth->lesion, p);
      const auto [fb, pb] = fdp_power(t.selected_group("bias"), in.truth->bias, p);
      fdp_all += fa;
      pow_all += pa;
      fdp_les += fl;
      pow_les += pl;
      fdp_bias += fb;
      pow_bias += pb;
    }
    const double k = static_cast<double>(tables.size());
    add("fdp", "all", fdp_all / k);
    add("power", "all", pow_all / k);
    add("fdp", "lesion", fdp_les / k);
    add("power", "lesion", pow_les / k);
    add("fdp", "bias", fdp_bias / k);
    add("power", "bias", pow_bias / k);
  }

  if (tables.size() >= 2) {
    std::vector<std::vector<int>> all, les, bias;
    for (const auto& t : tables) {
      all.push_back(t.selected());
      les.push_back(t.selected_group("lesion"));
      bias.push_back(t.selected_group("bias"));
    }
    add("mdc", "all", mdc(all));
    add("mdc", "lesion", mdc(les));
    add("mdc", "bias", mdc(bias));
  }

  SelectionFolds folds;
  for (const auto& t : tables)
    folds.folds.push_back({t.selected_group("lesion"), t.selected_group("bias")});
  const auto [eds_plus, eds_minus] = edge_density_3d(folds, in.grid, mode);
  add("3ded", "lesion", eds_plus);
  add("3ded", "bias", eds_minus);

  write_metrics_csv(out_file, report);
  return 0;
}

int run_render(const std::string& manifest_path, const std::string& fit_file,
               const std::string& axis, int slice, const std::string& out_prefix) {
  LoadedInputs in = load_inputs(manifest_path, /*with_data=*/false);
  FitTable table = read_fit_csv(fit_file);
  if (table.rows.size() != in.grid.size() || table.coords != in.grid.coords())
    throw io_error("fit file does not match the manifest mask");
  int ax;
  if (axis == "i") ax = 0;
  else if (axis == "j") ax = 1;
  else if (axis == "k") ax = 2;
  else throw CLI::ValidationError("--axis", "must be i, j or k");

  const SliceImage img = render_slice(in.grid, table.rows, ax, slice);
  write_pgm(out_prefix + ".pgm", img);
  write_slice_csv(out_prefix + ".csv", img);
  return 0;
}

struct GridRow {
  double lambda_pro = 0, lambda_les = 0, lambda_proles = 0, gamma = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double fdp = std::numeric_limits<double>::quiet_NaN();
  double power = std::numeric_limits<double>::quiet_NaN();
  double mdc_lesion = std::numeric_limits<double>::quiet_NaN();
  double mdc_bias = std::numeric_limits<double>::quiet_NaN();
};

int run_gridsearch(const std::string& manifest_path, const std::string& out_dir,
                   const std::vector<double>& pro_list, const std::vector<double>& les_list,
                   const std::vector<double>& proles_list, const std::vector<double>& gamma_list,
                   const std::string& objective, double power_target, int folds, int jobs,
                   const FitFlags& flags) {
  if (objective != "min-fdp-at-power" && objective != "max-mdc")
    throw CLI::ValidationError("--objective", "must be min-fdp-at-power or max-mdc");
  const bool want_mdc = objective == "max-mdc";
  LoadedInputs in = load_inputs(manifest_path);
  if (!want_mdc && !in.truth) throw io_error("min-fdp-at-power needs a truth file in the manifest");
  if (want_mdc && folds < 2) throw io_error("max-mdc needs --folds >= 2");
  fs::create_directories(out_dir);
  const PipelineOptions opt = make_options(flags);

  // statistics do not depend on the searched parameters: compute shared
  // contexts (full data, and per fold for mdc) once
  struct Context {
    ZScores zs;
    TwoGroupsModel model;
    SubgraphSplit split;
  };
  const auto make_context = [&](const Dataset& data) {
    ZScores zs = compute_zscores(data);
    TwoGroupsModel model = make_two_groups_model(zs.z, opt.model);
    LatticeGraph graph = build_graph(in.grid, opt.connectivity);
    SubgraphSplit split = split_subgraphs(
        graph, std::span<const double>(zs.z.data(), static_cast<std::size_t>(zs.z.size())));
    return Context{std::move(zs), std::move(model), std::move(split)};
  };

  std::vector<Context> contexts;
  if (want_mdc) {
    for (int k = 0; k < folds; ++k)
      contexts.push_back(
          make_context(subset_subjects(in.data, stratified_fold_keep(in.data.y, folds, k))));
  } else {
    contexts.push_back(make_context(in.data));
  }

  std::vector<int> truth_all;
  if (in.truth) {
    truth_all = in.truth->lesion;
    truth_all.insert(truth_all.end(), in.truth->bias.begin(), in.truth->bias.end());
    std::sort(truth_all.begin(), truth_all.end());
  }

  std::vector<GridRow> rows;
  for (double lp : pro_list)
    for (double ll : les_list)
      for (double lpl : proles_list)
        for (double g : gamma_list) {
          GridRow r;
          r.lambda_pro = lp;
          r.lambda_les = ll;
          r.lambda_proles = lpl;
          r.gamma = g;
          rows.push_back(r);
        }

  const int p = static_cast<int>(in.grid.size());
  std::atomic<std::size_t> cursor{0};
  const auto worker = [&] {
    for (std::size_t i; (i = cursor.fetch_add(1)) < rows.size();) {
      GridRow& r = rows[i];
      HsParams params = flags.params;
      params.lambda_pro = r.lambda_pro;
      params.lambda_les = r.lambda_les;
      params.lambda_proles = r.lambda_proles;
      params.gamma = r.gamma;
      try {
        if (want_mdc) {
          std::vector<std::vector<int>> les, bias;
          for (const auto& ctx : contexts) {
            FitResult fit = fit_em(ctx.zs.z, ctx.model, ctx.split, params);
            les.push_back(fit.group_lesion);
            bias.push_back(fit.group_bias);
          }
          r.mdc_lesion = mdc(les);
          r.mdc_bias = mdc(bias);
          r.value = 0.5 * (r.mdc_lesion + r.mdc_bias);
        } else {
          const Context& ctx = contexts.front();
          FitResult fit = fit_em(ctx.zs.z, ctx.model, ctx.split, params);
          const auto [fdp, power] = fdp_power(fit.selected, truth_all, p);
          r.fdp = fdp;
          r.power = power;
          r.value = power >= power_target ? fdp : 2.0 - power;
        }
      } catch (const std::exception& e) {
        // per-combination failures are recorded as NaN rows, not fatal
        r.value = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };

  const int n_jobs = std::max(1, jobs);
  if (n_jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const auto better = [&](const GridRow& a, const GridRow& b) {
    const bool an = std::isnan(a.value), bn = std::isnan(b.value);
    if (an != bn) return bn;  // NaN rows sink to the bottom
    if (!an && a.value != b.value) return want_mdc ? a.value > b.value : a.value < b.value;
    return std::tie(a.lambda_pro, a.lambda_les, a.lambda_proles, a.gamma) <
           std::tie(b.lambda_pro, b.lambda_les, b.lambda_proles, b.gamma);
  };
  std::stable_sort(rows.begin(), rows.end(), better);

  auto out = io::open_output((fs::path(out_dir) / "gridsearch.csv").string());
  out << "lambda_pro,lambda_les,lambda_proles,gamma,objective,value,fdp,power,mdc_lesion,mdc_bias\n";
  for (const auto& r : rows) {
    out << io::fmt_double(r.lambda_pro) << ',' << io::fmt_double(r.lambda_les) << ','
        << io::fmt_double(r.lambda_proles) << ',' << io::fmt_double(r.gamma) << ',' << objective
        << ',' << io::fmt_double(r.value) << ',' << io::fmt_double(r.fdp) << ','
        << io::fmt_double(r.power) << ',' << io::fmt_double(r.mdc_lesion) << ','
        << io::fmt_double(r.mdc_bias) << '\n';
  }
  if (!rows.empty() && !std::isnan(rows.front().value)) {
    std::cerr << "gridsearch: best lambda_pro=" << rows.front().lambda_pro
              << " lambda_les=" << rows.front().lambda_les
              << " lambda_proles=" << rows.front().lambda_proles << " gamma=" << rows.front().gamma
              << " value=" << rows.front().value << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FDR-HS: empirical-Bayes selection of heterogenous voxel features"};
  app.require_subcommand(1);

  std::string manifest, out_dir = ".", connectivity = "face6";
  std::uint64_t seed = 0;
  int jobs = 1;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic phantom dataset");
  std::string dims_str = "24,24,24";
  int n_per_class = 40;
  double noise_sd = 1.0;
  bool raw64 = false, null_phantom = false;
  std::vector<std::string> lesion_strs, shell_strs;
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--dims", dims_str, "grid dims a,b,c");
  synth->add_option("--n-per-class", n_per_class, "subjects per class");
  synth->add_option("--noise-sd", noise_sd, "noise standard deviation");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--lesion", lesion_strs, "lesion blob cx,cy,cz,radius,effect (repeatable)");
  synth->add_option("--bias-shell", shell_strs, "bias shell cx,cy,cz,radius,effect (repeatable)");
  synth->add_flag("--null-phantom", null_phantom, "no planted effects (truth all null)");
  synth->add_flag("--raw64", raw64, "write data as raw little-endian float64");
  synth->add_option("--connectivity", connectivity, "face6|moore26 (recorded in manifest)");

  // shared fit flags
  FitFlags ff;
  const auto add_fit_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lambda-pro", ff.params.lambda_pro, "penalty on bias-side edges");
    cmd->add_option("--lambda-les", ff.params.lambda_les, "penalty on lesion-side edges");
    cmd->add_option("--lambda-proles", ff.params.lambda_proles, "penalty on bridging edges");
    cmd->add_option("--gamma", ff.params.gamma, "posterior selection threshold");
    cmd->add_option("--em-max-iter", ff.params.em_max_iter, "EM iteration cap");
    cmd->add_option("--em-tol", ff.params.em_tol, "EM relative objective tolerance");
    cmd->add_option("--rho", ff.params.solver.rho, "ADMM penalty parameter (<=0: auto)");
    cmd->add_option("--admm-max-iter", ff.params.solver.max_iter, "ADMM iteration cap");
    cmd->add_option("--bandwidth", ff.bandwidth, "KDE bandwidth (<=0: Silverman)");
    cmd->add_flag("--theoretical-null", ff.theoretical_null, "fix f0 = N(0,1)");
    cmd->add_option("--connectivity", ff.connectivity, "face6|moore26");
    cmd->add_option("--folds", ff.folds, "also fit K stratified subject folds");
  };

  auto* fit = app.add_subcommand("fit", "run the full FDR-HS pipeline");
  fit->add_option("--manifest", manifest, "manifest file")->required();
  fit->add_option("--out", out_dir, "output directory");
  add_fit_flags(fit);
  fit->add_flag("--constant-prior", ff.constant_prior,
                "skip the EM and keep the constant prior (LocalFDR posterior)");

  auto* baseline = app.add_subcommand("baseline", "run a univariate baseline selector");
  std::string method;
  double p_threshold = 0.05, q = 0.05;
  baseline->add_option("--manifest", manifest, "manifest file")->required();
  baseline->add_option("--out", out_dir, "output directory");
  baseline->add_option("--method", method, "ttest|bh|localfdr")
      ->required()
      ->check(CLI::IsMember({"ttest", "bh", "localfdr"}));
  baseline->add_option("--p-threshold", p_threshold, "two-sided p threshold (ttest)");
  baseline->add_option("--q", q, "BH q-value");
  add_fit_flags(baseline);

  auto* metrics = app.add_subcommand("metrics", "evaluate selection files");
  std::vector<std::string> selection_files;
  std::string denominator = "paper", metrics_out = "metrics.csv";
  metrics->add_option("--manifest", manifest, "manifest file (mask, dims, truth)")->required();
  metrics->add_option("--selection", selection_files, "fit/baseline CSV (repeat for folds)")
      ->required();
  metrics->add_option("--denominator", denominator, "3dED denominator: paper|oracle")
      ->check(CLI::IsMember({"paper", "oracle"}));
  metrics->add_option("--out", metrics_out, "metrics CSV path");

  auto* render = app.add_subcommand("render", "render a slice of a fit as PGM + CSV");
  std::string fit_file, axis = "k", render_prefix = "slice";
  int slice = 0;
  render->add_option("--manifest", manifest, "manifest file")->required();
  render->add_option("--fit", fit_file, "fit CSV")->required();
  render->add_option("--axis", axis, "slice axis: i|j|k");
  render->add_option("--slice", slice, "slice index");
  render->add_option("--out", render_prefix, "output prefix (.pgm/.csv appended)");

  auto* gridsearch = app.add_subcommand("gridsearch", "exhaustive hyper-parameter search");
  std::string pro_list = "0.5", les_list = "0.3", proles_list = "1", gamma_list = "0.2";
  std::string objective = "min-fdp-at-power";
  double power_target = 0.5;
  int gs_folds = 5;
  gridsearch->add_option("--manifest", manifest, "manifest file")->required();
  gridsearch->add_option("--out", out_dir, "output directory");
  gridsearch->add_option("--lambda-pro-list", pro_list, "candidates, comma-separated");
  gridsearch->add_option("--lambda-les-list", les_list, "candidates, comma-separated");
  gridsearch->add_option("--lambda-proles-list", proles_list, "candidates, comma-separated");
  gridsearch->add_option("--gamma-list", gamma_list, "candidates, comma-separated");
  gridsearch->add_option("--objective", objective, "min-fdp-at-power|max-mdc");
  gridsearch->add_option("--power-target", power_target, "power floor for min-fdp-at-power");
  gridsearch->add_option("--folds", gs_folds, "folds for max-mdc");
  gridsearch->add_option("--jobs", jobs, "parallel fits");
  add_fit_flags(gridsearch);

  try {
    app.parse(argc, argv);

    if (synth->parsed()) {
      PhantomSpec spec;
      spec.dims = parse_triple(dims_str, "--dims");
      spec.n_per_class = n_per_class;
      spec.noise_sd = noise_sd;
      spec.seed = seed;
      if (null_phantom) {
        // whole grid is null; truth file records no non-null voxels
      } else if (!lesion_strs.empty() || !shell_strs.empty()) {
        for (const auto& s : lesion_strs)
          spec.lesion_blobs.push_back(parse_region<PhantomSpec::Blob>(s, "--lesion"));
        for (const auto& s : shell_strs)
          spec.bias_shells.push_back(parse_region<PhantomSpec::Shell>(s, "--bias-shell"));
      } else {
        spec.lesion_blobs = {{{6, 6, 6}, 2.6, 1.2}, {{17, 17, 17}, 2.6, 1.2}};
        spec.bias_shells = {{{6, 17, 12}, 2.0, 0.9}};
      }
      return run_synth(out_dir, spec, raw64, connectivity);
    }
    if (fit->parsed()) return run_fit(manifest, out_dir, ff);
    if (baseline->parsed()) return run_baseline(manifest, out_dir, method, p_threshold, q, ff);
    if (metrics->parsed()) return run_metrics(manifest, selection_files, denominator, metrics_out);
    if (render->parsed()) return run_render(manifest, fit_file, axis, slice, render_prefix);
    if (gridsearch->parsed())
      return run_gridsearch(manifest, out_dir, parse_list(pro_list, "--lambda-pro-list"),
                            parse_list(les_list, "--lambda-les-list"),
                            parse_list(proles_list, "--lambda-proles-list"),
                            parse_list(gamma_list, "--gamma-list"), objective, power_target,
                            gs_folds, jobs, ff);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
