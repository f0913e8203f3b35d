#include "medmagma/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <thread>

#include "medmagma/emdriver.hpp"
#include "medmagma/errors.hpp"
#include "medmagma/graphmetrics.hpp"
#include "medmagma/ingest.hpp"
#include "medmagma/random.hpp"
#include "medmagma/synth.hpp"

namespace medmagma::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// CLI11 consumes the argument vector back to front.
void parse_args(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(std::move(reversed));
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

fs::path default_outdir(const std::string& command) {
  if (const char* root = std::getenv("MEDMAGMA_OUTPUT_ROOT")) {
    return fs::path(root) / command;
  }
  return fs::path("out") / command;
}

void write_text_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) {
  write_text_atomically(path, j.dump(2) + "\n");
}

std::string matrix_csv_text(const Matrix& m, char delimiter = ',') {
  std::ostringstream out;
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << delimiter;
    }
    out << "\n";
  }
  return out.str();
}

void write_matrix(const fs::path& path, const Matrix& m) {
  write_text_atomically(path, matrix_csv_text(m));
}

// Both orientations of every nonzero off-diagonal score, so the file is
// symmetric as written.
std::string edge_list_text(const Matrix& scores) {
  std::ostringstream out;
  char buf[64];
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index j = 0; j < scores.cols(); ++j) {
      if (i != j && scores(i, j) != 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", scores(i, j));
        out << i << "\t" << j << "\t" << buf << "\n";
      }
    }
  }
  return out.str();
}

std::vector<std::string> load_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
    if (!line.empty()) labels.push_back(line);
  }
  if (labels.empty()) throw IoError(path + ": no labels");
  return labels;
}

std::vector<int> encode_labels(const std::vector<std::string>& raw) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(raw.size());
  for (const auto& s : raw) {
    auto [it, fresh] = ids.emplace(s, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

// The config file is either a flat settings object, an object with one
// section per command, or a previously written manifest (command + config).
json load_config_json(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  if (j.contains("command") && j.contains("config")) {
    if (j["command"] != command) {
      throw IoError(path + ": manifest is for command '" +
                    j["command"].get<std::string>() + "', not '" + command +
                    "'");
    }
    return j["config"];
  }
  if (j.contains(command) && j[command].is_object()) return j[command];
  return j;
}

template <typename T>
void maybe_set(T& target, const json& j, const char* key) {
  if (j.contains(key)) target = j[key].get<T>();
}

struct IoFlags {
  std::string config_path;
  std::string delimiter = ",";
  bool no_header = false;
  bool no_row_names = false;
  std::string label_column;
  std::string format;  // "", "csv", "mtx"

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file (or a manifest)");
    app.add_option("--delimiter", delimiter, "CSV delimiter")->default_str(",");
    app.add_flag("--no-header", no_header, "CSV has no header row");
    app.add_flag("--no-row-names", no_row_names, "CSV has no row-name column");
    app.add_option("--label-column", label_column,
                   "header name of the categorical column");
    app.add_option("--format", format, "input format: csv or mtx")
        ->check(CLI::IsMember({"csv", "mtx"}));
  }

  bool is_mtx(const std::string& path) const {
    if (format == "mtx") return true;
    if (format == "csv") return false;
    return fs::path(path).extension() == ".mtx";
  }

  DenseCsvOptions csv_options() const {
    DenseCsvOptions opt;
    if (!delimiter.empty()) opt.delimiter = delimiter[0];
    opt.header_row = !no_header;
    opt.row_name_column = !no_row_names;
    if (!label_column.empty()) opt.label_column = label_column;
    return opt;
  }

  Dataset load(const std::string& path) const {
    return is_mtx(path) ? load_sparse_matrixmarket(path)
                        : load_dense(path, csv_options());
  }
};

json manifest_base(const std::string& command, const json& config,
                   std::uint64_t seed,
                   const std::vector<std::string>& input_paths) {
  json inputs = json::object();
  for (const auto& p : input_paths) inputs[p] = fnv1a64_file(p);
  return json{{"schema", "medmagma/manifest-v1"},
              {"artifact_version", kArtifactVersion},
              {"command", command},
              {"config", config},
              {"seed", seed},
              {"inputs", inputs}};
}

json fit_config_to_json(const FitConfig& cfg) {
  return json{{"em_tol", cfg.em_tol},
              {"em_max_iters", cfg.em_max_iters},
              {"sweep_tol", cfg.flip_flop.tol},
              {"max_sweeps", cfg.flip_flop.max_sweeps},
              {"qp_tol", cfg.flip_flop.qp.tol},
              {"qp_max_iters", cfg.flip_flop.qp.max_iters},
              {"gmgm_tol", cfg.gmgm.tol},
              {"gmgm_max_iters", cfg.gmgm.max_iters},
              {"gmgm_psd_floor", cfg.gmgm.psd_floor},
              {"correction_enabled", cfg.correction_enabled},
              {"seed", cfg.seed}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig cfg;
  maybe_set(cfg.em_tol, j, "em_tol");
  maybe_set(cfg.em_max_iters, j, "em_max_iters");
  maybe_set(cfg.flip_flop.tol, j, "sweep_tol");
  maybe_set(cfg.flip_flop.max_sweeps, j, "max_sweeps");
  maybe_set(cfg.flip_flop.qp.tol, j, "qp_tol");
  maybe_set(cfg.flip_flop.qp.max_iters, j, "qp_max_iters");
  maybe_set(cfg.gmgm.tol, j, "gmgm_tol");
  maybe_set(cfg.gmgm.max_iters, j, "gmgm_max_iters");
  maybe_set(cfg.gmgm.psd_floor, j, "gmgm_psd_floor");
  maybe_set(cfg.correction_enabled, j, "correction_enabled");
  maybe_set(cfg.seed, j, "seed");
  return cfg;
}

json report_to_json(const FitReport& report, const FitConfig& cfg,
                    Index d_rows, Index d_cols) {
  json records = json::array();
  for (const auto& rec : report.records) {
    records.push_back(json{{"factor_change", rec.factor_change},
                           {"zstar_objective", rec.zstar_objective},
                           {"gmgm_grad_norm", rec.gmgm_grad_norm}});
  }
  return json{{"schema", "medmagma/report-v1"},
              {"command", "fit"},
              {"d_rows", d_rows},
              {"d_cols", d_cols},
              {"converged", report.converged},
              {"iterations", report.iterations},
              {"records", records},
              {"config", fit_config_to_json(cfg)}};
}

int cmd_denoise(const std::vector<std::string>& args) {
  CLI::App app{"Remove the multiplicative row/column profile from a matrix"};
  std::string input, output;
  IoFlags io;
  app.add_option("input", input, "input matrix (CSV or MatrixMarket)")
      ->required();
  app.add_option("output", output, "output path (same format)")->required();
  io.attach(app);
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  Timer timer;
  Dataset ds = io.load(input);
  DataMatrix y = denoise(ds.matrix);
  Dataset out = ds;
  out.matrix = y;
  out.provenance.push_back("denoise");

  fs::path out_path(output);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  if (io.is_mtx(input)) {
    save_sparse_matrixmarket(output, out);
  } else {
    save_dense(output, out, io.csv_options());
  }
  json manifest = manifest_base(
      "denoise", json{{"delimiter", io.delimiter},
                      {"header_row", !io.no_header},
                      {"row_name_column", !io.no_row_names},
                      {"output", output}},
      0, {input});
  manifest["timings"] = {{"total_seconds", timer.seconds()}};
  write_json(out_path.string() + ".manifest.json", manifest);
  std::cout << "nnz " << y.nnz_total() << " of " << y.entries().size()
            << "\ncentering_residual " << centering_residual(y) << "\n";
  return kExitOk;
}

struct FitOutputs {
  FactorPrecision psi;
  json report;
};

int cmd_fit(const std::vector<std::string>& args) {
  CLI::App app{"Fit row and column dependency graphs"};
  std::string input, outdir;
  IoFlags io;
  FitConfig flags;
  int select_genes = 0;
  bool squarify = false;
  bool no_correction = false;
  app.add_option("input", input, "input matrix")->required();
  app.add_option("--out", outdir, "output directory");
  io.attach(app);
  auto* o_em_tol = app.add_option("--em-tol", flags.em_tol);
  auto* o_em_iters = app.add_option("--em-max-iters", flags.em_max_iters);
  auto* o_sw_tol = app.add_option("--sweep-tol", flags.flip_flop.tol);
  auto* o_sweeps = app.add_option("--max-sweeps", flags.flip_flop.max_sweeps);
  auto* o_qp_tol = app.add_option("--qp-tol", flags.flip_flop.qp.tol);
  auto* o_qp_iters = app.add_option("--qp-max-iters", flags.flip_flop.qp.max_iters);
  auto* o_g_tol = app.add_option("--gmgm-tol", flags.gmgm.tol);
  auto* o_g_iters = app.add_option("--gmgm-max-iters", flags.gmgm.max_iters);
  auto* o_seed = app.add_option("--seed", flags.seed);
  auto* o_nocorr = app.add_flag("--no-correction", no_correction,
                                "zeroth-order statistics only");
  app.add_option("--select-variable-genes", select_genes,
                 "keep the N most variable columns before fitting");
  app.add_flag("--squarify", squarify,
               "sparsity-threshold columns toward a square matrix");
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  FitConfig cfg;
  if (!io.config_path.empty()) {
    cfg = fit_config_from_json(load_config_json(io.config_path, "fit"));
  }
  if (o_em_tol->count()) cfg.em_tol = flags.em_tol;
  if (o_em_iters->count()) cfg.em_max_iters = flags.em_max_iters;
  if (o_sw_tol->count()) cfg.flip_flop.tol = flags.flip_flop.tol;
  if (o_sweeps->count()) cfg.flip_flop.max_sweeps = flags.flip_flop.max_sweeps;
  if (o_qp_tol->count()) cfg.flip_flop.qp.tol = flags.flip_flop.qp.tol;
  if (o_qp_iters->count()) cfg.flip_flop.qp.max_iters = flags.flip_flop.qp.max_iters;
  if (o_g_tol->count()) cfg.gmgm.tol = flags.gmgm.tol;
  if (o_g_iters->count()) cfg.gmgm.max_iters = flags.gmgm.max_iters;
  if (o_seed->count()) cfg.seed = flags.seed;
  if (o_nocorr->count()) cfg.correction_enabled = false;

  fs::path out = outdir.empty() ? default_outdir("fit") : fs::path(outdir);
  fs::create_directories(out);

  Timer timer;
  Dataset ds = io.load(input);
  if (select_genes > 0) ds = select_variable_genes(ds, select_genes);
  if (squarify) ds = squarify_by_sparsity(ds);

  json manifest = manifest_base("fit", fit_config_to_json(cfg), cfg.seed,
                                {input});
  manifest["preprocessing"] = ds.provenance;

  int exit_code = kExitOk;
  try {
    FitReport report = med_magma_fit(ds.matrix, cfg);
    write_matrix(out / "psi_rows.csv", report.fitted.rows());
    write_matrix(out / "psi_cols.csv", report.fitted.cols());
    write_text_atomically(out / "edges_rows.tsv",
                          edge_list_text(edge_scores(report.fitted.rows())));
    write_text_atomically(out / "edges_cols.tsv",
                          edge_list_text(edge_scores(report.fitted.cols())));
    write_json(out / "fit_report.json",
               report_to_json(report, cfg, ds.matrix.d_rows(), ds.matrix.d_cols()));
    if (!report.converged) exit_code = kExitNonConvergence;
    std::cout << (report.converged ? "converged" : "NOT converged") << " after "
              << report.iterations << " iterations\n";
  } catch (const ConvergenceError& e) {
    // keep the last iterate around for diagnosis
    if (e.last_rows.size() > 0) write_matrix(out / "psi_rows.csv", e.last_rows);
    if (e.last_cols.size() > 0) write_matrix(out / "psi_cols.csv", e.last_cols);
    write_json(out / "fit_report.json",
               json{{"schema", "medmagma/report-v1"},
                    {"command", "fit"},
                    {"converged", false},
                    {"error", e.what()},
                    {"config", fit_config_to_json(cfg)}});
    std::cerr << "fit: " << e.what() << "\n";
    exit_code = kExitNonConvergence;
  }
  manifest["timings"] = {{"total_seconds", timer.seconds()}};
  write_json(out / "manifest.json", manifest);
  return exit_code;
}

json synth_config_to_json(const SynthConfig& cfg) {
  return json{{"d_rows", cfg.d_rows},     {"d_cols", cfg.d_cols},
              {"ba_attachment", cfg.ba_attachment}, {"alpha", cfg.alpha},
              {"replicates", cfg.replicates},       {"seed", cfg.seed},
              {"pd_margin", cfg.pd_margin}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  maybe_set(cfg.d_rows, j, "d_rows");
  maybe_set(cfg.d_cols, j, "d_cols");
  maybe_set(cfg.ba_attachment, j, "ba_attachment");
  maybe_set(cfg.alpha, j, "alpha");
  maybe_set(cfg.replicates, j, "replicates");
  maybe_set(cfg.seed, j, "seed");
  maybe_set(cfg.pd_margin, j, "pd_margin");
  return cfg;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ostringstream out;
  for (int l : labels) out << l << "\n";
  write_text_atomically(path, out.str());
}

int cmd_synth(const std::vector<std::string>& args) {
  CLI::App app{"Generate synthetic planted-graph datasets"};
  std::string outdir, config_path;
  SynthConfig flags;
  app.add_option("--out", outdir, "output directory");
  app.add_option("--config", config_path, "JSON config file (or a manifest)");
  auto* o_dr = app.add_option("--d-rows", flags.d_rows);
  auto* o_dc = app.add_option("--d-cols", flags.d_cols);
  auto* o_m = app.add_option("--attachment", flags.ba_attachment);
  auto* o_alpha = app.add_option("--alpha", flags.alpha);
  auto* o_reps = app.add_option("--replicates", flags.replicates);
  auto* o_seed = app.add_option("--seed", flags.seed);
  auto* o_margin = app.add_option("--pd-margin", flags.pd_margin);
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  SynthConfig cfg;
  if (!config_path.empty()) {
    cfg = synth_config_from_json(load_config_json(config_path, "synth"));
  }
  if (o_dr->count()) cfg.d_rows = flags.d_rows;
  if (o_dc->count()) cfg.d_cols = flags.d_cols;
  if (o_m->count()) cfg.ba_attachment = flags.ba_attachment;
  if (o_alpha->count()) cfg.alpha = flags.alpha;
  if (o_reps->count()) cfg.replicates = flags.replicates;
  if (o_seed->count()) cfg.seed = flags.seed;
  if (o_margin->count()) cfg.pd_margin = flags.pd_margin;

  Timer timer;
  cfg.validate();
  std::vector<SynthBundle> bundles = generate_experiment(cfg);

  fs::path out = outdir.empty() ? default_outdir("synth") : fs::path(outdir);
  fs::create_directories(out);
  for (std::size_t rep = 0; rep < bundles.size(); ++rep) {
    char name[32];
    std::snprintf(name, sizeof(name), "rep_%03zu", rep);
    fs::path dir = out / name;
    fs::create_directories(dir);
    const SynthBundle& b = bundles[rep];
    write_matrix(dir / "latent.csv", b.latent);
    write_matrix(dir / "observed.csv", b.observed);
    write_matrix(dir / "adjacency_rows.csv", b.truth_rows.adjacency);
    write_matrix(dir / "adjacency_cols.csv", b.truth_cols.adjacency);
    write_matrix(dir / "psi_rows.csv", b.truth_rows.psi);
    write_matrix(dir / "psi_cols.csv", b.truth_cols.psi);
    write_matrix(dir / "noise_rows.csv", b.noise.r_rows);
    write_matrix(dir / "noise_cols.csv", b.noise.r_cols);
    write_labels(dir / "labels_rows.csv", b.labels_rows);
    write_labels(dir / "labels_cols.csv", b.labels_cols);
  }
  json manifest = manifest_base("synth", synth_config_to_json(cfg), cfg.seed, {});
  manifest["timings"] = {{"total_seconds", timer.seconds()}};
  write_json(out / "manifest.json", manifest);
  std::cout << "wrote " << bundles.size() << " replicates to " << out.string()
            << "\n";
  return kExitOk;
}

struct SweepGrid {
  int k_min = 1;
  int k_max = 40;
  double res_min = 0.02;
  double res_max = 2.0;
  int res_count = 20;

  std::vector<int> k_range() const {
    std::vector<int> ks;
    for (int k = k_min; k <= k_max; ++k) ks.push_back(k);
    return ks;
  }
  std::vector<double> resolutions() const {
    std::vector<double> rs;
    if (res_count == 1) {
      rs.push_back(res_min);
      return rs;
    }
    for (int i = 0; i < res_count; ++i) {
      rs.push_back(res_min + (res_max - res_min) * i / (res_count - 1));
    }
    return rs;
  }
};

void sweep_from_json(SweepGrid& grid, const json& j) {
  maybe_set(grid.k_min, j, "k_min");
  maybe_set(grid.k_max, j, "k_max");
  maybe_set(grid.res_min, j, "res_min");
  maybe_set(grid.res_max, j, "res_max");
  maybe_set(grid.res_count, j, "res_count");
}

json sweep_to_json(const SweepGrid& grid) {
  return json{{"k_min", grid.k_min},
              {"k_max", grid.k_max},
              {"res_min", grid.res_min},
              {"res_max", grid.res_max},
              {"res_count", grid.res_count}};
}

// Best assortativity across the top-k grid; the paper's thresholding is
// shared with the AMI sweep.
double best_assortativity(const Matrix& scores, const std::vector<int>& labels,
                          const std::vector<int>& k_range) {
  double best = -2.0;
  for (int k : k_range) {
    Matrix adj = threshold_topk(scores, k);
    double a;
    try {
      a = assortativity(adj, labels);
    } catch (const std::invalid_argument&) {
      continue;  // edgeless threshold
    }
    if (std::isfinite(a) && a > best) best = a;
  }
  if (best < -1.5) throw std::invalid_argument("no threshold produced edges");
  return best;
}

int cmd_eval(const std::vector<std::string>& args) {
  CLI::App app{"Evaluate a fitted graph against labels and/or a truth graph"};
  std::string graphdir, psi_path, labels_path, truth_path, outdir, config_path;
  std::string axis = "rows";
  SweepGrid flags_grid;
  std::uint64_t seed = 0;
  app.add_option("--graphdir", graphdir, "directory written by 'fit'");
  app.add_option("--psi", psi_path, "precision factor CSV (alternative to --graphdir)");
  app.add_option("--axis", axis, "rows or cols (with --graphdir)")
      ->check(CLI::IsMember({"rows", "cols"}));
  app.add_option("--labels", labels_path, "category per vertex, one per line");
  app.add_option("--truth", truth_path, "truth adjacency CSV for AUPR");
  app.add_option("--out", outdir, "output directory");
  app.add_option("--config", config_path, "JSON config file (or a manifest)");
  auto* o_kmin = app.add_option("--k-min", flags_grid.k_min);
  auto* o_kmax = app.add_option("--k-max", flags_grid.k_max);
  auto* o_rmin = app.add_option("--res-min", flags_grid.res_min);
  auto* o_rmax = app.add_option("--res-max", flags_grid.res_max);
  auto* o_rcount = app.add_option("--res-count", flags_grid.res_count);
  auto* o_seed = app.add_option("--seed", seed);
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  SweepGrid grid;
  std::uint64_t cfg_seed = 0;
  if (!config_path.empty()) {
    json j = load_config_json(config_path, "eval");
    sweep_from_json(grid, j);
    maybe_set(cfg_seed, j, "seed");
  }
  if (o_kmin->count()) grid.k_min = flags_grid.k_min;
  if (o_kmax->count()) grid.k_max = flags_grid.k_max;
  if (o_rmin->count()) grid.res_min = flags_grid.res_min;
  if (o_rmax->count()) grid.res_max = flags_grid.res_max;
  if (o_rcount->count()) grid.res_count = flags_grid.res_count;
  if (o_seed->count()) cfg_seed = seed;

  if (psi_path.empty()) {
    if (graphdir.empty()) {
      std::cerr << "eval: need --graphdir or --psi\n";
      return kExitInputError;
    }
    psi_path = (fs::path(graphdir) /
                (axis == "rows" ? "psi_rows.csv" : "psi_cols.csv"))
                   .string();
  }
  if (labels_path.empty() && truth_path.empty()) {
    std::cerr << "eval: need --labels and/or --truth\n";
    return kExitInputError;
  }

  Timer timer;
  Matrix psi = load_matrix_csv(psi_path);
  Matrix scores = edge_scores(psi);

  json metrics{{"schema", "medmagma/metrics-v1"},
               {"psi", psi_path},
               {"ami_normalization", "arithmetic-mean"}};
  std::vector<std::string> inputs{psi_path};

  if (!truth_path.empty()) {
    Matrix truth = load_matrix_csv(truth_path);
    metrics["aupr"] = pr_curve_aupr(scores, truth).aupr;
    inputs.push_back(truth_path);
  }
  if (!labels_path.empty()) {
    std::vector<int> labels = encode_labels(load_label_file(labels_path));
    if (static_cast<Index>(labels.size()) != scores.rows()) {
      std::cerr << "eval: " << labels.size() << " labels for " << scores.rows()
                << " vertices\n";
      return kExitInputError;
    }
    inputs.push_back(labels_path);
    SweepResult sweep = best_ami_sweep(scores, labels, grid.k_range(),
                                       grid.resolutions(), cfg_seed);
    json table = json::array();
    for (const auto& entry : sweep.table) {
      table.push_back(json{{"k", entry.k},
                           {"resolution", entry.resolution},
                           {"ami", entry.ami},
                           {"clusters", 1 + *std::max_element(
                                                entry.partition.begin(),
                                                entry.partition.end())}});
    }
    metrics["best_ami"] = sweep.best_ami;
    metrics["best_k"] = sweep.best_k;
    metrics["best_resolution"] = sweep.best_resolution;
    metrics["sweep_table"] = table;
    metrics["assortativity"] =
        best_assortativity(scores, labels, grid.k_range());
  }

  fs::path out = outdir.empty() ? default_outdir("eval") : fs::path(outdir);
  fs::create_directories(out);
  write_json(out / "metrics.json", metrics);
  json cfg_json = sweep_to_json(grid);
  cfg_json["seed"] = cfg_seed;
  cfg_json["axis"] = axis;
  json manifest = manifest_base("eval", cfg_json, cfg_seed, inputs);
  manifest["timings"] = {{"total_seconds", timer.seconds()}};
  write_json(out / "manifest.json", manifest);
  std::cout << metrics.dump(2) << "\n";
  return kExitOk;
}

struct BenchConfig {
  SynthConfig synth;
  std::vector<double> alphas{0.0, 0.5, 1.0};
  std::vector<std::string> methods{"med-magma", "gmgm-raw",
                                   "single-axis-baseline"};
  SweepGrid sweep;
  FitConfig fit;
};

json bench_config_to_json(const BenchConfig& cfg) {
  json j = synth_config_to_json(cfg.synth);
  j.erase("alpha");
  j["alphas"] = cfg.alphas;
  j["methods"] = cfg.methods;
  j["sweep"] = sweep_to_json(cfg.sweep);
  j["fit"] = fit_config_to_json(cfg.fit);
  return j;
}

BenchConfig bench_config_from_json(const json& j) {
  BenchConfig cfg;
  cfg.synth = synth_config_from_json(j);
  maybe_set(cfg.alphas, j, "alphas");
  maybe_set(cfg.methods, j, "methods");
  if (j.contains("sweep")) sweep_from_json(cfg.sweep, j["sweep"]);
  if (j.contains("fit")) cfg.fit = fit_config_from_json(j["fit"]);
  return cfg;
}

Matrix pseudo_inverse_spd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  double cutoff = 1e-12 * std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  Vector inv = es.eigenvalues();
  for (Index i = 0; i < inv.size(); ++i) {
    inv(i) = std::abs(inv(i)) > cutoff ? 1.0 / inv(i) : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

struct BenchCell {
  std::string method;
  double alpha = 0.0;
  int replicate = 0;
  bool ok = false;
  std::string error;
  double aupr_rows = 0.0, aupr_cols = 0.0;
  double assort = 0.0, best_ami = 0.0;
};

BenchCell run_bench_cell(const BenchConfig& cfg, const SynthBundle& bundle,
                         const std::string& method, double alpha,
                         int replicate) {
  BenchCell cell;
  cell.method = method;
  cell.alpha = alpha;
  cell.replicate = replicate;
  try {
    Matrix scores_rows, scores_cols;
    const Matrix& x = bundle.observed;
    if (method == "med-magma") {
      FitConfig fit_cfg = cfg.fit;
      FitReport report = med_magma_fit(DataMatrix(x), fit_cfg);
      scores_rows = edge_scores(report.fitted.rows());
      scores_cols = edge_scores(report.fitted.cols());
    } else if (method == "gmgm-raw") {
      SufficientStats stats(x * x.transpose(), x.transpose() * x);
      GmgmResult fit = gmgm_fit(stats, cfg.fit.gmgm);
      scores_rows = edge_scores(fit.factors.rows());
      scores_cols = edge_scores(fit.factors.cols());
    } else if (method == "single-axis-baseline") {
      scores_rows = edge_scores(pseudo_inverse_spd(x * x.transpose()));
      scores_cols = edge_scores(pseudo_inverse_spd(x.transpose() * x));
    } else {
      throw std::invalid_argument("unknown method " + method);
    }
    cell.aupr_rows =
        pr_curve_aupr(scores_rows, bundle.truth_rows.adjacency).aupr;
    cell.aupr_cols =
        pr_curve_aupr(scores_cols, bundle.truth_cols.adjacency).aupr;
    auto k_range = cfg.sweep.k_range();
    cell.assort = best_assortativity(scores_rows, bundle.labels_rows, k_range);
    cell.best_ami = best_ami_sweep(scores_rows, bundle.labels_rows, k_range,
                                   cfg.sweep.resolutions(), cfg.synth.seed)
                        .best_ami;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

int cmd_bench(const std::vector<std::string>& args) {
  CLI::App app{"Paired noise-strength benchmark over synthetic datasets"};
  std::string outdir, config_path;
  SynthConfig synth_flags;
  std::vector<double> alphas_flag;
  std::vector<std::string> methods_flag;
  int jobs = 0;
  app.add_option("--out", outdir, "output directory");
  app.add_option("--config", config_path, "JSON config file (or a manifest)");
  auto* o_dr = app.add_option("--d-rows", synth_flags.d_rows);
  auto* o_dc = app.add_option("--d-cols", synth_flags.d_cols);
  auto* o_m = app.add_option("--attachment", synth_flags.ba_attachment);
  auto* o_reps = app.add_option("--replicates", synth_flags.replicates);
  auto* o_seed = app.add_option("--seed", synth_flags.seed);
  auto* o_alphas = app.add_option("--alphas", alphas_flag, "noise strengths");
  auto* o_methods = app.add_option("--methods", methods_flag);
  app.add_option("--jobs", jobs, "parallel cells (0 = hardware)");
  try {
    parse_args(app, args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInputError;
  }

  BenchConfig cfg;
  if (!config_path.empty()) {
    cfg = bench_config_from_json(load_config_json(config_path, "bench"));
  }
  if (o_dr->count()) cfg.synth.d_rows = synth_flags.d_rows;
  if (o_dc->count()) cfg.synth.d_cols = synth_flags.d_cols;
  if (o_m->count()) cfg.synth.ba_attachment = synth_flags.ba_attachment;
  if (o_reps->count()) cfg.synth.replicates = synth_flags.replicates;
  if (o_seed->count()) cfg.synth.seed = synth_flags.seed;
  if (o_alphas->count()) cfg.alphas = alphas_flag;
  if (o_methods->count()) cfg.methods = methods_flag;

  Timer timer;
  if (cfg.alphas.empty() || cfg.methods.empty()) {
    std::cerr << "bench: need at least one alpha and one method\n";
    return kExitInputError;
  }
  for (double a : cfg.alphas) {
    if (a < 0.0 || a > 1.0) {
      std::cerr << "bench: alpha " << a << " outside [0, 1]\n";
      return kExitInputError;
    }
  }
  SynthConfig probe = cfg.synth;
  probe.alpha = cfg.alphas.empty() ? 0.0 : cfg.alphas.front();
  try {
    probe.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return kExitInputError;
  }

  // Bundles are generated per alpha from the same seed; graphs, labels, and
  // the latent sample coincide across alphas, so cells are paired.
  std::vector<std::vector<SynthBundle>> bundles_by_alpha;
  for (double alpha : cfg.alphas) {
    SynthConfig synth_cfg = cfg.synth;
    synth_cfg.alpha = alpha;
    bundles_by_alpha.push_back(generate_experiment(synth_cfg));
  }
  struct CellSpec {
    std::size_t alpha_idx;
    int rep;
    std::size_t method_idx;
  };
  std::vector<CellSpec> specs;
  for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
    for (int rep = 0; rep < cfg.synth.replicates; ++rep) {
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        specs.push_back({ai, rep, mi});
      }
    }
  }
  std::vector<BenchCell> cells(specs.size());
  const unsigned workers = std::min<std::size_t>(
      specs.size(),
      jobs > 0 ? static_cast<unsigned>(jobs)
               : std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < specs.size();
           i = next.fetch_add(1)) {
        const CellSpec& s = specs[i];
        cells[i] = run_bench_cell(cfg, bundles_by_alpha[s.alpha_idx][s.rep],
                                  cfg.methods[s.method_idx],
                                  cfg.alphas[s.alpha_idx], s.rep);
      }
    });
  }
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "method,alpha,replicate,aupr_rows,aupr_cols,assortativity,best_ami\n";
  char buf[64];
  int failures = 0;
  json failure_log = json::array();
  for (const auto& cell : cells) {
    if (!cell.ok) {
      ++failures;
      failure_log.push_back(json{{"method", cell.method},
                                 {"alpha", cell.alpha},
                                 {"replicate", cell.replicate},
                                 {"error", cell.error}});
      std::cerr << "bench cell failed (" << cell.method << ", alpha "
                << cell.alpha << ", rep " << cell.replicate
                << "): " << cell.error << "\n";
      continue;
    }
    csv << cell.method << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", cell.alpha);
    csv << buf << "," << cell.replicate;
    for (double v : {cell.aupr_rows, cell.aupr_cols, cell.assort, cell.best_ami}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      csv << "," << buf;
    }
    csv << "\n";
  }

  fs::path out = outdir.empty() ? default_outdir("bench") : fs::path(outdir);
  fs::create_directories(out);
  write_text_atomically(out / "results.csv", csv.str());
  json manifest =
      manifest_base("bench", bench_config_to_json(cfg), cfg.synth.seed, {});
  manifest["failures"] = failure_log;
  manifest["timings"] = {{"total_seconds", timer.seconds()}};
  write_json(out / "manifest.json", manifest);

  if (!cells.empty() && failures == static_cast<int>(cells.size())) {
    std::cerr << "bench: every cell failed\n";
    return kExitBenchFailure;
  }
  std::cout << "wrote " << (cells.size() - failures) << " rows to "
            << (out / "results.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  if (args.empty()) {
    std::cerr << "usage: medmagma <denoise|fit|synth|eval|bench> [options]\n";
    return kExitInputError;
  }
  const std::string& command = args[0];
  std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    if (command == "denoise") return cmd_denoise(rest);
    if (command == "fit") return cmd_fit(rest);
    if (command == "synth") return cmd_synth(rest);
    if (command == "eval") return cmd_eval(rest);
    if (command == "bench") return cmd_bench(rest);
    if (command == "--help" || command == "-h") {
      std::cout << "medmagma " << kArtifactVersion
                << "\nsubcommands: denoise fit synth eval bench\n";
      return kExitOk;
    }
    std::cerr << "unknown command '" << command << "'\n";
    return kExitInputError;
  } catch (const PreprocessingError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitPreprocessingError;
  } catch (const ConvergenceError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace medmagma::cli
