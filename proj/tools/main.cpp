// Batch driver for the finecluster shared library: dataset generation,
// corruption, clustering, verification, and parameter sweeps.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "finecluster/finecluster.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdError {
  int exit_code;
  std::string message;
};

int exit_for(fc_status st) {
  switch (st) {
    case FC_OK: return 0;
    case FC_ERR_NO_RESULT: return 2;
    default: return 1;
  }
}

void call(fc_status st, const char* err) {
  if (st != FC_OK) throw CmdError{exit_for(st), err};
}

struct DatasetDel { void operator()(fc_dataset* p) const { fc_dataset_free(p); } };
struct TruthDel { void operator()(fc_truth* p) const { fc_truth_free(p); } };
struct MixspecDel { void operator()(fc_mixspec* p) const { fc_mixspec_free(p); } };
struct OptionsDel { void operator()(fc_options* p) const { fc_options_free(p); } };
struct ResultDel { void operator()(fc_result* p) const { fc_result_free(p); } };
struct ReportDel { void operator()(fc_report* p) const { fc_report_free(p); } };
struct StrDel { void operator()(char* p) const { fc_string_free(p); } };

using DatasetPtr = std::unique_ptr<fc_dataset, DatasetDel>;
using TruthPtr = std::unique_ptr<fc_truth, TruthDel>;
using MixspecPtr = std::unique_ptr<fc_mixspec, MixspecDel>;
using OptionsPtr = std::unique_ptr<fc_options, OptionsDel>;
using ResultPtr = std::unique_ptr<fc_result, ResultDel>;
using ReportPtr = std::unique_ptr<fc_report, ReportDel>;
using StrPtr = std::unique_ptr<char, StrDel>;

char g_err[1024];

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw CmdError{1, "cannot open: " + path.string()};
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f.good()) throw CmdError{1, "cannot open for write: " + path.string()};
  f << text;
  if (!f.good()) throw CmdError{1, "write failed: " + path.string()};
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& path) {
  return hex64(fnv1a(read_file(path)));
}

// Manifest: parameters plus content hashes of every file the command wrote.
// No timestamps, so reruns with identical inputs are byte-identical.
void write_manifest(const fs::path& dir, const std::string& command,
                    const json& params, const std::vector<fs::path>& outputs) {
  json m;
  m["command"] = command;
  m["params"] = params;
  json files;
  for (const fs::path& p : outputs)
    files[p.filename().string()] = file_hash(p);
  m["outputs"] = files;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void parse_overrides(const std::vector<std::string>& sets, fc_options* opts) {
  for (const std::string& kv : sets) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CmdError{1, "expected key=value in --set, got: " + kv};
    double value = 0.0;
    try {
      value = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw CmdError{1, "non-numeric value in --set: " + kv};
    }
    call(fc_options_override(opts, kv.substr(0, eq).c_str(), value, g_err,
                             sizeof g_err),
         g_err);
  }
}

OptionsPtr make_options(double alpha, double delta, std::uint64_t seed,
                        const std::string& profile,
                        const std::vector<std::string>& sets) {
  fc_options* raw = nullptr;
  call(fc_options_create(&raw, g_err, sizeof g_err), g_err);
  OptionsPtr opts(raw);
  call(fc_options_set_alpha(opts.get(), alpha, g_err, sizeof g_err), g_err);
  call(fc_options_set_delta(opts.get(), delta, g_err, sizeof g_err), g_err);
  call(fc_options_set_seed(opts.get(), seed, g_err, sizeof g_err), g_err);
  call(fc_options_set_profile(opts.get(), profile.c_str(), g_err,
                              sizeof g_err),
       g_err);
  parse_overrides(sets, opts.get());
  return opts;
}

const char* kPalette[10] = {"#4c78a8", "#f58518", "#54a24b", "#e45756",
                            "#72b7b2", "#b279a2", "#ff9da6", "#9d755d",
                            "#bab0ac", "#d67195"};

// Scatter of the first two coordinates, one dot per point, colored by set id
// (-1 in gray).
std::string svg_scatter(const std::vector<double>& data, std::int64_t n,
                        std::int64_t d,
                        const std::vector<std::int32_t>& labels) {
  const double W = 640, H = 640, pad = 24;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (n > 0) {
    xmin = xmax = data[0];
    ymin = ymax = d >= 2 ? data[1] : 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      double x = data[static_cast<std::size_t>(i * d)];
      double y = d >= 2 ? data[static_cast<std::size_t>(i * d + 1)] : 0.0;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  double xs = xmax > xmin ? (W - 2 * pad) / (xmax - xmin) : 1.0;
  double ys = ymax > ymin ? (H - 2 * pad) / (ymax - ymin) : 1.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
        "height=\"640\" viewBox=\"0 0 640 640\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"#ffffff\" "
        "stroke=\"#444444\"/>\n";
  char buf[160];
  for (std::int64_t i = 0; i < n; ++i) {
    double x = data[static_cast<std::size_t>(i * d)];
    double y = d >= 2 ? data[static_cast<std::size_t>(i * d + 1)] : 0.0;
    double cx = pad + (x - xmin) * xs;
    double cy = H - pad - (y - ymin) * ys;
    std::int32_t lab = labels[static_cast<std::size_t>(i)];
    const char* color = lab < 0 ? "#cccccc" : kPalette[lab % 10];
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\" "
                  "fill-opacity=\"0.7\"/>\n",
                  cx, cy, color);
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<double> dataset_data(const fc_dataset* ds) {
  std::size_t need = static_cast<std::size_t>(fc_dataset_n(ds)) *
                     static_cast<std::size_t>(fc_dataset_dim(ds));
  std::vector<double> buf(std::max<std::size_t>(need, 1));
  call(fc_dataset_copy(ds, buf.data(), buf.size(), g_err, sizeof g_err),
       g_err);
  buf.resize(need);
  return buf;
}

std::vector<std::int32_t> result_assignments(const fc_result* res,
                                             std::int64_t n) {
  std::vector<std::int32_t> buf(std::max<std::int64_t>(n, 1));
  call(fc_result_assignments(res, buf.data(), buf.size(), g_err, sizeof g_err),
       g_err);
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

std::string centers_csv(const fc_result* res, std::int64_t dim) {
  std::ostringstream os;
  os << "set,size,scale";
  for (std::int64_t c = 0; c < dim; ++c) os << ",c" << c;
  os << "\n";
  std::vector<double> center(static_cast<std::size_t>(std::max<std::int64_t>(dim, 1)));
  for (std::int64_t j = 0; j < fc_result_m(res); ++j) {
    call(fc_result_center(res, j, center.data(), center.size(), g_err,
                          sizeof g_err),
         g_err);
    os << j << "," << fc_result_set_size(res, j) << ","
       << fmt_double(fc_result_scale(res, j));
    for (std::int64_t c = 0; c < dim; ++c)
      os << "," << fmt_double(center[static_cast<std::size_t>(c)]);
    os << "\n";
  }
  return os.str();
}

/* ---- generate ---- */

struct GenerateArgs {
  std::string preset;
  std::string spec_path;
  std::int64_t n = 3000;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double sep = 0.0;
  std::int64_t dim = 0;
  double csep = 6.0;
  std::int64_t grid = 150;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.preset.empty() == a.spec_path.empty())
    throw CmdError{1, "pass exactly one of --preset or --spec"};
  fs::create_directories(a.out);
  fs::path out(a.out);

  json params;
  params["n"] = a.n;
  params["seed"] = a.seed;
  std::vector<fs::path> written;

  DatasetPtr data;
  TruthPtr truth;
  TruthPtr truth_alt;

  if (a.preset == "twin_pairs" || a.preset == "axis_grid") {
    fc_dataset* d = nullptr;
    fc_truth* t = nullptr;
    fc_truth* t2 = nullptr;
    call(fc_generate_special(a.preset.c_str(), a.n, a.alpha, a.csep, a.grid,
                             &d, &t, a.preset == "twin_pairs" ? &t2 : nullptr,
                             g_err, sizeof g_err),
         g_err);
    data.reset(d);
    truth.reset(t);
    truth_alt.reset(t2);
    params["preset"] = a.preset;
    if (a.preset == "axis_grid") {
      params["alpha"] = a.alpha;
      params["c_sep"] = a.csep;
      params["grid_points"] = a.grid;
    }
  } else {
    MixspecPtr spec;
    fc_mixspec* s = nullptr;
    if (!a.preset.empty()) {
      call(fc_mixspec_preset(a.preset.c_str(), a.dim, a.alpha, a.sep, &s,
                             g_err, sizeof g_err),
           g_err);
      params["preset"] = a.preset;
    } else {
      call(fc_mixspec_load(a.spec_path.c_str(), &s, g_err, sizeof g_err),
           g_err);
    }
    spec.reset(s);
    StrPtr spec_json;
    char* sj = nullptr;
    call(fc_mixspec_to_json(spec.get(), &sj, g_err, sizeof g_err), g_err);
    spec_json.reset(sj);
    params["mixspec"] = json::parse(spec_json.get());
    write_file(out / "mixspec.json", spec_json.get());
    written.push_back(out / "mixspec.json");

    fc_dataset* d = nullptr;
    fc_truth* t = nullptr;
    call(fc_generate(spec.get(), a.n, a.seed, &d, &t, g_err, sizeof g_err),
         g_err);
    data.reset(d);
    truth.reset(t);
  }

  call(fc_dataset_save(data.get(), (out / "dataset.fcds").c_str(), g_err,
                       sizeof g_err),
       g_err);
  written.push_back(out / "dataset.fcds");
  call(fc_truth_save(truth.get(), (out / "labels.fclb").c_str(),
                     (out / "truth.json").c_str(), g_err, sizeof g_err),
       g_err);
  written.push_back(out / "labels.fclb");
  written.push_back(out / "truth.json");
  if (truth_alt) {
    call(fc_truth_save(truth_alt.get(), (out / "labels_alt.fclb").c_str(),
                       (out / "truth_alt.json").c_str(), g_err, sizeof g_err),
         g_err);
    written.push_back(out / "labels_alt.fclb");
    written.push_back(out / "truth_alt.json");
  }
  write_manifest(out, "generate", params, written);
  std::cout << "generated n=" << fc_dataset_n(data.get())
            << " d=" << fc_dataset_dim(data.get()) << " k="
            << fc_truth_k(truth.get()) << " -> " << out.string() << "\n";
  return 0;
}

/* ---- corrupt ---- */

struct CorruptArgs {
  std::string data_path, labels_path, truth_path;
  double fraction = 0.01;
  std::string strategy = "far_blob";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_corrupt(const CorruptArgs& a) {
  fs::create_directories(a.out);
  fs::path out(a.out);
  fc_dataset* d = nullptr;
  call(fc_dataset_load(a.data_path.c_str(), &d, g_err, sizeof g_err), g_err);
  DatasetPtr data(d);
  fc_truth* t = nullptr;
  call(fc_truth_load(a.labels_path.c_str(), a.truth_path.c_str(), &t, g_err,
                     sizeof g_err),
       g_err);
  TruthPtr truth(t);

  std::int64_t replaced = 0;
  call(fc_corrupt(data.get(), truth.get(), a.fraction, a.strategy.c_str(),
                  a.seed, &replaced, g_err, sizeof g_err),
       g_err);

  call(fc_dataset_save(data.get(), (out / "dataset.fcds").c_str(), g_err,
                       sizeof g_err),
       g_err);
  call(fc_truth_save(truth.get(), (out / "labels.fclb").c_str(),
                     (out / "truth.json").c_str(), g_err, sizeof g_err),
       g_err);

  json params;
  params["dataset"] = a.data_path;
  params["dataset_hash"] = file_hash(a.data_path);
  params["fraction"] = a.fraction;
  params["strategy"] = a.strategy;
  params["seed"] = a.seed;
  params["replaced"] = replaced;
  write_manifest(out, "corrupt", params,
                 {out / "dataset.fcds", out / "labels.fclb",
                  out / "truth.json"});
  std::cout << "replaced " << replaced << " points -> " << out.string()
            << "\n";
  return 0;
}

/* ---- cluster ---- */

struct ClusterArgs {
  std::string data_path;
  double alpha = 0.0;
  double delta = 0.01;
  std::uint64_t seed = 0;
  std::string profile = "practical";
  std::vector<std::string> sets;
  int baseline_k = 0;
  std::string out;
};

int cmd_cluster(const ClusterArgs& a) {
  fs::create_directories(a.out);
  fs::path out(a.out);
  fc_dataset* d = nullptr;
  call(fc_dataset_load(a.data_path.c_str(), &d, g_err, sizeof g_err), g_err);
  DatasetPtr data(d);
  OptionsPtr opts = make_options(a.alpha, a.delta, a.seed, a.profile, a.sets);

  fc_result* r = nullptr;
  call(fc_cluster(data.get(), opts.get(), &r, g_err, sizeof g_err), g_err);
  ResultPtr res(r);

  call(fc_result_save(res.get(), (out / "assignments.fcas").c_str(), g_err,
                      sizeof g_err),
       g_err);
  write_file(out / "centers.csv",
             centers_csv(res.get(), fc_dataset_dim(data.get())));
  StrPtr trace;
  char* tr = nullptr;
  call(fc_result_trace(res.get(), &tr, g_err, sizeof g_err), g_err);
  trace.reset(tr);
  write_file(out / "trace.txt", trace.get());

  std::vector<fs::path> written = {out / "assignments.fcas",
                                   out / "centers.csv", out / "trace.txt"};
  if (a.baseline_k > 0) {
    std::vector<std::int32_t> labels(
        static_cast<std::size_t>(fc_dataset_n(data.get())));
    call(fc_kpca_baseline(data.get(), a.baseline_k, 100, a.seed, labels.data(),
                          labels.size(), g_err, sizeof g_err),
         g_err);
    call(fc_assignments_save(labels.data(),
                             static_cast<std::int64_t>(labels.size()),
                             (out / "baseline_assignments.fcas").c_str(),
                             g_err, sizeof g_err),
         g_err);
    written.push_back(out / "baseline_assignments.fcas");
  }

  json params;
  params["dataset"] = a.data_path;
  params["dataset_hash"] = file_hash(a.data_path);
  params["alpha"] = a.alpha;
  params["delta"] = a.delta;
  params["seed"] = a.seed;
  params["profile"] = a.profile;
  params["set"] = a.sets;
  if (a.baseline_k > 0) params["baseline_k"] = a.baseline_k;
  write_manifest(out, "cluster", params, written);
  std::cout << "m=" << fc_result_m(res.get()) << " sets -> " << out.string()
            << "\n";
  return 0;
}

/* ---- verify ---- */

struct VerifyArgs {
  std::string data_path, assign_path, labels_path, truth_path;
  double alpha = 0.0;
  double c_const = 13.0;
  double pair_factor = 8.0;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  fc_dataset* d = nullptr;
  call(fc_dataset_load(a.data_path.c_str(), &d, g_err, sizeof g_err), g_err);
  DatasetPtr data(d);
  fc_result* r = nullptr;
  call(fc_result_load(data.get(), a.assign_path.c_str(), &r, g_err,
                      sizeof g_err),
       g_err);
  ResultPtr res(r);
  fc_truth* t = nullptr;
  call(fc_truth_load(a.labels_path.c_str(), a.truth_path.c_str(), &t, g_err,
                     sizeof g_err),
       g_err);
  TruthPtr truth(t);

  fc_report* rep = nullptr;
  call(fc_verify(res.get(), truth.get(), a.alpha, a.c_const, a.pair_factor,
                 &rep, g_err, sizeof g_err),
       g_err);
  ReportPtr report(rep);

  StrPtr text;
  char* tx = nullptr;
  call(fc_report_text(report.get(), &tx, g_err, sizeof g_err), g_err);
  text.reset(tx);
  std::cout << text.get();

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    fs::path out(a.out);
    StrPtr rj;
    char* p = nullptr;
    call(fc_report_json(report.get(), &p, g_err, sizeof g_err), g_err);
    rj.reset(p);
    write_file(out / "report.json", rj.get());
    StrPtr csv;
    p = nullptr;
    call(fc_metrics_csv(res.get(), truth.get(), &p, g_err, sizeof g_err),
         g_err);
    csv.reset(p);
    write_file(out / "metrics.csv", csv.get());
    json params;
    params["dataset"] = a.data_path;
    params["assignments"] = a.assign_path;
    params["alpha"] = a.alpha;
    params["c_const"] = a.c_const;
    params["pairwise_factor"] = a.pair_factor;
    write_manifest(out, "verify", params,
                   {out / "report.json", out / "metrics.csv"});
  }
  return fc_report_pass(report.get()) ? 0 : 3;
}

/* ---- sweep ---- */

struct SweepArgs {
  std::string preset = "separated_gaussians";
  std::int64_t n = 1000;
  std::vector<double> alphas;
  std::vector<double> seps;
  std::vector<double> fracs;
  std::vector<std::uint64_t> seeds;
  std::string strategy = "far_blob";
  double delta = 0.01;
  std::string profile = "practical";
  std::vector<std::string> sets;
  double c_const = 13.0;
  double pair_factor = 0.0;  // 0 = profile default
  int jobs = 1;
  std::string out;
};

struct SweepRow {
  double alpha = 0, sep = 0, frac = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  json report;  // parsed RefinementReport
};

SweepRow run_cell(const SweepArgs& a, double alpha, double sep, double frac,
                  std::uint64_t seed, const fs::path& cell_dir,
                  double pair_factor) {
  SweepRow row;
  row.alpha = alpha;
  row.sep = sep;
  row.frac = frac;
  row.seed = seed;
  fs::create_directories(cell_dir);

  fc_mixspec* s = nullptr;
  call(fc_mixspec_preset(a.preset.c_str(), 0, alpha, sep, &s, g_err,
                         sizeof g_err),
       g_err);
  MixspecPtr spec(s);
  fc_dataset* d = nullptr;
  fc_truth* t = nullptr;
  call(fc_generate(spec.get(), a.n, seed, &d, &t, g_err, sizeof g_err), g_err);
  DatasetPtr data(d);
  TruthPtr truth(t);
  if (frac > 0.0) {
    call(fc_corrupt(data.get(), truth.get(), frac, a.strategy.c_str(), seed,
                    nullptr, g_err, sizeof g_err),
         g_err);
  }

  OptionsPtr opts = make_options(alpha, a.delta, seed, a.profile, a.sets);
  fc_result* r = nullptr;
  fc_status st = fc_cluster(data.get(), opts.get(), &r, g_err, sizeof g_err);
  if (st == FC_ERR_NO_RESULT) {
    row.status = "no_result";
    return row;
  }
  call(st, g_err);
  ResultPtr res(r);

  call(fc_result_save(res.get(), (cell_dir / "assignments.fcas").c_str(),
                      g_err, sizeof g_err),
       g_err);
  if (fc_dataset_dim(data.get()) >= 2) {
    std::vector<double> coords = dataset_data(data.get());
    std::vector<std::int32_t> labels =
        result_assignments(res.get(), fc_dataset_n(data.get()));
    write_file(cell_dir / "scatter.svg",
               svg_scatter(coords, fc_dataset_n(data.get()),
                           fc_dataset_dim(data.get()), labels));
  }

  fc_report* rep = nullptr;
  call(fc_verify(res.get(), truth.get(), alpha, a.c_const, pair_factor, &rep,
                 g_err, sizeof g_err),
       g_err);
  ReportPtr report(rep);
  StrPtr rj;
  char* p = nullptr;
  call(fc_report_json(report.get(), &p, g_err, sizeof g_err), g_err);
  rj.reset(p);
  write_file(cell_dir / "report.json", rj.get());
  row.report = json::parse(rj.get());
  return row;
}

int cmd_sweep(const SweepArgs& a) {
  if (a.alphas.empty() || a.seps.empty() || a.fracs.empty() ||
      a.seeds.empty())
    throw CmdError{1, "sweep grids must be nonempty"};
  fs::create_directories(a.out);
  fs::path out(a.out);
  double pair_factor = a.pair_factor;
  if (pair_factor <= 0.0)
    pair_factor = a.profile == "paper" ? 9522.0 : 8.0;

  struct Cell {
    double alpha, sep, frac;
    std::uint64_t seed;
    fs::path dir;
  };
  std::vector<Cell> cells;
  std::size_t idx = 0;
  for (double alpha : a.alphas)
    for (double sep : a.seps)
      for (double frac : a.fracs)
        for (std::uint64_t seed : a.seeds) {
          char name[32];
          std::snprintf(name, sizeof name, "cell_%04zu", idx++);
          cells.push_back({alpha, sep, frac, seed, out / name});
        }

  std::vector<SweepRow> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      try {
        rows[i] = run_cell(a, c.alpha, c.sep, c.frac, c.seed, c.dir,
                           pair_factor);
      } catch (const CmdError& e) {
        rows[i].alpha = c.alpha;
        rows[i].sep = c.sep;
        rows[i].frac = c.frac;
        rows[i].seed = c.seed;
        rows[i].status = "error";
        errors[i] = e.message;
      }
    }
  };
  int jobs = std::max(1, std::min<int>(a.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  std::ostringstream csv;
  csv << "alpha,separation,fraction,seed,status,m,pass,coverage_frac,"
         "min_purity,worst_missed_frac,worst_spurious,worst_mean_ratio,"
         "worst_pair_ratio,min_set_size\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    csv << fmt_double(r.alpha) << "," << fmt_double(r.sep) << ","
        << fmt_double(r.frac) << "," << r.seed << "," << r.status;
    if (r.report.is_object()) {
      csv << "," << r.report["m"].get<std::int64_t>() << ","
          << (r.report["pass"].get<bool>() ? 1 : 0) << ","
          << fmt_double(r.report["coverage_frac"].get<double>()) << ","
          << fmt_double(r.report["min_purity"].get<double>()) << ","
          << fmt_double(r.report["worst_missed_frac"].get<double>()) << ","
          << fmt_double(r.report["worst_spurious"].get<double>()) << ","
          << fmt_double(r.report["worst_mean_ratio"].get<double>()) << ","
          << fmt_double(r.report["worst_pair_ratio"].get<double>()) << ","
          << r.report["min_set_size"].get<std::int64_t>();
    } else {
      csv << ",0,0,,,,,,";
    }
    csv << "\n";
    if (!errors[i].empty())
      std::cerr << cells[i].dir.filename().string() << ": " << errors[i]
                << "\n";
  }
  write_file(out / "sweep.csv", csv.str());

  json params;
  params["preset"] = a.preset;
  params["n"] = a.n;
  params["alphas"] = a.alphas;
  params["separations"] = a.seps;
  params["fractions"] = a.fracs;
  params["seeds"] = a.seeds;
  params["strategy"] = a.strategy;
  params["delta"] = a.delta;
  params["profile"] = a.profile;
  params["set"] = a.sets;
  params["c_const"] = a.c_const;
  params["pairwise_factor"] = pair_factor;
  write_manifest(out, "sweep", params, {out / "sweep.csv"});
  std::cout << "wrote " << rows.size() << " cells -> "
            << (out / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fine-grained bounded-covariance mixture clustering"};
  app.require_subcommand(1);

  GenerateArgs ga;
  CLI::App* gen = app.add_subcommand("generate", "draw a synthetic dataset");
  gen->add_option("--preset", ga.preset,
                  "separated_gaussians | scale_contrast | twin_pairs | "
                  "axis_grid");
  gen->add_option("--spec", ga.spec_path, "mixture spec JSON file");
  gen->add_option("--n", ga.n, "sample count");
  gen->add_option("--seed", ga.seed, "generator seed");
  gen->add_option("--alpha", ga.alpha, "preset alpha override");
  gen->add_option("--sep", ga.sep, "preset separation factor override");
  gen->add_option("--dim", ga.dim, "preset dimension override");
  gen->add_option("--csep", ga.csep, "axis_grid separation constant");
  gen->add_option("--grid", ga.grid, "axis_grid points per cluster");
  gen->add_option("--out", ga.out, "output directory")->required();

  CorruptArgs ca;
  CLI::App* cor = app.add_subcommand("corrupt", "adversarially replace points");
  cor->add_option("--data", ca.data_path, "dataset file")->required();
  cor->add_option("--labels", ca.labels_path, "labels file")->required();
  cor->add_option("--truth", ca.truth_path, "truth metadata JSON")->required();
  cor->add_option("--fraction", ca.fraction, "fraction to replace");
  cor->add_option("--strategy", ca.strategy,
                  "far_blob | fake_cluster | bridge | replace_random");
  cor->add_option("--seed", ca.seed, "corruption seed");
  cor->add_option("--out", ca.out, "output directory")->required();

  ClusterArgs cla;
  CLI::App* clu = app.add_subcommand("cluster", "run the clustering pipeline");
  clu->add_option("--data", cla.data_path, "dataset file")->required();
  clu->add_option("--alpha", cla.alpha, "minimum component weight")
      ->required();
  clu->add_option("--delta", cla.delta, "failure probability budget");
  clu->add_option("--seed", cla.seed, "algorithm seed");
  clu->add_option("--profile", cla.profile, "paper | practical");
  clu->add_option("--set", cla.sets, "profile override key=value")
      ->take_all();
  clu->add_option("--baseline", cla.baseline_k,
                  "also write k-PCA/k-means labels for this k");
  clu->add_option("--out", cla.out, "output directory")->required();

  VerifyArgs va;
  CLI::App* ver = app.add_subcommand("verify", "audit output vs ground truth");
  ver->add_option("--data", va.data_path, "dataset file")->required();
  ver->add_option("--assign", va.assign_path, "assignments file")->required();
  ver->add_option("--labels", va.labels_path, "truth labels file")->required();
  ver->add_option("--truth", va.truth_path, "truth metadata JSON")->required();
  ver->add_option("--alpha", va.alpha, "minimum component weight")
      ->required();
  ver->add_option("--c", va.c_const, "mean accuracy constant");
  ver->add_option("--pair-factor", va.pair_factor,
                  "pairwise separation factor");
  ver->add_option("--out", va.out, "report output directory");

  SweepArgs sa;
  CLI::App* swp = app.add_subcommand("sweep", "grid of generate+cluster+verify");
  swp->add_option("--preset", sa.preset, "mixture preset");
  swp->add_option("--n", sa.n, "sample count per cell");
  swp->add_option("--alphas", sa.alphas, "alpha grid")
      ->required()
      ->delimiter(',');
  swp->add_option("--seps", sa.seps, "separation factor grid")
      ->required()
      ->delimiter(',');
  swp->add_option("--fracs", sa.fracs, "corruption fraction grid")
      ->required()
      ->delimiter(',');
  swp->add_option("--seeds", sa.seeds, "seed grid")->required()->delimiter(',');
  swp->add_option("--strategy", sa.strategy, "corruption strategy");
  swp->add_option("--delta", sa.delta, "failure probability budget");
  swp->add_option("--profile", sa.profile, "paper | practical");
  swp->add_option("--set", sa.sets, "profile override key=value")->take_all();
  swp->add_option("--c", sa.c_const, "mean accuracy constant");
  swp->add_option("--pair-factor", sa.pair_factor,
                  "pairwise separation factor (0 = profile default)");
  swp->add_option("--jobs", sa.jobs, "parallel cells");
  swp->add_option("--out", sa.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(ga);
    if (cor->parsed()) return cmd_corrupt(ca);
    if (clu->parsed()) return cmd_cluster(cla);
    if (ver->parsed()) return cmd_verify(va);
    if (swp->parsed()) return cmd_sweep(sa);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const CmdError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  }
}
