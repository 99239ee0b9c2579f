#include "finecluster/finecluster.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "core/baseline.hpp"
#include "core/datagen.hpp"
#include "core/dataset.hpp"
#include "core/pipeline.hpp"
#include "core/types.hpp"
#include "core/verify.hpp"

struct fc_dataset {
  fc::Dataset impl;
};
struct fc_truth {
  fc::GroundTruth impl;
};
struct fc_mixspec {
  fc::datagen::MixtureSpec impl;
};
struct fc_options {
  double alpha = 0.0;
  double delta = 0.01;
  std::uint64_t seed = 0;
  fc::pipeline::ConstantsProfile profile =
      fc::pipeline::ConstantsProfile::practical();
};
struct fc_result {
  fc::pipeline::ClusterOutput impl;
};
struct fc_report {
  fc::verify::RefinementReport impl;
};

namespace {

void put_err(char* err, size_t err_len, const char* msg) {
  if (!err || err_len == 0) return;
  std::size_t n = std::strlen(msg);
  if (n >= err_len) n = err_len - 1;
  std::memcpy(err, msg, n);
  err[n] = '\0';
}

fc_status map_code(fc::ErrorCode code) {
  switch (code) {
    case fc::ErrorCode::invalid_argument: return FC_ERR_INVALID;
    case fc::ErrorCode::io: return FC_ERR_IO;
    case fc::ErrorCode::numeric: return FC_ERR_NUMERIC;
    case fc::ErrorCode::no_result: return FC_ERR_NO_RESULT;
  }
  return FC_ERR_NUMERIC;
}

template <typename Fn>
fc_status wrap(char* err, size_t err_len, Fn&& fn) {
  try {
    fn();
    return FC_OK;
  } catch (const fc::Error& e) {
    put_err(err, err_len, e.what());
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    put_err(err, err_len, "out of memory");
    return FC_ERR_NUMERIC;
  } catch (const std::exception& e) {
    put_err(err, err_len, e.what());
    return FC_ERR_NUMERIC;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void check(bool ok, const char* msg) {
  fc::require(ok, fc::ErrorCode::invalid_argument, msg);
}

}  // namespace

extern "C" {

const char* fc_version(void) { return "0.1.0"; }

void fc_string_free(char* s) { delete[] s; }

/* ---- datasets ---- */

fc_status fc_dataset_create(const double* data, int64_t n, int64_t d,
                            fc_dataset** out, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(data && out && n >= 0 && d >= 0, "bad dataset arguments");
    fc::Mat m(n, d);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < d; ++j) m(i, j) = data[i * d + j];
    *out = new fc_dataset{fc::Dataset(std::move(m))};
  });
}

fc_status fc_dataset_load(const char* path, fc_dataset** out, char* err,
                          size_t err_len) {
  return wrap(err, err_len, [&] {
    check(path && out, "bad dataset arguments");
    *out = new fc_dataset{fc::load_dataset(path)};
  });
}

fc_status fc_dataset_save(const fc_dataset* ds, const char* path, char* err,
                          size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && path, "bad dataset arguments");
    fc::save_dataset(ds->impl, path);
  });
}

int64_t fc_dataset_n(const fc_dataset* ds) { return ds ? ds->impl.n() : 0; }

int64_t fc_dataset_dim(const fc_dataset* ds) {
  return ds ? ds->impl.dim() : 0;
}

fc_status fc_dataset_copy(const fc_dataset* ds, double* buf, size_t buf_len,
                          char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && buf, "bad dataset arguments");
    const fc::Mat& m = ds->impl.points();
    std::size_t need =
        static_cast<std::size_t>(m.rows()) * static_cast<std::size_t>(m.cols());
    check(buf_len >= need, "buffer too small");
    for (fc::Index i = 0; i < m.rows(); ++i)
      for (fc::Index j = 0; j < m.cols(); ++j)
        buf[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  });
}

void fc_dataset_free(fc_dataset* ds) { delete ds; }

/* ---- mixture specifications ---- */

fc_status fc_mixspec_from_json(const char* json_text, fc_mixspec** out,
                               char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(json_text && out, "bad mixspec arguments");
    *out = new fc_mixspec{fc::datagen::mixspec_from_json(json_text)};
  });
}

fc_status fc_mixspec_load(const char* path, fc_mixspec** out, char* err,
                          size_t err_len) {
  return wrap(err, err_len, [&] {
    check(path && out, "bad mixspec arguments");
    *out = new fc_mixspec{fc::datagen::load_mixspec(path)};
  });
}

fc_status fc_mixspec_save(const fc_mixspec* spec, const char* path, char* err,
                          size_t err_len) {
  return wrap(err, err_len, [&] {
    check(spec && path, "bad mixspec arguments");
    fc::datagen::save_mixspec(spec->impl, path);
  });
}

fc_status fc_mixspec_to_json(const fc_mixspec* spec, char** out, char* err,
                             size_t err_len) {
  return wrap(err, err_len, [&] {
    check(spec && out, "bad mixspec arguments");
    *out = dup_string(fc::datagen::mixspec_to_json(spec->impl));
  });
}

fc_status fc_mixspec_preset(const char* name, int64_t dim, double alpha,
                            double separation_factor, fc_mixspec** out,
                            char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(name && out, "bad mixspec arguments");
    *out = new fc_mixspec{
        fc::datagen::preset_mixspec(name, dim, alpha, separation_factor)};
  });
}

int64_t fc_mixspec_k(const fc_mixspec* spec) {
  return spec ? static_cast<int64_t>(spec->impl.components.size()) : 0;
}

int64_t fc_mixspec_dim(const fc_mixspec* spec) {
  return spec ? spec->impl.dim : 0;
}

double fc_mixspec_alpha(const fc_mixspec* spec) {
  return spec ? spec->impl.alpha : 0.0;
}

void fc_mixspec_free(fc_mixspec* spec) { delete spec; }

/* ---- ground truth ---- */

int64_t fc_truth_k(const fc_truth* t) { return t ? t->impl.k() : 0; }

int64_t fc_truth_n(const fc_truth* t) { return t ? t->impl.n() : 0; }

fc_status fc_truth_labels(const fc_truth* t, int32_t* buf, size_t buf_len,
                          char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(t && buf, "bad truth arguments");
    check(buf_len >= t->impl.labels.size(), "buffer too small");
    std::memcpy(buf, t->impl.labels.data(),
                t->impl.labels.size() * sizeof(int32_t));
  });
}

double fc_truth_sigma(const fc_truth* t, int64_t i) {
  if (!t || i < 0 || i >= t->impl.k()) return -1.0;
  return t->impl.sigmas[static_cast<std::size_t>(i)];
}

fc_status fc_truth_mean(const fc_truth* t, int64_t i, double* buf,
                        size_t buf_len, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(t && buf, "bad truth arguments");
    check(i >= 0 && i < t->impl.k(), "cluster index out of range");
    check(buf_len >= static_cast<std::size_t>(t->impl.means.cols()),
          "buffer too small");
    for (fc::Index j = 0; j < t->impl.means.cols(); ++j)
      buf[static_cast<std::size_t>(j)] = t->impl.means(i, j);
  });
}

fc_status fc_truth_save(const fc_truth* t, const char* labels_path,
                        const char* meta_json_path, char* err,
                        size_t err_len) {
  return wrap(err, err_len, [&] {
    check(t && labels_path && meta_json_path, "bad truth arguments");
    fc::save_labels(t->impl.labels, labels_path);
    nlohmann::json j;
    j["k"] = t->impl.k();
    j["dim"] = t->impl.means.cols();
    nlohmann::json means = nlohmann::json::array();
    for (fc::Index i = 0; i < t->impl.means.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (fc::Index c = 0; c < t->impl.means.cols(); ++c)
        row.push_back(t->impl.means(i, c));
      means.push_back(row);
    }
    j["means"] = means;
    j["sigmas"] = t->impl.sigmas;
    j["weights"] = t->impl.weights;
    std::ofstream f(meta_json_path, std::ios::binary);
    fc::require(f.good(), fc::ErrorCode::io,
                std::string("cannot open for write: ") + meta_json_path);
    f << j.dump(2) << "\n";
    fc::require(f.good(), fc::ErrorCode::io,
                std::string("write failed: ") + meta_json_path);
  });
}

fc_status fc_truth_load(const char* labels_path, const char* meta_json_path,
                        fc_truth** out, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(labels_path && meta_json_path && out, "bad truth arguments");
    fc::GroundTruth t;
    t.labels = fc::load_labels(labels_path);
    std::ifstream f(meta_json_path, std::ios::binary);
    fc::require(f.good(), fc::ErrorCode::io,
                std::string("cannot open: ") + meta_json_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      fc::fail(fc::ErrorCode::io,
               std::string("bad truth metadata: ") + e.what());
    }
    const auto& means = j.at("means");
    fc::Index k = static_cast<fc::Index>(means.size());
    fc::Index dim = j.at("dim").get<fc::Index>();
    t.means = fc::Mat::Zero(k, dim);
    for (fc::Index i = 0; i < k; ++i) {
      const auto& row = means.at(static_cast<std::size_t>(i));
      fc::require(static_cast<fc::Index>(row.size()) == dim,
                  fc::ErrorCode::io, "truth metadata mean has wrong length");
      for (fc::Index c = 0; c < dim; ++c)
        t.means(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    t.sigmas = j.at("sigmas").get<std::vector<double>>();
    t.weights = j.at("weights").get<std::vector<double>>();
    fc::require(static_cast<fc::Index>(t.sigmas.size()) == k &&
                    static_cast<fc::Index>(t.weights.size()) == k,
                fc::ErrorCode::io, "truth metadata sizes disagree");
    for (std::int32_t lab : t.labels)
      fc::require(lab >= -1 && lab < k, fc::ErrorCode::io,
                  "label outside [0,k)");
    *out = new fc_truth{std::move(t)};
  });
}

void fc_truth_free(fc_truth* t) { delete t; }

/* ---- generation and corruption ---- */

fc_status fc_generate(const fc_mixspec* spec, int64_t n, uint64_t seed,
                      fc_dataset** out_data, fc_truth** out_truth, char* err,
                      size_t err_len) {
  return wrap(err, err_len, [&] {
    check(spec && out_data && out_truth, "bad generate arguments");
    fc::datagen::Generated g = fc::datagen::generate(spec->impl, n, seed);
    *out_data = new fc_dataset{std::move(g.data)};
    *out_truth = new fc_truth{std::move(g.truth)};
  });
}

fc_status fc_generate_special(const char* name, int64_t n, double alpha,
                              double c_sep, int64_t grid_points,
                              fc_dataset** out_data, fc_truth** out_truth,
                              fc_truth** out_truth_alt, char* err,
                              size_t err_len) {
  return wrap(err, err_len, [&] {
    check(name && out_data && out_truth, "bad generate arguments");
    std::string which = name;
    if (which == "twin_pairs") {
      fc::datagen::TwoTruths tt = fc::datagen::nonidentifiable_fixture(n);
      *out_data = new fc_dataset{std::move(tt.data)};
      *out_truth = new fc_truth{std::move(tt.merged_first)};
      if (out_truth_alt)
        *out_truth_alt = new fc_truth{std::move(tt.merged_second)};
      return;
    }
    if (which == "axis_grid") {
      fc::datagen::Generated g =
          fc::datagen::nlsc_counterexample(alpha, c_sep, grid_points);
      *out_data = new fc_dataset{std::move(g.data)};
      *out_truth = new fc_truth{std::move(g.truth)};
      if (out_truth_alt) *out_truth_alt = nullptr;
      return;
    }
    fc::fail(fc::ErrorCode::invalid_argument,
             "unknown special fixture: " + which +
                 " (expected twin_pairs or axis_grid)");
  });
}

fc_status fc_corrupt(fc_dataset* ds, fc_truth* truth, double fraction,
                     const char* strategy, uint64_t seed,
                     int64_t* out_replaced, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && truth && strategy, "bad corrupt arguments");
    fc::datagen::CorruptInfo info = fc::datagen::corrupt(
        ds->impl, truth->impl, fraction,
        fc::datagen::strategy_from_string(strategy), seed);
    if (out_replaced)
      *out_replaced = static_cast<int64_t>(info.replaced.size());
  });
}

/* ---- clustering ---- */

fc_status fc_options_create(fc_options** out, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(out != nullptr, "bad options arguments");
    *out = new fc_options{};
  });
}

fc_status fc_options_set_alpha(fc_options* o, double alpha, char* err,
                               size_t err_len) {
  return wrap(err, err_len, [&] {
    check(o != nullptr, "bad options arguments");
    check(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    o->alpha = alpha;
  });
}

fc_status fc_options_set_delta(fc_options* o, double delta, char* err,
                               size_t err_len) {
  return wrap(err, err_len, [&] {
    check(o != nullptr, "bad options arguments");
    check(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
    o->delta = delta;
  });
}

fc_status fc_options_set_seed(fc_options* o, uint64_t seed, char* err,
                              size_t err_len) {
  return wrap(err, err_len, [&] {
    check(o != nullptr, "bad options arguments");
    o->seed = seed;
  });
}

fc_status fc_options_set_profile(fc_options* o, const char* name, char* err,
                                 size_t err_len) {
  return wrap(err, err_len, [&] {
    check(o && name, "bad options arguments");
    o->profile = fc::pipeline::ConstantsProfile::by_name(name);
  });
}

fc_status fc_options_override(fc_options* o, const char* key, double value,
                              char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(o && key, "bad options arguments");
    o->profile.set(key, value);
  });
}

void fc_options_free(fc_options* o) { delete o; }

fc_status fc_cluster(const fc_dataset* ds, const fc_options* opts,
                     fc_result** out, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && opts && out, "bad cluster arguments");
    fc::pipeline::ClusterOptions co;
    co.alpha = opts->alpha;
    co.delta = opts->delta;
    co.seed = opts->seed;
    co.profile = opts->profile;
    *out = new fc_result{fc::pipeline::cluster(ds->impl, co)};
  });
}

int64_t fc_result_m(const fc_result* r) { return r ? r->impl.m() : 0; }

fc_status fc_result_assignments(const fc_result* r, int32_t* buf,
                                size_t buf_len, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && buf, "bad result arguments");
    check(buf_len >= r->impl.assignments.size(), "buffer too small");
    std::memcpy(buf, r->impl.assignments.data(),
                r->impl.assignments.size() * sizeof(int32_t));
  });
}

int64_t fc_result_set_size(const fc_result* r, int64_t j) {
  if (!r || j < 0 || j >= r->impl.m()) return -1;
  return static_cast<int64_t>(
      r->impl.sets[static_cast<std::size_t>(j)].indices.size());
}

fc_status fc_result_set_indices(const fc_result* r, int64_t j, int64_t* buf,
                                size_t buf_len, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && buf, "bad result arguments");
    check(j >= 0 && j < r->impl.m(), "set index out of range");
    const fc::IndexVec& idx = r->impl.sets[static_cast<std::size_t>(j)].indices;
    check(buf_len >= idx.size(), "buffer too small");
    for (std::size_t i = 0; i < idx.size(); ++i)
      buf[i] = static_cast<int64_t>(idx[i]);
  });
}

fc_status fc_result_center(const fc_result* r, int64_t j, double* buf,
                           size_t buf_len, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && buf, "bad result arguments");
    check(j >= 0 && j < r->impl.m(), "set index out of range");
    const fc::Vec& c = r->impl.sets[static_cast<std::size_t>(j)].center;
    check(buf_len >= static_cast<std::size_t>(c.size()), "buffer too small");
    for (fc::Index i = 0; i < c.size(); ++i)
      buf[static_cast<std::size_t>(i)] = c(i);
  });
}

double fc_result_scale(const fc_result* r, int64_t j) {
  if (!r || j < 0 || j >= r->impl.m()) return -1.0;
  return r->impl.sets[static_cast<std::size_t>(j)].scale;
}

fc_status fc_result_trace(const fc_result* r, char** out, char* err,
                          size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && out, "bad result arguments");
    *out = dup_string(r->impl.state.trace_text());
  });
}

fc_status fc_result_save(const fc_result* r, const char* path, char* err,
                         size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && path, "bad result arguments");
    fc::save_assignments(r->impl.assignments, path);
  });
}

fc_status fc_result_load(const fc_dataset* ds, const char* path,
                         fc_result** out, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && path && out, "bad result arguments");
    std::vector<std::int32_t> labels = fc::load_assignments(path);
    *out = new fc_result{
        fc::pipeline::output_from_assignments(ds->impl.points(), labels)};
  });
}

void fc_result_free(fc_result* r) { delete r; }

fc_status fc_assignments_save(const int32_t* labels, int64_t n,
                              const char* path, char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(labels && path && n >= 0, "bad assignment arguments");
    std::vector<std::int32_t> v(labels, labels + n);
    fc::save_assignments(v, path);
  });
}

/* ---- verification ---- */

fc_status fc_verify(const fc_result* r, const fc_truth* truth, double alpha,
                    double c_const, double pairwise_factor, fc_report** out,
                    char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && truth && out, "bad verify arguments");
    *out = new fc_report{fc::verify::verify_refinement(
        r->impl, truth->impl, alpha, c_const, pairwise_factor)};
  });
}

int fc_report_pass(const fc_report* rep) {
  return rep && rep->impl.pass ? 1 : 0;
}

fc_status fc_report_text(const fc_report* rep, char** out, char* err,
                         size_t err_len) {
  return wrap(err, err_len, [&] {
    check(rep && out, "bad report arguments");
    *out = dup_string(rep->impl.text());
  });
}

fc_status fc_report_json(const fc_report* rep, char** out, char* err,
                         size_t err_len) {
  return wrap(err, err_len, [&] {
    check(rep && out, "bad report arguments");
    *out = dup_string(rep->impl.json());
  });
}

void fc_report_free(fc_report* rep) { delete rep; }

fc_status fc_metrics_csv(const fc_result* r, const fc_truth* truth, char** out,
                         char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(r && truth && out, "bad metrics arguments");
    *out = dup_string(
        fc::verify::clustering_metrics(r->impl, truth->impl).csv());
  });
}

fc_status fc_nlsc_spotcheck(const fc_dataset* ds, const int64_t* subset,
                            size_t subset_len, double alpha, int64_t n_total,
                            int trials, uint64_t seed, int mode, int* out_pass,
                            double* out_worst_ratio, int* out_vacuous,
                            char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && subset && out_pass && out_worst_ratio, "bad nlsc arguments");
    check(mode == 0 || mode == 1, "mode must be 0 (sampled) or 1 (exhaustive)");
    fc::IndexVec idx(subset, subset + subset_len);
    for (fc::Index i : idx)
      check(i >= 0 && i < ds->impl.n(), "subset index out of range");
    fc::verify::NlscResult res = fc::verify::nlsc_spotcheck(
        ds->impl.points(), idx, alpha, n_total, trials, seed,
        mode == 1 ? fc::verify::NlscMode::exhaustive
                  : fc::verify::NlscMode::sampled);
    *out_pass = res.pass ? 1 : 0;
    *out_worst_ratio = res.worst_ratio;
    if (out_vacuous) *out_vacuous = res.vacuous ? 1 : 0;
  });
}

fc_status fc_kpca_baseline(const fc_dataset* ds, int k, int iters,
                           uint64_t seed, int32_t* out_labels, size_t out_len,
                           char* err, size_t err_len) {
  return wrap(err, err_len, [&] {
    check(ds && out_labels, "bad baseline arguments");
    check(out_len >= static_cast<std::size_t>(ds->impl.n()),
          "buffer too small");
    std::vector<std::int32_t> labels =
        fc::baseline::kpca_kmeans(ds->impl.points(), k, iters, seed);
    std::memcpy(out_labels, labels.data(), labels.size() * sizeof(int32_t));
  });
}

}  /* extern "C" */
