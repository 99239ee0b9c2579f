#include "core/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/rng.hpp"

namespace fc::datagen {

using nlohmann::json;

Kind kind_from_string(const std::string& s) {
  if (s == "gaussian") return Kind::gaussian;
  if (s == "uniform_ball") return Kind::uniform_ball;
  if (s == "student_t") return Kind::student_t;
  if (s == "point_mass") return Kind::point_mass;
  if (s == "axis_grid") return Kind::axis_grid;
  fail(ErrorCode::invalid_argument, "unknown component kind: " + s);
}

std::string kind_to_string(Kind k) {
  switch (k) {
    case Kind::gaussian: return "gaussian";
    case Kind::uniform_ball: return "uniform_ball";
    case Kind::student_t: return "student_t";
    case Kind::point_mass: return "point_mass";
    case Kind::axis_grid: return "axis_grid";
  }
  fail(ErrorCode::invalid_argument, "bad kind enum");
}

void MixtureSpec::validate() const {
  require(dim >= 1, ErrorCode::invalid_argument, "dim must be >= 1");
  require(!components.empty(), ErrorCode::invalid_argument,
          "mixture needs at least one component");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "alpha must lie in (0,1)");
  require(separation_factor >= 0.0, ErrorCode::invalid_argument,
          "separation_factor must be >= 0");
  double wsum = 0.0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const ComponentSpec& c = components[i];
    require(c.mean.size() == dim, ErrorCode::invalid_argument,
            "component " + std::to_string(i) + " mean has wrong dimension");
    require(c.mean.allFinite(), ErrorCode::invalid_argument,
            "component " + std::to_string(i) + " mean is not finite");
    require(std::isfinite(c.sigma) && c.sigma >= 0.0,
            ErrorCode::invalid_argument,
            "component " + std::to_string(i) + " sigma must be >= 0");
    require(c.weight >= alpha - 1e-12, ErrorCode::invalid_argument,
            "component " + std::to_string(i) + " weight below alpha");
    if (c.kind == Kind::student_t)
      require(c.dof > 2.0, ErrorCode::invalid_argument,
              "component " + std::to_string(i) + " student_t dof must be > 2");
    wsum += c.weight;
  }
  require(std::abs(wsum - 1.0) <= 1e-9, ErrorCode::invalid_argument,
          "component weights must sum to 1");
  double root_alpha = std::sqrt(alpha);
  for (std::size_t i = 0; i < components.size(); ++i)
    for (std::size_t j = i + 1; j < components.size(); ++j) {
      double dist = (components[i].mean - components[j].mean).norm();
      double bound = separation_factor *
                     (components[i].sigma + components[j].sigma) / root_alpha;
      require(dist > bound - 1e-9, ErrorCode::invalid_argument,
              "components " + std::to_string(i) + "," + std::to_string(j) +
                  " violate the separation bound (" + std::to_string(dist) +
                  " <= " + std::to_string(bound) + ")");
    }
}

std::string mixspec_to_json(const MixtureSpec& spec) {
  json j;
  j["dim"] = spec.dim;
  j["alpha"] = spec.alpha;
  j["separation_factor"] = spec.separation_factor;
  j["components"] = json::array();
  for (const ComponentSpec& c : spec.components) {
    json jc;
    jc["kind"] = kind_to_string(c.kind);
    jc["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
    jc["sigma"] = c.sigma;
    jc["weight"] = c.weight;
    if (c.kind == Kind::student_t) jc["dof"] = c.dof;
    j["components"].push_back(jc);
  }
  return j.dump(2) + "\n";
}

MixtureSpec mixspec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::io, std::string("mixture spec parse error: ") + e.what());
  }
  MixtureSpec spec;
  try {
    spec.dim = j.at("dim").get<Index>();
    spec.alpha = j.at("alpha").get<double>();
    spec.separation_factor = j.at("separation_factor").get<double>();
    for (const json& jc : j.at("components")) {
      ComponentSpec c;
      c.kind = kind_from_string(jc.at("kind").get<std::string>());
      std::vector<double> m = jc.at("mean").get<std::vector<double>>();
      c.mean = Eigen::Map<const Vec>(m.data(), static_cast<Index>(m.size()));
      c.sigma = jc.at("sigma").get<double>();
      c.weight = jc.at("weight").get<double>();
      if (jc.contains("dof")) c.dof = jc.at("dof").get<double>();
      spec.components.push_back(std::move(c));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::io, std::string("mixture spec field error: ") + e.what());
  }
  spec.validate();
  return spec;
}

MixtureSpec load_mixspec(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorCode::io, "cannot open mixture spec: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return mixspec_from_json(ss.str());
}

void save_mixspec(const MixtureSpec& spec, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorCode::io, "cannot write mixture spec: " + path);
  f << mixspec_to_json(spec);
  require(f.good(), ErrorCode::io, "write failed: " + path);
}

namespace {

// Largest-remainder allocation of n among weights. Deterministic; ties go to
// the lowest component index.
std::vector<Index> allocate_counts(const std::vector<double>& weights, Index n) {
  std::size_t k = weights.size();
  std::vector<Index> counts(k);
  std::vector<std::pair<double, std::size_t>> rem(k);
  Index used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double exact = weights[i] * static_cast<double>(n);
    counts[i] = static_cast<Index>(std::floor(exact + 1e-12));
    rem[i] = {exact - static_cast<double>(counts[i]), i};
    used += counts[i];
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (Index left = n - used; left > 0; --left)
    counts[rem[static_cast<std::size_t>(n - used - left)].second] += 1;
  return counts;
}

// One sample of the given component. `ordinal`/`count` feed the grid kind,
// which is deterministic within a component.
Vec sample_component(const ComponentSpec& c, Index dim, Rng& rng,
                     Index ordinal, Index count) {
  Vec x(dim);
  switch (c.kind) {
    case Kind::gaussian: {
      for (Index i = 0; i < dim; ++i) x[i] = c.sigma * rng.normal();
      break;
    }
    case Kind::uniform_ball: {
      // Radius chosen so each coordinate has variance sigma^2 exactly.
      double radius = c.sigma * std::sqrt(static_cast<double>(dim) + 2.0);
      Vec dir = rng.unit_vector(static_cast<int>(dim));
      double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
      x = r * dir;
      break;
    }
    case Kind::student_t: {
      // Population covariance is (dof/(dof-2)) * scale^2 I; pre-shrink the
      // scale so the covariance operator norm is sigma^2 exactly.
      double scale = c.sigma * std::sqrt((c.dof - 2.0) / c.dof);
      double q = rng.chi_square(c.dof);
      while (q <= 1e-12) q = rng.chi_square(c.dof);
      double mult = scale * std::sqrt(c.dof / q);
      for (Index i = 0; i < dim; ++i) x[i] = mult * rng.normal();
      break;
    }
    case Kind::point_mass: {
      x.setZero();
      break;
    }
    case Kind::axis_grid: {
      // Uniform grid along the first axis, spanning [-L/2, L/2] with L set so
      // the grid variance is sigma^2. Deterministic in the ordinal.
      x.setZero();
      if (count > 1) {
        double g = static_cast<double>(count);
        double spacing_var = (g * g - 1.0) / 12.0;  // variance at unit spacing
        double h = c.sigma / std::sqrt(spacing_var);
        x[0] = h * (static_cast<double>(ordinal) - 0.5 * (g - 1.0));
      }
      break;
    }
  }
  return x + c.mean;
}

}  // namespace

Generated generate(const MixtureSpec& spec, Index n, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, ErrorCode::invalid_argument, "n must be >= 1");

  std::vector<double> weights;
  for (const ComponentSpec& c : spec.components) weights.push_back(c.weight);
  std::vector<Index> counts = allocate_counts(weights, n);

  std::vector<std::int32_t> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < counts.size(); ++c)
    labels.insert(labels.end(), static_cast<std::size_t>(counts[c]),
                  static_cast<std::int32_t>(c));

  Rng shuffle_rng(derive_seed(seed, 1));
  shuffle_rng.shuffle(labels);

  Rng draw_rng(derive_seed(seed, 2));
  Mat pts(n, spec.dim);
  std::vector<Index> seen(counts.size(), 0);
  for (Index i = 0; i < n; ++i) {
    std::size_t c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    pts.row(i) = sample_component(spec.components[c], spec.dim, draw_rng,
                                  seen[c], counts[c])
                     .transpose();
    seen[c] += 1;
  }

  Generated out;
  out.data = Dataset(std::move(pts));
  out.truth.labels = std::move(labels);
  out.truth.means.resize(static_cast<Index>(spec.components.size()), spec.dim);
  for (std::size_t c = 0; c < spec.components.size(); ++c) {
    out.truth.means.row(static_cast<Index>(c)) =
        spec.components[c].mean.transpose();
    out.truth.sigmas.push_back(spec.components[c].sigma);
    out.truth.weights.push_back(spec.components[c].weight);
  }
  return out;
}

CorruptStrategy strategy_from_string(const std::string& s) {
  if (s == "far_blob") return CorruptStrategy::far_blob;
  if (s == "fake_cluster") return CorruptStrategy::fake_cluster;
  if (s == "bridge") return CorruptStrategy::bridge;
  if (s == "replace_random") return CorruptStrategy::replace_random;
  fail(ErrorCode::invalid_argument, "unknown corruption strategy: " + s);
}

CorruptInfo corrupt(Dataset& data, GroundTruth& truth, double fraction,
                    CorruptStrategy strategy, std::uint64_t seed) {
  const Index n = data.n();
  const Index d = data.dim();
  require(truth.n() == n, ErrorCode::invalid_argument,
          "truth size does not match dataset");
  require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::invalid_argument,
          "corruption fraction must lie in [0,1]");
  Index count = static_cast<Index>(std::floor(fraction * static_cast<double>(n)));
  CorruptInfo info;
  if (count == 0) return info;

  double sigma_max = 0.0;
  for (double s : truth.sigmas) sigma_max = std::max(sigma_max, s);
  Vec lo = data.points().colwise().minCoeff().transpose();
  Vec hi = data.points().colwise().maxCoeff().transpose();
  double diameter = (hi - lo).norm();
  double base_scale = sigma_max > 0.0 ? sigma_max : std::max(diameter, 1.0);

  // Pick replaced rows by seeded partial Fisher-Yates over [0, n).
  Rng rng(derive_seed(seed, 3));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < count; ++i) {
    std::size_t j = static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(rng.below(
                        static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  info.replaced.assign(pool.begin(), pool.begin() + count);
  std::sort(info.replaced.begin(), info.replaced.end());

  switch (strategy) {
    case CorruptStrategy::far_blob: {
      Vec dir = rng.unit_vector(static_cast<int>(d));
      Vec center = 1e6 * base_scale * dir;
      for (Index i : info.replaced) {
        Vec jitter(d);
        for (Index a = 0; a < d; ++a) jitter[a] = 1e-9 * base_scale * rng.normal();
        data.points().row(i) = (center + jitter).transpose();
      }
      break;
    }
    case CorruptStrategy::fake_cluster: {
      require(static_cast<double>(count) < 0.8 * /*alpha*n:*/ [&] {
                double wmin = 1.0;
                for (double w : truth.weights) wmin = std::min(wmin, w);
                return wmin * static_cast<double>(n);
              }(),
              ErrorCode::invalid_argument,
              "fake_cluster clump must stay below 0.8*alpha*n points");
      Vec anchor = truth.means.row(0).transpose();
      Vec dir = rng.unit_vector(static_cast<int>(d));
      double off = 3.0 * std::max(truth.sigmas.empty() ? 0.0 : truth.sigmas[0],
                                  1e-3 * base_scale);
      Vec center = anchor + off * dir;
      for (Index i : info.replaced) {
        Vec jitter(d);
        for (Index a = 0; a < d; ++a) jitter[a] = 1e-6 * base_scale * rng.normal();
        data.points().row(i) = (center + jitter).transpose();
      }
      break;
    }
    case CorruptStrategy::bridge: {
      require(truth.k() >= 2, ErrorCode::invalid_argument,
              "bridge corruption needs at least two clusters");
      Index k = truth.k();
      Index pair = 0;
      for (Index i : info.replaced) {
        Index a = pair % k;
        Index b = (pair + 1) % k;
        pair += 1;
        double t = rng.uniform();
        Vec p = (1.0 - t) * truth.means.row(a).transpose() +
                t * truth.means.row(b).transpose();
        data.points().row(i) = p.transpose();
      }
      break;
    }
    case CorruptStrategy::replace_random: {
      Vec span = hi - lo;
      for (Index a = 0; a < d; ++a) span[a] = std::max(span[a], 1e-9);
      for (Index i : info.replaced) {
        Vec p(d);
        for (Index a = 0; a < d; ++a)
          p[a] = lo[a] - 0.5 * span[a] + 2.0 * span[a] * rng.uniform();
        data.points().row(i) = p.transpose();
      }
      break;
    }
  }

  for (Index i : info.replaced)
    truth.labels[static_cast<std::size_t>(i)] = kOutlierLabel;
  return info;
}

Generated nlsc_counterexample(double alpha, double C, Index grid_points) {
  require(alpha > 0.0 && alpha <= 0.5, ErrorCode::invalid_argument,
          "alpha must lie in (0, 0.5]");
  require(C > 0.0, ErrorCode::invalid_argument, "C must be positive");
  require(grid_points >= 2, ErrorCode::invalid_argument,
          "need at least 2 grid points per cluster");

  Index d = static_cast<Index>(std::ceil(1.0 / (2.0 * alpha)));
  Index k = 2 * d;
  Index n = k * grid_points;
  double offset = C / std::sqrt(alpha);
  double g = static_cast<double>(grid_points);
  // Grid values on [-1/2, 1/2].
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (Index j = 0; j < grid_points; ++j)
    grid[static_cast<std::size_t>(j)] =
        (static_cast<double>(j) + 0.5) / g - 0.5;
  double grid_var = 0.0;
  for (double v : grid) grid_var += v * v;
  grid_var /= g;

  Mat pts = Mat::Zero(n, d);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
  Mat means = Mat::Zero(k, d);
  Index row = 0;
  for (Index axis = 0; axis < d; ++axis)
    for (int side = 0; side < 2; ++side) {
      Index cluster = 2 * axis + side;
      double sign = side == 0 ? 1.0 : -1.0;
      means(cluster, axis) = sign * offset;
      for (Index j = 0; j < grid_points; ++j) {
        pts(row, axis) = sign * offset + grid[static_cast<std::size_t>(j)];
        labels[static_cast<std::size_t>(row)] =
            static_cast<std::int32_t>(cluster);
        ++row;
      }
    }

  Generated out;
  out.data = Dataset(std::move(pts));
  out.truth.labels = std::move(labels);
  out.truth.means = std::move(means);
  out.truth.sigmas.assign(static_cast<std::size_t>(k), std::sqrt(grid_var));
  out.truth.weights.assign(static_cast<std::size_t>(k),
                           1.0 / static_cast<double>(k));
  return out;
}

TwoTruths nonidentifiable_fixture(Index n) {
  require(n >= 4 && n % 4 == 0, ErrorCode::invalid_argument,
          "n must be a positive multiple of 4");
  const double D = 1000.0;
  const Index q = n / 4;
  Mat locs(4, 2);
  locs << 0, 0, 1, 0, D, 0, D + 1, 0;

  Mat pts(n, 2);
  std::vector<std::int32_t> fine(static_cast<std::size_t>(n));
  for (Index c = 0; c < 4; ++c)
    for (Index j = 0; j < q; ++j) {
      pts.row(c * q + j) = locs.row(c);
      fine[static_cast<std::size_t>(c * q + j)] = static_cast<std::int32_t>(c);
    }

  TwoTruths out;
  out.data = Dataset(std::move(pts));

  auto make_truth = [&](bool merge_first) {
    GroundTruth t;
    t.labels.resize(static_cast<std::size_t>(n));
    t.means.resize(3, 2);
    if (merge_first) {
      // {0,1} merged, {2}, {3}
      for (Index i = 0; i < n; ++i) {
        std::int32_t f = fine[static_cast<std::size_t>(i)];
        t.labels[static_cast<std::size_t>(i)] = f <= 1 ? 0 : f - 1;
      }
      t.means.row(0) << 0.5, 0.0;
      t.means.row(1) << D, 0.0;
      t.means.row(2) << D + 1, 0.0;
      t.sigmas = {0.5, 0.0, 0.0};
      t.weights = {0.5, 0.25, 0.25};
    } else {
      // {0}, {1}, {2,3} merged
      for (Index i = 0; i < n; ++i) {
        std::int32_t f = fine[static_cast<std::size_t>(i)];
        t.labels[static_cast<std::size_t>(i)] = f <= 1 ? f : 2;
      }
      t.means.row(0) << 0.0, 0.0;
      t.means.row(1) << 1.0, 0.0;
      t.means.row(2) << D + 0.5, 0.0;
      t.sigmas = {0.0, 0.0, 0.5};
      t.weights = {0.25, 0.25, 0.5};
    }
    return t;
  };
  out.merged_first = make_truth(true);
  out.merged_second = make_truth(false);
  return out;
}

Mat separated_means(Index k, Index dim, const std::vector<double>& sigmas,
                    double alpha, double separation_factor) {
  require(k >= 1 && dim >= k, ErrorCode::invalid_argument,
          "separated_means needs dim >= k");
  require(static_cast<Index>(sigmas.size()) == k, ErrorCode::invalid_argument,
          "sigma count must equal k");
  require(alpha > 0.0, ErrorCode::invalid_argument, "alpha must be positive");

  double root_alpha = std::sqrt(alpha);
  double sigma_max = 0.0;
  for (double s : sigmas) sigma_max = std::max(sigma_max, s);

  // Put mean i on axis i at radius a_i, then rescale so the tightest pair
  // sits just above its bound.
  std::vector<double> a(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i)
    a[static_cast<std::size_t>(i)] = std::max(
        separation_factor * (sigmas[static_cast<std::size_t>(i)] + sigma_max) /
            root_alpha,
        1e-9);
  double worst = 0.0;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      double dist = std::hypot(a[static_cast<std::size_t>(i)],
                               a[static_cast<std::size_t>(j)]);
      double need = separation_factor *
                    (sigmas[static_cast<std::size_t>(i)] +
                     sigmas[static_cast<std::size_t>(j)]) /
                    root_alpha;
      if (dist > 0.0) worst = std::max(worst, need / dist);
    }
  double scale = worst > 0.0 ? worst * (1.0 + 1e-6) : 1.0;
  if (k == 1) scale = 0.0;

  Mat means = Mat::Zero(k, dim);
  for (Index i = 0; i < k; ++i)
    means(i, i) = a[static_cast<std::size_t>(i)] * scale;
  return means;
}

MixtureSpec preset_mixspec(const std::string& name, Index dim, double alpha,
                           double separation_factor) {
  if (name == "separated_gaussians") {
    MixtureSpec spec;
    spec.dim = dim > 0 ? dim : 10;
    spec.alpha = alpha > 0.0 ? alpha : 1.0 / 3.0;
    spec.separation_factor =
        separation_factor > 0.0 ? separation_factor : 12.0;
    std::vector<double> sigmas = {0.5, 1.0, 2.0};
    Mat means = separated_means(3, spec.dim, sigmas, spec.alpha,
                                spec.separation_factor);
    for (Index i = 0; i < 3; ++i) {
      ComponentSpec c;
      c.kind = Kind::gaussian;
      c.mean = means.row(i).transpose();
      c.sigma = sigmas[static_cast<std::size_t>(i)];
      c.weight = 1.0 / 3.0;
      spec.components.push_back(std::move(c));
    }
    spec.validate();
    return spec;
  }
  if (name == "scale_contrast") {
    MixtureSpec spec;
    spec.dim = dim > 0 ? dim : 10;
    require(spec.dim >= 2, ErrorCode::invalid_argument,
            "scale_contrast needs dim >= 2");
    spec.alpha = alpha > 0.0 ? alpha : 1.0 / 3.0;
    spec.separation_factor =
        separation_factor > 0.0 ? separation_factor : 8.0;
    ComponentSpec wide;
    wide.kind = Kind::gaussian;
    wide.mean = Vec::Zero(spec.dim);
    wide.sigma = 1.0;
    wide.weight = 1.0 / 3.0;
    ComponentSpec tight_a = wide;
    tight_a.mean = Vec::Zero(spec.dim);
    tight_a.mean(0) = 50.0;
    tight_a.sigma = 1e-3;
    ComponentSpec tight_b = tight_a;
    tight_b.mean(1) = 0.3;
    spec.components = {wide, tight_a, tight_b};
    spec.validate();
    return spec;
  }
  fail(ErrorCode::invalid_argument,
       "unknown preset: " + name +
           " (expected separated_gaussians or scale_contrast)");
}

}  // namespace fc::datagen
