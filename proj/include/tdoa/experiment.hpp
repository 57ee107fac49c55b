#pragma once

// Monte-Carlo harness: sources on spheres around the array, noisy TDOAs,
// optional (partial) denoising, every configured localizer, RMSE and TDOA
// residual statistics per grid point.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tdoa/array_geometry.hpp"
#include "tdoa/errors.hpp"
#include "tdoa/incomplete.hpp"
#include "tdoa/localizers.hpp"
#include "tdoa/noise_stats.hpp"
#include "tdoa/tdoa_space.hpp"

namespace tdoa {

struct RmseResult {
  double value = 0.0;
  int used = 0;
  int failed = 0;
};

/// sqrt(mean ||x_i - truth||^2) over the finite estimates; non-finite ones
/// count as failures.
inline RmseResult rmse(const std::vector<Point>& estimates, const Point& truth) {
  detail::require(!estimates.empty(), "rmse needs at least one estimate");
  RmseResult out;
  double sum = 0.0;
  for (const Point& e : estimates) {
    detail::require(e.size() == truth.size(), "estimate and truth dimensions differ");
    if (!e.allFinite()) {
      ++out.failed;
      continue;
    }
    sum += (e - truth).squaredNorm();
    ++out.used;
  }
  if (out.used == 0) throw NumericalError("every estimate failed");
  out.value = std::sqrt(sum / out.used);
  return out;
}

/// `count` near-uniform points on the sphere (or circle in 2D) of radius
/// `radius` around `center`.
inline std::vector<Point> fibonacci_sphere(const Point& center, double radius, int count) {
  detail::require(radius > 0.0 && count >= 1, "sphere needs radius > 0 and count >= 1");
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    Point p(center.size());
    if (center.size() == 2) {
      const double a = 2.0 * std::numbers::pi * (k + 0.5) / count;
      p << std::cos(a), std::sin(a);
    } else {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * k;
      p << rho * std::cos(a), rho * std::sin(a), z;
    }
    out.push_back(center + radius * p);
  }
  return out;
}

enum class DenoiseMode { off, on, both };

struct MissingSpec {
  enum class Mode { none, explicit_pairs, reference_plus_extra };
  Mode mode = Mode::none;
  std::vector<Pair> pairs;  ///< explicit: the missing pairs
  std::vector<int> z;       ///< reference_plus_extra: numbers of extra pairs
  int max_combinations = 1024;
};

struct ExperimentConfig {
  std::string experiment = "experiment";
  SensorArray array = SensorArray::cross7();
  double sound_speed = 1.0;
  std::vector<double> radii;
  int sources_per_radius = 512;
  std::vector<Point> source_positions;  ///< used instead of spheres when non-empty
  std::vector<NoiseModel> noise_grid;
  int trials = 100;
  std::uint64_t seed = 1;
  std::vector<Localizer> algorithms{Localizer::ls, Localizer::srdls, Localizer::gs};
  DenoiseMode denoise = DenoiseMode::both;
  MissingSpec missing;
  std::string csv_path;
  std::string json_path;
  int threads = 0;  ///< 0: hardware concurrency

  void validate() const {
    detail::require(trials >= 1, "trials must be >= 1");
    detail::require(!noise_grid.empty(), "noise grid must not be empty");
    detail::require(!algorithms.empty(), "algorithm list must not be empty");
    detail::require(sound_speed > 0.0, "sound_speed must be > 0");
    if (source_positions.empty()) {
      detail::require(!radii.empty(), "sources need radii or explicit positions");
      for (double r : radii) detail::require(r > 0.0 && std::isfinite(r), "radii must be > 0");
      detail::require(sources_per_radius >= 1, "source count must be >= 1");
    }
    for (const Point& p : source_positions) detail::check_source(array, p);
    for (const NoiseModel& m : noise_grid) {
      detail::require(m.covariance.size() == 0, "experiment noise grid takes i.i.d. models only");
      m.validate(array.q());
    }
    if (missing.mode == MissingSpec::Mode::reference_plus_extra) {
      detail::require(!missing.z.empty(), "missing.z must not be empty");
      for (int z : missing.z)
        detail::require(z >= 0 && z <= array.q() - array.n(), "missing.z out of range");
      detail::require(missing.max_combinations >= 1, "max_combinations must be >= 1");
    }
    if (missing.mode == MissingSpec::Mode::explicit_pairs) {
      const IndexSet s(array.n(), missing.pairs);
      for (const Pair& p : s.missing())
        detail::require(p.i != 0, "reference pairs (k,0) must stay available");
    }
    detail::require(threads >= 0, "threads must be >= 0");
  }
};

struct ResultRow {
  std::string experiment;
  double d = 0.0;
  double sigma = 0.0;  ///< per-TDOA noise standard deviation
  std::string algo;
  bool denoised = false;
  std::string z;  ///< "full", or the number of extra pairs over the reference set
  double rmse = 0.0;
  double rlb = 0.0;
  double bias = 0.0;
  double tdoa_mu = 0.0;
  double tdoa_sigma = 0.0;
  long fail_count = 0;
  // Not written to the CSV.
  double rmse_se = 0.0;
  long trials_used = 0;
};

inline constexpr const char* kCsvHeader =
    "experiment,d,sigma,algo,denoised,z,rmse,rlb,bias,tdoa_mu,tdoa_sigma,fail_count";

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t source, std::uint64_t grid,
                                std::uint64_t trial) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ source);
  h = splitmix64(h ^ grid);
  return splitmix64(h ^ trial);
}

/// Missing sets for "reference pairs plus z others": every combination in
/// lexicographic order, or a seeded sample of max_combinations of them.
inline std::vector<IndexSet> extra_pair_sets(int n, int z, int max_combinations, std::uint64_t seed) {
  const auto pairs = canonical_pairs(n);
  const int extra = pair_count(n) - n;
  std::vector<std::vector<int>> chosen;
  double total = 1.0;
  for (int k = 0; k < z; ++k) total = total * (extra - k) / (k + 1);
  if (total <= max_combinations) {
    std::vector<int> comb(static_cast<std::size_t>(z));
    for (int k = 0; k < z; ++k) comb[static_cast<std::size_t>(k)] = k;
    while (true) {
      chosen.push_back(comb);
      int k = z - 1;
      while (k >= 0 && comb[static_cast<std::size_t>(k)] == extra - z + k) --k;
      if (k < 0) break;
      ++comb[static_cast<std::size_t>(k)];
      for (int j = k + 1; j < z; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    std::mt19937_64 rng(seed);
    std::set<std::vector<int>> seen;
    std::vector<int> all(static_cast<std::size_t>(extra));
    for (int k = 0; k < extra; ++k) all[static_cast<std::size_t>(k)] = k;
    while (static_cast<int>(chosen.size()) < max_combinations) {
      std::shuffle(all.begin(), all.end(), rng);
      std::vector<int> comb(all.begin(), all.begin() + z);
      std::sort(comb.begin(), comb.end());
      if (seen.insert(comb).second) chosen.push_back(std::move(comb));
    }
  }
  std::vector<IndexSet> out;
  out.reserve(chosen.size());
  for (const auto& comb : chosen) {
    std::vector<bool> keep(static_cast<std::size_t>(extra), false);
    for (int k : comb) keep[static_cast<std::size_t>(k)] = true;
    std::vector<Pair> missing;
    for (int k = 0; k < extra; ++k)
      if (!keep[static_cast<std::size_t>(k)]) missing.push_back(pairs[static_cast<std::size_t>(n + k)]);
    out.emplace_back(n, std::move(missing));
  }
  return out;
}

/// Running sums for one (grid, z, algorithm, denoised) cell of one source.
struct ErrorAcc {
  double sum_sq = 0.0;
  double sum_sq2 = 0.0;
  Eigen::VectorXd sum_err;
  long used = 0;
  long failed = 0;

  void add(const Eigen::VectorXd& err) {
    if (sum_err.size() == 0) sum_err = Eigen::VectorXd::Zero(err.size());
    const double e2 = err.squaredNorm();
    sum_sq += e2;
    sum_sq2 += e2 * e2;
    sum_err += err;
    ++used;
  }
};

struct ResidualAcc {
  double sum = 0.0;
  double sum_sq = 0.0;
  long count = 0;

  void add(const Eigen::VectorXd& r) {
    sum += r.sum();
    sum_sq += r.squaredNorm();
    count += r.size();
  }
};

struct SourceResult {
  std::vector<ErrorAcc> errors;        ///< [cell]
  std::vector<ResidualAcc> residuals;  ///< [(grid, z, denoised)]
  std::vector<double> rlb;             ///< [(grid, z)] mean over trials
  bool rlb_ok = true;
};

/// Layout of the accumulator arrays.
struct CellIndex {
  int grids, zs, algos;
  int cell(int g, int z, int a, int den) const { return ((g * zs + z) * algos + a) * 2 + den; }
  int residual(int g, int z, int den) const { return (g * zs + z) * 2 + den; }
  int bound(int g, int z) const { return g * zs + z; }
  int cells() const { return grids * zs * algos * 2; }
};

inline NoiseSpec projection_noise(const NoiseModel& model, int q) {
  // P does not depend on the scale of Sigma, so the noiseless grid point
  // uses the identity.
  if (model.variance() > 0.0) return NoiseSpec(model.second_moment(q), to_string(model.kind));
  return NoiseSpec(Eigen::MatrixXd::Identity(q, q), to_string(model.kind));
}

inline LocalizationResult run_localizer(Localizer algo, const SensorArray& array,
                                        const std::vector<Pair>& pairs, const Eigen::VectorXd& tau,
                                        const NoiseSpec& noise, const Point& x_init) {
  const int n = array.n();
  switch (algo) {
    case Localizer::ls: return ls_locate(array, tau.head(n), 0);
    case Localizer::srdls: return srd_ls_locate(array, tau.head(n), 0);
    case Localizer::gs: return gs_locate(array, pairs, tau);
    case Localizer::ml: return ml_refine(array, pairs, tau, noise, x_init);
  }
  throw InvalidArgument("unknown localizer");
}

inline void record(ErrorAcc& acc, const LocalizationResult& res, const Point& truth) {
  if (res.ok() && res.x_hat.allFinite())
    acc.add(res.x_hat - truth);
  else
    ++acc.failed;
}

}  // namespace detail

/// Labels of the z axis of the sweep.
inline std::vector<std::string> z_labels(const ExperimentConfig& cfg) {
  switch (cfg.missing.mode) {
    case MissingSpec::Mode::none: return {"full"};
    case MissingSpec::Mode::explicit_pairs: {
      const IndexSet s(cfg.array.n(), cfg.missing.pairs);
      return {std::to_string(s.q() - s.s() - s.n())};
    }
    case MissingSpec::Mode::reference_plus_extra: {
      std::vector<std::string> out;
      for (int z : cfg.missing.z) out.push_back(std::to_string(z));
      return out;
    }
  }
  return {};
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SensorArray& array = cfg.array;
  const int n = array.n();
  const int q = array.q();
  const auto all_pairs = array.pairs();

  // Sources grouped by radius.
  std::vector<Point> sources;
  std::vector<int> group_of;
  std::vector<double> group_d;
  const Point centroid = array.positions().rowwise().mean();
  if (!cfg.source_positions.empty()) {
    double mean_d = 0.0;
    for (const Point& p : cfg.source_positions) {
      sources.push_back(p);
      group_of.push_back(0);
      mean_d += (p - centroid).norm();
    }
    group_d.push_back(mean_d / static_cast<double>(sources.size()));
  } else {
    for (std::size_t r = 0; r < cfg.radii.size(); ++r) {
      for (const Point& p : fibonacci_sphere(centroid, cfg.radii[r], cfg.sources_per_radius)) {
        sources.push_back(p);
        group_of.push_back(static_cast<int>(r));
      }
      group_d.push_back(cfg.radii[r]);
    }
  }
  for (const Point& p : sources) detail::check_source(array, p);

  // Missing sets per z value; index 0 of the "full" axis is the complete set.
  std::vector<std::vector<IndexSet>> sets;
  switch (cfg.missing.mode) {
    case MissingSpec::Mode::none: sets.push_back({IndexSet(n, {})}); break;
    case MissingSpec::Mode::explicit_pairs: sets.push_back({IndexSet(n, cfg.missing.pairs)}); break;
    case MissingSpec::Mode::reference_plus_extra:
      for (int z : cfg.missing.z)
        sets.push_back(detail::extra_pair_sets(n, z, cfg.missing.max_combinations,
                                               detail::splitmix64(cfg.seed ^ (0x5a5aULL + static_cast<std::uint64_t>(z)))));
      break;
  }
  const bool partial = cfg.missing.mode != MissingSpec::Mode::none;
  const std::vector<std::string> zlab = z_labels(cfg);

  const int grids = static_cast<int>(cfg.noise_grid.size());
  const detail::CellIndex idx{grids, static_cast<int>(sets.size()),
                              static_cast<int>(cfg.algorithms.size())};
  const bool need_ml_init = std::find(cfg.algorithms.begin(), cfg.algorithms.end(), Localizer::ml) !=
                            cfg.algorithms.end();

  // Per-grid full-set quantities, shared read-only by all workers.
  std::vector<NoiseSpec> full_noise;
  std::vector<ProjectionOperator> full_proj;
  for (const NoiseModel& m : cfg.noise_grid) {
    full_noise.push_back(detail::projection_noise(m, q));
    full_proj.push_back(projection_operator(n, full_noise.back()));
  }

  std::vector<detail::SourceResult> results(sources.size());

  auto run_source = [&](std::size_t s) {
    const Point& x = sources[s];
    detail::SourceResult res;
    res.errors.assign(static_cast<std::size_t>(idx.cells()), {});
    res.residuals.assign(static_cast<std::size_t>(grids * idx.zs * 2), {});
    res.rlb.assign(static_cast<std::size_t>(grids * idx.zs), 0.0);
    const Eigen::VectorXd tau_true = tdoa_full(array, x).values;

    for (int g = 0; g < grids; ++g) {
      const NoiseModel& model = cfg.noise_grid[static_cast<std::size_t>(g)];
      const bool noiseless = model.variance() == 0.0;
      for (int t = 0; t < cfg.trials; ++t) {
        std::mt19937_64 rng(detail::trial_seed(cfg.seed, s, static_cast<std::uint64_t>(g),
                                               static_cast<std::uint64_t>(t)));
        const Eigen::VectorXd tau_hat = tau_true + sample_noise(model, q, rng);

        for (int zi = 0; zi < idx.zs; ++zi) {
          const auto& zsets = sets[static_cast<std::size_t>(zi)];
          const IndexSet& miss = zsets[static_cast<std::size_t>(t) % zsets.size()];

          std::vector<Pair> pairs;
          Eigen::VectorXd raw, den, truth, den_full;
          NoiseSpec noise;
          if (!partial) {
            pairs = all_pairs;
            raw = tau_hat;
            truth = tau_true;
            noise = full_noise[static_cast<std::size_t>(g)];
            den = full_proj[static_cast<std::size_t>(g)].matrix * raw;
            den_full = den;
          } else {
            pairs = miss.available_pairs();
            raw = restrict_to(TdoaVector(n, tau_hat), miss).values;
            truth = restrict_to(TdoaVector(n, tau_true), miss).values;
            noise = NoiseSpec(restrict_covariance(full_noise[static_cast<std::size_t>(g)].sigma(), miss));
            const PartialProjection pp = partial_subspace(miss, noise);
            den = pp.matrix * raw;
            den_full = reconstruct_full(PartialTdoaVector(den, miss), pp).values;
          }
          res.residuals[static_cast<std::size_t>(idx.residual(g, zi, 0))].add(raw - truth);
          res.residuals[static_cast<std::size_t>(idx.residual(g, zi, 1))].add(den - truth);

          if (t == 0 || partial) {
            double bound = 0.0;
            if (!noiseless) {
              try {
                const NoiseSpec actual(restrict_covariance(model.second_moment(q), miss));
                bound = crlb(array, x, actual, pairs).rlb;
              } catch (const SingularityError&) {
                res.rlb_ok = false;
              }
            }
            double& slot = res.rlb[static_cast<std::size_t>(idx.bound(g, zi))];
            slot = partial ? slot + bound / cfg.trials : bound;
          }

          Point ml_init;
          if (need_ml_init) {
            const auto init = gs_locate(array, all_pairs, den_full);
            ml_init = init.ok() ? init.x_hat : centroid;
          }
          for (int a = 0; a < idx.algos; ++a) {
            const Localizer algo = cfg.algorithms[static_cast<std::size_t>(a)];
            for (int d = 0; d < 2; ++d) {
              if (d == 0 && cfg.denoise == DenoiseMode::on) continue;
              if (d == 1 && cfg.denoise == DenoiseMode::off) continue;
              auto& acc = res.errors[static_cast<std::size_t>(idx.cell(g, zi, a, d))];
              try {
                const LocalizationResult r =
                    detail::run_localizer(algo, array, pairs, d == 1 ? den : raw, noise, ml_init);
                detail::record(acc, r, x);
              } catch (const Error&) {
                ++acc.failed;
              }
            }
          }
        }
      }
    }
    results[s] = std::move(res);
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw,
                                              static_cast<unsigned>(sources.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t s = next++; s < sources.size(); s = next++) run_source(s);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Ordered aggregation: group, grid, z, algorithm, denoised.
  std::vector<ResultRow> rows;
  for (std::size_t grp = 0; grp < group_d.size(); ++grp) {
    for (int g = 0; g < grids; ++g) {
      const NoiseModel& model = cfg.noise_grid[static_cast<std::size_t>(g)];
      for (int zi = 0; zi < idx.zs; ++zi) {
        for (int a = 0; a < idx.algos; ++a) {
          for (int d = 0; d < 2; ++d) {
            if (d == 0 && cfg.denoise == DenoiseMode::on) continue;
            if (d == 1 && cfg.denoise == DenoiseMode::off) continue;
            ResultRow row;
            row.experiment = cfg.experiment;
            row.d = group_d[grp];
            row.sigma = std::sqrt(model.variance());
            row.algo = to_string(cfg.algorithms[static_cast<std::size_t>(a)]);
            row.denoised = d == 1;
            row.z = zlab[static_cast<std::size_t>(zi)];
            int counted = 0;
            double var_sum = 0.0;
            double rlb_sum = 0.0;
            bool rlb_ok = true;
            double res_sum = 0.0, res_sq = 0.0;
            long res_count = 0;
            for (std::size_t s = 0; s < sources.size(); ++s) {
              if (group_of[s] != static_cast<int>(grp)) continue;
              const auto& sr = results[s];
              const auto& acc = sr.errors[static_cast<std::size_t>(idx.cell(g, zi, a, d))];
              row.fail_count += acc.failed;
              row.trials_used += acc.used;
              rlb_sum += sr.rlb[static_cast<std::size_t>(idx.bound(g, zi))];
              rlb_ok = rlb_ok && sr.rlb_ok;
              const auto& ra = sr.residuals[static_cast<std::size_t>(idx.residual(g, zi, d))];
              res_sum += ra.sum;
              res_sq += ra.sum_sq;
              res_count += ra.count;
              if (acc.used == 0) continue;
              const double mse = acc.sum_sq / acc.used;
              const double source_rmse = std::sqrt(mse);
              row.rmse += source_rmse;
              row.bias += (acc.sum_err / static_cast<double>(acc.used)).norm();
              // Delta method: Var(sqrt(m)) ~ Var(m) / (4 m).
              if (acc.used > 1 && mse > 0.0) {
                const double var_e2 = (acc.sum_sq2 / acc.used - mse * mse) * acc.used / (acc.used - 1);
                var_sum += std::max(0.0, var_e2) / acc.used / (4.0 * mse);
              }
              ++counted;
            }
            const double nsrc = static_cast<double>(
                std::count(group_of.begin(), group_of.end(), static_cast<int>(grp)));
            if (counted > 0) {
              row.rmse /= counted;
              row.bias /= counted;
              row.rmse_se = std::sqrt(var_sum) / counted;
            } else {
              row.rmse = std::numeric_limits<double>::quiet_NaN();
              row.bias = std::numeric_limits<double>::quiet_NaN();
            }
            row.rlb = rlb_ok ? rlb_sum / nsrc : std::numeric_limits<double>::quiet_NaN();
            if (res_count > 0) {
              row.tdoa_mu = res_sum / res_count;
              row.tdoa_sigma = std::sqrt(std::max(0.0, res_sq / res_count - row.tdoa_mu * row.tdoa_mu));
            }
            rows.push_back(std::move(row));
          }
        }
      }
    }
  }
  return rows;
}

namespace detail {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    os << detail::csv_field(r.experiment) << ',' << detail::format_number(r.d) << ','
       << detail::format_number(r.sigma) << ',' << r.algo << ',' << (r.denoised ? 1 : 0) << ','
       << r.z << ',' << detail::format_number(r.rmse) << ',' << detail::format_number(r.rlb) << ','
       << detail::format_number(r.bias) << ',' << detail::format_number(r.tdoa_mu) << ','
       << detail::format_number(r.tdoa_sigma) << ',' << r.fail_count << '\n';
  }
}

inline nlohmann::json to_json(const ResultRow& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"experiment", r.experiment}, {"d", num(r.d)},         {"sigma", num(r.sigma)},
          {"algo", r.algo},             {"denoised", r.denoised}, {"z", r.z},
          {"rmse", num(r.rmse)},        {"rmse_se", num(r.rmse_se)}, {"rlb", num(r.rlb)},
          {"bias", num(r.bias)},        {"tdoa_mu", num(r.tdoa_mu)}, {"tdoa_sigma", num(r.tdoa_sigma)},
          {"fail_count", r.fail_count}, {"trials_used", r.trials_used}};
}

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  require(j.is_array() && !j.empty(), key + " must be a number or a non-empty array");
  std::vector<double> out;
  for (const auto& v : j) {
    require(v.is_number(), key + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Point point_from_json(const nlohmann::json& j) {
  require(j.is_array() && (j.size() == 2 || j.size() == 3), "a point needs 2 or 3 coordinates");
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    require(j[k].is_number(), "coordinates must be numbers");
    p[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return p;
}

}  // namespace detail

/// "j-i" or "j,i" or [j, i].
inline Pair parse_pair(const nlohmann::json& j) {
  if (j.is_array()) {
    detail::require(j.size() == 2 && j[0].is_number_integer() && j[1].is_number_integer(),
                    "pair must be [j, i]");
    return {j[0].get<int>(), j[1].get<int>()};
  }
  detail::require(j.is_string(), "pair must be a string \"j-i\" or an array [j, i]");
  const std::string s = j.get<std::string>();
  const auto sep = s.find_first_of("-,");
  detail::require(sep != std::string::npos, "pair '" + s + "' must look like j-i");
  try {
    std::size_t used_j = 0, used_i = 0;
    const int pj = std::stoi(s.substr(0, sep), &used_j);
    const int pi = std::stoi(s.substr(sep + 1), &used_i);
    detail::require(used_j == sep && used_i == s.size() - sep - 1, "pair '" + s + "' is malformed");
    return {pj, pi};
  } catch (const std::logic_error&) {
    throw InvalidArgument("pair '" + s + "' is malformed");
  }
}

inline SensorArray array_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    detail::require(j.get<std::string>() == "cross7", "unknown array preset '" + j.get<std::string>() + "'");
    return SensorArray::cross7();
  }
  if (j.is_object() && j.contains("preset")) {
    detail::require(j["preset"] == "cross7", "unknown array preset");
    return SensorArray::cross7(j.value("half_arm", 0.5));
  }
  const nlohmann::json& pos = j.is_object() ? j.at("positions") : j;
  detail::require(pos.is_array() && !pos.empty(), "array positions must be a non-empty list");
  std::vector<Point> pts;
  for (const auto& p : pos) pts.push_back(detail::point_from_json(p));
  return SensorArray::from_points(pts);
}

inline std::vector<NoiseModel> noise_grid_from_json(const nlohmann::json& j, double sound_speed) {
  detail::require(j.is_object(), "noise must be an object");
  const std::string model = j.value("model", std::string("gaussian"));
  auto half_widths = [&]() {
    if (j.contains("half_width")) return detail::number_list(j["half_width"], "noise.half_width");
    detail::require(j.contains("sample_rate"), "uniform noise needs half_width or sample_rate");
    std::vector<double> out;
    for (double fs : detail::number_list(j["sample_rate"], "noise.sample_rate")) {
      detail::require(fs > 0.0, "sample_rate must be > 0");
      out.push_back(NoiseModel::sampling_half_width(sound_speed, fs));
    }
    return out;
  };
  std::vector<NoiseModel> out;
  if (model == "gaussian") {
    for (double s : detail::number_list(j.at("sigma"), "noise.sigma")) out.push_back(NoiseModel::gaussian(s));
  } else if (model == "uniform") {
    for (double h : half_widths()) out.push_back(NoiseModel::uniform(h));
  } else if (model == "uniform_plus_gaussian") {
    const auto hw = half_widths();
    detail::require(hw.size() == 1, "uniform_plus_gaussian takes a single half_width");
    for (double s : detail::number_list(j.at("sigma"), "noise.sigma"))
      out.push_back(NoiseModel::uniform_plus_gaussian(hw.front(), s));
  } else if (model == "laplacian") {
    for (double s : detail::number_list(j.at("sigma"), "noise.sigma")) out.push_back(NoiseModel::laplacian(s));
  } else {
    throw InvalidArgument("unknown noise model '" + model + "'");
  }
  return out;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    detail::require(j.is_object(), "config must be a JSON object");
    ExperimentConfig cfg;
    cfg.experiment = j.value("experiment", cfg.experiment);
    if (j.contains("array")) cfg.array = array_from_json(j["array"]);
    cfg.sound_speed = j.value("sound_speed", 1.0);

    const auto& src = j.at("sources");
    if (src.contains("positions")) {
      for (const auto& p : src["positions"]) cfg.source_positions.push_back(detail::point_from_json(p));
      detail::require(!cfg.source_positions.empty(), "sources.positions must not be empty");
    } else {
      cfg.radii = detail::number_list(src.at("radii"), "sources.radii");
      cfg.sources_per_radius = src.value("count", cfg.sources_per_radius);
    }
    cfg.noise_grid = noise_grid_from_json(j.at("noise"), cfg.sound_speed);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("algorithms")) {
      cfg.algorithms.clear();
      for (const auto& a : j["algorithms"]) cfg.algorithms.push_back(parse_localizer(a.get<std::string>()));
    }
    if (j.contains("denoise")) {
      const auto& dn = j["denoise"];
      if (dn.is_boolean()) {
        cfg.denoise = dn.get<bool>() ? DenoiseMode::on : DenoiseMode::off;
      } else {
        const std::string s = dn.get<std::string>();
        if (s == "on") cfg.denoise = DenoiseMode::on;
        else if (s == "off") cfg.denoise = DenoiseMode::off;
        else if (s == "both") cfg.denoise = DenoiseMode::both;
        else throw InvalidArgument("denoise must be on, off or both");
      }
    }
    if (j.contains("missing") && !j["missing"].is_null()) {
      const auto& m = j["missing"];
      const std::string mode = m.value("mode", std::string("explicit"));
      if (mode == "explicit") {
        cfg.missing.mode = MissingSpec::Mode::explicit_pairs;
        for (const auto& p : m.at("pairs")) cfg.missing.pairs.push_back(parse_pair(p));
      } else if (mode == "reference_plus_extra") {
        cfg.missing.mode = MissingSpec::Mode::reference_plus_extra;
        for (double z : detail::number_list(m.at("z"), "missing.z")) cfg.missing.z.push_back(static_cast<int>(z));
        cfg.missing.max_combinations = m.value("max_combinations", cfg.missing.max_combinations);
      } else {
        throw InvalidArgument("unknown missing mode '" + mode + "'");
      }
    }
    if (j.contains("output")) {
      cfg.csv_path = j["output"].value("csv", std::string());
      cfg.json_path = j["output"].value("json", std::string());
    }
    cfg.threads = j.value("threads", 0);
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config '" + path + "'");
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace tdoa
