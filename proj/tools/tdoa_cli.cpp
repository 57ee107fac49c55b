// tdoa: command-line front end.
//
//   tdoa simulate --config exp.json --out results/
//   tdoa denoise  --tdoa meas.json [--cov cov.json] [--missing 2-1,3-1]
//   tdoa locate   --algo gs --input meas.json
//   tdoa planar   classify|invert (--input file | --sensors x0,y0,x1,y1,x2,y2 --tau t10,t20)
//
// Exit status: 0 success, 2 bad input or config, 3 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdoa/tdoa.hpp"

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tdoa::InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw tdoa::InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::isfinite(v[k]))
      out.push_back(v[k]);
    else
      out.push_back(nullptr);
  }
  return out;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

Eigen::VectorXd vector_from(const json& j, const std::string& what) {
  tdoa::detail::require(j.is_array(), what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

// Nested rows or a flat row-major list of m*m numbers.
Eigen::MatrixXd matrix_from(const json& j, Eigen::Index m) {
  tdoa::detail::require(j.is_array(), "covariance must be an array");
  Eigen::MatrixXd out(m, m);
  if (!j.empty() && j[0].is_array()) {
    tdoa::detail::require(static_cast<Eigen::Index>(j.size()) == m, "covariance must be m x m");
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      tdoa::detail::require(static_cast<Eigen::Index>(row.size()) == m, "covariance must be m x m");
      for (Eigen::Index c = 0; c < m; ++c) out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  } else {
    tdoa::detail::require(static_cast<Eigen::Index>(j.size()) == m * m, "covariance must hold m*m values");
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c) out(r, c) = j[static_cast<std::size_t>(r * m + c)].get<double>();
  }
  return out;
}

std::vector<tdoa::Pair> pairs_from(const json& j) {
  tdoa::detail::require(j.is_array() && !j.empty(), "pairs must be a non-empty array");
  std::vector<tdoa::Pair> out;
  for (const auto& p : j) out.push_back(tdoa::parse_pair(p));
  return out;
}

std::vector<tdoa::Pair> pairs_from_list(const std::string& list) {
  std::vector<tdoa::Pair> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(tdoa::parse_pair(json(item)));
  return out;
}

std::vector<double> numbers_from_list(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw tdoa::InvalidArgument("'" + item + "' is not a number");
    }
  }
  return out;
}

int infer_n(const json& doc, const std::vector<tdoa::Pair>& pairs) {
  if (doc.contains("n")) return doc["n"].get<int>();
  if (doc.contains("sensors")) return static_cast<int>(doc["sensors"].size()) - 1;
  int n = 0;
  for (const auto& p : pairs) n = std::max(n, p.j);
  return n;
}

// Measurements as (pairs, values in range units, covariance in range units).
struct Measurement {
  std::vector<tdoa::Pair> pairs;
  Eigen::VectorXd values;
  Eigen::MatrixXd cov;  // empty when absent
};

Measurement read_measurement(const json& doc, const json* cov_doc) {
  Measurement m;
  m.pairs = pairs_from(doc.at("pairs"));
  m.values = vector_from(doc.at("values"), "values");
  tdoa::detail::require(m.values.size() == static_cast<Eigen::Index>(m.pairs.size()),
                        "values and pairs differ in length");
  const double c = doc.value("sound_speed", 1.0);
  tdoa::detail::require(c > 0.0, "sound_speed must be > 0");
  m.values *= c;
  const json& cdoc = cov_doc ? *cov_doc : doc;
  if (cdoc.contains("covariance")) m.cov = matrix_from(cdoc["covariance"], m.values.size()) * (c * c);
  return m;
}

// Reorder measured pairs into canonical order; values keep their pair.
void canonicalise(int n, Measurement& m) {
  std::vector<int> order(m.pairs.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return tdoa::pair_index(n, m.pairs[static_cast<std::size_t>(a)]) <
           tdoa::pair_index(n, m.pairs[static_cast<std::size_t>(b)]);
  });
  Measurement out;
  out.values.resize(m.values.size());
  if (m.cov.size() > 0) out.cov.resize(m.cov.rows(), m.cov.cols());
  for (std::size_t r = 0; r < order.size(); ++r) {
    out.pairs.push_back(m.pairs[static_cast<std::size_t>(order[r])]);
    out.values[static_cast<Eigen::Index>(r)] = m.values[order[r]];
    if (m.cov.size() > 0)
      for (std::size_t c = 0; c < order.size(); ++c)
        out.cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.cov(order[r], order[c]);
  }
  m = std::move(out);
}

int cmd_simulate(const std::string& config, const std::string& out_dir) {
  tdoa::ExperimentConfig cfg = tdoa::load_config(config);
  const auto rows = tdoa::run_experiment(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path csv = fs::path(out_dir) / (cfg.csv_path.empty() ? "results.csv" : cfg.csv_path);
  const fs::path js = fs::path(out_dir) / (cfg.json_path.empty() ? "results.json" : cfg.json_path);
  {
    std::ofstream os(csv, std::ios::binary);
    if (!os) throw tdoa::InvalidArgument("cannot write '" + csv.string() + "'");
    tdoa::write_csv(os, rows);
  }
  json doc = {{"experiment", cfg.experiment}, {"rows", json::array()}};
  for (const auto& r : rows) doc["rows"].push_back(tdoa::to_json(r));
  std::ofstream(js, std::ios::binary) << doc.dump(2) << '\n';
  std::cout << "wrote " << rows.size() << " rows to " << csv.string() << '\n';
  return 0;
}

int cmd_denoise(const std::string& tdoa_file, const std::string& cov_file, const std::string& missing) {
  const json doc = read_json(tdoa_file);
  json cov_doc;
  if (!cov_file.empty()) cov_doc = read_json(cov_file);
  Measurement m = read_measurement(doc, cov_file.empty() ? nullptr : &cov_doc);
  const int n = infer_n(doc, m.pairs);
  tdoa::detail::require(n >= 2, "need at least three sensors");
  if (m.cov.size() == 0) m.cov = Eigen::MatrixXd::Identity(m.values.size(), m.values.size());
  canonicalise(n, m);

  // Pairs listed with --missing are dropped even if present in the file.
  const auto extra_missing = pairs_from_list(missing);
  std::vector<tdoa::Pair> available;
  std::vector<int> keep;
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    if (std::find(extra_missing.begin(), extra_missing.end(), m.pairs[k]) != extra_missing.end()) continue;
    available.push_back(m.pairs[k]);
    keep.push_back(static_cast<int>(k));
  }
  for (const auto& p : extra_missing) (void)tdoa::pair_index(n, p);
  const tdoa::IndexSet set = tdoa::IndexSet::from_available(n, available);
  Eigen::VectorXd values(static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd cov(values.size(), values.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    values[static_cast<Eigen::Index>(r)] = m.values[keep[r]];
    for (std::size_t c = 0; c < keep.size(); ++c)
      cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.cov(keep[r], keep[c]);
  }

  const tdoa::NoiseSpec noise(cov);
  const auto pp = tdoa::partial_subspace(set, noise);
  const tdoa::PartialTdoaVector tau_s(values, set);
  const auto den = tdoa::denoise_partial(tau_s, pp);

  json out;
  out["n"] = n;
  json pj = json::array();
  for (const auto& p : available) pj.push_back(tdoa::to_string(p));
  out["pairs"] = pj;
  out["denoised"] = vector_json(den.values);
  out["dim_vs"] = pp.dim_vs;
  out["residual_mahalanobis"] = tdoa::mahalanobis_norm(values - den.values, noise);
  out["covariance_out"] = matrix_json(pp.matrix * cov * pp.matrix.transpose());
  if (pp.dim_vs == n) {
    out["full"] = vector_json(tdoa::reconstruct_full(den, pp).values);
    json all = json::array();
    for (const auto& p : tdoa::canonical_pairs(n)) all.push_back(tdoa::to_string(p));
    out["full_pairs"] = all;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_locate(const std::string& algo_name, const std::string& input) {
  const tdoa::Localizer algo = tdoa::parse_localizer(algo_name);
  const json doc = read_json(input);
  std::vector<tdoa::Point> pts;
  for (const auto& p : doc.at("sensors")) pts.push_back(tdoa::detail::point_from_json(p));
  const tdoa::SensorArray array = tdoa::SensorArray::from_points(pts);
  Measurement m = read_measurement(doc, nullptr);
  const int n = array.n();
  canonicalise(n, m);
  const int ref = doc.value("ref", 0);
  tdoa::detail::require(ref >= 0 && ref <= n, "ref out of range");

  tdoa::LocalizationResult res;
  if (algo == tdoa::Localizer::ls || algo == tdoa::Localizer::srdls) {
    Eigen::VectorXd tau_nr(n);
    int row = 0;
    for (int k = 0; k <= n; ++k) {
      if (k == ref) continue;
      const tdoa::Pair want = k > ref ? tdoa::Pair{k, ref} : tdoa::Pair{ref, k};
      const auto it = std::find(m.pairs.begin(), m.pairs.end(), want);
      tdoa::detail::require(it != m.pairs.end(), "missing reference pair " + tdoa::to_string(want));
      const double v = m.values[it - m.pairs.begin()];
      tau_nr[row++] = k > ref ? v : -v;
    }
    res = algo == tdoa::Localizer::ls ? tdoa::ls_locate(array, tau_nr, ref)
                                      : tdoa::srd_ls_locate(array, tau_nr, ref);
  } else if (algo == tdoa::Localizer::gs) {
    res = tdoa::gs_locate(array, m.pairs, m.values);
  } else {
    const Eigen::MatrixXd cov =
        m.cov.size() > 0 ? m.cov : Eigen::MatrixXd::Identity(m.values.size(), m.values.size());
    tdoa::Point x0;
    if (doc.contains("x0")) {
      x0 = tdoa::detail::point_from_json(doc["x0"]);
    } else {
      const auto init = tdoa::gs_locate(array, m.pairs, m.values);
      if (!init.ok()) throw tdoa::NumericalError("no starting point: GS failed (" + tdoa::to_string(init.status) + ")");
      x0 = init.x_hat;
    }
    res = tdoa::ml_refine(array, m.pairs, m.values, tdoa::NoiseSpec(cov), x0);
  }
  const json out = {{"x_hat", vector_json(res.x_hat)},
                    {"r", vector_json(res.ranges)},
                    {"status", tdoa::to_string(res.status)},
                    {"iterations", res.iterations},
                    {"residual_norm", res.residual_norm}};
  std::cout << out.dump(2) << '\n';
  return res.x_hat.size() > 0 && res.x_hat.allFinite() ? 0 : kExitNumerical;
}

int cmd_planar(const std::string& mode, const std::string& input, const std::string& sensors,
               const std::string& tau) {
  std::vector<tdoa::planar::Vec2> m;
  std::vector<tdoa::planar::Vec2> taus;
  if (!input.empty()) {
    const json doc = read_json(input);
    for (const auto& p : doc.at("sensors")) {
      const auto v = tdoa::detail::point_from_json(p);
      tdoa::detail::require(v.size() == 2, "planar sensors must be 2D");
      m.emplace_back(v[0], v[1]);
    }
    const double c = doc.value("sound_speed", 1.0);
    const json& tj = doc.at("tau");
    auto add = [&](const json& t) {
      tdoa::detail::require(t.is_array() && t.size() == 2, "each tau entry is [tau_10, tau_20]");
      taus.emplace_back(c * t[0].get<double>(), c * t[1].get<double>());
    };
    if (!tj.empty() && tj[0].is_array())
      for (const auto& t : tj) add(t);
    else
      add(tj);
  } else {
    const auto s = numbers_from_list(sensors);
    const auto t = numbers_from_list(tau);
    tdoa::detail::require(s.size() == 6, "--sensors takes x0,y0,x1,y1,x2,y2");
    tdoa::detail::require(!t.empty() && t.size() % 2 == 0, "--tau takes pairs t10,t20[,t10,t20...]");
    for (int k = 0; k < 3; ++k) m.emplace_back(s[2 * k], s[2 * k + 1]);
    for (std::size_t k = 0; k < t.size(); k += 2) taus.emplace_back(t[k], t[k + 1]);
  }
  tdoa::detail::require(m.size() == 3, "planar mode needs exactly three sensors");
  const tdoa::planar::PlanarConfig cfg(m[0], m[1], m[2]);

  json records = json::array();
  bool failed = false;
  for (const auto& t : taus) {
    const auto cls = tdoa::planar::classify(cfg, t);
    json rec = {{"tau", {t.x(), t.y()}},
                {"class", tdoa::planar::to_string(cls.region)},
                {"multiplicity", cls.multiplicity}};
    if (cls.at_infinity) rec["at_infinity"] = true;
    json sols = json::array();
    if (mode == "invert") {
      try {
        for (const auto& x : tdoa::planar::invert(cfg, t)) sols.push_back({x.x(), x.y()});
      } catch (const tdoa::Error& e) {
        rec["error"] = e.what();
        failed = true;
      }
    }
    rec["solutions"] = sols;
    records.push_back(rec);
  }
  std::cout << records.dump(2) << '\n';
  return failed ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TDOA-space localization and denoising"};
  app.require_subcommand(1);

  std::string config, out_dir = "results";
  auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo experiment");
  sim->add_option("--config", config, "Experiment config (JSON)")->required();
  sim->add_option("--out", out_dir, "Output directory");

  std::string tdoa_file, cov_file, missing;
  auto* den = app.add_subcommand("denoise", "Project measured TDOAs onto the feasible subspace");
  den->add_option("--tdoa", tdoa_file, "Measurement file (JSON: pairs, values)")->required();
  den->add_option("--cov", cov_file, "File with a \"covariance\" entry (default: the --tdoa file)");
  den->add_option("--missing", missing, "Comma-separated pairs to drop, e.g. 2-1,3-1");

  std::string algo, input;
  auto* loc = app.add_subcommand("locate", "Estimate a source position");
  loc->add_option("--algo", algo, "ls | srdls | gs | ml")->required();
  loc->add_option("--input", input, "Measurement file (JSON: sensors, pairs, values)")->required();

  std::string planar_mode, planar_input, sensors, tau;
  auto* pl = app.add_subcommand("planar", "Closed-form three-sensor planar analysis");
  pl->add_option("mode", planar_mode, "classify | invert")->required()->check(CLI::IsMember({"classify", "invert"}));
  pl->add_option("--input", planar_input, "JSON with sensors and tau");
  pl->add_option("--sensors", sensors, "x0,y0,x1,y1,x2,y2");
  pl->add_option("--tau", tau, "tau_10,tau_20 (repeatable as a flat list)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(config, out_dir);
    if (*den) return cmd_denoise(tdoa_file, cov_file, missing);
    if (*loc) return cmd_locate(algo, input);
    if (*pl) {
      if (planar_input.empty() && (sensors.empty() || tau.empty()))
        throw tdoa::InvalidArgument("planar needs --input or both --sensors and --tau");
      return cmd_planar(planar_mode, planar_input, sensors, tau);
    }
  } catch (const tdoa::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const tdoa::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
