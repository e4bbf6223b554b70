// SPDX-License-Identifier: Apache-2.0
#include "qrv/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrv/errors.hpp"
#include "qrv/rng.hpp"
#include "qrv/threading.hpp"
#include "qrv/version.hpp"

namespace qrv::cli {

namespace {

namespace fs = std::filesystem;

const char* kLossConvention =
    "MSE computed on log realized volatility; QLIKE on volatility levels "
    "(exponentiated forecasts)";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

const std::vector<std::string>& model_order() {
  static const std::vector<std::string> order = {
      "AR1", "AR3", "ARMAX", "HAR", "HARX", "RC", "RCX", "QR1", "QR2"};
  return order;
}

void merge_into(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) {
    throw ConfigError("config node '" + path + "' must be an object");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    if (!base.contains(it.key())) {
      throw ConfigError("unknown config key '" + path + it.key() + "'");
    }
    if (base[it.key()].is_object() && it.value().is_object()) {
      merge_into(base[it.key()], it.value(), path + it.key() + ".");
    } else {
      base[it.key()] = it.value();
    }
  }
}

std::uint64_t get_seed(const Json& node, const char* key,
                       std::uint64_t global_seed, const std::string& stream) {
  if (node.contains(key) && !node[key].is_null()) {
    return node[key].get<std::uint64_t>();
  }
  return derive_seed(global_seed, fnv1a_str(stream));
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::uint64_t h = kFnvBasis;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

}  // namespace

Json default_config() {
  Json c;
  c["frame"] = "";
  c["out_dir"] = "out";
  c["seed"] = 42;
  c["threads"] = 0;
  c["rolling"] = {{"n_out_of_sample", 245}, {"lag_depth", 3}};
  c["evaluation"] = {{"alpha", 0.05},   {"n_reps", 5000},
                     {"block_length", 12}, {"nw_lag", -1},
                     {"dm_loss", "mse"},   {"bootstrap_seed", nullptr}};
  Json models;
  models["AR1"] = {{"enabled", true}, {"ar_order", 1}};
  models["AR3"] = {{"enabled", true}, {"ar_order", 3}};
  models["ARMAX"] = {{"enabled", true},
                     {"ar_order", 3},
                     {"ma_order", 1},
                     {"exo_lags", 1}};
  models["HAR"] = {{"enabled", true}};
  models["HARX"] = {{"enabled", true}, {"exo_lags", 1}};
  const Json esn_common = {{"leak_rate", 0.6},      {"spectral_radius", 0.9},
                           {"input_scale", 1.0},    {"washout", 12},
                           {"ridge_delta", 1e-8},   {"seed", nullptr}};
  models["RC"] = esn_common;
  models["RC"]["enabled"] = true;
  models["RC"]["n_hidden"] = 50;
  models["RCX"] = esn_common;
  models["RCX"]["enabled"] = true;
  models["RCX"]["n_hidden"] = 20;
  const Json qr_common = {{"total_qubits", 10}, {"lag_depth", 3},
                          {"tau", 10.0},        {"field_strength", 1.0},
                          {"ridge_delta", 1e-8}, {"coupling_seed", nullptr}};
  models["QR1"] = qr_common;
  models["QR1"]["enabled"] = true;
  models["QR1"]["features"] =
      Json::array({"RV", "MKT", "DP", "IP", "RVq", "STR", "DEF"});
  models["QR2"] = qr_common;
  models["QR2"]["enabled"] = true;
  models["QR2"]["features"] =
      Json::array({"RV", "MKT", "STR", "RVq", "EP", "INF", "DEF"});
  c["models"] = models;

  Json pool = Json::array();
  for (const auto& name : data::canonical_columns()) pool.push_back(name);
  c["select"] = {{"model", "QR1"},
                 {"pool", pool},
                 {"max_features", 10},
                 {"single_split", false}};
  c["shapley"] = {{"model", "QR1"},
                  {"grouping", "feature-family"},
                  {"n_samples", 2000},
                  {"explained_rows", 1},
                  {"background_cap", 0}};
  return c;
}

Json resolve_config(const Json& user, const Overrides& overrides) {
  Json config = default_config();
  if (!user.is_null()) merge_into(config, user, "");
  if (overrides.frame) config["frame"] = *overrides.frame;
  if (overrides.out_dir) config["out_dir"] = *overrides.out_dir;
  if (overrides.seed) config["seed"] = *overrides.seed;
  if (overrides.threads) config["threads"] = *overrides.threads;

  const auto global_seed = config["seed"].get<std::uint64_t>();
  config["evaluation"]["bootstrap_seed"] =
      get_seed(config["evaluation"], "bootstrap_seed", global_seed, "bootstrap");
  for (const char* name : {"RC", "RCX"}) {
    config["models"][name]["seed"] =
        get_seed(config["models"][name], "seed", global_seed, name);
  }
  // QR1 and QR2 share one reservoir by default; only the final evolution
  // time of the second ensemble differs.
  for (const char* name : {"QR1", "QR2"}) {
    config["models"][name]["coupling_seed"] = get_seed(
        config["models"][name], "coupling_seed", global_seed, "quantum-reservoir");
  }
  return config;
}

unsigned resolved_threads(const Json& config) {
  const auto t = config["threads"].get<unsigned>();
  return t == 0 ? default_threads() : t;
}

namespace {

bench::QrModelConfig qr_model_config(const Json& m) {
  bench::QrModelConfig qc;
  qc.features = m["features"].get<std::vector<std::string>>();
  const auto total = m["total_qubits"].get<std::size_t>();
  if (qc.features.empty()) throw ConfigError("quantum model has no features");
  if (qc.features.size() > total) {
    throw ConfigError("quantum model has more features than qubits");
  }
  qc.reservoir.n_input = qc.features.size();
  qc.reservoir.n_hidden = total - qc.features.size();
  qc.reservoir.lag_depth = m["lag_depth"].get<std::size_t>();
  qc.reservoir.tau = m["tau"].get<double>();
  qc.reservoir.field_strength = m["field_strength"].get<double>();
  qc.reservoir.coupling_seed = m["coupling_seed"].get<std::uint64_t>();
  qc.reservoir.ridge_delta = m["ridge_delta"].get<double>();
  return qc;
}

bench::EsnModelConfig esn_model_config(const Json& m, bool with_exo) {
  bench::EsnModelConfig ec;
  ec.esn.n_hidden = m["n_hidden"].get<std::size_t>();
  ec.esn.leak_rate = m["leak_rate"].get<double>();
  ec.esn.spectral_radius = m["spectral_radius"].get<double>();
  ec.esn.input_scale = m["input_scale"].get<double>();
  ec.esn.washout = m["washout"].get<std::size_t>();
  ec.esn.ridge_delta = m["ridge_delta"].get<double>();
  ec.esn.seed = m["seed"].get<std::uint64_t>();
  ec.features = {"RV"};
  if (with_exo) {
    for (const auto& c : data::exogenous_columns()) ec.features.push_back(c);
  }
  return ec;
}

}  // namespace

std::unique_ptr<bench::ForecastModel> build_model(const std::string& name,
                                                  const Json& config) {
  const Json& m = config["models"][name];
  if (name == "AR1" || name == "AR3") {
    return bench::make_ar_model(name, m["ar_order"].get<int>());
  }
  if (name == "ARMAX") {
    return bench::make_armax_model(m["ar_order"].get<int>(),
                                   m["ma_order"].get<int>(),
                                   m["exo_lags"].get<int>());
  }
  if (name == "HAR") return bench::make_har_model();
  if (name == "HARX") return bench::make_harx_model(m["exo_lags"].get<int>());
  if (name == "RC") return bench::make_esn_model(name, esn_model_config(m, false));
  if (name == "RCX") return bench::make_esn_model(name, esn_model_config(m, true));
  if (name == "QR1") {
    bench::QrModelConfig qc = qr_model_config(m);
    qc.reservoir.ensemble = reservoir::Ensemble::single;
    return bench::make_qr_model(name, qc);
  }
  if (name == "QR2") {
    bench::QrModelConfig qc = qr_model_config(m);
    qc.reservoir.ensemble = reservoir::Ensemble::dual;
    return bench::make_qr_model(name, qc);
  }
  throw ConfigError("unknown model '" + name + "'");
}

const std::map<std::string, ReferenceLosses>& published_reference_losses() {
  static const std::map<std::string, ReferenceLosses> ref = {
      {"HAR", {0.1476, 2.0431}},  {"HARX", {0.1508, 2.2436}},
      {"AR1", {0.1304, 1.7279}},  {"AR3", {0.1178, 1.5893}},
      {"ARMAX", {0.1145, 1.6196}}, {"RC", {0.1441, 2.1011}},
      {"RCX", {0.1089, 1.6480}},  {"QR1", {0.105, 1.4427}},
      {"QR2", {0.103, 1.4004}}};
  return ref;
}

PrepareSummary run_prepare(const std::string& daily_csv,
                           const std::string& features_csv,
                           const std::string& out_dir) {
  PrepareSummary summary;
  const auto daily = data::load_daily(daily_csv);
  const auto log_rv = data::compute_monthly_log_rv(daily, &summary.warnings);
  const auto exo = data::load_exo_csv(features_csv);
  const data::FeatureFrame frame = data::assemble_frame(log_rv, exo);
  if (frame.rows() < 13) {
    summary.warnings.push_back(
        "frame has " + std::to_string(frame.rows()) +
        " rows; HAR-family regressors need at least 13 months");
  }
  fs::create_directories(out_dir);
  summary.frame_path = (fs::path(out_dir) / "frame.csv").string();
  data::write_frame(summary.frame_path, frame);
  summary.rows = frame.rows();
  if (!frame.months.empty()) {
    summary.first_month = data::month_label(frame.months.front());
    summary.last_month = data::month_label(frame.months.back());
  }
  return summary;
}

namespace {

struct LossTable {
  std::vector<eval::LossSeries> mse;    // per successful model
  std::vector<eval::LossSeries> qlike;  // models with defined QLIKE
};

LossTable build_losses(const std::vector<bench::ForecastRun>& runs) {
  LossTable table;
  for (const auto& run : runs) {
    if (run.failed) continue;
    eval::LossSeries se;
    se.model = run.model;
    se.dates = run.dates;
    se.losses = eval::squared_error_contribs(run.actual, run.forecast);
    se.kind = eval::LossKind::mse_contrib;
    table.mse.push_back(std::move(se));
    try {
      std::vector<double> a_level(run.actual.size());
      std::vector<double> f_level(run.forecast.size());
      for (std::size_t i = 0; i < run.actual.size(); ++i) {
        a_level[i] = std::exp(run.actual[i]);
        f_level[i] = std::exp(run.forecast[i]);
      }
      eval::LossSeries ql;
      ql.model = run.model;
      ql.dates = run.dates;
      ql.losses = eval::qlike_contribs(a_level, f_level);
      ql.kind = eval::LossKind::qlike_contrib;
      table.qlike.push_back(std::move(ql));
    } catch (const LossError&) {
      // QLIKE undefined for this model (degenerate forecast level); the
      // score stays NaN and the model is excluded from the QLIKE MCS.
    }
  }
  return table;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

void write_forecast_csv(const fs::path& dir, const bench::ForecastRun& run,
                        const eval::LossSeries* se,
                        const eval::LossSeries* ql) {
  auto out = open_out(dir / ("forecasts_" + run.model + ".csv"));
  out << "# " << kLossConvention << "\n";
  out << "date,actual_log_rv,forecast_log_rv,squared_error,qlike_contrib\n";
  for (std::size_t i = 0; i < run.dates.size(); ++i) {
    out << data::month_first_day(run.dates[i]) << "," << fmt17(run.actual[i])
        << "," << fmt17(run.forecast[i]) << ","
        << (se ? fmt17(se->losses[i]) : "nan") << ","
        << (ql ? fmt17(ql->losses[i]) : "nan") << "\n";
  }
}

}  // namespace

BenchmarkResult run_benchmark(const Json& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string frame_path = config["frame"].get<std::string>();
  if (frame_path.empty()) throw ConfigError("no frame file configured");
  const data::FeatureFrame frame = data::load_frame(frame_path);

  data::RollingPlan plan;
  plan.total_length = frame.rows();
  plan.n_out_of_sample = config["rolling"]["n_out_of_sample"].get<std::size_t>();
  plan.lag_depth = config["rolling"]["lag_depth"].get<std::size_t>();
  data::rolling_windows(plan);  // validates feasibility

  const unsigned threads = resolved_threads(config);
  BenchmarkResult result;
  result.out_dir = config["out_dir"].get<std::string>();
  fs::create_directories(result.out_dir);

  for (const auto& name : model_order()) {
    if (!config["models"][name]["enabled"].get<bool>()) continue;
    bench::ForecastRun run;
    try {
      auto model = build_model(name, config);
      run = bench::run_rolling(*model, frame, plan, threads);
    } catch (const std::exception& e) {
      run.model = name;
      run.failed = true;
      run.error = e.what();
    }
    result.any_failed = result.any_failed || run.failed;
    result.runs.push_back(std::move(run));
  }
  if (result.runs.empty()) throw ConfigError("no models enabled");

  const LossTable losses = build_losses(result.runs);

  eval::BootstrapSpec boot;
  boot.n_reps = config["evaluation"]["n_reps"].get<int>();
  boot.block_length = config["evaluation"]["block_length"].get<int>();
  boot.seed = config["evaluation"]["bootstrap_seed"].get<std::uint64_t>();
  const double alpha = config["evaluation"]["alpha"].get<double>();
  if (losses.mse.size() >= 2) result.mcs_mse = eval::mcs(losses.mse, alpha, boot);
  if (losses.qlike.size() >= 2) {
    result.mcs_qlike = eval::mcs(losses.qlike, alpha, boot);
  }

  for (const auto& run : result.runs) {
    ModelScore score;
    score.model = run.model;
    score.failed = run.failed;
    score.error = run.error;
    for (const auto& se : losses.mse) {
      if (se.model == run.model) {
        score.mse = mean_of(se.losses);
        auto it = result.mcs_mse.p_values.find(run.model);
        if (it != result.mcs_mse.p_values.end()) score.p_mcs_mse = it->second;
      }
    }
    for (const auto& ql : losses.qlike) {
      if (ql.model == run.model) {
        score.qlike = mean_of(ql.losses);
        auto it = result.mcs_qlike.p_values.find(run.model);
        if (it != result.mcs_qlike.p_values.end()) {
          score.p_mcs_qlike = it->second;
        }
      }
    }
    result.scores.push_back(std::move(score));
  }

  // Pairwise DM matrix on the configured loss kind.
  const std::string dm_loss = config["evaluation"]["dm_loss"].get<std::string>();
  const auto& dm_series =
      dm_loss == "qlike" ? losses.qlike : losses.mse;
  const int nw_lag = config["evaluation"]["nw_lag"].get<int>();
  const std::size_t n_dm = dm_series.size();
  result.dm_models.clear();
  for (const auto& s : dm_series) result.dm_models.push_back(s.model);
  result.dm_stat.assign(n_dm, std::vector<double>(n_dm, 0.0));
  result.dm_p.assign(n_dm, std::vector<double>(n_dm, 1.0));
  for (std::size_t i = 0; i < n_dm; ++i) {
    for (std::size_t j = 0; j < n_dm; ++j) {
      if (i == j) continue;
      const eval::DmResult dm = eval::dm_test(dm_series[i], dm_series[j], nw_lag);
      result.dm_stat[i][j] = dm.statistic;
      result.dm_p[i][j] = dm.p_value;
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  // ---- artifacts ----
  const fs::path dir(result.out_dir);
  for (const auto& run : result.runs) {
    if (run.failed) continue;
    const eval::LossSeries* se = nullptr;
    const eval::LossSeries* ql = nullptr;
    for (const auto& s : losses.mse) {
      if (s.model == run.model) se = &s;
    }
    for (const auto& s : losses.qlike) {
      if (s.model == run.model) ql = &s;
    }
    write_forecast_csv(dir, run, se, ql);
  }

  {
    auto out = open_out(dir / "table_mcs.csv");
    out << "# " << kLossConvention << "\n";
    out << "model,mse,p_mcs_mse,qlike,p_mcs_qlike\n";
    for (const auto& s : result.scores) {
      out << s.model << "," << fmt17(s.mse) << "," << fmt17(s.p_mcs_mse) << ","
          << fmt17(s.qlike) << "," << fmt17(s.p_mcs_qlike) << "\n";
    }
  }
  {
    auto out = open_out(dir / "table_dm.csv");
    out << "# lower triangle: DM statistic; upper triangle: two-sided p-value; "
        << "loss: " << dm_loss << "\n";
    out << "model";
    for (const auto& m : result.dm_models) out << "," << m;
    out << "\n";
    for (std::size_t i = 0; i < n_dm; ++i) {
      out << result.dm_models[i];
      for (std::size_t j = 0; j < n_dm; ++j) {
        out << ",";
        if (i == j) continue;
        out << fmt17(i > j ? result.dm_stat[i][j] : result.dm_p[i][j]);
      }
      out << "\n";
    }
  }
  {
    auto out = open_out(dir / "timings.csv");
    out << "model,window,target,milliseconds\n";
    for (const auto& run : result.runs) {
      for (std::size_t i = 0; i < run.window_seconds.size(); ++i) {
        out << run.model << "," << i << ","
            << (i < run.dates.size() ? data::month_first_day(run.dates[i]) : "")
            << "," << fmt17(run.window_seconds[i] * 1e3) << "\n";
      }
    }
  }

  Json evaluation;
  evaluation["loss_convention"] = kLossConvention;
  evaluation["alpha"] = alpha;
  evaluation["dm_loss"] = dm_loss;
  for (const auto& s : result.scores) {
    Json row;
    row["failed"] = s.failed;
    if (s.failed) row["error"] = s.error;
    row["mse"] = s.mse;
    row["qlike"] = s.qlike;
    row["p_mcs_mse"] = s.p_mcs_mse;
    row["p_mcs_qlike"] = s.p_mcs_qlike;
    const auto ref = published_reference_losses().find(s.model);
    if (ref != published_reference_losses().end() && !s.failed) {
      row["reference_mse"] = ref->second.mse;
      row["reference_qlike"] = ref->second.qlike;
      row["deviation_mse"] = s.mse - ref->second.mse;
      row["deviation_qlike"] = s.qlike - ref->second.qlike;
    }
    evaluation["models"][s.model] = row;
  }
  evaluation["reference_note"] =
      "reference values are published results for the original S&P 500 "
      "1997-08..2017-12 sample; deviations are informational, not targets";
  auto mcs_json = [](const eval::McsResult& m) {
    Json j;
    j["survivors"] = m.survivors;
    j["elimination_order"] = m.elimination_order;
    j["p_values"] = m.p_values;
    return j;
  };
  evaluation["mcs_mse"] = mcs_json(result.mcs_mse);
  evaluation["mcs_qlike"] = mcs_json(result.mcs_qlike);
  evaluation["dm_models"] = result.dm_models;
  evaluation["dm_statistics"] = result.dm_stat;
  evaluation["dm_p_values"] = result.dm_p;
  open_out(dir / "evaluation.json") << evaluation.dump(2) << "\n";

  {
    auto out = open_out(dir / "report.txt");
    out << "volatility forecast benchmark\n";
    out << "loss convention: " << kLossConvention << "\n";
    out << "rolling plan: " << plan.total_length << " months, "
        << plan.n_out_of_sample << " out-of-sample, window width "
        << plan.window_width() << "\n\n";
    out << "model        mse       p_mcs     qlike     p_mcs   (/ = in MCS at "
        << "alpha=" << alpha << ")\n";
    for (const auto& s : result.scores) {
      if (s.failed) {
        out << s.model << "  FAILED: " << s.error << "\n";
        continue;
      }
      const bool in_mse = s.p_mcs_mse >= alpha;
      const bool in_ql = s.p_mcs_qlike >= alpha;
      out << s.model << (s.model.size() < 5 ? std::string(5 - s.model.size(), ' ')
                                            : " ")
          << "  " << fmt4(s.mse) << "  " << fmt4(s.p_mcs_mse)
          << (in_mse ? "*" : " ") << "  " << fmt4(s.qlike) << "  "
          << fmt4(s.p_mcs_qlike) << (in_ql ? "*" : " ") << "\n";
    }
    out << "\nreference comparison (published results on the original "
        << "S&P 500 1997-08..2017-12 sample; informational only --\n"
        << "the reference coupling seeds, evolution time and vendor data are "
        << "not published, so these are not reproduction targets):\n";
    out << "model  mse  reference_mse  deviation\n";
    for (const auto& s : result.scores) {
      const auto ref = published_reference_losses().find(s.model);
      if (ref == published_reference_losses().end() || s.failed) continue;
      out << s.model << "  " << fmt4(s.mse) << "  " << fmt4(ref->second.mse)
          << "  " << fmt4(s.mse - ref->second.mse) << "\n";
    }
    out << "\ntimings (seconds per model): ";
    for (const auto& run : result.runs) {
      out << run.model << "=" << fmt4(run.total_seconds) << " ";
    }
    out << "\n";
  }

  Json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "benchmark";
  manifest["config"] = config;
  manifest["config_hash"] = fnv1a_str(config.dump());
  manifest["frame_hash"] = hash_file(frame_path);
  manifest["threads"] = threads;
  manifest["wall_clock_seconds"] = result.wall_seconds;
  Json per_model;
  for (const auto& run : result.runs) {
    per_model[run.model] = {{"failed", run.failed},
                            {"seconds", run.total_seconds},
                            {"error", run.error}};
  }
  manifest["models"] = per_model;
  open_out(dir / "manifest.json") << manifest.dump(2) << "\n";

  return result;
}

explain::SelectionTrace run_select(const Json& config) {
  const std::string frame_path = config["frame"].get<std::string>();
  if (frame_path.empty()) throw ConfigError("no frame file configured");
  const data::FeatureFrame frame = data::load_frame(frame_path);
  const Json& sel = config["select"];
  const std::string kind = sel["model"].get<std::string>();

  explain::SelectData sd;
  sd.frame = &frame;
  sd.plan.total_length = frame.rows();
  sd.plan.n_out_of_sample = config["rolling"]["n_out_of_sample"].get<std::size_t>();
  sd.plan.lag_depth = config["rolling"]["lag_depth"].get<std::size_t>();
  sd.threads = resolved_threads(config);
  sd.single_split = sel["single_split"].get<bool>();

  explain::FeaturePool pool;
  pool.names = sel["pool"].get<std::vector<std::string>>();
  for (const auto& name : pool.names) frame.column_index(name);

  explain::ModelFactory factory;
  if (kind == "QR1" || kind == "QR2") {
    const bench::QrModelConfig base = qr_model_config(config["models"][kind]);
    const auto total = config["models"][kind]["total_qubits"].get<std::size_t>();
    const bool dual = kind == "QR2";
    factory = [base, total, dual, kind](const std::vector<std::string>& feats) {
      if (feats.size() > total) {
        throw ConfigError(kind + ": feature subset exceeds the qubit budget");
      }
      bench::QrModelConfig qc = base;
      qc.features = feats;
      qc.reservoir.n_input = feats.size();
      qc.reservoir.n_hidden = total - feats.size();
      qc.reservoir.ensemble =
          dual ? reservoir::Ensemble::dual : reservoir::Ensemble::single;
      return bench::make_qr_model(kind, qc);
    };
  } else if (kind == "RC" || kind == "RCX") {
    const bench::EsnModelConfig base =
        esn_model_config(config["models"][kind], kind == "RCX");
    factory = [base, kind](const std::vector<std::string>& feats) {
      bench::EsnModelConfig ec = base;
      ec.features = feats;
      return bench::make_esn_model(kind, ec);
    };
  } else {
    throw ConfigError("forward selection supports QR1, QR2, RC and RCX");
  }

  const auto max_features =
      std::min<std::size_t>(sel["max_features"].get<std::size_t>(),
                            pool.names.size());
  const explain::SelectionTrace trace =
      explain::forward_select(pool, factory, sd, max_features);

  const fs::path dir(config["out_dir"].get<std::string>());
  fs::create_directories(dir);
  Json j;
  j["model"] = kind;
  j["selected"] = trace.selected;
  j["mse"] = trace.mse;
  j["stop_reason"] = trace.stop_reason;
  j["pool"] = pool.names;
  j["max_features"] = max_features;
  j["single_split"] = sd.single_split;
  j["seed"] = config["seed"];
  open_out(dir / ("selection_" + kind + ".json")) << j.dump(2) << "\n";
  auto out = open_out(dir / ("selection_" + kind + ".csv"));
  out << "step,feature,oos_mse\n";
  for (std::size_t i = 0; i < trace.selected.size(); ++i) {
    out << (i + 1) << "," << trace.selected[i] << "," << fmt17(trace.mse[i])
        << "\n";
  }
  return trace;
}

explain::ShapleyReport run_shapley(const Json& config) {
  const std::string frame_path = config["frame"].get<std::string>();
  if (frame_path.empty()) throw ConfigError("no frame file configured");
  const data::FeatureFrame frame = data::load_frame(frame_path);
  const Json& sh = config["shapley"];
  const std::string kind = sh["model"].get<std::string>();
  if (kind != "QR1" && kind != "QR2") {
    throw ConfigError("Shapley attribution supports the QR models");
  }
  const std::string grouping_str = sh["grouping"].get<std::string>();
  explain::Grouping grouping;
  if (grouping_str == "per-lag-feature") {
    grouping = explain::Grouping::per_lag_feature;
  } else if (grouping_str == "feature-family") {
    grouping = explain::Grouping::feature_family;
  } else if (grouping_str == "time-lag") {
    grouping = explain::Grouping::time_lag;
  } else {
    throw ConfigError("unknown grouping '" + grouping_str + "'");
  }

  data::RollingPlan plan;
  plan.total_length = frame.rows();
  plan.n_out_of_sample = config["rolling"]["n_out_of_sample"].get<std::size_t>();
  plan.lag_depth = config["rolling"]["lag_depth"].get<std::size_t>();
  const auto windows = data::rolling_windows(plan);
  const data::Window last = windows.back();

  bench::QrModelConfig qc = qr_model_config(config["models"][kind]);
  qc.reservoir.ensemble = kind == "QR2" ? reservoir::Ensemble::dual
                                        : reservoir::Ensemble::single;
  auto model = bench::make_qr_model(kind, qc);
  auto* qr = dynamic_cast<bench::WindowPredictor*>(model.get());
  if (qr == nullptr) throw ConfigError("model cannot be explained");

  const std::size_t k = qc.reservoir.lag_depth;
  const std::size_t width = qc.features.size();
  auto raw_window = [&](std::size_t target) {
    std::vector<double> row(k * width);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        row[r * width + c] = frame.at(target - k + r, qc.features[c]);
      }
    }
    return row;
  };

  // Background: training rows of the final rolling window.
  std::vector<std::vector<double>> background;
  const auto cap = sh["background_cap"].get<std::size_t>();
  for (std::size_t m = last.train_begin + k; m < last.train_end; ++m) {
    background.push_back(raw_window(m));
  }
  if (cap > 0 && background.size() > cap) {
    // Deterministic thinning: keep an evenly spaced subset.
    std::vector<std::vector<double>> kept;
    const double step =
        static_cast<double>(background.size()) / static_cast<double>(cap);
    for (std::size_t i = 0; i < cap; ++i) {
      kept.push_back(background[static_cast<std::size_t>(i * step)]);
    }
    background.swap(kept);
  }

  const auto n_rows = sh["explained_rows"].get<std::size_t>();
  if (n_rows < 1 || n_rows > plan.n_out_of_sample) {
    throw ConfigError("explained_rows must lie in [1, n_out_of_sample]");
  }
  std::vector<std::vector<double>> explained;
  for (std::size_t i = windows.size() - n_rows; i < windows.size(); ++i) {
    explained.push_back(raw_window(windows[i].target));
  }

  const explain::GroupSpec groups = explain::make_groups(grouping, k, qc.features);
  const std::function<double(const std::vector<double>&)> f =
      [&](const std::vector<double>& flat) {
        return qr->predict_raw_window(frame, last.train_begin, last.train_end,
                                      flat);
      };
  const explain::ShapleyReport report = explain::shapley_values(
      f, explained, background, groups.groups, groups.names,
      sh["n_samples"].get<std::size_t>(),
      derive_seed(config["seed"].get<std::uint64_t>(), fnv1a_str("shapley")),
      resolved_threads(config));

  const fs::path dir(config["out_dir"].get<std::string>());
  fs::create_directories(dir);
  Json j;
  j["model"] = kind;
  j["grouping"] = grouping_str;
  j["group_names"] = report.group_names;
  j["phi"] = report.phi;
  j["n_samples"] = report.n_samples;
  j["seed"] = report.seed;
  j["exact"] = report.exact;
  j["baseline"] = report.baseline;
  j["mean_prediction"] = report.mean_prediction;
  j["efficiency_residual"] = report.efficiency_residual;
  j["explained_rows"] = n_rows;
  j["background_rows"] = background.size();
  open_out(dir / ("shapley_" + kind + "_" + grouping_str + ".json"))
      << j.dump(2) << "\n";
  auto out = open_out(dir / ("shapley_" + kind + "_" + grouping_str + ".csv"));
  out << "group,phi\n";
  for (std::size_t g = 0; g < report.phi.size(); ++g) {
    out << report.group_names[g] << "," << fmt17(report.phi[g]) << "\n";
  }
  return report;
}

}  // namespace qrv::cli
