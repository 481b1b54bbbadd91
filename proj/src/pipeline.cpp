#include "commrec/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "commrec/clustering.hpp"
#include "commrec/datagen.hpp"
#include "commrec/failure.hpp"
#include "commrec/graph.hpp"
#include "commrec/ldst.hpp"
#include "commrec/measurement.hpp"
#include "commrec/page.hpp"

namespace commrec {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

OsvtConfig::Mode mode_from_string(const std::string& s) {
  if (s == "iterative_masked") return OsvtConfig::Mode::IterativeMasked;
  if (s == "paper_literal_single_pass") return OsvtConfig::Mode::PaperLiteralSinglePass;
  throw std::invalid_argument("config: unknown osvt mode '" + s + "'");
}

std::string mode_to_string(OsvtConfig::Mode m) {
  return m == OsvtConfig::Mode::IterativeMasked ? "iterative_masked"
                                                : "paper_literal_single_pass";
}

OsvtConfig::ThresholdScale scale_from_string(const std::string& s) {
  if (s == "raw") return OsvtConfig::ThresholdScale::Raw;
  if (s == "median_scaled") return OsvtConfig::ThresholdScale::MedianScaled;
  throw std::invalid_argument("config: unknown threshold scale '" + s + "'");
}

std::string scale_to_string(OsvtConfig::ThresholdScale s) {
  return s == OsvtConfig::ThresholdScale::Raw ? "raw" : "median_scaled";
}

struct RecoverStats {
  long long calls = 0;
  long long converged = 0;
  long long iterations = 0;
  long long retained_rank = 0;

  void add(const RecoveryResult& r) {
    ++calls;
    if (r.converged) ++converged;
    iterations += r.iterations;
    retained_rank += r.retained_rank;
  }
  void merge(const RecoverStats& o) {
    calls += o.calls;
    converged += o.converged;
    iterations += o.iterations;
    retained_rank += o.retained_rank;
  }
};

struct TrialOutput {
  std::map<std::string, std::vector<MetricAccumulator>> acc;  // method -> per cluster
  std::map<std::string, RecoverStats> stats;
  std::map<std::string, Eigen::MatrixXd> recovered;  // only when collected
  std::map<std::string, ObservationMask> masks;
};

struct ExperimentContext {
  const RunConfig* config = nullptr;
  CommNetwork net;
  std::vector<std::string> sensor_order;
  MeasurementBlock truth;   // columns in sensor_order
  ClusterAssignment clusters;
  std::vector<std::vector<std::string>> cluster_members;  // sorted ids
  std::vector<std::vector<int>> cluster_cols;             // matching column indices
  LdstPlan plan_proposed;
  LdstPlan plan_unconstrained;
  bool have_proposed = false;
  bool have_unconstrained = false;
  int blocks = 0;
  Eigen::Index t_trim = 0;
};

FailureScenario trial_scenario(const ExperimentContext& ctx, int trial) {
  const RunConfig& cfg = *ctx.config;
  const int horizon = static_cast<int>(ctx.truth.rows());
  if (cfg.f_max == 0) return empty_scenario(horizon);
  return sample_failures(ctx.net, horizon, cfg.f_max,
                         cfg.seed + static_cast<std::uint64_t>(trial), cfg.fixed_failure_count,
                         cfg.burst_len);
}

// Recovers one trial with every requested method and scores the missing
// entries. When collect is set the full recovered matrices are kept
// (truth passthrough outside the tiled horizon, masked cells NaN there).
TrialOutput run_trial(const ExperimentContext& ctx, int trial, bool collect) {
  const RunConfig& cfg = *ctx.config;
  FailureScenario scenario = trial_scenario(ctx, trial);

  TrialOutput out;
  if (ctx.have_proposed)
    out.masks[kMethodProposed] =
        derive_mask(scenario, ctx.plan_proposed, ctx.sensor_order, ExecMode::Serial);
  if (ctx.have_unconstrained) {
    ObservationMask baseline =
        derive_mask(scenario, ctx.plan_unconstrained, ctx.sensor_order, ExecMode::Serial);
    if (cfg.methods.count(kMethodBaseline1)) out.masks[kMethodBaseline1] = baseline;
    if (cfg.methods.count(kMethodBaseline2)) out.masks[kMethodBaseline2] = std::move(baseline);
  }

  const int L = cfg.page_rows;
  const int W = cfg.page_windows;
  const Eigen::Index lw = static_cast<Eigen::Index>(L) * W;

  for (const std::string& method : cfg.methods) {
    const ObservationMask& mask = out.masks.at(method);
    const bool paged = method != kMethodBaseline2;
    auto& acc = out.acc[method];
    acc.resize(ctx.clusters.k);
    RecoverStats& stats = out.stats[method];

    Eigen::MatrixXd* full = nullptr;
    if (collect) {
      Eigen::MatrixXd m = ctx.truth.values;
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = ctx.t_trim; i < m.rows(); ++i)
          if (!mask.delivered(i, j)) m(i, j) = std::numeric_limits<double>::quiet_NaN();
      full = &out.recovered.emplace(method, std::move(m)).first->second;
    }

    for (int k = 0; k < ctx.clusters.k; ++k) {
      const auto& cols = ctx.cluster_cols[k];
      const Eigen::Index nk = static_cast<Eigen::Index>(cols.size());
      if (nk == 0) continue;
      Eigen::MatrixXd truth_k(ctx.truth.rows(), nk);
      MaskMatrix mask_k(ctx.truth.rows(), nk);
      for (Eigen::Index j = 0; j < nk; ++j) {
        truth_k.col(j) = ctx.truth.values.col(cols[j]);
        mask_k.col(j) = mask.delivered.col(cols[j]);
      }

      for (int b = 0; b < ctx.blocks; ++b) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * lw;
        Eigen::MatrixXd truth_block = truth_k.middleRows(r0, lw);
        MaskMatrix mask_block = mask_k.middleRows(r0, lw);
        if (mask_block.all() && !collect) continue;  // nothing missing, nothing to score

        Eigen::MatrixXd recovered_block;
        try {
          if (paged) {
            auto [page, layout] =
                to_page(truth_block, mask_block, ctx.cluster_members[k], L, W);
            RecoveryResult rec = recover(page.values, page.mask, cfg.osvt);
            stats.add(rec);
            recovered_block = from_page(rec.reconstruction, layout);
          } else {
            RecoveryResult rec = recover(truth_block, mask_block, cfg.osvt);
            stats.add(rec);
            recovered_block = rec.reconstruction;
          }
        } catch (const std::exception& e) {
          throw std::runtime_error("trial " + std::to_string(trial) + ", method " + method +
                                   ", cluster " + std::to_string(k) + ", block " +
                                   std::to_string(b) + ": " + e.what());
        }

        for (Eigen::Index j = 0; j < nk; ++j)
          for (Eigen::Index i = 0; i < lw; ++i)
            if (!mask_block(i, j)) acc[k].add(truth_block(i, j), recovered_block(i, j));
        if (full)
          for (Eigen::Index j = 0; j < nk; ++j) full->col(cols[j]).segment(r0, lw) =
              recovered_block.col(j);
      }
    }
  }
  return out;
}

json triple_to_json(const MetricTriple& t) {
  json out;
  out["mae"] = t.mae;
  out["rmse"] = t.rmse;
  if (t.mape)
    out["mape"] = *t.mape;
  else
    out["mape"] = nullptr;
  out["missing"] = t.missing_count;
  out["mape_excluded"] = t.mape_excluded;
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void RunConfig::validate() const {
  if (measurements_csv.empty()) throw std::invalid_argument("config: measurements path missing");
  if (topology_json.empty()) throw std::invalid_argument("config: topology path missing");
  if (k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("config: alpha must lie in (0, 1]");
  if (page_rows < 2) throw std::invalid_argument("config: page_rows (L) must be >= 2");
  if (page_windows < 1) throw std::invalid_argument("config: page_windows (W) must be >= 1");
  if (f_max < 0) throw std::invalid_argument("config: f_max must be >= 0");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (burst_len < 1) throw std::invalid_argument("config: burst_len must be >= 1");
  if (methods.empty()) throw std::invalid_argument("config: no methods selected");
  for (const auto& m : methods)
    if (m != kMethodProposed && m != kMethodBaseline1 && m != kMethodBaseline2)
      throw std::invalid_argument("config: unknown method '" + m + "'");
  osvt.validate();
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig cfg;
  cfg.measurements_csv = doc.value("measurements", "");
  cfg.topology_json = doc.value("topology", "");
  cfg.output_dir = doc.value("output_dir", "");
  cfg.family = doc.value("family", cfg.family);
  cfg.k = doc.value("k", cfg.k);
  cfg.alpha = doc.value("alpha", cfg.alpha);
  cfg.page_rows = doc.value("page_rows", cfg.page_rows);
  cfg.page_windows = doc.value("page_windows", cfg.page_windows);
  cfg.f_max = doc.value("f_max", cfg.f_max);
  cfg.trials = doc.value("trials", cfg.trials);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.tree_count = doc.value("tree_count", cfg.tree_count);
  cfg.fixed_failure_count = doc.value("fixed_failure_count", cfg.fixed_failure_count);
  cfg.burst_len = doc.value("burst_len", cfg.burst_len);
  if (doc.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : doc.at("methods")) cfg.methods.insert(m.get<std::string>());
  }
  if (doc.contains("osvt")) {
    const auto& o = doc.at("osvt");
    if (o.contains("mode")) cfg.osvt.mode = mode_from_string(o.at("mode").get<std::string>());
    cfg.osvt.max_iters = o.value("max_iters", cfg.osvt.max_iters);
    cfg.osvt.rel_tol = o.value("rel_tol", cfg.osvt.rel_tol);
    cfg.osvt.min_rank_floor = o.value("min_rank_floor", cfg.osvt.min_rank_floor);
    if (o.contains("threshold_scale"))
      cfg.osvt.threshold_scale = scale_from_string(o.at("threshold_scale").get<std::string>());
  }
  if (doc.contains("export_series"))
    cfg.export_series = doc.at("export_series").get<std::vector<std::string>>();
  cfg.write_recovered = doc.value("write_recovered", cfg.write_recovered);
  cfg.scenario_export_limit = doc.value("scenario_export_limit", cfg.scenario_export_limit);
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json doc = json::parse(in);
  return from_json(doc);
}

json RunConfig::to_json() const {
  json doc;
  doc["measurements"] = measurements_csv;
  doc["topology"] = topology_json;
  doc["output_dir"] = output_dir;
  doc["family"] = family;
  doc["k"] = k;
  doc["alpha"] = alpha;
  doc["page_rows"] = page_rows;
  doc["page_windows"] = page_windows;
  doc["f_max"] = f_max;
  doc["trials"] = trials;
  doc["seed"] = seed;
  doc["tree_count"] = tree_count;
  doc["fixed_failure_count"] = fixed_failure_count;
  doc["burst_len"] = burst_len;
  doc["methods"] = std::vector<std::string>(methods.begin(), methods.end());
  doc["osvt"] = {{"mode", mode_to_string(osvt.mode)},
                 {"max_iters", osvt.max_iters},
                 {"rel_tol", osvt.rel_tol},
                 {"min_rank_floor", osvt.min_rank_floor},
                 {"threshold_scale", scale_to_string(osvt.threshold_scale)}};
  doc["export_series"] = export_series;
  doc["write_recovered"] = write_recovered;
  doc["scenario_export_limit"] = scenario_export_limit;
  return doc;
}

ExperimentResult run_experiment(const RunConfig& config, ExecMode mode) {
  config.validate();

  ExperimentContext ctx;
  ctx.config = &config;
  ctx.net = load_network_file(config.topology_json);
  ctx.sensor_order = ctx.net.sensor_order();
  if (ctx.sensor_order.empty())
    throw std::runtime_error("pipeline: topology declares no sensors");

  MeasurementBlock raw = read_measurements_csv(config.measurements_csv);
  ctx.truth.sensor_ids = ctx.sensor_order;
  ctx.truth.timestamps = raw.timestamps;
  ctx.truth.values.resize(raw.rows(), static_cast<Eigen::Index>(ctx.sensor_order.size()));
  for (std::size_t i = 0; i < ctx.sensor_order.size(); ++i) {
    int col = raw.column_of(ctx.sensor_order[i]);
    if (col < 0)
      throw std::runtime_error("pipeline: sensor '" + ctx.sensor_order[i] +
                               "' missing from the measurement CSV");
    ctx.truth.values.col(static_cast<Eigen::Index>(i)) = raw.values.col(col);
  }

  const Eigen::Index lw =
      static_cast<Eigen::Index>(config.page_rows) * config.page_windows;
  ctx.blocks = static_cast<int>(ctx.truth.rows() / lw);
  if (ctx.blocks < 1)
    throw std::runtime_error("pipeline: horizon shorter than one L*W tile");
  ctx.t_trim = static_cast<Eigen::Index>(ctx.blocks) * lw;

  std::vector<FeatureVector> features = extract_features(ctx.truth);
  ctx.clusters = cluster_balanced(features, config.k, config.seed);
  ctx.cluster_members = ctx.clusters.members();
  ctx.cluster_cols.resize(ctx.clusters.k);
  for (int k = 0; k < ctx.clusters.k; ++k)
    for (const auto& id : ctx.cluster_members[k])
      ctx.cluster_cols[k].push_back(ctx.truth.column_of(id));

  ctx.have_proposed = config.methods.count(kMethodProposed) > 0;
  ctx.have_unconstrained =
      config.methods.count(kMethodBaseline1) > 0 || config.methods.count(kMethodBaseline2) > 0;
  if (ctx.have_proposed)
    ctx.plan_proposed =
        build_ldst_plan(ctx.net, ctx.clusters, config.alpha, config.tree_count, config.seed);
  if (ctx.have_unconstrained)
    ctx.plan_unconstrained =
        build_unconstrained_plan(ctx.net, ctx.clusters, config.tree_count, config.seed);

  // Monte Carlo trials; slot-per-trial results, reduced in trial order.
  std::vector<TrialOutput> slots(config.trials);
  parallel_for(config.trials, mode,
               [&](std::int64_t t) { slots[t] = run_trial(ctx, static_cast<int>(t), false); });

  std::map<std::string, std::vector<MetricAccumulator>> pooled;
  std::map<std::string, RecoverStats> stats;
  for (const std::string& method : config.methods) {
    pooled[method].resize(ctx.clusters.k);
    for (int t = 0; t < config.trials; ++t) {
      for (int k = 0; k < ctx.clusters.k; ++k) pooled[method][k].merge(slots[t].acc[method][k]);
      stats[method].merge(slots[t].stats[method]);
    }
  }

  ExperimentResult result;
  result.remainder_samples = static_cast<long long>(ctx.truth.rows() - ctx.t_trim);

  long long total_missing = 0;
  for (const auto& [method, accs] : pooled)
    for (const auto& acc : accs) total_missing += acc.n;
  result.metrics_skipped = total_missing == 0;

  json methods_json = json::object();
  for (const std::string& method : config.methods) {
    MethodMetrics mm;
    MetricAccumulator combined;
    json per_cluster = json::array();
    double mae_sum = 0.0;
    int scored_clusters = 0;
    for (int k = 0; k < ctx.clusters.k; ++k) {
      const MetricAccumulator& acc = pooled[method][k];
      json entry;
      entry["cluster"] = k;
      if (acc.n > 0) {
        MetricTriple t = acc.finalize();
        mm.per_cluster.push_back(t);
        entry.update(triple_to_json(t));
        combined.merge(acc);
        mae_sum += t.mae;
        ++scored_clusters;
      } else {
        mm.per_cluster.push_back(MetricTriple{});
        entry["missing"] = 0;
      }
      per_cluster.push_back(entry);
    }
    json m;
    m["per_cluster"] = per_cluster;
    if (combined.n > 0) {
      mm.combined = combined.finalize();
      mm.unweighted_mean_mae = mae_sum / std::max(scored_clusters, 1);
      m["combined"] = triple_to_json(mm.combined);
      m["unweighted_mean_mae"] = mm.unweighted_mean_mae;
    } else {
      m["combined"] = {{"missing", 0}};
      m["unweighted_mean_mae"] = nullptr;
    }
    const RecoverStats& st = stats[method];
    m["diagnostics"] = {
        {"recover_calls", st.calls},
        {"converged", st.converged},
        {"mean_iterations",
         st.calls > 0 ? json(static_cast<double>(st.iterations) / st.calls) : json(nullptr)},
        {"mean_retained_rank",
         st.calls > 0 ? json(static_cast<double>(st.retained_rank) / st.calls) : json(nullptr)}};
    methods_json[method] = m;
    result.methods[method] = std::move(mm);
  }

  json report;
  report["config"] = config.to_json();
  report["family"] = config.family;
  report["horizon"] = ctx.truth.rows();
  report["sensors"] = ctx.sensor_order.size();
  report["clusters"] = {{"k", ctx.clusters.k},
                        {"sizes", ctx.clusters.sizes()},
                        {"objective", ctx.clusters.objective},
                        {"iterations", ctx.clusters.iterations}};
  report["blocks_per_trial"] = ctx.blocks;
  report["remainder_samples"] = result.remainder_samples;
  report["trials"] = config.trials;
  report["methods"] = methods_json;
  if (result.metrics_skipped)
    report["notice"] = "no missing entries in any trial; metrics skipped";

  json improvements = json::object();
  if (!result.metrics_skipped && result.methods.count(kMethodProposed)) {
    const double proposed = result.methods[kMethodProposed].combined.mae;
    for (const char* baseline : {kMethodBaseline1, kMethodBaseline2}) {
      if (!result.methods.count(baseline)) continue;
      const MethodMetrics& base = result.methods[baseline];
      json entry;
      entry["combined_mae_pct"] =
          base.combined.mae > 0 ? json(improvement(proposed, base.combined.mae)) : json(nullptr);
      entry["unweighted_mae_pct"] =
          base.unweighted_mean_mae > 0
              ? json(improvement(result.methods[kMethodProposed].unweighted_mean_mae,
                                 base.unweighted_mean_mae))
              : json(nullptr);
      improvements[std::string("proposed_vs_") + baseline] = entry;
    }
  }
  report["improvements"] = improvements;
  result.report = report;

  if (!config.output_dir.empty()) {
    fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    write_text_file(out_dir / "report.json", report.dump(2) + "\n");

    // report.csv: one row per (method, cluster) plus combined rows.
    std::ostringstream csv;
    csv << "method,cluster,mae,rmse,mape,missing,mape_excluded\n";
    for (const std::string& method : config.methods) {
      const MethodMetrics& mm = result.methods[method];
      for (int k = 0; k < ctx.clusters.k; ++k) {
        const MetricTriple& t = mm.per_cluster[k];
        csv << method << "," << k << ",";
        if (t.missing_count > 0) {
          csv << format_double(t.mae) << "," << format_double(t.rmse) << ","
              << (t.mape ? format_double(*t.mape) : "") << "," << t.missing_count << ","
              << t.mape_excluded << "\n";
        } else {
          csv << ",,," << 0 << "," << 0 << "\n";
        }
      }
      const MetricTriple& c = mm.combined;
      csv << method << ",combined,";
      if (c.missing_count > 0)
        csv << format_double(c.mae) << "," << format_double(c.rmse) << ","
            << (c.mape ? format_double(*c.mape) : "") << "," << c.missing_count << ","
            << c.mape_excluded << "\n";
      else
        csv << ",,," << 0 << "," << 0 << "\n";
    }
    write_text_file(out_dir / "report.csv", csv.str());

    write_text_file(out_dir / "clusters.json", clusters_to_json(ctx.clusters).dump(2) + "\n");
    if (ctx.have_proposed)
      write_text_file(out_dir / "plan.json",
                      plan_to_json(ctx.plan_proposed, ctx.net).dump(2) + "\n");
    if (ctx.have_unconstrained)
      write_text_file(out_dir / "plan_baseline.json",
                      plan_to_json(ctx.plan_unconstrained, ctx.net).dump(2) + "\n");

    const int scenario_limit = config.scenario_export_limit < 0
                                   ? config.trials
                                   : std::min(config.scenario_export_limit, config.trials);
    if (scenario_limit > 0) {
      fs::create_directories(out_dir / "scenarios");
      for (int t = 0; t < scenario_limit; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%05d.jsonl", t);
        write_text_file(out_dir / "scenarios" / name,
                        scenario_to_jsonl(trial_scenario(ctx, t), ctx.net));
      }
    }

    if (config.write_recovered || !config.export_series.empty()) {
      TrialOutput trial0 = run_trial(ctx, 0, true);
      if (config.write_recovered) {
        fs::create_directories(out_dir / "recovered");
        for (const std::string& method : config.methods) {
          MeasurementBlock rec;
          rec.sensor_ids = ctx.sensor_order;
          rec.timestamps = ctx.truth.timestamps;
          rec.values = trial0.recovered.at(method);
          write_measurements_csv((out_dir / "recovered" / (method + "_trial0.csv")).string(),
                                 rec);
          write_mask_csv((out_dir / "recovered" / (method + "_trial0_mask.csv")).string(),
                         ctx.sensor_order, ctx.truth.timestamps,
                         trial0.masks.at(method).delivered);
        }
      }
      const std::string reported_method = ctx.have_proposed ? kMethodProposed
                                          : config.methods.count(kMethodBaseline1)
                                              ? kMethodBaseline1
                                              : kMethodBaseline2;
      for (const std::string& sensor : config.export_series) {
        int col = ctx.truth.column_of(sensor);
        if (col < 0)
          throw std::runtime_error("pipeline: export_series sensor '" + sensor + "' unknown");
        std::ostringstream series;
        series << "timestamp,truth,reported";
        for (const std::string& method : config.methods) series << ",recovered_" << method;
        series << "\n";
        const auto& reported_mask = trial0.masks.at(reported_method).delivered;
        for (Eigen::Index t = 0; t < ctx.truth.rows(); ++t) {
          series << ctx.truth.timestamps[static_cast<std::size_t>(t)] << ","
                 << format_double(ctx.truth.values(t, col)) << ",";
          if (reported_mask(t, col)) series << format_double(ctx.truth.values(t, col));
          for (const std::string& method : config.methods) {
            series << ",";
            const double v = trial0.recovered.at(method)(t, col);
            if (!std::isnan(v)) series << format_double(v);
          }
          series << "\n";
        }
        write_text_file(out_dir / ("series_" + sensor + ".csv"), series.str());
      }
    }
  }
  return result;
}

std::vector<std::string> validate_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("plan: cannot open '" + path + "'");
  json doc = json::parse(in);
  return validate_plan_document(doc);
}

}  // namespace commrec
