#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dba/core.hpp"
#include "dba/error.hpp"
#include "dba/estimators.hpp"
#include "dba/io.hpp"
#include "dba/model.hpp"
#include "dba/oracle.hpp"
#include "dba/synthgen.hpp"
#include "dba/trainer.hpp"
#include "dba/weights.hpp"

namespace dba {

/// Average and per-(y, s)-cell accuracy. `worst` is the minimum over
/// occupied cells; empty cells do not participate.
struct Metrics {
  double average = 0.0;
  double worst = 0.0;
  std::map<std::pair<int, int>, double> per_group;
  std::map<std::pair<int, int>, int> group_counts;
  bool class_only = false;  // attributes were unknown; cells collapsed to classes
};

inline Metrics accuracy_metrics(const SoftmaxModel& model, const Dataset& test) {
  require(!test.empty(), Err::EmptyDataset, "accuracy_metrics: empty dataset");
  require(model.L == test.L && model.d == test.d, Err::DimensionMismatch,
          "model shape != dataset shape");

  Metrics m;
  m.class_only = !test.attributes_known();
  std::map<std::pair<int, int>, int> correct;
  std::size_t total_correct = 0;
  for (const Sample& smp : test.samples) {
    const std::pair<int, int> cell{smp.y, m.class_only ? kUnknown : smp.s};
    const bool ok = predict_class(model, smp.x) == smp.y;
    ++m.group_counts[cell];
    correct[cell] += ok ? 1 : 0;
    total_correct += ok ? 1 : 0;
  }
  m.average = static_cast<double>(total_correct) / static_cast<double>(test.size());
  m.worst = 1.0;
  for (const auto& [cell, count] : m.group_counts) {
    const double acc = static_cast<double>(correct[cell]) / static_cast<double>(count);
    m.per_group[cell] = acc;
    if (acc < m.worst) m.worst = acc;
  }
  return m;
}

inline json metrics_to_json(const Metrics& m) {
  json j;
  j["average"] = m.average;
  j["worst"] = m.worst;
  j["class_only"] = m.class_only;
  json groups = json::object();
  json counts = json::object();
  for (const auto& [cell, acc] : m.per_group) {
    const std::string key = std::to_string(cell.first) + "," + std::to_string(cell.second);
    groups[key] = acc;
    counts[key] = m.group_counts.at(cell);
  }
  j["per_group"] = groups;
  j["group_counts"] = counts;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment protocol

struct ExperimentConfig {
  std::string family = "gaussian";  // "discrete" or "gaussian"
  DiscreteGenSpec dspec;
  GaussianGenSpec gspec;
  bool has_val_spec = false;        // shifted-validation setups override the val law
  DiscreteGenSpec val_dspec;
  GaussianGenSpec val_gspec;

  std::size_t n_train = 20000;
  std::size_t n_val = 5000;
  std::size_t n_test = 5000;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds{1, 2, 3};

  double p_m0 = 0.85;      // composition prior handed to the weight closed form
  double p_m0_val = -1.0;  // same, for the validation law; < 0 means reuse p_m0
  double tau = 1.0;
  bool unknown_attributes = false;
  bool self_normalize = false;
  std::string select = "loglik";   // or "accuracy"
  std::string select_z = "ones";   // or "estimate"

  TrainConfig train;
  EstimatorConfig estimator;
  std::vector<std::string> asserts;
  json echo;  // raw config text, echoed into runs.json
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  cfg.echo = j;
  const json& spec = j.at("spec");
  cfg.family = spec.value("family", "discrete");
  if (cfg.family == "discrete") {
    cfg.dspec = discrete_spec_from_json(spec);
  } else if (cfg.family == "gaussian") {
    cfg.gspec = gaussian_spec_from_json(spec);
  } else {
    fail(Err::BadConfig, "unknown spec family '" + cfg.family + "'");
  }
  if (j.contains("val_spec")) {
    cfg.has_val_spec = true;
    const json& vs = j.at("val_spec");
    const std::string vf = vs.value("family", cfg.family);
    require(vf == cfg.family, Err::BadConfig, "val_spec family must match spec family");
    if (cfg.family == "discrete")
      cfg.val_dspec = discrete_spec_from_json(vs);
    else
      cfg.val_gspec = gaussian_spec_from_json(vs);
  }
  cfg.n_train = j.value("n_train", std::size_t{20000});
  cfg.n_val = j.value("n_val", std::size_t{5000});
  cfg.n_test = j.value("n_test", std::size_t{5000});
  cfg.methods = j.at("methods").get<std::vector<std::string>>();
  require(!cfg.methods.empty(), Err::BadConfig, "methods list is empty");
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  require(!cfg.seeds.empty(), Err::BadConfig, "seeds list is empty");
  cfg.p_m0 = j.value("p_m0", 0.85);
  cfg.p_m0_val = j.value("p_m0_val", -1.0);
  cfg.tau = j.value("tau", 1.0);
  cfg.unknown_attributes = j.value("unknown_attributes", false);
  cfg.self_normalize = j.value("self_normalize", false);
  cfg.select = j.value("select", std::string("loglik"));
  cfg.select_z = j.value("select_z", std::string("ones"));
  require(cfg.select == "loglik" || cfg.select == "accuracy", Err::BadConfig,
          "select must be 'loglik' or 'accuracy'");
  require(cfg.select_z == "ones" || cfg.select_z == "estimate", Err::BadConfig,
          "select_z must be 'ones' or 'estimate'");

  if (j.contains("train")) {
    const json& t = j.at("train");
    cfg.train.lr = t.value("lr", cfg.train.lr);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.batch = t.value("batch", cfg.train.batch);
    cfg.train.hidden = t.value("hidden", cfg.train.hidden);
    cfg.train.weight_decay = t.value("weight_decay", cfg.train.weight_decay);
    cfg.train.seed = t.value("seed", cfg.train.seed);
  }
  cfg.train.validate();
  cfg.estimator.tau = cfg.tau;
  if (j.contains("overfit")) {
    const json& o = j.at("overfit");
    cfg.estimator.learning_rate = o.value("lr", cfg.estimator.learning_rate);
    cfg.estimator.overfit_epochs = o.value("epochs", cfg.estimator.overfit_epochs);
    cfg.estimator.batch = o.value("batch", cfg.estimator.batch);
    cfg.estimator.hidden = o.value("hidden", cfg.estimator.hidden);
  }
  cfg.estimator.validate();
  if (j.contains("assert")) cfg.asserts = j.at("assert").get<std::vector<std::string>>();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(parse_json_file(path));
}

struct RunOutcome {
  RunRecord record;
  std::map<std::string, Metrics> metrics;  // keyed by role name
};

struct MethodAggregate {
  std::string method;
  double avg_mean = 0.0;
  double avg_std = 0.0;
  double worst_mean = 0.0;
  double worst_std = 0.0;
  double seconds = 0.0;  // mean wall time per run (diagnostic)
};

namespace detail {

inline Dataset experiment_generate(const ExperimentConfig& cfg, std::size_t n,
                                   DatasetRole role, std::uint64_t seed, bool val_law) {
  if (cfg.family == "discrete") {
    const DiscreteGenSpec& s = (val_law && cfg.has_val_spec) ? cfg.val_dspec : cfg.dspec;
    return gen_discrete(s, n, role, seed, /*use_override=*/true);
  }
  const GaussianGenSpec& s = (val_law && cfg.has_val_spec) ? cfg.val_gspec : cfg.gspec;
  return gen_gaussian(s, n, role, seed, /*use_override=*/true);
}

inline std::vector<int> labels_of(const Dataset& ds) {
  std::vector<int> y(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) y[i] = ds.samples[i].y;
  return y;
}

/// Per-sample confidence of an overfit model at the true label.
inline std::vector<double> self_confidence(const SoftmaxModel& model, const Dataset& ds) {
  std::vector<double> p(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    p[i] = std::exp(log_proba(model, ds.samples[i].x, ds.samples[i].y));
  return p;
}

}  // namespace detail

/// Builds the per-sample training weights for one named method. For the
/// resample baseline the returned dataset in `train_out` is the bootstrap
/// replica and the weights are unit; for every other method `train_out`
/// is the input set.
inline WeightVector method_weights(const std::string& method, const Dataset& train,
                                   const Dataset& val, const ExperimentConfig& cfg,
                                   Dataset& train_out, std::uint64_t seed) {
  const TrainStats stats = compute_label_stats(train, cfg.p_m0, cfg.tau);
  train_out = train;

  auto dbcm = [&](const SpuriousPosteriorVector& rho) {
    return theorem1_weight(rho, detail::labels_of(train), stats);
  };

  if (method == "erm") return WeightVector::ones(train.size());
  if (method == "dbcm-known") return dbcm(estimate_known_s(train, cfg.estimator));
  if (method == "dbcm-same") return dbcm(estimate_same_dist(train, val, cfg.estimator));
  if (method == "dbcm-diff") return dbcm(estimate_diff_dist(train, cfg.estimator));
  if (method == "reweight") return class_balance_weight(train);
  if (method == "resample") {
    train_out = resample_dataset(train, class_balance_weight(train),
                                 mix64(seed) + 0xB00ull);
    return WeightVector::ones(train_out.size());
  }
  if (method == "logit-adjust") {
    // Joint posterior p(y, s=y | x) composed as rho * p(y | x), with an
    // overfit model supplying the class posterior and the regime-appropriate
    // estimator supplying rho.
    const SoftmaxModel overfit =
        detail::overfit_to_cap(train, cfg.estimator, mix64(train.seed) + 0x1Aull);
    const std::vector<double> conf = detail::self_confidence(overfit, train);
    const SpuriousPosteriorVector rho = train.attributes_known()
                                            ? estimate_known_s(train, cfg.estimator)
                                            : estimate_diff_dist(train, cfg.estimator);
    std::vector<double> p_joint(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
      p_joint[i] = std::min(1.0, std::max(kRhoFloor, rho.values[i] * conf[i]));
    return logit_adjust_weight(p_joint, train.L);
  }
  fail(Err::BadConfig, "unknown method '" + method + "'");
}

/// One (method, seed) cell of the protocol: generate, estimate, weight,
/// train, pick a checkpoint on validation, evaluate.
inline RunOutcome run_cell(const ExperimentConfig& cfg, const std::string& method,
                           std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();

  Dataset train = detail::experiment_generate(cfg, cfg.n_train, DatasetRole::Train, seed,
                                              /*val_law=*/false);
  Dataset val = detail::experiment_generate(cfg, cfg.n_val, DatasetRole::Val, seed + 1,
                                            /*val_law=*/true);
  Dataset test = detail::experiment_generate(cfg, cfg.n_test, DatasetRole::Test, seed + 2,
                                             /*val_law=*/false);
  const Dataset train_m = cfg.unknown_attributes ? strip_attributes(train) : train;
  const Dataset val_m = cfg.unknown_attributes ? strip_attributes(val) : val;

  Dataset train_used;
  WeightVector w = method_weights(method, train_m, val_m, cfg, train_used, seed);
  if (cfg.self_normalize) w = self_normalized(w);

  TrainConfig tc = cfg.train;
  tc.seed = mix64(tc.seed + seed * kGolden);
  const FitResult fit = fit_weighted(train_used, w, tc);

  SoftmaxModel model = fit.model;
  if (cfg.select == "accuracy") {
    model = select_model_by_accuracy(fit.checkpoints, val_m);
  } else if (cfg.select_z == "estimate") {
    // Validation law differs from the test law: pick by a z-weighted
    // likelihood, with z from the single-model estimator applied to the
    // validation set and the closed-form weight at the validation stats.
    const double p_m0_val = cfg.p_m0_val >= 0.0 ? cfg.p_m0_val : cfg.p_m0;
    const TrainStats val_stats = compute_label_stats(val_m, p_m0_val, cfg.tau);
    const SpuriousPosteriorVector rho_va = estimate_diff_dist(val_m, cfg.estimator);
    const WeightVector z = theorem1_weight(rho_va, detail::labels_of(val_m), val_stats);
    model = select_model(fit.checkpoints, val_m, &z);
  } else {
    model = select_model(fit.checkpoints, val_m, nullptr);
  }

  RunOutcome out;
  out.record.method = method;
  out.record.seed = seed;
  out.record.config_echo = cfg.echo.dump();
  out.metrics["test"] = accuracy_metrics(model, test);
  out.metrics["val"] = accuracy_metrics(model, val);
  out.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct ExperimentResult {
  std::vector<RunOutcome> runs;              // method-major, then seed order
  std::vector<MethodAggregate> aggregates;   // config method order
};

inline int experiment_thread_cap() {
  if (const char* env = std::getenv("DBA_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Full protocol over methods x seeds. Cells are independent and may run on
/// several threads (capped by DBA_THREADS); results are ordered by config
/// position regardless of completion order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  struct Cell {
    std::string method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const std::string& m : cfg.methods)
    for (std::uint64_t s : cfg.seeds) cells.push_back({m, s});

  ExperimentResult result;
  result.runs.resize(cells.size());

  const int threads = std::min<int>(experiment_thread_cap(), static_cast<int>(cells.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      result.runs[i] = run_cell(cfg, cells[i].method, cells[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
            result.runs[i] = run_cell(cfg, cells[i].method, cells[i].seed);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  const std::size_t per_method = cfg.seeds.size();
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    MethodAggregate agg;
    agg.method = cfg.methods[mi];
    std::vector<double> avgs, worsts;
    double seconds = 0.0;
    for (std::size_t si = 0; si < per_method; ++si) {
      const RunOutcome& run = result.runs[mi * per_method + si];
      avgs.push_back(run.metrics.at("test").average);
      worsts.push_back(run.metrics.at("test").worst);
      seconds += run.record.wall_seconds;
    }
    auto mean_std = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      if (v.size() > 1) {
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);  // sample standard deviation
      }
      return std::pair<double, double>{mean, std::sqrt(var)};
    };
    std::tie(agg.avg_mean, agg.avg_std) = mean_std(avgs);
    std::tie(agg.worst_mean, agg.worst_std) = mean_std(worsts);
    agg.seconds = seconds / static_cast<double>(per_method);
    result.aggregates.push_back(agg);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Misspecification study: class-imbalanced target, uniform test attributes.

struct MisspecReport {
  std::vector<MethodAggregate> aggregates;  // erm, reweight, dbcm-known
  double erm_avg = 0.0;
  double reweight_avg = 0.0;
  double dbcm_avg = 0.0;
  bool reweight_at_most_erm = false;
  bool dbcm_at_least_erm = false;
  bool pass = false;
};

/// Runs the class-balancing baseline against its own blind spot: a test law
/// that keeps the training class imbalance. The balancing weights then
/// target the wrong composition, while the posterior-driven correction does
/// not touch the class axis.
inline MisspecReport misspecification_study(const ExperimentConfig& cfg_in) {
  const std::vector<double>& p_y =
      cfg_in.family == "discrete" ? cfg_in.dspec.p_y : cfg_in.gspec.p_y;
  double max_dev = 0.0;
  for (double v : p_y) max_dev = std::max(max_dev, std::abs(v - 1.0 / p_y.size()));
  require(max_dev > 1e-9, Err::PreconditionViolation,
          "misspecification study needs a non-uniform class prior");

  ExperimentConfig cfg = cfg_in;
  cfg.methods = {"erm", "reweight", "dbcm-known"};
  const ExperimentResult res = run_experiment(cfg);

  MisspecReport rep;
  rep.aggregates = res.aggregates;
  rep.erm_avg = res.aggregates[0].avg_mean;
  rep.reweight_avg = res.aggregates[1].avg_mean;
  rep.dbcm_avg = res.aggregates[2].avg_mean;
  rep.reweight_at_most_erm = rep.reweight_avg <= rep.erm_avg;
  rep.dbcm_at_least_erm = rep.dbcm_avg >= rep.erm_avg;
  rep.pass = rep.reweight_at_most_erm && rep.dbcm_at_least_erm;
  return rep;
}

// ---------------------------------------------------------------------------
// Report files

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<MethodAggregate>& aggs, bool with_timing) {
  std::ostringstream out;
  out << "method,avg_mean,avg_std,worst_mean,worst_std,seconds\n";
  for (const MethodAggregate& a : aggs) {
    out << a.method << ',' << format_double(a.avg_mean) << ',' << format_double(a.avg_std)
        << ',' << format_double(a.worst_mean) << ',' << format_double(a.worst_std) << ','
        << format_double(with_timing ? a.seconds : 0.0) << '\n';
  }
  write_file(path, out.str());
}

inline void write_runs_json(const std::filesystem::path& path, const ExperimentResult& res,
                            bool with_timing) {
  json runs = json::array();
  for (const RunOutcome& run : res.runs) {
    json r;
    r["method"] = run.record.method;
    r["seed"] = run.record.seed;
    r["seconds"] = with_timing ? run.record.wall_seconds : 0.0;
    r["config"] = json::parse(run.record.config_echo);
    json metrics = json::object();
    for (const auto& [role, m] : run.metrics) metrics[role] = metrics_to_json(m);
    r["metrics"] = metrics;
    runs.push_back(r);
  }
  write_file(path, runs.dump(2) + "\n");
}

inline void write_plotdata_csv(const std::filesystem::path& path,
                               const std::vector<MethodAggregate>& aggs) {
  std::ostringstream out;
  out << "method,metric,value\n";
  for (const MethodAggregate& a : aggs) {
    out << a.method << ",avg_mean," << format_double(a.avg_mean) << '\n';
    out << a.method << ",avg_std," << format_double(a.avg_std) << '\n';
    out << a.method << ",worst_mean," << format_double(a.worst_mean) << '\n';
    out << a.method << ",worst_std," << format_double(a.worst_std) << '\n';
  }
  write_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Assertion expressions over aggregates, e.g.
//   "dbcm-known.worst_mean - erm.worst_mean >= 0.20"

namespace detail {

inline double aggregate_field(const std::vector<MethodAggregate>& aggs,
                              const std::string& method, const std::string& field) {
  for (const MethodAggregate& a : aggs) {
    if (a.method != method) continue;
    if (field == "avg_mean") return a.avg_mean;
    if (field == "avg_std") return a.avg_std;
    if (field == "worst_mean") return a.worst_mean;
    if (field == "worst_std") return a.worst_std;
    fail(Err::BadConfig, "unknown aggregate field '" + field + "'");
  }
  fail(Err::BadConfig, "assert references unknown method '" + method + "'");
}

inline double assert_operand(const std::vector<MethodAggregate>& aggs,
                             const std::string& token) {
  const std::size_t dot = token.find('.');
  if (dot == std::string::npos) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    require(end != token.c_str() && *end == '\0', Err::BadConfig,
            "malformed assert operand '" + token + "'");
    return v;
  }
  return aggregate_field(aggs, token.substr(0, dot), token.substr(dot + 1));
}

}  // namespace detail

/// Evaluates one whitespace-separated comparison over aggregate fields.
/// Grammar: operand (('+'|'-') operand)* cmp operand..., cmp in
/// {>=, <=, >, <, ==}.
inline bool eval_assert_expression(const std::vector<MethodAggregate>& aggs,
                                   const std::string& expr) {
  std::vector<std::string> tokens;
  std::istringstream in(expr);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  require(tokens.size() >= 3, Err::BadConfig, "malformed assert expression '" + expr + "'");

  std::size_t cmp_pos = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == ">=" || tokens[i] == "<=" || tokens[i] == ">" || tokens[i] == "<" ||
        tokens[i] == "==") {
      cmp_pos = i;
      break;
    }
  }
  require(cmp_pos != tokens.size() && cmp_pos > 0 && cmp_pos + 1 < tokens.size(),
          Err::BadConfig, "assert expression needs a comparison: '" + expr + "'");

  auto eval_side = [&](std::size_t lo, std::size_t hi) {
    double value = detail::assert_operand(aggs, tokens[lo]);
    std::size_t i = lo + 1;
    while (i < hi) {
      require(i + 1 < hi && (tokens[i] == "+" || tokens[i] == "-"), Err::BadConfig,
              "malformed assert expression '" + expr + "'");
      const double rhs = detail::assert_operand(aggs, tokens[i + 1]);
      value = tokens[i] == "+" ? value + rhs : value - rhs;
      i += 2;
    }
    return value;
  };

  const double lhs = eval_side(0, cmp_pos);
  const double rhs = eval_side(cmp_pos + 1, tokens.size());
  const std::string& op = tokens[cmp_pos];
  if (op == ">=") return lhs >= rhs;
  if (op == "<=") return lhs <= rhs;
  if (op == ">") return lhs > rhs;
  if (op == "<") return lhs < rhs;
  return lhs == rhs;
}

}  // namespace dba
