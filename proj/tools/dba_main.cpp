// Command-line surface for the dataset-bias toolkit: dataset generation,
// posterior estimation, weighted training, evaluation, exact-enumeration
// checks, and full experiment runs.
//
// Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 failed
// check or assertion.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dba/dba.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheckFailed = 3;

bool g_quiet = false;

void diag(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << '\n';
}

int exit_code_for(const dba::Error& e) {
  switch (e.kind()) {
    case dba::Err::IoError:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

dba::Dataset generate_from_spec(const dba::GenSpecFile& spec, std::size_t n,
                                dba::DatasetRole role, std::uint64_t seed, bool seed_given) {
  dba::Dataset ds;
  if (spec.family == "discrete") {
    ds = dba::gen_discrete(spec.discrete, n, role, seed, seed_given);
  } else if (spec.family == "gaussian") {
    ds = dba::gen_gaussian(spec.gaussian, n, role, seed, seed_given);
  } else {
    dba::fail(dba::Err::BadConfig, "spec family '" + spec.family + "' cannot generate data");
  }
  ds.spec_digest = spec.digest;
  return ds;
}

// ---------------------------------------------------------------------------

int cmd_gen(const std::string& spec_path, std::size_t n, const std::string& role_name,
            std::uint64_t seed, bool seed_given, const std::string& out_path) {
  const auto spec = dba::load_spec_file(spec_path);
  const dba::DatasetRole role = dba::role_from_name(role_name);
  const dba::Dataset ds = generate_from_spec(spec, n, role, seed, seed_given);
  dba::write_dataset(ds, out_path);

  dba::json report;
  report["n"] = ds.size();
  report["role"] = role_name;
  report["seed"] = ds.seed;
  report["path"] = out_path;
  std::cout << report.dump() << '\n';
  return kExitOk;
}

int cmd_estimate(const std::string& regime_name, const std::string& train_path,
                 const std::string& val_path, double tau, int epochs, double lr, int hidden,
                 const std::string& out_path) {
  dba::EstimatorConfig cfg;
  cfg.regime = dba::regime_from_name(regime_name);
  cfg.tau = tau;
  cfg.overfit_epochs = epochs;
  cfg.learning_rate = lr;
  cfg.hidden = hidden;

  const dba::Dataset train = dba::read_dataset(train_path);
  dba::SpuriousPosteriorVector rho;
  switch (cfg.regime) {
    case dba::EstimatorRegime::KnownS:
      rho = dba::estimate_known_s(train, cfg);
      break;
    case dba::EstimatorRegime::SameDistVal: {
      dba::require(!val_path.empty(), dba::Err::BadConfig,
                   "--val is required for the 'same' regime");
      const dba::Dataset val = dba::read_dataset(val_path);
      rho = dba::estimate_same_dist(train, val, cfg);
      break;
    }
    case dba::EstimatorRegime::DiffDistVal:
      rho = dba::estimate_diff_dist(train, cfg);
      break;
  }
  dba::write_column_csv(out_path, "rho", rho.values);
  diag("wrote " + std::to_string(rho.size()) + " posterior values to " + out_path);
  return kExitOk;
}

struct TrainFileConfig {
  dba::TrainConfig train;
  dba::EstimatorConfig estimator;
  double p_m0 = 0.85;
  bool self_normalize = false;
};

TrainFileConfig load_train_config(const std::string& path) {
  TrainFileConfig cfg;
  if (path.empty()) return cfg;
  const dba::json j = dba::parse_json_file(path);
  cfg.train.lr = j.value("lr", cfg.train.lr);
  cfg.train.epochs = j.value("epochs", cfg.train.epochs);
  cfg.train.batch = j.value("batch", cfg.train.batch);
  cfg.train.hidden = j.value("hidden", cfg.train.hidden);
  cfg.train.weight_decay = j.value("weight_decay", cfg.train.weight_decay);
  cfg.train.seed = j.value("seed", cfg.train.seed);
  cfg.estimator.tau = j.value("tau", cfg.estimator.tau);
  cfg.estimator.overfit_epochs = j.value("overfit_epochs", cfg.estimator.overfit_epochs);
  cfg.estimator.learning_rate = j.value("overfit_lr", cfg.estimator.learning_rate);
  cfg.estimator.hidden = j.value("overfit_hidden", cfg.estimator.hidden);
  cfg.p_m0 = j.value("p_m0", cfg.p_m0);
  cfg.self_normalize = j.value("self_normalize", cfg.self_normalize);
  cfg.train.validate();
  cfg.estimator.validate();
  return cfg;
}

int cmd_train(const std::string& method, const std::string& train_path,
              const std::string& val_path, const std::string& config_path,
              std::uint64_t seed, bool seed_given, const std::string& out_path,
              const std::string& weights_out) {
  TrainFileConfig file_cfg = load_train_config(config_path);
  if (seed_given) file_cfg.train.seed = seed;

  dba::Dataset train = dba::read_dataset(train_path);
  dba::Dataset val;
  const bool has_val = !val_path.empty();
  if (has_val) val = dba::read_dataset(val_path);

  dba::ExperimentConfig ecfg;  // reuse the method dispatch of the protocol
  ecfg.p_m0 = file_cfg.p_m0;
  ecfg.tau = file_cfg.estimator.tau;
  ecfg.train = file_cfg.train;
  ecfg.estimator = file_cfg.estimator;

  if (method == "dbcm-same")
    dba::require(has_val, dba::Err::BadConfig, "--val is required for dbcm-same");

  dba::Dataset train_used;
  dba::WeightVector w =
      dba::method_weights(method, train, val, ecfg, train_used, file_cfg.train.seed);
  if (file_cfg.self_normalize) w = dba::self_normalized(w);

  const dba::FitResult fit = dba::fit_weighted(train_used, w, file_cfg.train);
  dba::SoftmaxModel model = fit.model;
  if (has_val) model = dba::select_model(fit.checkpoints, val, nullptr);

  dba::write_model(model, out_path);
  if (!weights_out.empty()) dba::write_column_csv(weights_out, "g", w.values);

  diag("trained '" + method + "' on " + std::to_string(train_used.size()) + " samples");
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
  const dba::SoftmaxModel model = dba::read_model(model_path);
  const dba::Dataset data = dba::read_dataset(data_path);
  const dba::Metrics m = dba::accuracy_metrics(model, data);
  const dba::json j = dba::metrics_to_json(m);
  if (!out_path.empty()) dba::write_file(out_path, j.dump(2) + "\n");
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_oracle(const std::string& spec_path, const std::string& check, double tol,
               int trials, std::uint64_t seed, int random_count,
               const std::string& variant) {
  const dba::WeightForm form =
      variant == "maintext" ? dba::WeightForm::MainText : dba::WeightForm::Corrected;
  dba::require(variant == "corrected" || variant == "maintext", dba::Err::BadConfig,
               "--variant must be 'corrected' or 'maintext'");

  double max_rel_err = 0.0;
  double max_identity_err = 0.0;
  bool pass = true;
  int ran = 0;

  auto fold = [&](const dba::CheckReport& rep) {
    max_rel_err = std::max(max_rel_err, rep.max_rel_err);
    max_identity_err = std::max(max_identity_err, rep.max_identity_err);
    pass = pass && rep.pass;
    ++ran;
  };

  auto load_discrete = [&] {
    dba::require(!spec_path.empty(), dba::Err::BadConfig, "--spec or --random is required");
    const auto spec = dba::load_spec_file(spec_path);
    dba::require(spec.family == "discrete", dba::Err::BadConfig,
                 "check '" + check + "' needs a discrete spec");
    return spec.discrete;
  };

  if (check == "theorem1") {
    if (random_count > 0) {
      for (int t = 0; t < random_count; ++t)
        fold(dba::check_theorem1(dba::random_discrete_spec(seed + t), tol, form));
    } else {
      fold(dba::check_theorem1(load_discrete(), tol, form));
    }
  } else if (check == "theorem2") {
    if (random_count > 0) {
      for (int t = 0; t < random_count; ++t)
        fold(dba::check_theorem2(dba::random_attribute_only_spec(seed + t), tol));
    } else {
      fold(dba::check_theorem2(load_discrete(), tol));
    }
  } else if (check == "theorem3") {
    if (random_count > 0) {
      for (int t = 0; t < random_count; ++t)
        fold(dba::check_theorem3(dba::random_two_group_spec(seed + t), tol));
    } else {
      dba::require(!spec_path.empty(), dba::Err::BadConfig, "--spec or --random is required");
      const auto spec = dba::load_spec_file(spec_path);
      dba::require(spec.family == "two-group", dba::Err::BadConfig,
                   "check 'theorem3' needs a two-group spec");
      fold(dba::check_theorem3(spec.two_group, tol));
    }
  } else if (check == "is-identity") {
    auto run_identity = [&](const dba::DiscreteGenSpec& spec) {
      const auto p_tr = dba::exact_joint(spec, dba::DatasetRole::Train);
      const auto p_te = dba::exact_joint(spec, dba::DatasetRole::Test);
      const auto g = dba::exact_weight(spec);
      const double err = dba::identity_max_abs_err(p_tr, g, p_te, trials, seed);
      dba::CheckReport rep;
      rep.check = "is-identity";
      rep.max_rel_err = err;
      rep.pass = err <= tol;
      return rep;
    };
    if (random_count > 0) {
      for (int t = 0; t < random_count; ++t)
        fold(run_identity(dba::random_discrete_spec(seed + t)));
    } else {
      fold(run_identity(load_discrete()));
    }
  } else {
    dba::fail(dba::Err::BadConfig, "unknown check '" + check + "'");
  }

  dba::json report;
  report["check"] = check;
  report["variant"] = variant;
  report["trials"] = ran;
  report["max_rel_err"] = max_rel_err;
  report["max_identity_err"] = max_identity_err;
  report["pass"] = pass;
  std::cout << report.dump() << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir,
                   const std::string& study, bool with_timing) {
  const dba::ExperimentConfig cfg = dba::load_experiment_config(config_path);
  const std::filesystem::path out(out_dir);

  if (study == "misspec") {
    const dba::MisspecReport rep = dba::misspecification_study(cfg);
    dba::write_summary_csv(out / "summary.csv", rep.aggregates, with_timing);
    dba::write_plotdata_csv(out / "plotdata.csv", rep.aggregates);
    dba::json j;
    j["erm_avg"] = rep.erm_avg;
    j["reweight_avg"] = rep.reweight_avg;
    j["dbcm_avg"] = rep.dbcm_avg;
    j["reweight_at_most_erm"] = rep.reweight_at_most_erm;
    j["dbcm_at_least_erm"] = rep.dbcm_at_least_erm;
    j["pass"] = rep.pass;
    dba::write_file(out / "study.json", j.dump(2) + "\n");
    std::cout << j.dump() << '\n';
    return rep.pass ? kExitOk : kExitCheckFailed;
  }
  dba::require(study.empty(), dba::Err::BadConfig, "unknown study '" + study + "'");

  const dba::ExperimentResult res = dba::run_experiment(cfg);
  dba::write_summary_csv(out / "summary.csv", res.aggregates, with_timing);
  dba::write_runs_json(out / "runs.json", res, with_timing);
  dba::write_plotdata_csv(out / "plotdata.csv", res.aggregates);

  for (const dba::MethodAggregate& a : res.aggregates)
    diag(a.method + ": avg " + dba::format_double(a.avg_mean) + " worst " +
         dba::format_double(a.worst_mean) + " (" + dba::format_double(a.seconds) + "s/run)");

  bool all_pass = true;
  for (const std::string& expr : cfg.asserts) {
    const bool ok = dba::eval_assert_expression(res.aggregates, expr);
    diag(std::string(ok ? "assert ok: " : "assert FAILED: ") + expr);
    all_pass = all_pass && ok;
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataset bias analysis toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress diagnostics on stderr");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset from a spec file");
  std::string gen_spec, gen_role = "train", gen_out;
  std::size_t gen_n = 1000;
  auto* gen_seed_opt = gen->add_option("--seed", seed, "generator seed (default: spec seed)");
  gen->add_option("--spec", gen_spec, "spec JSON file")->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--role", gen_role, "train|val|test");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "estimate the spurious posterior");
  std::string est_regime, est_train, est_val, est_out;
  double est_tau = 1.0, est_lr = 0.1;
  int est_epochs = 500, est_hidden = 0;
  est->add_option("--regime", est_regime, "known|same|diff")->required();
  est->add_option("--train", est_train, "training dataset CSV")->required();
  est->add_option("--val", est_val, "validation dataset CSV (same regime)");
  est->add_option("--tau", est_tau, "temperature");
  est->add_option("--overfit-epochs", est_epochs, "epoch cap for the overfit stage");
  est->add_option("--overfit-lr", est_lr, "learning rate for the overfit stage");
  est->add_option("--overfit-hidden", est_hidden, "hidden width for the overfit models");
  est->add_option("--out", est_out, "output CSV (column 'rho')")->required();

  // train
  auto* train = app.add_subcommand("train", "train a weighted softmax model");
  std::string tr_method, tr_train, tr_val, tr_config, tr_out, tr_weights_out;
  auto* tr_seed_opt = train->add_option("--seed", seed, "training seed (overrides config)");
  train->add_option("--method", tr_method,
                    "erm|dbcm-known|dbcm-same|dbcm-diff|reweight|resample|logit-adjust")
      ->required();
  train->add_option("--train", tr_train, "training dataset CSV")->required();
  train->add_option("--val", tr_val, "validation dataset CSV");
  train->add_option("--config", tr_config, "training config JSON");
  train->add_option("--out", tr_out, "output model JSON")->required();
  train->add_option("--weights-out", tr_weights_out, "also write the sample weights (column 'g')");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a model on a dataset");
  std::string ev_model, ev_data, ev_out;
  ev->add_option("--model", ev_model, "model JSON")->required();
  ev->add_option("--data", ev_data, "dataset CSV")->required();
  ev->add_option("--out", ev_out, "also write metrics JSON to this path");

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact-enumeration checks of the closed forms");
  std::string orc_spec, orc_check, orc_variant = "corrected";
  double orc_tol = 1e-9;
  int orc_trials = 100, orc_random = 0;
  orc->add_option("--spec", orc_spec, "spec JSON file");
  orc->add_option("--check", orc_check, "theorem1|theorem2|theorem3|is-identity")->required();
  orc->add_option("--tol", orc_tol, "tolerance");
  orc->add_option("--trials", orc_trials, "test functions per identity check");
  orc->add_option("--random", orc_random, "run N randomized specs instead of --spec");
  orc->add_option("--variant", orc_variant, "corrected|maintext weight form");
  orc->add_option("--seed", seed, "seed for randomized specs and test functions");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a full method/seed protocol");
  std::string exp_config, exp_out = "out", exp_study;
  bool exp_timing = false;
  exp->add_option("--config", exp_config, "experiment config JSON")->required();
  exp->add_option("--out", exp_out, "output directory");
  exp->add_option("--study", exp_study, "optional named study: misspec");
  exp->add_flag("--timing", exp_timing,
                "write measured wall time into output files (off keeps reruns byte-identical)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  g_quiet = quiet;
  try {
    if (gen->parsed())
      return cmd_gen(gen_spec, gen_n, gen_role, seed, gen_seed_opt->count() > 0, gen_out);
    if (est->parsed())
      return cmd_estimate(est_regime, est_train, est_val, est_tau, est_epochs, est_lr,
                          est_hidden, est_out);
    if (train->parsed())
      return cmd_train(tr_method, tr_train, tr_val, tr_config, seed,
                       tr_seed_opt->count() > 0, tr_out, tr_weights_out);
    if (ev->parsed()) return cmd_eval(ev_model, ev_data, ev_out);
    if (orc->parsed())
      return cmd_oracle(orc_spec, orc_check, orc_tol, orc_trials, seed, orc_random,
                        orc_variant);
    if (exp->parsed()) return cmd_experiment(exp_config, exp_out, exp_study, exp_timing);
  } catch (const dba::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
