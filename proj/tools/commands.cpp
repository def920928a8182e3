#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "beaq/acquisition.hpp"
#include "beaq/active_loop.hpp"
#include "beaq/beta_model.hpp"
#include "beaq/error.hpp"
#include "beaq/io.hpp"
#include "beaq/moons.hpp"
#include "beaq/oracle.hpp"
#include "beaq/random.hpp"
#include "checks.hpp"

namespace beaq::tools {
namespace {

namespace fs = std::filesystem;

struct MeasureFlags {
  std::string measure = "balentacq";
  std::string priority = "P2";
  int precision_case = 1;
  std::string power_bald_source = "mc";
  std::string mjent_form = "standard";
  double mean_eps = ClampConfig{}.mean_eps;
  double variance_eps = ClampConfig{}.variance_eps;

  void attach(CLI::App* cmd) {
    cmd->add_option("--measure", measure, "Acquisition measure")->capture_default_str();
    cmd->add_option("--priority", priority, "BalEntAcq prioritization: P1, P2 or P3")->capture_default_str();
    cmd->add_option("--precision-case", precision_case, "BalEnt precision offset k in [-1, 3]")
        ->capture_default_str();
    cmd->add_option("--power-bald-source", power_bald_source, "mc or beta")->capture_default_str();
    cmd->add_option("--mjent-form", mjent_form, "standard or printed")->capture_default_str();
    cmd->add_option("--mean-eps", mean_eps, "Mean clamp")->capture_default_str();
    cmd->add_option("--variance-eps", variance_eps, "Variance floor")->capture_default_str();
  }

  ScoreOptions options() const {
    ScoreOptions o;
    o.balent.priority = parse_priority(priority);
    o.balent.precision_case = precision_case;
    if (power_bald_source == "mc") {
      o.power_bald_source = PowerBaldSource::kMonteCarlo;
    } else if (power_bald_source == "beta") {
      o.power_bald_source = PowerBaldSource::kBetaMarginal;
    } else {
      throw ConfigError("--power-bald-source must be mc or beta");
    }
    if (mjent_form == "standard") {
      o.mjent_form = MjentForm::kStandard;
    } else if (mjent_form == "printed") {
      o.mjent_form = MjentForm::kPrintedSign;
    } else {
      throw ConfigError("--mjent-form must be standard or printed");
    }
    o.clamp.mean_eps = mean_eps;
    o.clamp.variance_eps = variance_eps;
    return o;
  }
};

SampleTensor load_samples(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return io::import_tensor_csv(path);
  return io::read_tensor(path);
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_atomic(path, text);
  }
}

std::vector<Measure> parse_measures(const std::vector<std::string>& names) {
  std::vector<Measure> out;
  for (const auto& n : names) out.push_back(parse_measure(n));
  return out;
}

oracle::PoolKind parse_kind(const std::string& kind) {
  if (kind == "dirichlet") return oracle::PoolKind::kDirichlet;
  if (kind == "softmax_gaussian" || kind == "softmax") return oracle::PoolKind::kSoftmaxGaussian;
  throw ConfigError("unknown pool kind '" + kind + "' (dirichlet or softmax_gaussian)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- simulate ---------------------------------------------------------------

const std::vector<std::string> kSimulateKeys = {
    "mode",           "measures",       "grid_measure",  "priority",      "precision_case",
    "pool_per_class", "pool_noise_sd",  "test_per_class", "initial_labeled", "k_per_iter",
    "iterations",     "m_draws",        "repeats",       "epochs",        "batch_size",
    "learning_rate",  "seed",           "grid_nx",       "grid_ny",       "grid_x_min",
    "grid_x_max",     "grid_y_min",     "grid_y_max",    "grid_train_per_class",
    "grid_noise_sd",  "model_in",
};

std::size_t get_size(const io::RunConfig& cfg, std::string_view key, std::size_t fallback) {
  const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("config key '" + std::string(key) + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool seed_given, std::uint64_t cli_seed, std::size_t workers,
                 std::ostream& out) {
  std::vector<std::string_view> allowed(kSimulateKeys.begin(), kSimulateKeys.end());
  const auto cfg = io::RunConfig::load(config_path, allowed);

  const std::string mode = cfg.get_string("mode", "both");
  if (mode != "curve" && mode != "grid" && mode != "both") {
    throw ConfigError("mode must be curve, grid or both");
  }
  sim::ExperimentConfig exp;
  exp.pool_per_class = get_size(cfg, "pool_per_class", exp.pool_per_class);
  exp.pool_noise_sd = cfg.get_double("pool_noise_sd", exp.pool_noise_sd);
  exp.test_per_class = get_size(cfg, "test_per_class", exp.test_per_class);
  exp.initial_labeled = get_size(cfg, "initial_labeled", exp.initial_labeled);
  exp.k_per_iter = get_size(cfg, "k_per_iter", exp.k_per_iter);
  exp.iterations = get_size(cfg, "iterations", exp.iterations);
  exp.m_draws = get_size(cfg, "m_draws", exp.m_draws);
  exp.repeats = get_size(cfg, "repeats", exp.repeats);
  exp.train.epochs = get_size(cfg, "epochs", exp.train.epochs);
  exp.train.batch_size = get_size(cfg, "batch_size", exp.train.batch_size);
  exp.train.learning_rate = cfg.get_double("learning_rate", exp.train.learning_rate);
  exp.options.balent.priority = parse_priority(cfg.get_string("priority", "P2"));
  exp.options.balent.precision_case = static_cast<int>(cfg.get_int("precision_case", 1));
  exp.seed = seed_given ? cli_seed : cfg.get_u64("seed", 0);
  exp.workers = workers;
  const auto measures = parse_measures(split_list(cfg.get_string("measures", "random,balentacq")));
  const Measure grid_measure = parse_measure(cfg.get_string("grid_measure", "balentacq"));

  sim::GridSpec grid;
  grid.nx = get_size(cfg, "grid_nx", grid.nx);
  grid.ny = get_size(cfg, "grid_ny", grid.ny);
  grid.x_min = cfg.get_double("grid_x_min", grid.x_min);
  grid.x_max = cfg.get_double("grid_x_max", grid.x_max);
  grid.y_min = cfg.get_double("grid_y_min", grid.y_min);
  grid.y_max = cfg.get_double("grid_y_max", grid.y_max);
  const std::size_t grid_train = get_size(cfg, "grid_train_per_class", 100);
  const double grid_noise = cfg.get_double("grid_noise_sd", 0.1);
  const std::string model_in = cfg.get_string("model_in", "");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  std::ostringstream echo;
  echo << "# resolved simulate config\n"
       << "mode = " << mode << "\n"
       << "measures = ";
  for (std::size_t i = 0; i < measures.size(); ++i) echo << (i ? "," : "") << measure_name(measures[i]);
  echo << "\ngrid_measure = " << measure_name(grid_measure) << "\n"
       << "priority = " << priority_name(exp.options.balent.priority) << "\n"
       << "precision_case = " << exp.options.balent.precision_case << "\n"
       << "pool_per_class = " << exp.pool_per_class << "\n"
       << "pool_noise_sd = " << io::format_double(exp.pool_noise_sd) << "\n"
       << "test_per_class = " << exp.test_per_class << "\n"
       << "initial_labeled = " << exp.initial_labeled << "\n"
       << "k_per_iter = " << exp.k_per_iter << "\n"
       << "iterations = " << exp.iterations << "\n"
       << "m_draws = " << exp.m_draws << "\n"
       << "repeats = " << exp.repeats << "\n"
       << "epochs = " << exp.train.epochs << "\n"
       << "batch_size = " << exp.train.batch_size << "\n"
       << "learning_rate = " << io::format_double(exp.train.learning_rate) << "\n"
       << "seed = " << exp.seed << "\n"
       << "grid_nx = " << grid.nx << "\n"
       << "grid_ny = " << grid.ny << "\n"
       << "grid_x_min = " << io::format_double(grid.x_min) << "\n"
       << "grid_x_max = " << io::format_double(grid.x_max) << "\n"
       << "grid_y_min = " << io::format_double(grid.y_min) << "\n"
       << "grid_y_max = " << io::format_double(grid.y_max) << "\n"
       << "grid_train_per_class = " << grid_train << "\n"
       << "grid_noise_sd = " << io::format_double(grid_noise) << "\n";
  if (!model_in.empty()) echo << "model_in = " << model_in << "\n";
  io::write_atomic(dir / "config.txt", echo.str());

  if (mode != "grid") {
    const auto rows = sim::run_experiment(exp, measures);
    io::write_atomic(dir / "curve.csv", sim::curve_csv(rows));
    for (Measure m : measures) {
      out << "final accuracy " << measure_name(m) << ": " << sim::final_accuracy(rows, m) << "\n";
    }
  }
  if (mode != "curve") {
    sim::MlpModel model;
    if (!model_in.empty()) {
      model = sim::load_model(model_in);
    } else {
      const auto data = sim::make_moons3(grid_train, grid_noise, stream_id({exp.seed, tag(StreamTag::kMoons)}));
      model = sim::MlpModel::initialize(stream_id({exp.seed, tag(StreamTag::kInit)}));
      auto train_cfg = exp.train;
      train_cfg.seed = stream_id({exp.seed, tag(StreamTag::kShuffle)});
      const auto report = sim::train(model, data.points, data.labels, train_cfg);
      out << "grid model loss " << report.initial_loss << " -> " << report.final_loss << "\n";
    }
    sim::save_model(dir / "model.bin", model);
    const auto scores = sim::grid_scores(model, grid, grid_measure, exp.options, exp.m_draws,
                                         stream_id({exp.seed, tag(StreamTag::kDropout)}), workers);
    io::write_atomic(dir / "grid.csv", sim::grid_csv(scores));
  }
  out << "wrote " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& simulate_config_keys() { return kSimulateKeys; }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"beaq: Beta-marginal acquisition scores for Bayesian active learning", "beaq"};
  app.require_subcommand(1);
  // Global flags are also accepted after the subcommand name.
  app.fallthrough();
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for every random stream");
  app.add_option("--workers", workers, "Worker threads (default: BEAQ_WORKERS, else all cores)");

  // score
  auto* score = app.add_subcommand("score", "Score every point of a sample tensor");
  std::string score_in, score_out;
  MeasureFlags score_flags;
  score->add_option("--input", score_in, "Tensor file (.bin) or long CSV (.csv)")->required();
  score->add_option("--output", score_out, "CSV destination (default stdout)");
  score_flags.attach(score);

  // fit-beta
  auto* fit = app.add_subcommand("fit-beta", "Dump moment-matched Beta marginals");
  std::string fit_in, fit_out;
  fit->add_option("--input", fit_in, "Tensor file or CSV")->required();
  fit->add_option("--output", fit_out, "CSV destination (default stdout)");

  // select
  auto* select = app.add_subcommand("select", "Pick the next top-K batch and update a pool state");
  std::string sel_scores, sel_input, sel_state, sel_out;
  std::size_t sel_k = 0;
  std::optional<std::size_t> sel_k_total;
  MeasureFlags sel_flags;
  auto* sel_scores_opt = select->add_option("--scores", sel_scores, "index,score CSV over the whole pool");
  auto* sel_input_opt =
      select->add_option("--input", sel_input, "Tensor over the current unlabeled points, in state order");
  sel_scores_opt->excludes(sel_input_opt);
  select->add_option("--k", sel_k, "Batch size K")->required();
  select->add_option("--k-total", sel_k_total, "Stop once this many points are labeled");
  select->add_option("--state", sel_state, "Pool state JSON (created if missing)")->required();
  select->add_option("--output", sel_out, "Selection CSV (default stdout)");
  sel_flags.attach(select);

  // rankcorr
  auto* rankcorr = app.add_subcommand("rankcorr", "Spearman rank correlations on synthetic pools");
  std::vector<std::size_t> rc_classes{10, 100, 1000};
  std::vector<std::string> rc_measures{"beta_marginal_bald", "mc_bald", "expected_effective_loss"};
  oracle::SyntheticPoolSpec rc_spec;
  std::size_t rc_repeats = 10;
  std::string rc_kind = "softmax_gaussian", rc_out;
  rankcorr->add_option("--classes", rc_classes, "Class counts")->delimiter(',')->capture_default_str();
  rankcorr->add_option("--measures", rc_measures, "Measures to correlate")->delimiter(',')->capture_default_str();
  rankcorr->add_option("--points", rc_spec.n_points, "Points per pool")->capture_default_str();
  rankcorr->add_option("--draws", rc_spec.n_draws, "MC draws per point")->capture_default_str();
  rankcorr->add_option("--repeats", rc_repeats, "Independent pools")->capture_default_str();
  rankcorr->add_option("--kind", rc_kind, "softmax_gaussian or dirichlet")->capture_default_str();
  rankcorr->add_option("--mean-sd", rc_spec.logit_mean_sd, "Per-point logit scale")->capture_default_str();
  rankcorr->add_option("--noise-sd", rc_spec.logit_noise_sd, "Per-draw logit noise")->capture_default_str();
  rankcorr->add_option("--output", rc_out, "CSV destination (default stdout)");

  // rmse
  auto* rmse = app.add_subcommand("rmse", "RMSE between MC BALD and the Beta-marginal closed form");
  std::vector<std::size_t> rm_classes{10, 100};
  oracle::SyntheticPoolSpec rm_spec;
  rm_spec.n_draws = 10000;
  std::size_t rm_repeats = 3;
  std::string rm_kind = "dirichlet", rm_out;
  rmse->add_option("--classes", rm_classes, "Class counts")->delimiter(',')->capture_default_str();
  rmse->add_option("--points", rm_spec.n_points, "Points per pool")->capture_default_str();
  rmse->add_option("--draws", rm_spec.n_draws, "MC draws per point")->capture_default_str();
  rmse->add_option("--repeats", rm_repeats, "Independent pools")->capture_default_str();
  rmse->add_option("--kind", rm_kind, "dirichlet or softmax_gaussian")->capture_default_str();
  rmse->add_option("--mean-sd", rm_spec.logit_mean_sd, "Per-point logit scale")->capture_default_str();
  rmse->add_option("--noise-sd", rm_spec.logit_noise_sd, "Per-draw logit noise")->capture_default_str();
  rmse->add_option("--output", rm_out, "CSV destination (default stdout)");

  // oracle-check
  auto* check = app.add_subcommand("oracle-check", "Closed forms against quadrature and Monte-Carlo oracles");
  bool inject_fault = false;
  check->add_flag("--inject-digamma-fault", inject_fault,
                  "Perturb digamma inside the closed forms (the run must then fail)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Three-moons active-learning run and grid maps");
  std::string sim_config, sim_dir;
  simulate->add_option("--config", sim_config, "key = value config file")->required();
  simulate->add_option("--out-dir", sim_dir, "Output directory")->required();

  // gen-pool
  auto* gen = app.add_subcommand("gen-pool", "Write a synthetic pool as a tensor file");
  oracle::SyntheticPoolSpec gen_spec;
  std::string gen_kind = "softmax_gaussian", gen_out;
  std::uint64_t gen_repeat = 0;
  gen->add_option("--kind", gen_kind, "softmax_gaussian or dirichlet")->capture_default_str();
  gen->add_option("--points", gen_spec.n_points, "Points")->capture_default_str();
  gen->add_option("--draws", gen_spec.n_draws, "Draws per point")->capture_default_str();
  gen->add_option("--classes", gen_spec.n_classes, "Classes")->capture_default_str();
  gen->add_option("--repeat", gen_repeat, "Repeat index")->capture_default_str();
  gen->add_option("--output", gen_out, "Tensor file")->required();

  // import-csv
  auto* import = app.add_subcommand("import-csv", "Convert a long CSV (point,draw,class,probability) to a tensor file");
  std::string imp_in, imp_out;
  import->add_option("--input", imp_in, "CSV file")->required();
  import->add_option("--output", imp_out, "Tensor file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  const bool seed_given = seed_opt->count() > 0;

  try {
    if (*score) {
      const auto samples = load_samples(score_in);
      const auto scores =
          score_pool(samples, parse_measure(score_flags.measure), score_flags.options(), seed, workers);
      emit(score_out, io::scores_csv(scores.score), out);
      return kExitOk;
    }
    if (*fit) {
      const auto samples = load_samples(fit_in);
      emit(fit_out, io::marginals_csv(fit_pool(samples, {}, workers)), out);
      return kExitOk;
    }
    if (*select) {
      if (sel_scores.empty() && sel_input.empty()) throw ConfigError("select needs --scores or --input");
      std::optional<PoolState> state;
      if (fs::exists(sel_state)) state = io::decode_pool_state(io::read_file(sel_state));

      LoopConfig loop;
      loop.k_per_iter = sel_k;
      loop.measure = parse_measure(sel_flags.measure);
      loop.options = sel_flags.options();
      loop.seed = seed;
      loop.workers = workers;

      std::vector<std::size_t> selected;
      std::vector<double> pool_scores;
      if (!sel_scores.empty()) {
        std::ifstream in(sel_scores);
        if (!in) throw DataError("cannot open " + sel_scores);
        pool_scores = io::parse_scores_csv(in);
        if (!state) state.emplace(pool_scores.size());
        loop.k_total = sel_k_total.value_or(state->n_total());
        validate(loop);
        if (state->labeled().size() >= loop.k_total) {
          err << "budget exhausted: " << state->labeled().size() << " of " << loop.k_total << " labeled\n";
        } else {
          const std::size_t k = std::min(sel_k, loop.k_total - state->labeled().size());
          selected = select_topk(pool_scores, *state, k);
          HistoryEntry entry{state->history().size(), loop.measure, seed, selected, {}};
          for (std::size_t idx : selected) entry.scores.push_back(pool_scores[idx]);
          state->commit(std::move(entry));
        }
      } else {
        const auto samples = load_samples(sel_input);
        if (!state) state.emplace(samples.n_points());
        loop.k_total = sel_k_total.value_or(state->n_total());
        const auto step = loop_step(*state, samples, loop);
        if (step.terminal) {
          err << "budget exhausted: " << state->labeled().size() << " of " << loop.k_total << " labeled\n";
        }
        selected = step.selected;
        pool_scores = step.scores;
      }
      io::write_atomic(sel_state, io::encode_pool_state(*state));
      emit(sel_out, io::selection_csv(selected, pool_scores), out);
      return kExitOk;
    }
    if (*rankcorr) {
      rc_spec.kind = parse_kind(rc_kind);
      rc_spec.seed = seed;
      const auto measures = parse_measures(rc_measures);
      std::vector<oracle::CorrelationReport> reports;
      for (std::size_t c : rc_classes) {
        rc_spec.n_classes = c;
        reports.push_back(oracle::rank_correlation_study(rc_spec, measures, rc_repeats, {}, workers));
      }
      emit(rc_out, io::correlation_csv(reports), out);
      return kExitOk;
    }
    if (*rmse) {
      rm_spec.kind = parse_kind(rm_kind);
      rm_spec.seed = seed;
      std::vector<io::RmseRow> rows;
      for (std::size_t c : rm_classes) {
        rm_spec.n_classes = c;
        rows.push_back({c, rm_spec.n_draws, oracle::rmse_study(rm_spec, rm_repeats, {}, workers)});
      }
      emit(rm_out, io::rmse_csv(rows), out);
      return kExitOk;
    }
    if (*check) {
      BatteryOptions options;
      options.seed = seed;
      options.workers = workers;
      if (inject_fault) options.digamma = &perturbed_digamma;
      bool ok = true;
      for (const auto& r : run_oracle_battery(options)) {
        out << format_check(r) << "\n";
        ok = ok && (r.passed || r.informational);
      }
      out << (ok ? "all checks passed" : "some checks FAILED") << "\n";
      return ok ? kExitOk : kExitCheckFailed;
    }
    if (*simulate) return cmd_simulate(sim_config, sim_dir, seed_given, seed, workers, out);
    if (*gen) {
      gen_spec.kind = parse_kind(gen_kind);
      gen_spec.seed = seed;
      io::write_tensor(gen_out, oracle::generate_pool(gen_spec, gen_repeat));
      return kExitOk;
    }
    if (*import) {
      io::write_tensor(imp_out, io::import_tensor_csv(imp_in));
      return kExitOk;
    }
  } catch (const DegenerateDenominatorError& e) {
    // The precision case is the caller's choice; pick another one.
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BudgetError& e) {
    err << "budget error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace beaq::tools
