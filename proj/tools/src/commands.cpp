#include "sdrl_app/commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdrl/checkpoint.hpp"
#include "sdrl/fsa.hpp"
#include "sdrl/metrics.hpp"
#include "sdrl/policies.hpp"
#include "sdrl/rollout.hpp"
#include "sdrl/training.hpp"
#include "sdrl_app/run_config.hpp"

namespace sdrl::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scenario;
  std::string reward_mode;
  std::optional<double> disturb_surface;
  std::optional<double> disturb_object;
  std::optional<int> episodes;
  std::optional<long> steps;
  std::optional<int> eval_every;
  std::optional<int> eval_episodes;
  std::optional<int> workers;
  std::string policy;
  std::string checkpoint;
  std::string out;
  std::string run_name;
  std::string log;
  double safe_mass = 0.0;
};

std::string utc_stamp(bool compact) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, compact ? "%Y%m%dT%H%M%SZ" : "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    try {
      c = load_run_config(f.config);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.scenario.empty()) c.scenario = parse_scenario(f.scenario);
  if (!f.reward_mode.empty()) c.env.reward.mode = parse_reward_mode(f.reward_mode);
  if (f.steps) c.train_steps = *f.steps;
  if (f.eval_every) c.eval_every = *f.eval_every;
  if (f.eval_episodes) c.eval_episodes = *f.eval_episodes;
  if (f.workers) c.workers = *f.workers;
  if (!f.out.empty()) c.out_dir = f.out;
  c.validate();
  return c;
}

world::DisturbanceSpec disturbance_of(const Flags& f, world::DisturbanceSpec fallback) {
  if (f.disturb_surface) fallback.surface_height_delta = *f.disturb_surface;
  if (f.disturb_object) fallback.object_size_delta = *f.disturb_object;
  return fallback;
}

json to_json(const world::DisturbanceSpec& d) {
  return {{"surface_height_delta", d.surface_height_delta},
          {"object_size_delta", d.object_size_delta}};
}

std::string scenario_name(env::Scenario s) {
  return s == env::Scenario::Normal ? "normal" : "obstacle";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

/// Output naming for one command invocation: <out>/<cmd>-<timestamp>-s<seed>.<suffix>.
struct RunFiles {
  std::string name;
  fs::path stem;

  fs::path file(const std::string& suffix) const { return fs::path(stem.string() + suffix); }
};

RunFiles prepare_run(const RunConfig& c, const std::string& command, const std::string& run_name) {
  std::error_code ec;
  fs::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create " + c.out_dir.string() + ": " + ec.message());
  RunFiles r;
  if (!run_name.empty()) {
    r.name = run_name;
  } else {
    const std::string base = command + "-" + utc_stamp(true) + "-s" + std::to_string(c.seed);
    r.name = base;
    for (int k = 2; fs::exists(c.out_dir / (r.name + ".jsonl")) ||
                    fs::exists(c.out_dir / (r.name + ".meta.json"));
         ++k) {
      r.name = base + "-" + std::to_string(k);
    }
  }
  r.stem = c.out_dir / r.name;
  return r;
}

json run_meta(const std::string& command, const RunFiles& files, const RunConfig& c) {
  return {{"format", "sdrl-run"},
          {"command", command},
          {"run", files.name},
          {"created", utc_stamp(false)},
          {"seed", c.seed},
          {"log", files.name + ".jsonl"},
          {"reward", env::to_json(c.env.reward)},
          {"config", to_json(c)}};
}

json log_summary(const std::vector<env::StepRecord>& steps, double force_threshold) {
  if (steps.empty()) return nullptr;
  return metrics::to_json(metrics::summarize(metrics::episodes_from_steps(steps, force_threshold)));
}

std::unique_ptr<tqc::Policy> make_policy(const Flags& f, const RunConfig& c) {
  std::string kind = f.policy;
  if (kind.empty()) {
    if (f.checkpoint.empty()) throw UsageError("a --checkpoint or --policy scripted|random is required");
    kind = "checkpoint";
  }
  if (kind == "scripted") {
    tqc::ScriptedOptions o;
    o.action_scale = c.env.action_scale;
    return std::make_unique<tqc::ScriptedPolicy>(o);
  }
  if (kind == "random") return std::make_unique<tqc::RandomPolicy>(c.seed);
  if (f.checkpoint.empty()) throw UsageError("--policy checkpoint needs --checkpoint");
  if (!fs::exists(f.checkpoint)) throw UsageError("checkpoint not found: " + f.checkpoint);
  try {
    return std::make_unique<tqc::ActorPolicy>(tqc::ActorPolicy::from_checkpoint(f.checkpoint));
  } catch (const nn::CheckpointError& e) {
    throw UsageError(std::string("bad checkpoint: ") + e.what());
  }
}

void write_traces(const fs::path& path, const std::vector<EpisodeTrace>& traces,
                  std::vector<env::StepRecord>& all) {
  env::EpisodeLogWriter w(path);
  for (const auto& t : traces) {
    for (const auto& s : t.steps) {
      w.write(s);
      all.push_back(s);
    }
  }
}

json scenes_of(const std::vector<EpisodeTrace>& traces) {
  auto vec = [](const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); };
  json out = json::array();
  for (const auto& t : traces) {
    out.push_back({{"episode", t.episode},
                   {"seed", t.seed},
                   {"scenario", t.scenario == env::Scenario::Normal ? "normal" : "obstacle"},
                   {"table_height", t.scene.table_height},
                   {"cube", vec(t.scene.cube.center)},
                   {"obstacle", t.scene.obstacle ? vec(t.scene.obstacle->center) : json()}});
  }
  return out;
}

std::string summary_line(const metrics::Summary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "episodes %ld  success %.3f  safe success %.3f  avg return %.4f  collisions/ep %.3f",
                s.episodes, s.success_rate, s.safety_driven_success_rate, s.average_return_normalized,
                s.violations.collision);
  return buf;
}

// ---------------------------------------------------------------------------------------------

int cmd_train(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const RunFiles files = prepare_run(c, "train", f.run_name);

  TrainOptions o;
  o.total_steps = c.train_steps;
  o.eval_every_episodes = c.eval_every;
  o.eval_episodes = c.eval_episodes;
  o.scenario = c.scenario;
  o.seed = c.seed;
  o.eval_workers = c.workers;
  o.checkpoint_every_steps = c.checkpoint_every;

  json meta = run_meta("train", files, c);
  meta["checkpoint"] = files.name + ".ckpt";
  write_json(files.file(".meta.json"), meta);

  env::EpisodeLogWriter log(files.file(".jsonl"));
  std::ofstream diag(files.file(".diag.jsonl"));
  if (!diag) throw IoError("cannot write " + files.file(".diag.jsonl").string());
  std::vector<env::StepRecord> steps;

  TrainSinks sinks;
  sinks.on_step = [&](const env::StepRecord& r) {
    log.write(r);
    steps.push_back(r);
  };
  sinks.on_update = [&](const tqc::TrainDiagnostics& d) {
    diag << tqc::to_json(d).dump() << '\n';
  };
  sinks.on_eval = [&](const EvalPoint& p) {
    out << "eval after " << p.episode << " episodes (" << p.env_steps << " steps): "
        << summary_line(p.summary) << '\n';
  };
  sinks.on_checkpoint = [&](const tqc::TqcAgent& agent, long) { agent.save(files.file(".ckpt")); };

  const TrainResult r = train(c.env, c.tqc, o, sinks);
  diag.flush();
  if (!diag) throw IoError("cannot write " + files.file(".diag.jsonl").string());

  json evals = json::array();
  for (const auto& p : r.evaluations) {
    evals.push_back({{"episode", p.episode}, {"env_steps", p.env_steps},
                     {"summary", metrics::to_json(p.summary)}});
  }
  const json m = {
      {"command", "train"},
      {"seed", c.seed},
      {"scenario", scenario_name(c.scenario)},
      {"reward_mode", std::string(env::to_string(c.env.reward.mode))},
      {"total_steps", c.train_steps},
      {"env_steps", r.env_steps},
      {"episodes", r.episodes},
      {"updates", r.updates},
      {"training", metrics::to_json(r.training)},
      {"evaluations", evals},
      {"final_evaluation",
       {{"episode", r.final_evaluation.episode},
        {"env_steps", r.final_evaluation.env_steps},
        {"summary", metrics::to_json(r.final_evaluation.summary)}}}};
  write_json(files.file(".metrics.json"), m);

  meta["log_summary"] = log_summary(steps, c.env.reward.force_failure_threshold);
  write_json(files.file(".meta.json"), meta);

  out << "trained " << r.env_steps << " steps, " << r.episodes << " episodes, " << r.updates
      << " updates\nfinal: " << summary_line(r.final_evaluation.summary) << '\n'
      << "run " << files.stem.string() << '\n';
  return kOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  auto policy = make_policy(f, c);
  RolloutOptions o;
  o.episodes = f.episodes.value_or(20);
  if (o.episodes < 1) throw UsageError("--episodes must be positive");
  o.seed = c.seed;
  o.scenarios = {c.scenario};
  o.disturbance = disturbance_of(f, {});
  o.workers = c.workers;

  const auto traces = run_episodes(c.env, *policy, o);
  const RunFiles files = prepare_run(c, "evaluate", f.run_name);
  std::vector<env::StepRecord> steps;
  write_traces(files.file(".jsonl"), traces, steps);

  const auto summary = metrics::summarize(records_of(traces));
  write_json(files.file(".metrics.json"),
             {{"command", "evaluate"},
              {"policy", policy->name()},
              {"seed", c.seed},
              {"scenario", scenario_name(c.scenario)},
              {"reward_mode", std::string(env::to_string(c.env.reward.mode))},
              {"disturbance", to_json(o.disturbance)},
              {"summary", metrics::to_json(summary)}});
  json meta = run_meta("evaluate", files, c);
  meta["policy"] = policy->name();
  if (!f.checkpoint.empty()) meta["checkpoint"] = f.checkpoint;
  meta["disturbance"] = to_json(o.disturbance);
  meta["log_summary"] = log_summary(steps, c.env.reward.force_failure_threshold);
  meta["scenes"] = scenes_of(traces);
  write_json(files.file(".meta.json"), meta);

  out << policy->name() << ": " << summary_line(summary) << "\nrun " << files.stem.string() << '\n';
  return kOk;
}

int cmd_assess(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  if (f.safe_mass < 0.0 || f.safe_mass > 1.0) throw UsageError("--safe-mass must lie in [0, 1]");
  fsa::FsaReport report;
  json meta;
  RunFiles files;

  if (!f.log.empty()) {
    if (!fs::exists(f.log)) throw IoError("log not found: " + f.log);
    std::vector<env::StepRecord> steps;
    try {
      steps = env::read_episode_log(f.log);
    } catch (const env::LogParseError& e) {
      throw UsageError(f.log + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());
    }
    if (steps.empty()) throw UsageError("log is empty: " + f.log);
    double threshold = c.env.reward.force_failure_threshold;
    const fs::path meta_path = sidecar(f.log, ".meta.json");
    if (f.config.empty() && fs::exists(meta_path)) {
      const json m = read_json(meta_path);
      if (m.contains("reward")) {
        threshold = env::reward_config_from_json(m["reward"]).force_failure_threshold;
      }
    }
    const auto records = metrics::episodes_from_steps(steps, threshold);
    auto input = fsa::input_from_records(records, f.safe_mass);
    report = fsa::assess(input);
    files = prepare_run(c, "assess", f.run_name);
    meta = run_meta("assess", files, c);
    meta["source"] = {{"log", f.log}};
    meta.erase("log");
  } else {
    auto policy = make_policy(f, c);
    fsa::AssessmentOptions o;
    o.episodes = f.episodes.value_or(500);
    if (o.episodes < 1) throw UsageError("--episodes must be positive");
    if (!f.scenario.empty()) o.scenarios = {c.scenario};
    o.disturbance = disturbance_of(f, world::DisturbanceSpec::assessment_default());
    o.seed = c.seed;
    o.workers = c.workers;
    o.safe_state_probability_mass = f.safe_mass;
    const auto result = fsa::run_assessment(c.env, *policy, o);
    report = result.report;
    files = prepare_run(c, "assess", f.run_name);
    std::vector<env::StepRecord> steps;
    write_traces(files.file(".jsonl"), result.traces, steps);
    meta = run_meta("assess", files, c);
    meta["source"] = {{"policy", policy->name()}};
    if (!f.checkpoint.empty()) meta["source"]["checkpoint"] = f.checkpoint;
    meta["disturbance"] = to_json(o.disturbance);
    json scenarios = json::array();
    for (auto s : o.scenarios) scenarios.push_back(scenario_name(s));
    meta["scenarios"] = scenarios;
    meta["log_summary"] = log_summary(steps, c.env.reward.force_failure_threshold);
    meta["scenes"] = scenes_of(result.traces);
  }

  write_json(files.file(".fsa.json"), fsa::to_json(report));
  const std::string table = fsa::format_table(report);
  write_text(files.file(".fsa.txt"), table);
  write_json(files.file(".meta.json"), meta);
  out << table << "run " << files.stem.string() << '\n';
  return kOk;
}

int cmd_replay(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.log.empty()) throw UsageError("replay needs a log path");
  if (!fs::exists(f.log)) throw IoError("log not found: " + f.log);

  env::RewardConfig reward;
  json meta;
  const fs::path meta_path = sidecar(f.log, ".meta.json");
  if (fs::exists(meta_path)) {
    meta = read_json(meta_path);
    if (meta.contains("reward")) reward = env::reward_config_from_json(meta["reward"]);
  }
  if (!f.config.empty()) {
    Flags only_config;
    only_config.config = f.config;
    reward = resolve(only_config).env.reward;
  }
  if (!f.reward_mode.empty()) reward.mode = parse_reward_mode(f.reward_mode);

  std::vector<env::StepRecord> records;
  try {
    records = env::read_episode_log(f.log);
  } catch (const env::LogParseError& e) {
    err << "replay: " << f.log << ": unreadable record at " << e.what() << '\n';
    return kAuditFailure;
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  if (records.empty()) throw UsageError("log is empty: " + f.log);

  if (const auto d = audit_log(records, reward)) {
    err << "replay: " << f.log << ": divergence at line " << d->line << ": " << d->message << '\n';
    return kAuditFailure;
  }
  if (meta.contains("log_summary") && !meta["log_summary"].is_null()) {
    const json again = log_summary(records, reward.force_failure_threshold);
    if (again != meta["log_summary"]) {
      for (const auto& [key, value] : again.items()) {
        if (!meta["log_summary"].contains(key) || meta["log_summary"][key] != value) {
          err << "replay: " << f.log << ": summary field '" << key << "' recomputes to "
              << value.dump() << ", logged " << meta["log_summary"].value(key, json()).dump() << '\n';
          return kAuditFailure;
        }
      }
      err << "replay: " << f.log << ": summary differs\n";
      return kAuditFailure;
    }
  }
  const auto episodes = metrics::episodes_from_steps(records, reward.force_failure_threshold);
  out << "replay ok: " << records.size() << " records, " << episodes.size() << " episodes\n";
  return kOk;
}

int cmd_config(const Flags& f, std::ostream& out) {
  out << format_run_config(resolve(f));
  return kOk;
}

int dispatch(const std::string& command, const Flags& f, std::ostream& out, std::ostream& err) {
  if (command == "train") return cmd_train(f, out);
  if (command == "evaluate") return cmd_evaluate(f, out);
  if (command == "assess") return cmd_assess(f, out);
  if (command == "replay") return cmd_replay(f, out, err);
  return cmd_config(f, out);
}

}  // namespace

fs::path sidecar(const fs::path& log, const std::string& suffix) {
  fs::path p = log;
  if (p.extension() == ".jsonl") p.replace_extension();
  return fs::path(p.string() + suffix);
}

std::optional<Divergence> audit_log(const std::vector<env::StepRecord>& records,
                                    const env::RewardConfig& reward) {
  const double threshold = reward.force_failure_threshold;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const long line = static_cast<long>(i) + 1;
    const std::string where =
        "episode " + std::to_string(r.episode) + " step " + std::to_string(r.step) + ": ";
    const bool new_episode = i == 0 || records[i - 1].episode != r.episode;
    if (new_episode) {
      if (i > 0 && !records[i - 1].terminated && !records[i - 1].truncated) {
        return Divergence{line, where + "previous episode ended without a terminal record"};
      }
      if (r.step != 1) return Divergence{line, where + "episode does not start at step 1"};
    } else {
      if (records[i - 1].terminated || records[i - 1].truncated) {
        return Divergence{line, where + "record after the episode ended"};
      }
      if (r.step != records[i - 1].step + 1) return Divergence{line, where + "step out of sequence"};
    }
    const double expected = env::compute_reward(r.events, reward);
    if (expected != r.reward) {
      return Divergence{line, where + "logged reward " + real(r.reward) + ", recomputed " + real(expected)};
    }
    if (r.terminated && r.truncated) return Divergence{line, where + "both terminated and truncated"};
    const bool terminal_event =
        r.events.grasp_success || r.events.collision_env || r.events.collision_force > threshold;
    if (r.terminated != terminal_event) {
      return Divergence{line, where + (r.terminated ? "terminated without a terminal event"
                                                    : "terminal event without termination")};
    }
  }
  return std::nullopt;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safety-driven grasping: train, evaluate, assess and replay"};
  app.require_subcommand(1);
  Flags f;

  const std::vector<std::string> scenarios{"normal", "obstacle"};
  const std::vector<std::string> modes{"drl", "sd-drl"};
  const std::vector<std::string> policies{"checkpoint", "scripted", "random"};

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "INI run configuration");
    cmd->add_option("--seed", f.seed, "Base seed");
    cmd->add_option("--scenario", f.scenario, "Scene layout")->check(CLI::IsMember(scenarios));
    cmd->add_option("--reward-mode", f.reward_mode, "Reward shaping")->check(CLI::IsMember(modes));
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--run-name", f.run_name, "Output file stem (default <cmd>-<time>-s<seed>)");
  };
  auto rollout = [&](CLI::App* cmd) {
    cmd->add_option("--episodes", f.episodes, "Episodes to roll out");
    cmd->add_option("--workers", f.workers, "Parallel rollout workers")->check(CLI::PositiveNumber);
    cmd->add_option("--policy", f.policy, "Policy source")->check(CLI::IsMember(policies));
    cmd->add_option("--checkpoint", f.checkpoint, "Agent checkpoint");
    cmd->add_option("--disturb-surface", f.disturb_surface, "Table height offset (m)");
    cmd->add_option("--disturb-object", f.disturb_object, "Cube edge growth (m)");
  };

  auto* train = app.add_subcommand("train", "Train a TQC agent");
  common(train);
  train->add_option("--steps", f.steps, "Environment steps");
  train->add_option("--eval-every", f.eval_every, "Training episodes between evaluations");
  train->add_option("--eval-episodes", f.eval_episodes, "Episodes per evaluation");
  train->add_option("--workers", f.workers, "Evaluation workers")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Roll out a policy deterministically");
  common(evaluate);
  rollout(evaluate);

  auto* assess = app.add_subcommand("assess", "Functional safety assessment");
  common(assess);
  rollout(assess);
  assess->add_option("--log", f.log, "Assess an existing episode log instead of rolling out");
  assess->add_option("--safe-mass", f.safe_mass, "Probability mass of safe states in [0, 1]");

  auto* replay = app.add_subcommand("replay", "Audit an episode log");
  replay->add_option("log", f.log, "Episode log (.jsonl)")->required();
  replay->add_option("--config", f.config, "Recompute with this configuration's reward section");
  replay->add_option("--reward-mode", f.reward_mode, "Recompute with this reward mode")
      ->check(CLI::IsMember(modes));

  auto* config = app.add_subcommand("config", "Print the resolved configuration as INI");
  common(config);

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sdrl: " << e.what() << '\n';
    return kUsageError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, f, out, err);
  } catch (const IoError& e) {
    err << "sdrl " << command << ": " << e.what() << '\n';
    return kIoError;
  } catch (const std::logic_error& e) {
    err << "sdrl " << command << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "sdrl " << command << ": " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace sdrl::app
