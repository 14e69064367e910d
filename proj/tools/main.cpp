// driveagent: scene validation, corpus generation, SFT/GRPO training,
// agent rollout and evaluation behind one binary.
//
// Exit codes: 0 success, 1 domain failure, 2 I/O failure, 64 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "driveagent/datagen.hpp"
#include "driveagent/evalharness.hpp"
#include "driveagent/grpo.hpp"
#include "driveagent/sft.hpp"
#include "driveagent/util.hpp"

namespace da = driveagent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct GlobalOptions {
  std::string config_path;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;  // 0 = hardware concurrency
  da::Json config;  // parsed --config file

  void load() {
    if (!config_path.empty()) {
      config = da::Json::parse(da::read_file(config_path));
      if (!config.is_object()) throw da::Error("config file must hold a JSON object");
      if (!seed_set && config.contains("seed")) seed = config["seed"].get<uint64_t>();
      if (workers == 0 && config.contains("workers")) workers = config["workers"].get<int>();
    }
    if (workers == 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }

  const da::Json* section(const char* name) const {
    if (config.is_object() && config.contains(name) && config[name].is_object()) {
      return &config[name];
    }
    return nullptr;
  }
};

template <typename T>
T config_value(const da::Json* section, const char* key, T fallback) {
  if (section && section->contains(key)) return (*section)[key].get<T>();
  return fallback;
}

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const GlobalOptions& global, da::Json extra) {
  da::Json manifest;
  manifest["command"] = command;
  manifest["seed"] = global.seed;
  manifest["workers"] = global.workers;
  manifest["timestamp"] = timestamp_now();
  for (auto& [key, value] : extra.items()) manifest[key] = value;
  da::write_file(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

std::vector<da::Scene> load_scenes(const std::string& dir_or_file) {
  std::vector<da::Scene> scenes;
  for (const auto& path : da::list_json_files(dir_or_file)) {
    scenes.push_back(da::load_scene(path));
  }
  if (scenes.empty()) throw da::IoError("no scene files under " + dir_or_file);
  return scenes;
}

std::string curve_csv(const std::string& header, const std::vector<double>& values) {
  std::string out = header + "\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, values[i]);
    out += buf;
  }
  return out;
}

da::RewardWeights reward_weights_from(const GlobalOptions& global) {
  da::RewardWeights w;
  const da::Json* section = global.section("reward");
  w.answer = config_value(section, "answer", w.answer);
  w.step_match = config_value(section, "step_match", w.step_match);
  w.coherence = config_value(section, "coherence", w.coherence);
  w.format = config_value(section, "format", w.format);
  w.integration = config_value(section, "integration", w.integration);
  return w;
}

// ---- subcommands ----

int cmd_scene_validate(const std::string& path) {
  da::Scene scene = da::load_scene(path);
  std::cout << "ok: scene '" << scene.id << "' with " << scene.objects.size() << " objects, "
            << scene.qa_items.size() << " qa items\n";
  return kExitOk;
}

int cmd_datagen(const GlobalOptions& global, const std::string& scenes_path, int n,
                double fault_rate, const std::string& out) {
  auto scenes = load_scenes(scenes_path);
  const auto& catalog = da::Catalog::standard();
  da::OracleGenerator oracle(&catalog);
  std::unique_ptr<da::FaultInjectingGenerator> faulty;
  const da::Generator* generator = &oracle;
  if (fault_rate > 0.0) {
    faulty = std::make_unique<da::FaultInjectingGenerator>(&oracle, fault_rate);
    generator = faulty.get();
  }
  da::CorpusStats stats =
      da::build_corpus(*generator, scenes, n, global.seed, out, catalog, global.workers);
  da::Json stats_json = stats.to_json();
  if (faulty) stats_json["faults_injected"] = faulty->faults_injected();
  da::write_file(out + ".stats.json", stats_json.dump(2) + "\n");
  write_manifest(out, "datagen", global,
                 da::Json{{"scenes", scenes_path}, {"n", n}, {"out", out}});
  std::cout << stats_json.dump(2) << "\n";
  return kExitOk;
}

int cmd_train(const GlobalOptions& global, const std::string& mode, const std::string& corpus_path,
              const std::string& scenes_path, const std::string& init_path,
              const std::string& out) {
  auto scenes = load_scenes(scenes_path);
  const auto& catalog = da::Catalog::standard();
  da::LinearPolicy policy = init_path.empty() ? da::LinearPolicy(&catalog)
                                              : da::LinearPolicy::load(init_path, &catalog);

  if (mode == "sft") {
    if (corpus_path.empty()) throw da::Error("train sft: --corpus is required");
    auto traces = da::load_corpus(corpus_path);
    if (traces.empty()) throw da::Error("train sft: corpus is empty");
    auto items = da::resolve_items(traces, scenes);

    da::SftConfig config;
    const da::Json* section = global.section("sft");
    config.phase = config_value(section, "phase", 2);
    config.learning_rate = config_value(section, "learning_rate", 0.5);
    config.epochs = config_value(section, "epochs", 50);
    config.batch_size = config_value(section, "batch_size", 16);
    config.seed = global.seed;

    da::SftResult result = da::train_sft(policy, items, config);
    policy.save(out);
    da::write_file(out + ".curve.csv", curve_csv("epoch,loss", result.loss_curve));
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(policy.params_hash()));
    write_manifest(out, "train-sft", global,
                   da::Json{{"corpus", corpus_path},
                            {"scenes", scenes_path},
                            {"phase", config.phase},
                            {"epochs", config.epochs},
                            {"learning_rate", config.learning_rate},
                            {"policy_hash", hash}});
    std::cout << "sft: loss " << result.loss_curve.front() << " -> " << result.loss_curve.back()
              << " over " << config.epochs << " epochs\n";
    return kExitOk;
  }

  if (mode == "grpo") {
    // references: prefer corpus traces, fall back to embedded reference traces
    std::vector<da::GrpoTask> tasks;
    std::vector<da::Trace> corpus;
    if (!corpus_path.empty()) corpus = da::load_corpus(corpus_path);
    for (const auto& scene : scenes) {
      for (const auto& qa : scene.qa_items) {
        da::GrpoTask task;
        task.scene = &scene;
        task.qa = &qa;
        bool have_ref = false;
        for (const auto& t : corpus) {
          if (t.scene_id == scene.id && t.question_id == qa.id) {
            task.reference = t;
            have_ref = true;
            break;
          }
        }
        if (!have_ref && qa.reference_trace) {
          da::ParseResult ref = da::trace_from_json(*qa.reference_trace);
          if (ref.ok()) {
            task.reference = *ref.trace;
            have_ref = true;
          }
        }
        if (have_ref) tasks.push_back(std::move(task));
      }
    }
    if (tasks.empty()) throw da::Error("train grpo: no questions with reference traces");

    da::GrpoConfig config;
    const da::Json* section = global.section("grpo");
    config.group_size = config_value(section, "group_size", 2);
    config.clip_epsilon = config_value(section, "clip_epsilon", 0.2);
    config.kl_beta = config_value(section, "kl_beta", 0.001);
    config.learning_rate = config_value(section, "learning_rate", 0.5);
    config.iterations = config_value(section, "iterations", 100);
    config.temperature = config_value(section, "temperature", 1.2);
    config.std_floor = config_value(section, "std_floor", 1e-8);
    config.max_steps = config_value(section, "max_steps", da::kDefaultMaxSteps);
    config.seed = global.seed;

    da::RewardWeights weights = reward_weights_from(global);
    da::GrpoResult result = da::train_grpo(policy, tasks, weights, config, global.workers);
    policy.save(out);
    da::write_file(out + ".curve.csv", curve_csv("iteration,mean_reward", result.reward_curve));
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(policy.params_hash()));
    write_manifest(out, "train-grpo", global,
                   da::Json{{"corpus", corpus_path},
                            {"scenes", scenes_path},
                            {"iterations", config.iterations},
                            {"group_size", config.group_size},
                            {"policy_hash", hash}});
    std::cout << "grpo: mean reward " << result.reward_curve.front() << " -> "
              << result.reward_curve.back() << " over " << config.iterations << " iterations\n";
    return kExitOk;
  }

  throw da::Error("train: mode must be 'sft' or 'grpo'");
}

int cmd_agent_run(const GlobalOptions& global, const std::string& checkpoint,
                  const std::string& policy_name, const std::string& scenes_path, int group_size,
                  const std::string& out) {
  auto scenes = load_scenes(scenes_path);
  const auto& catalog = da::Catalog::standard();

  std::unique_ptr<da::Policy> policy;
  if (!policy_name.empty() && policy_name != "oracle") {
    throw da::Error("agent-run: unknown policy '" + policy_name + "' (use --checkpoint or oracle)");
  }
  if (!policy_name.empty()) {
    policy = std::make_unique<da::OraclePolicy>(&catalog);
  } else if (!checkpoint.empty()) {
    policy = std::make_unique<da::LinearPolicy>(da::LinearPolicy::load(checkpoint, &catalog));
  } else {
    throw da::Error("agent-run: pass --checkpoint <path> or --policy oracle");
  }

  da::AgentConfig config;
  const da::Json* section = global.section("agent");
  config.max_steps = config_value(section, "max_steps", da::kDefaultMaxSteps);
  config.temperature = config_value(section, "temperature", 1.2);
  config.group_size = group_size > 0 ? group_size : config_value(section, "group_size", 1);

  std::vector<da::Trace> traces;
  for (const auto& scene : scenes) {
    for (const auto& qa : scene.qa_items) {
      da::AgentConfig per_qa = config;
      per_qa.seed = global.seed ^ da::fnv1a(scene.id + "/" + qa.id);
      auto group = da::sample_group(*policy, scene, qa, catalog, per_qa, global.workers);
      for (auto& t : group) traces.push_back(std::move(t));
    }
  }
  da::save_corpus(traces, out);
  write_manifest(out, "agent-run", global,
                 da::Json{{"scenes", scenes_path},
                          {"group_size", config.group_size},
                          {"traces", traces.size()}});
  std::cout << "wrote " << traces.size() << " traces to " << out << "\n";
  return kExitOk;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& traces_path,
                 const std::string& scenes_path, std::string judge_name, const std::string& out) {
  auto scenes = load_scenes(scenes_path);
  auto traces = da::load_corpus(traces_path);
  if (traces.empty()) throw da::Error("evaluate: empty traces file");
  const auto& catalog = da::Catalog::standard();

  if (judge_name.empty()) {
    if (const char* env = std::getenv("AGENTTHINK_JUDGE_URL")) judge_name = env;
  }
  if (judge_name.empty() && global.config.contains("judge")) {
    judge_name = global.config["judge"].get<std::string>();
  }

  std::unique_ptr<da::eval::Judge> judge;
  if (judge_name == "rule") {
    judge = std::make_unique<da::eval::RuleJudge>(&catalog);
  } else if (!judge_name.empty() && judge_name != "none") {
    judge = std::make_unique<da::eval::HttpJudge>(judge_name);
  }

  da::eval::EvalOptions options;
  options.judge = judge.get();
  da::eval::EvalReport report = da::eval::evaluate_run(traces, scenes, catalog, options);
  da::write_file(out, report.to_json().dump(2) + "\n");
  write_manifest(out, "evaluate", global,
                 da::Json{{"traces", traces_path}, {"scenes", scenes_path}});

  std::printf("traces            %zu\n", report.num_traces);
  std::printf("mcq accuracy      %.4f\n", report.mcq_accuracy);
  std::printf("tool use          appro %.2f  coherence %.2f  alignment %.2f  overall %.2f\n",
              report.tool_use.appropriateness, report.tool_use.chain_coherence,
              report.tool_use.perception_alignment, report.tool_use.overall);
  if (report.spatial) std::printf("spatial AccS      %.4f\n", report.spatial->acc_s);
  if (!report.scorecards.empty()) {
    double mean = 0.0;
    for (const auto& c : report.scorecards) mean += c.overall;
    std::printf("judge overall     %.2f (mean of %zu cards)\n", mean / report.scorecards.size(),
                report.scorecards.size());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tool-augmented driving-scene reasoning: data generation, training, evaluation"};
  app.require_subcommand(1);

  GlobalOptions global;

  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--config", global.config_path, "JSON config file (flags win)");
    cmd->add_option("--seed", global.seed, "run seed")->each([&](const std::string&) {
      global.seed_set = true;
    });
    cmd->add_option("--workers", global.workers, "worker threads (default: cores)");
  };

  // scene-validate
  std::string scene_path;
  CLI::App* validate = app.add_subcommand("scene-validate", "validate a scene file");
  validate->add_option("path", scene_path, "scene JSON file")->required();
  add_globals(validate);

  // datagen
  std::string scenes_path, out_path;
  int datagen_n = 2;
  double fault_rate = 0.0;
  CLI::App* datagen = app.add_subcommand("datagen", "build an audited trace corpus");
  datagen->add_option("--scenes", scenes_path, "scene file or directory")->required();
  datagen->add_option("--n", datagen_n, "samples per QA pair");
  datagen->add_option("--fault-rate", fault_rate, "inject observation faults (harness reruns)");
  datagen->add_option("--out", out_path, "output corpus JSONL")->required();
  add_globals(datagen);

  // train
  std::string train_mode, corpus_path, init_path;
  CLI::App* train = app.add_subcommand("train", "train a policy (sft or grpo)");
  train->add_option("mode", train_mode, "sft | grpo")->required();
  train->add_option("--corpus", corpus_path, "trace corpus JSONL");
  train->add_option("--scenes", scenes_path, "scene file or directory")->required();
  train->add_option("--init", init_path, "initial checkpoint");
  train->add_option("--out", out_path, "output checkpoint path")->required();
  add_globals(train);

  // agent-run
  std::string checkpoint, policy_name, traces_path;
  int group_size = 0;
  CLI::App* agent = app.add_subcommand("agent-run", "roll out the agent over scenes");
  agent->add_option("--checkpoint", checkpoint, "policy checkpoint");
  agent->add_option("--policy", policy_name, "built-in policy: oracle");
  agent->add_option("--scenes", scenes_path, "scene file or directory")->required();
  agent->add_option("--group-size", group_size, "episodes per question");
  agent->add_option("--out", out_path, "output traces JSONL")->required();
  add_globals(agent);

  // evaluate
  std::string judge_name;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a trace file");
  evaluate->add_option("--traces", traces_path, "traces JSONL")->required();
  evaluate->add_option("--scenes", scenes_path, "scene file or directory")->required();
  evaluate->add_option("--judge", judge_name, "none | rule | <url> (env AGENTTHINK_JUDGE_URL)");
  evaluate->add_option("--out", out_path, "output report JSON")->required();
  add_globals(evaluate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    global.load();
    if (validate->parsed()) return cmd_scene_validate(scene_path);
    if (datagen->parsed()) {
      if (datagen_n < 1) {
        std::cerr << "datagen: --n must be >= 1\n";
        return kExitUsage;
      }
      return cmd_datagen(global, scenes_path, datagen_n, fault_rate, out_path);
    }
    if (train->parsed()) {
      if (train_mode != "sft" && train_mode != "grpo") {
        std::cerr << "train: mode must be 'sft' or 'grpo'\n";
        return kExitUsage;
      }
      return cmd_train(global, train_mode, corpus_path, scenes_path, init_path, out_path);
    }
    if (agent->parsed()) {
      return cmd_agent_run(global, checkpoint, policy_name, scenes_path, group_size, out_path);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(global, traces_path, scenes_path, judge_name, out_path);
    }
  } catch (const da::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const da::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
