#include "priodrift/stages.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

struct CommonOptions {
  std::string config_path;
  std::string work_dir;
  std::string threads;
  std::vector<std::string> overrides;
};

void add_common(CLI::App& cmd, CommonOptions& opts) {
  cmd.add_option("-c,--config", opts.config_path, "INI run configuration")->check(CLI::ExistingFile);
  cmd.add_option("-w,--work-dir", opts.work_dir, "stage file directory (overrides paths.work_dir)");
  cmd.add_option("-t,--threads", opts.threads, "worker threads (default: PRIO_DRIFT_THREADS, then run.threads)");
  cmd.add_option("-s,--set", opts.overrides, "override one config field, section.key=value")->take_all();
}

priodrift::RunConfig build_config(const CommonOptions& opts) {
  priodrift::RunConfig config = opts.config_path.empty() ? priodrift::RunConfig{}
                                                          : priodrift::RunConfig::load(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw priodrift::Error(priodrift::ErrorKind::ConfigError, "--set expects section.key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opts.work_dir.empty()) config.set("paths.work_dir", opts.work_dir);
  std::string threads = opts.threads;
  if (threads.empty()) {
    if (const char* env = std::getenv("PRIO_DRIFT_THREADS")) threads = env;
  }
  if (!threads.empty()) config.set("run.threads", threads);
  return config;
}

std::size_t thread_setting(const priodrift::RunConfig& config) {
  if (config.get("run.threads").empty()) return std::max(1u, std::thread::hardware_concurrency());
  const long n = config.integer("run.threads");
  if (n < 1) throw priodrift::Error(priodrift::ErrorKind::ConfigError, "run.threads must be at least 1");
  return static_cast<std::size_t>(n);
}

bool parse_switch(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw priodrift::Error(priodrift::ErrorKind::ConfigError, "--mask-current expects on or off, got '" + v + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bug priority change prediction toolkit"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::string input;
  int phase = 2;
  std::string mask;

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands = {
      {"synth", "generate a seeded synthetic issue corpus and its ground truth"},
      {"fetch", "download resolved and closed bugs from the tracker search API"},
      {"ingest", "correct priority trails and build the labelled datasets"},
      {"featurize", "compute feature matrices for both phases"},
      {"sample", "split rows and balance the training sets"},
      {"train", "fit the ensemble, the MLP and both baselines"},
      {"predict", "write per-row probabilities and labels for the test rows"},
      {"evaluate", "score models and baselines on the test rows"},
      {"crossproject", "leave-one-project-out evaluation"},
      {"granger", "Granger causality of evolution series on priority changes"},
  };
  for (const auto& c : commands) {
    CLI::App* cmd = app.add_subcommand(c.name, c.help);
    add_common(*cmd, opts);
    if (std::string(c.name) == "ingest") cmd->add_option("-i,--input", input, "issue JSONL (default: <work>/issues.jsonl)");
    if (std::string(c.name) == "predict") {
      cmd->add_option("--phase", phase, "1 or 2")->check(CLI::IsMember({1, 2}));
      cmd->add_option("--mask-current", mask, "on/off (default: phase2.mask_current)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const priodrift::RunConfig config = build_config(opts);
    priodrift::set_thread_count(thread_setting(config));
    priodrift::StageRunner runner(config, config.get("paths.work_dir"), std::cerr);
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "synth") {
      runner.synth();
    } else if (name == "fetch") {
      runner.fetch();
    } else if (name == "ingest") {
      runner.ingest(input);
    } else if (name == "featurize") {
      runner.featurize();
    } else if (name == "sample") {
      runner.sample();
    } else if (name == "train") {
      runner.train();
    } else if (name == "predict") {
      runner.predict(phase, mask.empty() ? config.flag("phase2.mask_current") : parse_switch(mask));
    } else if (name == "evaluate") {
      runner.evaluate();
    } else if (name == "crossproject") {
      runner.crossproject();
    } else if (name == "granger") {
      runner.granger();
    }
  } catch (const priodrift::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return priodrift::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
