#include <iostream>

#include "CLI11.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/detect/detect.hpp"
#include "autoprov/pipeline/pipeline.hpp"
#include "autoprov/synthgen/synthgen.hpp"

namespace fs = std::filesystem;
using namespace autoprov;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kStageFailure = 2;

struct StageArgs {
  std::string config;
  std::vector<std::string> overrides;
  bool force = false;
};

void add_stage_options(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("-c,--config", args.config, "run configuration file")->required();
  cmd->add_option("--set", args.overrides, "override a config key, key=value (repeatable)");
  cmd->add_flag("--force", args.force, "rerun even when inputs are unchanged");
}

void report(const pipeline::StageOutcome& o) {
  std::cerr << "[" << pipeline::stage_name(o.stage) << "] " << (o.skipped ? "skipped: " : "done: ") << o.message
            << "\n";
}

int run_stages(const StageArgs& args, std::optional<pipeline::Stage> only) {
  pipeline::Pipeline p(pipeline::load_config(args.config, args.overrides));
  if (only) {
    report(p.run(*only, args.force));
  } else {
    for (auto s : pipeline::kAllStages) report(p.run(s, args.force));
  }
  return kOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Log-to-provenance pipeline: clustering, extraction, rules, graphs, detection and attack summaries"};
  app.require_subcommand(1);

  StageArgs stage_args;
  std::map<CLI::App*, std::optional<pipeline::Stage>> stage_cmds;
  for (auto s : pipeline::kAllStages) {
    auto name = pipeline::stage_name(s);
    auto* cmd = app.add_subcommand(name, "run the " + name + " stage");
    add_stage_options(cmd, stage_args);
    stage_cmds[cmd] = s;
  }
  auto* all = app.add_subcommand("pipeline", "run every stage in order, resuming where inputs are unchanged");
  add_stage_options(all, stage_args);
  stage_cmds[all] = std::nullopt;

  std::string spec_path, formats, attacks, out_dir;
  std::size_t lines = 100, train_lines = 0;
  std::uint64_t seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic multi-format corpus with ground truth and a stub script");
  synth->add_option("--spec", spec_path, "corpus spec JSON file (overrides the other options)");
  synth->add_option("--formats", formats, "comma-separated formats")
      ->default_str("auditd,win4663,cdm,sysmon_dns,clf,netflow");
  synth->add_option("--lines", lines, "test lines per format");
  synth->add_option("--train-lines", train_lines, "benign training lines per format");
  synth->add_option("--attacks", attacks, "comma-separated planted attacks");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("-o,--out", out_dir, "output directory")->required();

  std::vector<std::string> plugin_args;
  auto* rarity = app.add_subcommand("rarity-detector", "built-in detector behind the plugin contract");
  rarity->add_option("files", plugin_args, "train_edges train_nodes test_edges test_nodes out_scores")
      ->required()
      ->expected(5);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    for (const auto& [cmd, stage] : stage_cmds)
      if (cmd->parsed()) return run_stages(stage_args, stage);

    if (synth->parsed()) {
      synthgen::CorpusSpec spec;
      if (!spec_path.empty()) {
        spec = nlohmann::json::parse(read_text(spec_path)).get<synthgen::CorpusSpec>();
      } else {
        spec.formats = split_list(formats.empty() ? "auditd,win4663,cdm,sysmon_dns,clf,netflow" : formats);
        spec.lines_per_format = lines;
        spec.train_lines_per_format = train_lines;
        spec.attacks = split_list(attacks);
        spec.seed = seed;
      }
      synthgen::validate(spec);
      auto corpus = synthgen::generate(spec);
      synthgen::write_corpus(out_dir, corpus);
      write_text_atomic(fs::path(out_dir) / "spec.json", nlohmann::json(spec).dump(2) + "\n");
      write_text_atomic(fs::path(out_dir) / "pipeline.conf", pipeline::corpus_config_text(""));
      std::cerr << "wrote " << corpus.train.size() << " training and " << corpus.test.size() << " test lines to "
                << out_dir << "\n";
      return kOk;
    }
    if (rarity->parsed()) {
      detect::rarity_detector_main(plugin_args[0], plugin_args[1], plugin_args[2], plugin_args[3], plugin_args[4]);
      return kOk;
    }
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const pipeline::StageError& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return synth->parsed() ? kValidation : kStageFailure;
  }
  return kOk;
}
