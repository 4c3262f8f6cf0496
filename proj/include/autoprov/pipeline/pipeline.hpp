#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/core/error.hpp"
#include "json.hpp"

namespace autoprov::pipeline {

inline constexpr std::string_view kToolVersion = "0.3.0";

// Invalid or incomplete configuration; reported before any stage runs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

enum class Stage { Cluster, Extract, Rules, Build, Enrich, Detect, Explain, Eval };

inline constexpr Stage kAllStages[] = {Stage::Cluster, Stage::Extract, Stage::Rules,   Stage::Build,
                                       Stage::Enrich,  Stage::Detect,  Stage::Explain, Stage::Eval};

std::string stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

// Flat "section.key" -> value map read from a TOML-style file:
//   # comment
//   seed = 7
//   [cluster]
//   radius = 0.3
// Values may be quoted. Overrides are "key=value" strings applied last.
struct RunConfig {
  std::map<std::string, std::string> values;
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::optional<std::filesystem::path> path(const std::string& key) const;
  std::filesystem::path required_path(const std::string& key) const;
};

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                       std::filesystem::path base_dir = ".");
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Every known key is type-checked and every referenced input path must exist.
void validate(const RunConfig& config);

// Default configuration text for a corpus written by the synth command.
std::string corpus_config_text(const std::string& corpus_dir_name);

struct StageOutcome {
  Stage stage;
  bool skipped = false;  // inputs unchanged since the recorded run
  std::string message;
};

// One run over a database and output directory. Holds the directory lock for
// its lifetime.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Runs one stage after checking its inputs against the manifest. With
  // `force`, the digest check cannot skip it.
  StageOutcome run(Stage stage, bool force = false);
  // All stages in order; stops at the first failure.
  std::vector<StageOutcome> run_all(bool force = false);

  const std::filesystem::path& db_dir() const { return db_dir_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  nlohmann::json manifest() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::filesystem::path db_dir_;
  std::filesystem::path out_dir_;
};

}  // namespace autoprov::pipeline
