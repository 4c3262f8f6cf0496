#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autoprov/core/records.hpp"
#include "json.hpp"

namespace autoprov::synthgen {

// Built-in log formats, each with its own field layout and vocabulary.
const std::vector<std::string>& format_names();
// Planted attacks: "dropper_chain" (five attack entities) and
// "stealth_miner" (one attack entity).
const std::vector<std::string>& attack_names();

struct CorpusSpec {
  std::vector<std::string> formats;
  std::size_t lines_per_format = 100;        // test stream, benign lines
  std::size_t train_lines_per_format = 0;    // benign-only training stream
  std::vector<std::string> attacks;
  std::uint64_t seed = 1;
};

void to_json(nlohmann::json& j, const CorpusSpec& s);
void from_json(const nlohmann::json& j, CorpusSpec& s);
// Throws Error naming the problem.
void validate(const CorpusSpec& s);

struct GeneratedLine {
  LogRecord log;
  std::string format;
  ProvenanceRecord oracle;
  std::optional<std::string> attack_id;
};

struct Corpus {
  std::vector<GeneratedLine> train;
  std::vector<GeneratedLine> test;
  std::map<std::string, std::string> entity_labels;  // normalized name -> functional label
  std::map<std::string, std::string> attack_nodes;   // node key -> attack id
  nlohmann::json stub_script;                        // scripted responder for every prompt
};

// Deterministic given the CorpusSpec. Lines of the formats are interleaved by a
// seeded shuffle; attack lines are spliced into the test stream in order.
Corpus generate(const CorpusSpec& spec);

// train.log, test.log, truth_train.jsonl, truth_test.jsonl, entities.jsonl,
// attacks.jsonl and stub_script.json under `dir`.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);

std::vector<LogRecord> logs_of(const std::vector<GeneratedLine>& lines);
std::vector<ProvenanceRecord> oracle_records(const std::vector<GeneratedLine>& lines);

}  // namespace autoprov::synthgen
