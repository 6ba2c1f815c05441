#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "wellprobe/config.hpp"

namespace wellprobe {

inline constexpr const char* kToolVersion = "0.1.0";

// %.17g, with nan / inf / -inf spelled out.
std::string format_double(double v);

// Header plus rows, comma separated, LF endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);
  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string sha256_hex(const std::string& bytes);

enum class Verdict { Pass, Fail, None };
std::string to_string(Verdict v);

struct StepRecord {
  std::string pipeline;
  double seconds = 0.0;
  Verdict verdict = Verdict::None;
  std::vector<std::string> notes;  // failures and headline numbers
};

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string tool = "wellprobe";
  std::string version = kToolVersion;
  std::string output_dir;
  std::string config_json;  // the effective configuration, defaults included
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<StepRecord> steps;  // pipeline order
  std::vector<OutputFile> outputs;
  bool pass = true;  // no step with a failed verdict

  std::string json() const;
};

// Runs the requested pipelines in kPipelineOrder, writes one CSV per pipeline
// and manifest.json into config.output (created if needed). Validates first.
// Module errors propagate.
RunManifest run(const ExperimentConfig& config);

}  // namespace wellprobe
