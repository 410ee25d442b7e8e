#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/error.hpp"
#include "gsp/grid.hpp"
#include "gsp/types.hpp"

namespace gsp {

struct GridConfig {
  double lo = -0.24;
  double hi = 0.38;
  int n = 32;

  SliderGrid make() const { return SliderGrid(lo, hi, n); }
  bool operator==(const GridConfig&) const = default;
};

struct SentenceRef {
  std::string id;
  std::string text;

  bool operator==(const SentenceRef&) const = default;
};

struct RendererConfig {
  enum class Kind { builtin, external };

  Kind kind = Kind::builtin;
  std::string url;           // external only
  std::string mapping_path;  // builtin only; empty selects the shipped matrix
  double timeout_s = 30.0;
  int max_in_flight = 4;

  bool operator==(const RendererConfig&) const = default;
};

struct ExperimentConfig {
  int dimensions = 10;
  GridConfig grid;
  std::vector<Emotion> emotions{Emotion::anger, Emotion::happiness, Emotion::sadness};
  std::vector<SentenceRef> sentences;
  int n_chains = 45;
  int n_iterations = 20;
  int participants_per_iteration = 5;
  double duration_hours = 48.0;
  std::vector<SentenceRef> novel_sentences;
  int n_random = 18;
  std::uint64_t seed = 1;
  RendererConfig renderer;
  int assignment_timeout_s = 600;
  int rating_target = 5;
  bool require_prescreening = true;
  int snapshot_interval = 500;

  ExperimentConfig();

  SliderGrid grid_spec() const { return grid.make(); }
  const SentenceRef* find_sentence(std::string_view id) const noexcept;

  bool operator==(const ExperimentConfig&) const = default;
};

struct ConfigIssue {
  int line = 0;  // 0 when the issue comes from an override or a default
  std::string key;
  std::string message;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);

  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }
  nlohmann::json report() const;

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses, fills defaults, applies `key=value` overrides (dotted keys such as
/// `grid.n=16`) and validates. All problems are collected into one ConfigError.
ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

/// Throws ConfigError listing every invariant the config violates.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

}  // namespace gsp
