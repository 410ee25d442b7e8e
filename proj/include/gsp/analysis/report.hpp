#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsp/analysis/classify.hpp"
#include "gsp/analysis/contrast.hpp"
#include "gsp/analysis/features.hpp"
#include "gsp/analysis/pca.hpp"
#include "gsp/analysis/stats.hpp"
#include "gsp/render/renderer.hpp"
#include "gsp/state.hpp"

namespace gsp::analysis {

/// One row per recorded rating. Random items get a reference emotion in
/// round-robin order over the configured emotions.
RatingTable rating_table(const ExperimentState& state);

enum class EmbeddingSource { style, latent };

struct ReportOptions {
  BootstrapOptions bootstrap;
  UarOptions uar;
  FeatureOptions features;
  EmbeddingSource embedding = EmbeddingSource::style;
  /// Trajectory items from this iteration on form the classification set.
  int late_from_iteration = 9;
};

struct PcaSection {
  PcaResult result;
  std::vector<std::string> item_ids;  // row order of result.scores
  std::string source;                 // "style" or "latent"
};

struct FeatureRow {
  std::string item_id;
  StimulusKind kind = StimulusKind::trajectory;
  Emotion emotion = Emotion::anger;
  int iteration = 0;
  std::string sentence_id;
  FeatureVector features;
};

struct ClassificationSection {
  bool available = false;
  std::string reason;         // why not, when unavailable
  std::size_t late_items = 0;
  std::size_t transfer_items = 0;
  double late_uar = 0.0;      // k-fold on late trajectory items
  std::optional<double> transfer_uar;  // k-fold on transfer items
  std::optional<double> cross_uar;     // trained on late items, tested on transfer items
  /// Per-emotion standardized feature means, late vs transfer.
  std::optional<PearsonResult> profile_correlation;
};

struct Report {
  std::vector<ContrastPoint> contrast;
  PcaSection pca;
  std::vector<FeatureRow> features;
  ClassificationSection classification;
  nlohmann::json summary;
};

/// Full analysis of a (terminated) experiment. Audio is rendered on demand
/// with `renderer`; without one, the feature and classification sections are
/// marked unavailable.
Report build_report(const ExperimentState& state, render::Renderer* renderer, const ReportOptions& options = {});

nlohmann::json to_json(const Report& report);

/// Writes report.json, contrast.csv, pca_scores.csv and features.csv into
/// `dir` and returns the paths in that order.
std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace gsp::analysis
