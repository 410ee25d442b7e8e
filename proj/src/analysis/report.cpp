#include "gsp/analysis/report.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "gsp/error.hpp"

namespace gsp::analysis {

namespace {

using nlohmann::json;

struct Item {
  std::string id;
  StimulusKind kind;
  Emotion emotion;
  int iteration;
  std::string sentence_id;
  LatentPoint point;
};

/// Trajectory points of complete chains plus transfer items. Uses the
/// validation set when it exists so that ids match the rating data.
std::vector<Item> analysis_items(const ExperimentState& state) {
  std::vector<Item> items;
  if (state.validation) {
    for (const auto& d : state.validation->items) {
      if (d.kind == StimulusKind::random || !d.emotion) continue;
      items.push_back({d.item_id, d.kind, *d.emotion, d.iteration.value_or(0), d.sentence_id, d.point});
    }
    return items;
  }
  for (const auto& c : state.chains) {
    if (!c.complete()) continue;
    const std::string prefix = "c" + std::to_string(c.spec.chain_id);
    for (const auto& h : c.history) {
      items.push_back({prefix + "-i" + std::to_string(h.iteration), StimulusKind::trajectory, c.spec.emotion, h.iteration,
                       c.spec.sentence_id, h.point});
    }
    for (const auto& s : state.config.novel_sentences) {
      items.push_back({prefix + "-" + s.id, StimulusKind::transfer, c.spec.emotion, c.spec.n_iterations, s.id,
                       c.current_point});
    }
  }
  return items;
}

/// Style embedding of a stimulus: the prosody parameters for the builtin
/// synthesizer, the backend's own embedding otherwise. Empty when the backend
/// returns none.
std::vector<double> style_embedding(const Item& item, const ExperimentConfig& config, render::Renderer& renderer) {
  if (const auto* builtin = dynamic_cast<const render::BuiltinRenderer*>(&renderer)) {
    const auto params = builtin->params_for(item.point).to_array();
    return {params.begin(), params.end()};
  }
  const SentenceRef* sentence = config.find_sentence(item.sentence_id);
  if (!sentence) throw Error(Errc::not_found, "unknown sentence " + item.sentence_id);
  return renderer.render(item.point, *sentence).style_embedding;
}

Dataset dataset_of(const std::vector<const FeatureRow*>& rows) {
  Dataset d;
  d.feature_names.assign(FeatureVector::kNames.begin(), FeatureVector::kNames.end());
  d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(FeatureVector::kNames.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = rows[r]->features.values();
    for (std::size_t c = 0; c < v.size(); ++c) d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
    d.labels.push_back(static_cast<int>(rows[r]->emotion));
  }
  return d;
}

/// Per-emotion mean of standardized features, flattened emotion-major.
std::vector<double> profile(const Dataset& d, const Standardizer& z, const std::vector<Emotion>& emotions) {
  const Eigen::MatrixXd x = z.apply(d.features);
  std::vector<double> out;
  for (Emotion e : emotions) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
    int n = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (d.labels[static_cast<std::size_t>(r)] == static_cast<int>(e)) {
        sum += x.row(r);
        ++n;
      }
    }
    if (n == 0) throw Error(Errc::size, "no " + std::string(to_string(e)) + " items");
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.push_back(sum(c) / n);
  }
  return out;
}

template <typename F>
std::optional<double> try_uar(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::stratification || e.code() == Errc::size) return std::nullopt;
    throw;
  }
}

ClassificationSection classify(const std::vector<FeatureRow>& rows, const ExperimentConfig& config,
                               const ReportOptions& options) {
  ClassificationSection out;
  std::vector<const FeatureRow*> late;
  std::vector<const FeatureRow*> transfer;
  for (const auto& r : rows) {
    if (!r.features.complete()) continue;
    (r.kind == StimulusKind::transfer ? transfer : late).push_back(&r);
  }
  out.late_items = late.size();
  out.transfer_items = transfer.size();
  if (late.empty()) {
    out.reason = "no late trajectory items with complete features";
    return out;
  }
  const Dataset late_set = dataset_of(late);
  const auto late_uar = try_uar([&] { return kfold_uar(late_set, options.uar); });
  if (!late_uar) {
    out.reason = "too few late items per emotion for " + std::to_string(options.uar.k) + "-fold classification";
    return out;
  }
  out.available = true;
  out.late_uar = *late_uar;
  if (transfer.empty()) return out;
  const Dataset transfer_set = dataset_of(transfer);
  out.transfer_uar = try_uar([&] { return kfold_uar(transfer_set, options.uar); });
  out.cross_uar = try_uar([&] { return cross_predict_uar(late_set, transfer_set, options.uar); });
  try {
    const Standardizer z = Standardizer::fit(late_set.features);
    const auto a = profile(late_set, z, config.emotions);
    const auto b = profile(transfer_set, z, config.emotions);
    out.profile_correlation = pearson(a, b);
  } catch (const Error& e) {
    if (e.code() != Errc::undefined_correlation && e.code() != Errc::size) throw;
  }
  return out;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_optional(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(10);
  s << *v;
  return s.str();
}

std::string csv_number(double v) { return csv_optional(v); }

}  // namespace

RatingTable rating_table(const ExperimentState& state) {
  RatingTable table;
  if (!state.validation || state.config.emotions.empty()) return table;
  const auto& v = *state.validation;
  std::map<std::string, Emotion> reference;
  std::size_t random_seen = 0;
  for (const auto& item : v.items) {
    if (item.kind == StimulusKind::random) {
      reference[item.item_id] = state.config.emotions[random_seen++ % state.config.emotions.size()];
    }
  }
  for (const auto& [id, r] : v.ratings) {
    if (!r.rating) continue;
    const auto& item = v.items[v.item_index.at(r.item_id)];
    RatingRow row;
    row.stimulus_id = item.item_id;
    row.kind = item.kind;
    row.intended = item.kind == StimulusKind::random ? std::optional(reference.at(item.item_id)) : item.emotion;
    row.iteration = item.iteration;
    row.probed = r.probed_emotion;
    row.rating = *r.rating;
    table.push_back(std::move(row));
  }
  return table;
}

Report build_report(const ExperimentState& state, render::Renderer* renderer, const ReportOptions& options) {
  Report report;
  const auto table = rating_table(state);
  if (!table.empty()) report.contrast = contrast_curve(table, default_bins(state.config.n_iterations), options.bootstrap);

  const auto items = analysis_items(state);
  if (items.empty()) throw Error(Errc::empty_experiment, "no complete chains to analyze");

  // PCA over every trajectory stimulus.
  {
    std::vector<const Item*> trajectory;
    for (const auto& item : items) {
      if (item.kind == StimulusKind::trajectory) trajectory.push_back(&item);
    }
    const SliderGrid grid = state.config.grid_spec();
    const bool style = options.embedding == EmbeddingSource::style && renderer &&
                 !style_embedding(*trajectory.front(), state.config, *renderer).empty();
    std::vector<std::vector<double>> rows;
    for (const Item* item : trajectory) {
      rows.push_back(style ? style_embedding(*item, state.config, *renderer) : item->point.weights(grid));
      report.pca.item_ids.push_back(item->id);
    }
    report.pca.source = style ? "style" : "latent";
    Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) throw Error(Errc::shape, "style embeddings differ in length");
      for (std::size_t c = 0; c < rows[r].size(); ++c) data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    report.pca.result = pca(data);
  }

  if (renderer) {
    std::map<std::string, FeatureVector> measured;
    for (const auto& item : items) {
      if (item.kind == StimulusKind::trajectory && item.iteration < options.late_from_iteration) continue;
      const SentenceRef* sentence = state.config.find_sentence(item.sentence_id);
      if (!sentence) throw Error(Errc::not_found, "unknown sentence " + item.sentence_id);
      // Converged chains repeat points; measure each distinct stimulus once.
      const std::string key = renderer->stimulus_id(item.point, *sentence);
      auto it = measured.find(key);
      if (it == measured.end()) {
        it = measured.emplace(key, extract_features(renderer->render(item.point, *sentence).audio, options.features)).first;
      }
      report.features.push_back({item.id, item.kind, item.emotion, item.iteration, item.sentence_id, it->second});
    }
    report.classification = classify(report.features, state.config, options);
  } else {
    report.classification.reason = "no renderer available";
  }

  std::size_t ratings = table.size();
  report.summary = json{{"chains", state.chains.size()},
                        {"full_chains", state.full_chains()},
                        {"termination", state.termination ? json(std::string(to_string(*state.termination))) : json(nullptr)},
                        {"validation_items", state.validation ? state.validation->items.size() : 0},
                        {"ratings", ratings},
                        {"mapping_checksum", state.mapping_checksum}};
  return report;
}

json to_json(const Report& report) {
  json contrast = json::array();
  for (const auto& p : report.contrast) {
    json row{{"bin", p.label}, {"missing", p.missing}, {"stimuli", p.stimuli}, {"ratings", p.ratings}};
    if (!p.missing) {
      row.update(json{{"mean_intended", p.mean_intended},
                      {"mean_nonintended", p.mean_nonintended},
                      {"contrast", p.contrast},
                      {"ci_low", p.ci_low},
                      {"ci_high", p.ci_high}});
    }
    contrast.push_back(row);
  }

  const auto& pr = report.pca.result;
  std::vector<std::vector<double>> components;
  for (Eigen::Index r = 0; r < pr.components.rows(); ++r) {
    components.emplace_back();
    for (Eigen::Index c = 0; c < pr.components.cols(); ++c) components.back().push_back(pr.components(r, c));
  }
  std::vector<double> ratios(pr.explained_variance_ratio.data(),
                             pr.explained_variance_ratio.data() + pr.explained_variance_ratio.size());

  json features = json::array();
  for (const auto& f : report.features) {
    features.push_back({{"item_id", f.item_id},
                        {"kind", std::string(to_string(f.kind))},
                        {"emotion", std::string(to_string(f.emotion))},
                        {"iteration", f.iteration},
                        {"sentence_id", f.sentence_id},
                        {"duration", f.features.duration},
                        {"f0_mean", optional_json(f.features.f0_mean)},
                        {"f0_slope", optional_json(f.features.f0_slope)},
                        {"f0_range", optional_json(f.features.f0_range)},
                        {"jitter_ddp", optional_json(f.features.jitter_ddp)},
                        {"shimmer_local", optional_json(f.features.shimmer_local)}});
  }

  const auto& c = report.classification;
  json classification{{"available", c.available},
                      {"late_items", c.late_items},
                      {"transfer_items", c.transfer_items}};
  if (!c.reason.empty()) classification["reason"] = c.reason;
  if (c.available) {
    classification["late_uar"] = c.late_uar;
    classification["transfer_uar"] = optional_json(c.transfer_uar);
    classification["cross_uar"] = optional_json(c.cross_uar);
  }
  if (c.profile_correlation) {
    classification["profile_correlation"] = {
        {"r", c.profile_correlation->r}, {"df", c.profile_correlation->df}, {"p", c.profile_correlation->p}};
  }

  return json{{"summary", report.summary},
              {"contrast", contrast},
              {"pca",
               {{"source", report.pca.source},
                {"stimuli", report.pca.item_ids.size()},
                {"explained_variance_ratio", ratios},
                {"components", components}}},
              {"features", features},
              {"classification", classification}};
}

std::vector<std::filesystem::path> write_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + p.string());
    return out;
  };
  const std::vector<std::filesystem::path> paths{dir / "report.json", dir / "contrast.csv", dir / "pca_scores.csv",
                                                 dir / "features.csv"};
  {
    auto out = open(paths[0]);
    out << to_json(report).dump(2) << '\n';
  }
  {
    auto out = open(paths[1]);
    out << "bin,stimuli,ratings,mean_intended,mean_nonintended,contrast,ci_low,ci_high\n";
    for (const auto& p : report.contrast) {
      out << p.label << ',' << p.stimuli << ',' << p.ratings;
      if (p.missing) {
        out << ",,,,,\n";
      } else {
        out << ',' << csv_number(p.mean_intended) << ',' << csv_number(p.mean_nonintended) << ','
            << csv_number(p.contrast) << ',' << csv_number(p.ci_low) << ',' << csv_number(p.ci_high) << '\n';
      }
    }
  }
  {
    auto out = open(paths[2]);
    const auto& scores = report.pca.result.scores;
    out << "item_id";
    for (Eigen::Index c = 0; c < scores.cols(); ++c) out << ",pc" << c + 1;
    out << '\n';
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      out << report.pca.item_ids[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < scores.cols(); ++c) out << ',' << csv_number(scores(r, c));
      out << '\n';
    }
  }
  {
    auto out = open(paths[3]);
    out << "item_id,kind,emotion,iteration,sentence_id";
    for (auto name : FeatureVector::kNames) out << ',' << name;
    out << '\n';
    for (const auto& f : report.features) {
      out << f.item_id << ',' << to_string(f.kind) << ',' << to_string(f.emotion) << ',' << f.iteration << ','
          << f.sentence_id << ',' << csv_number(f.features.duration) << ',' << csv_optional(f.features.f0_mean) << ','
          << csv_optional(f.features.f0_slope) << ',' << csv_optional(f.features.f0_range) << ','
          << csv_optional(f.features.jitter_ddp) << ',' << csv_optional(f.features.shimmer_local) << '\n';
    }
  }
  return paths;
}

}  // namespace gsp::analysis
