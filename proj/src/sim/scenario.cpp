#include "gsp/sim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gsp/error.hpp"

namespace gsp::sim {

namespace {

using nlohmann::json;

const std::map<Emotion, std::vector<double>> kDefaultMeans{
    {Emotion::anger, {0.20, -0.16, 0.10, 0.24, -0.08, 0.14, -0.12, 0.06, 0.18, -0.04}},
    {Emotion::happiness, {0.26, 0.12, -0.14, 0.04, 0.20, -0.10, 0.16, -0.18, 0.02, 0.14}},
    {Emotion::sadness, {-0.18, 0.08, 0.22, -0.16, -0.12, 0.18, 0.04, 0.22, -0.14, 0.10}},
};

constexpr double kDefaultSigma = 0.12;
constexpr double kPairCorrelation = 0.8;

Eigen::MatrixXd paired_covariance(int dims, double sigma, double rho) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(dims, dims) * sigma * sigma;
  const int half = dims / 2;
  for (int d = 0; d < half; ++d) {
    c(d, d + half) = c(d + half, d) = rho * sigma * sigma;
  }
  return c;
}

std::string_view mode_name(AgentPolicy::Mode m) { return m == AgentPolicy::Mode::sampler ? "sampler" : "maximizer"; }

}  // namespace

const EmotionTarget& Scenario::target(Emotion e) const {
  for (const auto& t : targets) {
    if (t.emotion == e) return t;
  }
  throw Error(Errc::config, "scenario has no target for " + std::string(to_string(e)));
}

std::vector<EmotionTarget> default_targets(const ExperimentConfig& config, bool correlated) {
  const SliderGrid grid = config.grid_spec();
  std::vector<EmotionTarget> out;
  for (Emotion e : config.emotions) {
    EmotionTarget t;
    t.emotion = e;
    t.sigma = kDefaultSigma;
    const auto known = kDefaultMeans.find(e);
    if (config.dimensions == 10 && known != kDefaultMeans.end()) {
      t.mu = known->second;
      for (double& m : t.mu) m = std::clamp(m, grid.lo(), grid.hi());
      if (correlated) t.covariance = paired_covariance(10, kDefaultSigma, kPairCorrelation);
    } else {
      // Means in the central half of the slider range.
      auto rng = substream(config.seed, "default-target", static_cast<std::uint64_t>(e));
      const double span = grid.hi() - grid.lo();
      std::uniform_real_distribution<double> pick(grid.lo() + 0.25 * span, grid.hi() - 0.25 * span);
      for (int d = 0; d < config.dimensions; ++d) t.mu.push_back(pick(rng));
    }
    out.push_back(std::move(t));
  }
  return out;
}

Scenario default_scenario(const ExperimentConfig& config) {
  Scenario s;
  s.targets = default_targets(config);
  s.seed = config.seed;
  return s;
}

Scenario parse_scenario(const json& j, const ExperimentConfig& config) {
  Scenario s = default_scenario(config);
  try {
    s.seed = j.value("seed", s.seed);
    s.participants = j.value("participants", s.participants);
    s.concurrency = j.value("concurrency", s.concurrency);
    s.trial_seconds = j.value("trial_seconds", s.trial_seconds);
    s.idle_seconds = j.value("idle_seconds", s.idle_seconds);
    s.dropout_rate = j.value("dropout_rate", s.dropout_rate);
    s.render = j.value("render", s.render);
    if (j.contains("stalled_chains")) {
      const auto ids = j.at("stalled_chains").get<std::vector<int>>();
      s.stalled_chains = {ids.begin(), ids.end()};
    }
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      const std::string mode = p.value("mode", std::string(mode_name(s.policy.mode)));
      if (mode == "sampler") {
        s.policy.mode = AgentPolicy::Mode::sampler;
      } else if (mode == "maximizer") {
        s.policy.mode = AgentPolicy::Mode::maximizer;
      } else {
        throw Error(Errc::config, "unknown policy mode '" + mode + "'");
      }
      s.policy.temperature = p.value("temperature", s.policy.temperature);
      s.policy.lapse_rate = p.value("lapse_rate", s.policy.lapse_rate);
    }
    if (j.contains("targets")) {
      const auto& t = j.at("targets");
      if (t.is_string()) {
        const auto kind = t.get<std::string>();
        if (kind != "default" && kind != "diagonal") throw Error(Errc::config, "targets must be 'default', 'diagonal' or a list");
        s.targets = default_targets(config, kind == "default");
      } else {
        s.targets.clear();
        for (const auto& item : t) {
          EmotionTarget target;
          const auto emotion = parse_emotion(item.at("emotion").get<std::string>());
          if (!emotion) throw Error(Errc::config, "unknown emotion in scenario targets");
          target.emotion = *emotion;
          target.mu = item.at("mu").get<std::vector<double>>();
          target.sigma = item.value("sigma", kDefaultSigma);
          if (item.contains("covariance")) {
            const auto rows = item.at("covariance").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
            for (std::size_t r = 0; r < rows.size(); ++r) {
              if (rows[r].size() != rows.size()) throw Error(Errc::config, "covariance must be square");
              for (std::size_t k = 0; k < rows.size(); ++k) c(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
            }
            target.covariance = c;
          }
          s.targets.push_back(std::move(target));
        }
      }
    }
    if (j.contains("validation")) {
      const auto& v = j.at("validation");
      s.validation.enabled = v.value("enabled", s.validation.enabled);
      s.validation.raters = v.value("raters", s.validation.raters);
      s.validation.rating_seconds = v.value("rating_seconds", s.validation.rating_seconds);
      s.validation.model.sigma_r = v.value("sigma_r", s.validation.model.sigma_r);
      const std::string noise = v.value("noise", std::string("dither"));
      if (noise == "dither") {
        s.validation.model.noise = RatingNoise::dither;
      } else if (noise == "none") {
        s.validation.model.noise = RatingNoise::none;
      } else {
        throw Error(Errc::config, "unknown rating noise '" + noise + "'");
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::config, std::string("invalid scenario: ") + e.what());
  }

  const SliderGrid grid = config.grid_spec();
  for (Emotion e : config.emotions) {
    const auto& t = s.target(e);
    if (static_cast<int>(t.mu.size()) != config.dimensions) throw Error(Errc::config, "target dimension differs from config");
    validate(t, grid);
  }
  if (s.participants < config.participants_per_iteration) throw Error(Errc::config, "too few simulated participants");
  if (s.concurrency < 1) throw Error(Errc::config, "concurrency must be >= 1");
  if (!(s.trial_seconds > 0.0) || !(s.idle_seconds > 0.0)) throw Error(Errc::config, "durations must be positive");
  if (s.dropout_rate < 0.0 || s.dropout_rate >= 1.0) throw Error(Errc::config, "dropout_rate must be in [0, 1)");
  if (s.policy.lapse_rate < 0.0 || s.policy.lapse_rate >= 1.0) throw Error(Errc::config, "lapse_rate must be in [0, 1)");
  if (!(s.policy.temperature > 0.0)) throw Error(Errc::config, "temperature must be positive");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read scenario " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(json::parse(buffer.str(), nullptr, true, true), config);
  } catch (const json::exception& e) {
    throw Error(Errc::config, std::string("invalid scenario: ") + e.what());
  }
}

json to_json(const Scenario& s) {
  json targets = json::array();
  for (const auto& t : s.targets) {
    json item{{"emotion", std::string(to_string(t.emotion))}, {"mu", t.mu}, {"sigma", t.sigma}};
    if (t.covariance) {
      std::vector<std::vector<double>> rows;
      for (Eigen::Index r = 0; r < t.covariance->rows(); ++r) {
        rows.emplace_back();
        for (Eigen::Index c = 0; c < t.covariance->cols(); ++c) rows.back().push_back((*t.covariance)(r, c));
      }
      item["covariance"] = rows;
    }
    targets.push_back(item);
  }
  std::vector<int> stalled(s.stalled_chains.begin(), s.stalled_chains.end());
  return json{{"seed", s.seed},
              {"participants", s.participants},
              {"concurrency", s.concurrency},
              {"trial_seconds", s.trial_seconds},
              {"idle_seconds", s.idle_seconds},
              {"dropout_rate", s.dropout_rate},
              {"stalled_chains", stalled},
              {"render", s.render},
              {"policy",
               {{"mode", std::string(mode_name(s.policy.mode))},
                {"temperature", s.policy.temperature},
                {"lapse_rate", s.policy.lapse_rate}}},
              {"targets", targets},
              {"validation",
               {{"enabled", s.validation.enabled},
                {"raters", s.validation.raters},
                {"rating_seconds", s.validation.rating_seconds},
                {"sigma_r", s.validation.model.sigma_r},
                {"noise", s.validation.model.noise == RatingNoise::dither ? "dither" : "none"}}}};
}

LatentPoint grid_projection(const EmotionTarget& target, const SliderGrid& grid) {
  LatentPoint p;
  for (double m : target.mu) p.indices.push_back(grid.nearest_index(m));
  return p;
}

}  // namespace gsp::sim
