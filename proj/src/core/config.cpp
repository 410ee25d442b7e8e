#include "gsp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gsp {

namespace {

using nlohmann::json;

const std::vector<SentenceRef>& default_sentences() {
  static const std::vector<SentenceRef> kSentences{
      {"S1", "The birch canoe slid on the smooth planks."},
      {"S2", "Glue the sheet to the dark blue background."},
      {"S3", "It's easy to tell the depth of a well."},
  };
  return kSentences;
}

const std::vector<SentenceRef>& default_novel_sentences() {
  static const std::vector<SentenceRef> kSentences{
      {"N1", "These days a chicken leg is a rare dish."},
      {"N2", "Rice is often served in round bowls."},
      {"N3", "The juice of lemons makes fine punch."},
      {"N4", "The box was thrown beside the parked truck."},
  };
  return kSentences;
}

const std::set<std::string, std::less<>> kTopKeys{
    "dimensions",     "grid",          "emotions",          "sentences",
    "n_chains",       "n_iterations",  "participants_per_iteration",
    "duration_hours", "novel_sentences", "n_random",        "seed",
    "renderer",       "assignment_timeout_s", "rating_target", "require_prescreening",
    "snapshot_interval"};
const std::set<std::string, std::less<>> kGridKeys{"lo", "hi", "n"};
const std::set<std::string, std::less<>> kRendererKeys{"kind", "url", "mapping", "timeout_s", "max_in_flight"};

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Anchors an issue to the line where the (possibly nested) key appears.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  int line_of(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    for (const auto& key : path) {
      const auto found = text_.find("\"" + key + "\"", pos);
      if (found == std::string_view::npos) return 0;
      pos = found + 1;
    }
    return path.empty() ? 0 : line_of_offset(text_, pos);
  }

  void issue(const std::vector<std::string>& path, std::string message) {
    std::string key;
    for (const auto& part : path) key += (key.empty() ? "" : ".") + part;
    issues_.push_back({line_of(path), key, std::move(message)});
  }

  void issue_at(int line, std::string key, std::string message) {
    issues_.push_back({line, std::move(key), std::move(message)});
  }

  std::vector<ConfigIssue>& issues() { return issues_; }

 private:
  std::string_view text_;
  std::vector<ConfigIssue> issues_;
};

template <typename T>
void read(Reader& r, const json& obj, const std::vector<std::string>& path, T& out) {
  const auto it = obj.find(path.back());
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer() && !it->is_number_unsigned()) throw std::invalid_argument("integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw std::invalid_argument("number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw std::invalid_argument("boolean");
    } else {
      if (!it->is_string()) throw std::invalid_argument("string");
    }
    out = it->get<T>();
  } catch (const std::exception& e) {
    r.issue(path, std::string("expected ") + e.what());
  }
}

std::vector<SentenceRef> read_sentences(Reader& r, const json& value, const std::string& key,
                                        const std::string& id_prefix) {
  std::vector<SentenceRef> out;
  if (!value.is_array()) {
    r.issue({key}, "expected a list of sentences");
    return out;
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    const auto& item = value[i];
    if (item.is_string()) {
      out.push_back({id_prefix + std::to_string(i + 1), item.get<std::string>()});
    } else if (item.is_object() && item.contains("text") && item["text"].is_string()) {
      std::string id = id_prefix + std::to_string(i + 1);
      if (item.contains("id")) {
        if (!item["id"].is_string()) {
          r.issue({key}, "sentence id must be a string");
          continue;
        }
        id = item["id"].get<std::string>();
      }
      out.push_back({std::move(id), item["text"].get<std::string>()});
    } else {
      r.issue({key}, "sentence entries must be strings or {id, text} objects");
    }
  }
  return out;
}

json parse_override_value(const std::string& raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error&) {
    return json(raw);
  }
}

void apply_override(Reader& r, json& root, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    r.issue_at(0, spec, "override must have the form key=value");
    return;
  }
  const std::string key = spec.substr(0, eq);
  json* node = &root;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    json& child = (*node)[path[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      r.issue_at(0, key, "override path crosses a non-object value");
      return;
    }
    node = &child;
  }
  (*node)[path.back()] = parse_override_value(spec.substr(eq + 1));
}

void collect_validation(const ExperimentConfig& c, Reader& r) {
  if (c.dimensions < 1) r.issue({"dimensions"}, "dimensions must be >= 1");
  try {
    (void)c.grid.make();
  } catch (const Error& e) {
    r.issue({"grid"}, e.what());
  }
  if (c.emotions.empty()) r.issue({"emotions"}, "at least one emotion is required");
  if (std::set<Emotion>(c.emotions.begin(), c.emotions.end()).size() != c.emotions.size()) {
    r.issue({"emotions"}, "emotions must be distinct");
  }
  if (c.sentences.empty()) r.issue({"sentences"}, "at least one sentence is required");
  std::set<std::string> ids;
  for (const auto& s : c.sentences) {
    if (s.id.empty() || s.text.empty()) r.issue({"sentences"}, "sentence id and text must be non-empty");
    if (!ids.insert(s.id).second) r.issue({"sentences"}, "duplicate sentence id '" + s.id + "'");
  }
  for (const auto& s : c.novel_sentences) {
    if (s.id.empty() || s.text.empty()) r.issue({"novel_sentences"}, "sentence id and text must be non-empty");
    if (!ids.insert(s.id).second) r.issue({"novel_sentences"}, "duplicate sentence id '" + s.id + "'");
  }
  const int cells = static_cast<int>(c.emotions.size() * c.sentences.size());
  if (c.n_chains < 1) {
    r.issue({"n_chains"}, "n_chains must be >= 1");
  } else if (cells > 0 && c.n_chains % cells != 0) {
    r.issue({"n_chains"}, "unbalanced design: n_chains=" + std::to_string(c.n_chains) +
                              " is not divisible by emotions x sentences = " + std::to_string(cells));
  }
  if (c.n_iterations < 1) r.issue({"n_iterations"}, "n_iterations must be >= 1");
  if (c.participants_per_iteration < 1 || c.participants_per_iteration % 2 == 0) {
    r.issue({"participants_per_iteration"},
            "participants_per_iteration must be a positive odd number so the median is a grid value");
  }
  if (!(c.duration_hours > 0.0) || !std::isfinite(c.duration_hours)) {
    r.issue({"duration_hours"}, "duration_hours must be positive");
  }
  if (c.n_random < 0) r.issue({"n_random"}, "n_random must be >= 0");
  if (c.renderer.kind == RendererConfig::Kind::external && c.renderer.url.empty()) {
    r.issue({"renderer", "url"}, "external renderer requires a url");
  }
  if (!(c.renderer.timeout_s > 0.0)) r.issue({"renderer", "timeout_s"}, "timeout must be positive");
  if (c.renderer.max_in_flight < 1) r.issue({"renderer", "max_in_flight"}, "max_in_flight must be >= 1");
  if (c.assignment_timeout_s < 1) r.issue({"assignment_timeout_s"}, "assignment timeout must be >= 1 s");
  if (c.rating_target < 1) r.issue({"rating_target"}, "rating_target must be >= 1");
  if (c.snapshot_interval < 0) r.issue({"snapshot_interval"}, "snapshot_interval must be >= 0");
}

ExperimentConfig from_object(Reader& r, const json& root) {
  ExperimentConfig c;
  for (const auto& [key, _] : root.items()) {
    if (!kTopKeys.contains(key)) r.issue({key}, "unknown key");
  }
  read(r, root, {"dimensions"}, c.dimensions);
  if (const auto it = root.find("grid"); it != root.end()) {
    if (!it->is_object()) {
      r.issue({"grid"}, "expected an object {lo, hi, n}");
    } else {
      for (const auto& [key, _] : it->items()) {
        if (!kGridKeys.contains(key)) r.issue({"grid", key}, "unknown key");
      }
      read(r, *it, {"grid", "lo"}, c.grid.lo);
      read(r, *it, {"grid", "hi"}, c.grid.hi);
      read(r, *it, {"grid", "n"}, c.grid.n);
    }
  }
  if (const auto it = root.find("emotions"); it != root.end()) {
    c.emotions.clear();
    if (!it->is_array()) {
      r.issue({"emotions"}, "expected a list of emotion names");
    } else {
      for (const auto& e : *it) {
        const auto parsed = e.is_string() ? parse_emotion(e.get<std::string>()) : std::nullopt;
        if (!parsed) {
          r.issue({"emotions"}, "unknown emotion " + e.dump() + " (expected anger, happiness or sadness)");
        } else {
          c.emotions.push_back(*parsed);
        }
      }
    }
  }
  if (const auto it = root.find("sentences"); it != root.end()) {
    c.sentences = read_sentences(r, *it, "sentences", "S");
  }
  if (const auto it = root.find("novel_sentences"); it != root.end()) {
    c.novel_sentences = read_sentences(r, *it, "novel_sentences", "N");
  }
  read(r, root, {"n_chains"}, c.n_chains);
  read(r, root, {"n_iterations"}, c.n_iterations);
  read(r, root, {"participants_per_iteration"}, c.participants_per_iteration);
  read(r, root, {"duration_hours"}, c.duration_hours);
  read(r, root, {"n_random"}, c.n_random);
  read(r, root, {"seed"}, c.seed);
  read(r, root, {"assignment_timeout_s"}, c.assignment_timeout_s);
  read(r, root, {"rating_target"}, c.rating_target);
  read(r, root, {"require_prescreening"}, c.require_prescreening);
  read(r, root, {"snapshot_interval"}, c.snapshot_interval);
  if (const auto it = root.find("renderer"); it != root.end()) {
    if (it->is_string()) {
      const auto kind = it->get<std::string>();
      if (kind == "builtin") {
        c.renderer.kind = RendererConfig::Kind::builtin;
      } else {
        r.issue({"renderer"}, "renderer string form only accepts \"builtin\"; use {kind, url} for external");
      }
    } else if (it->is_object()) {
      for (const auto& [key, _] : it->items()) {
        if (!kRendererKeys.contains(key)) r.issue({"renderer", key}, "unknown key");
      }
      std::string kind = "builtin";
      read(r, *it, {"renderer", "kind"}, kind);
      if (kind == "builtin") {
        c.renderer.kind = RendererConfig::Kind::builtin;
      } else if (kind == "external") {
        c.renderer.kind = RendererConfig::Kind::external;
      } else {
        r.issue({"renderer", "kind"}, "renderer kind must be builtin or external");
      }
      read(r, *it, {"renderer", "url"}, c.renderer.url);
      read(r, *it, {"renderer", "mapping"}, c.renderer.mapping_path);
      read(r, *it, {"renderer", "timeout_s"}, c.renderer.timeout_s);
      read(r, *it, {"renderer", "max_in_flight"}, c.renderer.max_in_flight);
    } else {
      r.issue({"renderer"}, "expected \"builtin\" or an object {kind, url}");
    }
  }
  return c;
}

}  // namespace

ExperimentConfig::ExperimentConfig() : sentences(default_sentences()), novel_sentences(default_novel_sentences()) {}

const SentenceRef* ExperimentConfig::find_sentence(std::string_view id) const noexcept {
  for (const auto* list : {&sentences, &novel_sentences}) {
    for (const auto& s : *list) {
      if (s.id == id) return &s;
    }
  }
  return nullptr;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(Errc::config,
            [&] {
              std::string msg = "invalid configuration:";
              for (const auto& i : issues) {
                msg += "\n  ";
                if (i.line > 0) msg += "line " + std::to_string(i.line) + ": ";
                if (!i.key.empty()) msg += i.key + ": ";
                msg += i.message;
              }
              return msg;
            }()),
      issues_(std::move(issues)) {}

nlohmann::json ConfigError::report() const {
  json out = json::array();
  for (const auto& i : issues_) {
    out.push_back({{"line", i.line}, {"key", i.key}, {"message", i.message}});
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides) {
  Reader r(text);
  json root = json::object();
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); });
  if (!blank) {
    try {
      root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
      r.issue_at(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), "", e.what());
      throw ConfigError(std::move(r.issues()));
    }
    if (!root.is_object()) {
      r.issue_at(1, "", "configuration must be an object");
      throw ConfigError(std::move(r.issues()));
    }
  }
  for (const auto& o : overrides) apply_override(r, root, o);
  ExperimentConfig config = from_object(r, root);
  collect_validation(config, r);
  if (!r.issues().empty()) throw ConfigError(std::move(r.issues()));
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({{0, "", "cannot read config file " + path.string()}});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), overrides);
}

void validate(const ExperimentConfig& config) {
  Reader r("");
  collect_validation(config, r);
  if (!r.issues().empty()) throw ConfigError(std::move(r.issues()));
}

nlohmann::json to_json(const ExperimentConfig& c) {
  auto sentences = [](const std::vector<SentenceRef>& list) {
    json out = json::array();
    for (const auto& s : list) out.push_back({{"id", s.id}, {"text", s.text}});
    return out;
  };
  json emotions = json::array();
  for (Emotion e : c.emotions) emotions.push_back(std::string(to_string(e)));
  json renderer{{"kind", c.renderer.kind == RendererConfig::Kind::builtin ? "builtin" : "external"},
                {"timeout_s", c.renderer.timeout_s},
                {"max_in_flight", c.renderer.max_in_flight}};
  if (!c.renderer.url.empty()) renderer["url"] = c.renderer.url;
  if (!c.renderer.mapping_path.empty()) renderer["mapping"] = c.renderer.mapping_path;
  return json{{"dimensions", c.dimensions},
              {"grid", {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"n", c.grid.n}}},
              {"emotions", emotions},
              {"sentences", sentences(c.sentences)},
              {"n_chains", c.n_chains},
              {"n_iterations", c.n_iterations},
              {"participants_per_iteration", c.participants_per_iteration},
              {"duration_hours", c.duration_hours},
              {"novel_sentences", sentences(c.novel_sentences)},
              {"n_random", c.n_random},
              {"seed", c.seed},
              {"renderer", renderer},
              {"assignment_timeout_s", c.assignment_timeout_s},
              {"rating_target", c.rating_target},
              {"require_prescreening", c.require_prescreening},
              {"snapshot_interval", c.snapshot_interval}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) { return parse_config(j.dump()); }

}  // namespace gsp
