#pragma once

// Run configuration: key=value file parsing, defaults, validation, and the
// canonical form that feeds cache keys.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "util.hpp"

namespace homer {

struct RunConfig {
  std::filesystem::path lexdb_path;
  std::filesystem::path corpus_path;  // optional; curated corpus for reference
  std::filesystem::path index_path;

  std::string provider_type = "mock";  // "mock" | "http"
  std::filesystem::path provider_script;  // mock response script
  std::string provider_endpoint;
  std::string provider_model;
  std::string provider_credential_env = "HOMER_API_KEY";
  int provider_concurrency = 4;
  int provider_retries = 3;
  int provider_backoff_ms = 250;
  int provider_rate_limit_ms = 0;  // minimum spacing between call starts

  int k = 5;
  int delta = 5;
  int m_cap = 5;
  int captions_per_image = 5;
  int trials = 5;
  std::uint64_t seed = 0;
  bool seed_generated = false;  // true when no seed key was present

  std::vector<std::string> ns_list = {"exaggeration", "role-reversal", "pun setup",
                                      "deadpan observation", "dialogue line"};
  std::vector<std::string> la_list = {"one-liner", "wordplay", "understatement"};

  std::filesystem::path templates_path = "templates";
  std::string templates_version = "v1";
  std::filesystem::path output_dir = "out";
  int workers = 1;

  /// Stable serialization of the generation-relevant settings. Operational
  /// knobs (concurrency, retries, workers, paths that only locate content)
  /// stay out so they never invalidate caches.
  std::string canonical() const {
    std::string s;
    s += "provider.type=" + provider_type + ";";
    s += "provider.model=" + provider_model + ";";
    s += "provider.script=" + provider_script.string() + ";";
    s += "k=" + std::to_string(k) + ";";
    s += "delta=" + std::to_string(delta) + ";";
    s += "m_cap=" + std::to_string(m_cap) + ";";
    s += "captions_per_image=" + std::to_string(captions_per_image) + ";";
    s += "trials=" + std::to_string(trials) + ";";
    s += "seed=" + std::to_string(seed) + ";";
    s += "ns_list=" + join(ns_list) + ";";
    s += "la_list=" + join(la_list) + ";";
    s += "templates.version=" + templates_version + ";";
    s += "lexdb.path=" + lexdb_path.string() + ";";
    return s;
  }

  void validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (delta < 1) throw ConfigError("delta must be >= 1");
    if (m_cap < 1) throw ConfigError("m_cap must be >= 1");
    if (captions_per_image < 1) throw ConfigError("captions_per_image must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (provider_concurrency < 1) throw ConfigError("provider.concurrency must be >= 1");
    if (provider_type != "mock" && provider_type != "http") {
      throw ConfigError("provider.type must be 'mock' or 'http'");
    }
    if (provider_type == "http" && provider_endpoint.empty()) {
      throw ConfigError("provider.endpoint is required for provider.type=http");
    }
    if (provider_type == "mock" && provider_script.empty()) {
      throw ConfigError("provider.script is required for provider.type=mock");
    }
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += ',';
      out += s;
    }
    return out;
  }
};

inline std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const std::string& part : split(value, ',')) {
    std::string t = trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

/// Parses a `key = value` config file. Lines starting with '#' are comments.
/// Unknown keys are errors. A missing seed is generated and flagged so the
/// run can record it.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  RunConfig cfg;
  bool seed_seen = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    try {
      if (key == "lexdb.path") cfg.lexdb_path = value;
      else if (key == "corpus.path") cfg.corpus_path = value;
      else if (key == "index.path") cfg.index_path = value;
      else if (key == "provider.type") cfg.provider_type = value;
      else if (key == "provider.script") cfg.provider_script = value;
      else if (key == "provider.endpoint") cfg.provider_endpoint = value;
      else if (key == "provider.model") cfg.provider_model = value;
      else if (key == "provider.credential_env") cfg.provider_credential_env = value;
      else if (key == "provider.concurrency") cfg.provider_concurrency = std::stoi(value);
      else if (key == "provider.retries") cfg.provider_retries = std::stoi(value);
      else if (key == "provider.retry_backoff_ms") cfg.provider_backoff_ms = std::stoi(value);
      else if (key == "provider.rate_limit_ms") cfg.provider_rate_limit_ms = std::stoi(value);
      else if (key == "k") cfg.k = std::stoi(value);
      else if (key == "delta") cfg.delta = std::stoi(value);
      else if (key == "m_cap") cfg.m_cap = std::stoi(value);
      else if (key == "captions_per_image") cfg.captions_per_image = std::stoi(value);
      else if (key == "trials") cfg.trials = std::stoi(value);
      else if (key == "seed") {
        cfg.seed = std::stoull(value);
        seed_seen = true;
      } else if (key == "ns_list") cfg.ns_list = parse_list(value);
      else if (key == "la_list") cfg.la_list = parse_list(value);
      else if (key == "templates.path") cfg.templates_path = value;
      else if (key == "templates.version") cfg.templates_version = value;
      else if (key == "output.dir") cfg.output_dir = value;
      else if (key == "workers") cfg.workers = std::stoi(value);
      else {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  if (cfg.lexdb_path.empty()) {
    if (const char* env = std::getenv("HOMER_LEXDB_PATH")) cfg.lexdb_path = env;
  }
  if (!seed_seen) {
    cfg.seed = std::random_device{}();
    cfg.seed_generated = true;
  }
  if (cfg.ns_list.empty() || cfg.la_list.empty()) {
    throw ConfigError("ns_list and la_list must not be empty");
  }
  cfg.validate();
  return cfg;
}

}  // namespace homer
