#pragma once

// Provider implementations: a chat-completions HTTP client and the
// deterministic mock used for hermetic runs and tests.

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "errors.hpp"
#include "roles.hpp"
#include "util.hpp"

namespace homer {

inline std::string base64_encode(std::string_view data) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < data.size()) {
    unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                 (static_cast<unsigned char>(data[i + 1]) << 8) |
                 static_cast<unsigned char>(data[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i + 1 == data.size()) {
    unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                 (static_cast<unsigned char>(data[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

struct HttpProviderConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string credential_env = "HOMER_API_KEY";
  int timeout_s = 120;
};

/// Chat-completions wire adapter. The credential is read from the configured
/// environment variable and travels only in the Authorization header.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (key) credential_ = key;
  }

  std::string name() const override { return "http:" + config_.model; }

  std::string complete(const RoleRequest& request) override {
    if (credential_.empty()) {
      throw CredentialError("credential env var '" + config_.credential_env +
                            "' is unset or empty");
    }
    std::string scheme, host, path;
    int port = 0;
    parse_endpoint(scheme, host, port, path);

    nlohmann::json body{{"model", config_.model},
                        {"temperature", request.temperature}};
    if (request.seed) body["seed"] = *request.seed;
    nlohmann::json messages = nlohmann::json::array();
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
      const Message& m = request.messages[i];
      const bool attach_image = request.image_ref && m.speaker == "user" &&
                                i + 1 == request.messages.size();
      if (!attach_image) {
        messages.push_back({{"role", m.speaker}, {"content", m.content}});
        continue;
      }
      nlohmann::json parts = nlohmann::json::array();
      parts.push_back({{"type", "text"}, {"text", m.content}});
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", image_data_url(*request.image_ref)}}}});
      messages.push_back({{"role", m.speaker}, {"content", parts}});
    }
    body["messages"] = messages;

    httplib::Headers headers{{"Authorization", "Bearer " + credential_}};
    httplib::Result result;
    if (scheme == "https") {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
      httplib::SSLClient client(host, port);
      client.set_read_timeout(config_.timeout_s, 0);
      result = client.Post(path, headers, body.dump(), "application/json");
#else
      throw ProviderError("built without TLS support; https endpoint unavailable");
#endif
    } else {
      httplib::Client client(host, port);
      client.set_read_timeout(config_.timeout_s, 0);
      result = client.Post(path, headers, body.dump(), "application/json");
    }

    if (!result) {
      throw TransientError("connection to " + host + " failed: " +
                           httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
      throw CredentialError("provider rejected the credential (HTTP " +
                            std::to_string(result->status) + ")");
    }
    if (result->status == 429 || result->status >= 500) {
      throw TransientError("provider returned HTTP " + std::to_string(result->status));
    }
    if (result->status != 200) {
      throw ProviderError("provider returned HTTP " + std::to_string(result->status) +
                          ": " + result->body);
    }
    try {
      nlohmann::json reply = nlohmann::json::parse(result->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("malformed provider response: ") + e.what());
    }
  }

 private:
  void parse_endpoint(std::string& scheme, std::string& host, int& port,
                      std::string& path) const {
    const std::string& url = config_.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("bad endpoint URL: " + url);
    scheme = url.substr(0, scheme_end);
    auto rest = url.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    path = slash == std::string::npos ? "/" : rest.substr(slash);
    auto colon = authority.find(':');
    if (colon == std::string::npos) {
      host = authority;
      port = scheme == "https" ? 443 : 80;
    } else {
      host = authority.substr(0, colon);
      port = std::stoi(authority.substr(colon + 1));
    }
  }

  std::string image_data_url(const std::string& image_ref) const {
    const std::string bytes = read_file(image_ref);
    std::string mime = "image/png";
    auto dot = image_ref.rfind('.');
    if (dot != std::string::npos) {
      std::string ext = to_lower(image_ref.substr(dot + 1));
      if (ext == "jpg" || ext == "jpeg") mime = "image/jpeg";
      if (ext == "gif") mime = "image/gif";
      if (ext == "webp") mime = "image/webp";
    }
    return "data:" + mime + ";base64," + base64_encode(bytes);
  }

  HttpProviderConfig config_;
  std::string credential_;
};

/// Deterministic scripted provider. Responses resolve by role plus an
/// optional substring match against the request (messages and image_ref);
/// the first matching entry wins, then the role default. Judge requests can
/// instead be answered by a content rule, so both orderings of a pair stay
/// consistent. Also injects failures and counts calls for budget tests.
class MockProvider : public Provider {
 public:
  std::string name() const override { return "mock"; }

  void respond(Role role, std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back({role, {}, std::move(text)});
  }

  void respond_when(Role role, std::string match, std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back({role, {std::move(match)}, std::move(text)});
  }

  /// Entry fires only when every listed substring appears in the request.
  void respond_when_all(Role role, std::vector<std::string> matches, std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back({role, std::move(matches), std::move(text)});
  }

  /// Judge answers with the side whose caption contains the needle.
  void judge_prefers(std::string needle) {
    std::lock_guard<std::mutex> lock(mutex_);
    judge_needle_ = std::move(needle);
  }

  void fail_transient(int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (int i = 0; i < times; ++i) pending_failures_.push_back(Failure::transient);
  }

  void fail_credential() {
    std::lock_guard<std::mutex> lock(mutex_);
    pending_failures_.push_back(Failure::credential);
  }

  /// Every subsequent call for `role` throws; used for failure isolation.
  void break_role(Role role) {
    std::lock_guard<std::mutex> lock(mutex_);
    broken_roles_.insert(role);
  }

  std::string complete(const RoleRequest& request) override {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!pending_failures_.empty()) {
      Failure f = pending_failures_.front();
      pending_failures_.pop_front();
      if (f == Failure::credential) throw CredentialError("mock credential failure");
      throw TransientError("mock transient failure");
    }
    calls_.push_back(request);
    ++counts_[request.role];
    if (broken_roles_.count(request.role)) {
      throw ProviderError("mock role breakage: " + std::string(role_name(request.role)));
    }

    if (request.role == Role::judge && !judge_needle_.empty()) {
      return judge_by_content(request);
    }
    std::string haystack = request.image_ref.value_or("");
    for (const Message& m : request.messages) haystack += "\n" + m.content;
    for (const Entry& e : entries_) {
      if (e.role != request.role) continue;
      bool hit = true;
      for (const std::string& needle : e.match) {
        if (haystack.find(needle) == std::string::npos) {
          hit = false;
          break;
        }
      }
      if (hit) return e.text;
    }
    throw ProviderError("mock has no response for role " +
                        std::string(role_name(request.role)));
  }

  int count(Role role) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = counts_.find(role);
    return it == counts_.end() ? 0 : it->second;
  }

  int total_calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return static_cast<int>(calls_.size());
  }

  std::vector<RoleRequest> calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }

  void reset_counters() {
    std::lock_guard<std::mutex> lock(mutex_);
    calls_.clear();
    counts_.clear();
  }

  /// Loads a response script:
  ///   {"responses": [{"role": "...", "match": "...", "text": "..."}],
  ///    "judge_prefer_contains": "..."}
  static std::unique_ptr<MockProvider> from_script(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("bad mock script " + path.string() + ": " + e.what());
    }
    auto mock = std::make_unique<MockProvider>();
    for (const auto& entry : doc.value("responses", nlohmann::json::array())) {
      const std::string role_str = entry.at("role").get<std::string>();
      std::optional<Role> role;
      for (Role r : {Role::extractor_description, Role::extractor_scripts,
                     Role::imaginator_local, Role::imaginator_global,
                     Role::imaginator_chain, Role::generator, Role::judge}) {
        if (role_str == role_name(r)) role = r;
      }
      if (!role) throw ParseError("bad mock script: unknown role '" + role_str + "'");
      std::vector<std::string> matches;
      if (entry.contains("match")) {
        if (entry.at("match").is_array()) {
          for (const auto& m : entry.at("match")) matches.push_back(m.get<std::string>());
        } else {
          matches.push_back(entry.at("match").get<std::string>());
        }
      }
      mock->respond_when_all(*role, std::move(matches), entry.at("text").get<std::string>());
    }
    if (doc.contains("judge_prefer_contains")) {
      mock->judge_prefers(doc.at("judge_prefer_contains").get<std::string>());
    }
    return mock;
  }

 private:
  enum class Failure { transient, credential };

  struct Entry {
    Role role;
    std::vector<std::string> match;  // all substrings must appear
    std::string text;
  };

  std::string judge_by_content(const RoleRequest& request) const {
    std::string a_line, b_line;
    for (const Message& m : request.messages) {
      for (const std::string& line : split(m.content, '\n')) {
        if (line.rfind("Caption A:", 0) == 0) a_line = line;
        if (line.rfind("Caption B:", 0) == 0) b_line = line;
      }
    }
    if (a_line.find(judge_needle_) != std::string::npos) return "A";
    if (b_line.find(judge_needle_) != std::string::npos) return "B";
    return "B";
  }

  mutable std::mutex mutex_;
  std::vector<Entry> entries_;
  std::string judge_needle_;
  std::deque<Failure> pending_failures_;
  std::set<Role> broken_roles_;
  std::vector<RoleRequest> calls_;
  std::map<Role, int> counts_;
};

}  // namespace homer
