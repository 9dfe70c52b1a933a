#pragma once

// Provider-agnostic language-model roles: prompt templates, request
// rendering, decoding defaults, response parsing, and the two-ordering
// funniness judge.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "text.hpp"
#include "util.hpp"

namespace homer {

enum class Role {
  extractor_description,
  extractor_scripts,
  imaginator_local,
  imaginator_global,
  imaginator_chain,
  generator,
  judge,
};

inline const char* role_name(Role r) {
  switch (r) {
    case Role::extractor_description: return "extractor_description";
    case Role::extractor_scripts: return "extractor_scripts";
    case Role::imaginator_local: return "imaginator_local";
    case Role::imaginator_global: return "imaginator_global";
    case Role::imaginator_chain: return "imaginator_chain";
    case Role::generator: return "generator";
    case Role::judge: return "judge";
  }
  return "?";
}

/// Generation runs hot for creativity; judging runs at zero for stable,
/// reproducible verdicts.
inline double default_temperature(Role r) {
  return r == Role::judge ? 0.0 : 1.0;
}

/// Roles whose requests must carry the image.
inline bool role_requires_image(Role r) {
  return r == Role::extractor_description || r == Role::extractor_scripts ||
         r == Role::imaginator_global;
}

struct Message {
  std::string speaker;  // "system" | "user" | "assistant"
  std::string content;
};

struct RoleRequest {
  Role role = Role::generator;
  std::vector<Message> messages;
  std::optional<std::string> image_ref;
  double temperature = 1.0;
  std::optional<std::uint64_t> seed;
};

struct GenerationOptions {
  std::string narrative_strategy;
  std::string linguistic_style;
};

struct ConflictScript {
  std::string side_a;
  std::string side_b;

  bool operator==(const ConflictScript&) const = default;
};

inline std::string script_text(const ConflictScript& s) {
  return s.side_a + " vs. " + s.side_b;
}

inline std::string scripts_to_text(const std::vector<ConflictScript>& scripts) {
  std::string out;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    out += std::to_string(i + 1) + ". " + script_text(scripts[i]) + "\n";
  }
  return out;
}

// --- templates ---------------------------------------------------------------

struct PromptTemplate {
  std::string system;
  std::string user;
};

/// Versioned prompt templates loaded from `<dir>/<version>/<name>.txt`.
/// Each file holds a [system] section and a [user] section with
/// {placeholder} slots.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir, const std::string& version) {
    TemplateSet set;
    set.version_ = version;
    const std::filesystem::path base = dir / version;
    for (const char* name :
         {"extractor_description", "extractor_scripts", "imaginator_local",
          "imaginator_global", "imaginator_chain", "generator",
          "generator_revise", "judge"}) {
      set.templates_[name] = parse_template(base / (std::string(name) + ".txt"));
    }
    return set;
  }

  const PromptTemplate& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw TemplateError("unknown template: " + name);
    return it->second;
  }

  const std::string& version() const { return version_; }

 private:
  static PromptTemplate parse_template(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("template file missing: " + path.string());
    PromptTemplate t;
    std::string* target = nullptr;
    std::string line;
    while (std::getline(in, line)) {
      if (line == "[system]") {
        target = &t.system;
      } else if (line == "[user]") {
        target = &t.user;
      } else if (target) {
        *target += line;
        *target += '\n';
      }
    }
    t.system = trim(t.system);
    t.user = trim(t.user);
    if (t.system.empty() && t.user.empty()) {
      throw ParseError("template has no [system] or [user] section: " + path.string());
    }
    return t;
  }

  std::string version_;
  std::map<std::string, PromptTemplate> templates_;
};

/// Which role a template renders into. generator_revise is the second
/// generator call.
inline Role role_of_template(const std::string& name) {
  if (name == "extractor_description") return Role::extractor_description;
  if (name == "extractor_scripts") return Role::extractor_scripts;
  if (name == "imaginator_local") return Role::imaginator_local;
  if (name == "imaginator_global") return Role::imaginator_global;
  if (name == "imaginator_chain") return Role::imaginator_chain;
  if (name == "generator" || name == "generator_revise") return Role::generator;
  if (name == "judge") return Role::judge;
  throw TemplateError("unknown template: " + name);
}

namespace detail {

inline std::string substitute(const std::string& text,
                              const std::map<std::string, std::string>& bindings,
                              const std::string& template_name) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    char c = text[i];
    if (c == '{') {
      if (i + 1 < text.size() && text[i + 1] == '{') {
        out += '{';
        i += 2;
        continue;
      }
      std::size_t close = text.find('}', i + 1);
      if (close == std::string::npos) {
        throw TemplateError("unterminated placeholder in template '" + template_name + "'");
      }
      const std::string name = text.substr(i + 1, close - i - 1);
      auto it = bindings.find(name);
      if (it == bindings.end()) {
        throw TemplateError("placeholder '" + name + "' has no binding in template '" +
                            template_name + "'");
      }
      out += it->second;
      i = close + 1;
      continue;
    }
    if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
      out += '}';
      i += 2;
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace detail

/// Fills a template into a ready request. The reserved binding "image_ref"
/// attaches the image; roles that need one fail without it. Byte-deterministic
/// in (template, bindings).
inline RoleRequest render_prompt(const TemplateSet& templates, const std::string& name,
                                 const std::map<std::string, std::string>& bindings) {
  const PromptTemplate& tpl = templates.get(name);
  RoleRequest req;
  req.role = role_of_template(name);
  req.temperature = default_temperature(req.role);
  if (auto it = bindings.find("image_ref"); it != bindings.end() && !it->second.empty()) {
    req.image_ref = it->second;
  }
  if (role_requires_image(req.role) && !req.image_ref) {
    throw TemplateError("template '" + name + "' requires an image_ref binding");
  }
  std::map<std::string, std::string> text_bindings = bindings;
  text_bindings.erase("image_ref");
  if (!tpl.system.empty()) {
    req.messages.push_back({"system", detail::substitute(tpl.system, text_bindings, name)});
  }
  if (!tpl.user.empty()) {
    req.messages.push_back({"user", detail::substitute(tpl.user, text_bindings, name)});
  }
  return req;
}

// --- provider contract -------------------------------------------------------

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  /// Returns the model text. Throws TransientError for retryable wire
  /// failures, CredentialError for authentication problems.
  virtual std::string complete(const RoleRequest& request) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  int backoff_ms = 250;  // doubles per retry
};

/// Append-only request/response log, one JSON object per call.
class Transcript {
 public:
  explicit Transcript(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::trunc);
  }

  void record(const RoleRequest& request, const std::string& response) {
    nlohmann::json messages = nlohmann::json::array();
    std::string request_text;
    for (const Message& m : request.messages) {
      messages.push_back({{"speaker", m.speaker}, {"content", m.content}});
      request_text += m.content;
    }
    nlohmann::json entry{
        {"role", role_name(request.role)},
        {"temperature", request.temperature},
        {"image_ref", request.image_ref ? nlohmann::json(*request.image_ref) : nlohmann::json()},
        {"request_digest", to_hex(fnv1a64(request_text))},
        {"response_digest", to_hex(fnv1a64(response))},
        {"messages", messages},
        {"response", response},
    };
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << entry.dump() << '\n';
    out_.flush();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

/// Completion wrapper: retries transient failures with exponential backoff,
/// never retries credential errors, logs the exchange.
inline std::string complete(Provider& provider, const RoleRequest& request,
                            const RetryPolicy& retry, Transcript* transcript = nullptr) {
  int attempt = 0;
  std::string last_error;
  while (true) {
    try {
      std::string response = provider.complete(request);
      if (transcript) transcript->record(request, response);
      return response;
    } catch (const CredentialError&) {
      throw;
    } catch (const TransientError& e) {
      last_error = e.what();
      if (attempt >= retry.max_retries) {
        throw ProviderError("provider '" + provider.name() + "' failed after " +
                            std::to_string(attempt + 1) + " attempts: " + last_error);
      }
      if (retry.backoff_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(retry.backoff_ms << attempt));
      }
      ++attempt;
    }
  }
}

// --- response parsing --------------------------------------------------------

/// Parses enumerated "X vs. Y" pairs out of extractor output. Accepts "vs."
/// or "vs" as the separator; items split on numbering or line breaks.
inline std::vector<ConflictScript> parse_scripts(const std::string& response) {
  std::vector<std::string> items;
  std::string cur;
  auto flush = [&] {
    std::string t = trim(cur);
    if (!t.empty()) items.push_back(t);
    cur.clear();
  };
  for (std::size_t i = 0; i < response.size(); ++i) {
    char c = response[i];
    if (c == '\n') {
      flush();
      continue;
    }
    // a new "N." enumerator starts the next item
    if (std::isdigit(static_cast<unsigned char>(c)) && (i == 0 || cur.empty() || response[i - 1] == ' ')) {
      std::size_t j = i;
      while (j < response.size() && std::isdigit(static_cast<unsigned char>(response[j]))) ++j;
      if (j < response.size() && (response[j] == '.' || response[j] == ')')) {
        flush();
        i = j;  // skip "N." / "N)"
        continue;
      }
    }
    cur += c;
  }
  flush();

  std::vector<ConflictScript> scripts;
  for (std::string item : items) {
    while (!item.empty() && (item[0] == '-' || item[0] == '*' || item[0] == ' ')) {
      item.erase(item.begin());
    }
    const std::string lowered = to_lower(item);
    std::size_t pos = std::string::npos;
    std::size_t sep_len = 0;
    for (std::string_view sep : {" vs. ", " vs ", " versus "}) {
      std::size_t p = lowered.find(sep);
      if (p != std::string::npos && (pos == std::string::npos || p < pos)) {
        pos = p;
        sep_len = sep.size();
      }
    }
    if (pos == std::string::npos) continue;
    ConflictScript s;
    s.side_a = trim(item.substr(0, pos));
    s.side_b = trim(item.substr(pos + sep_len));
    while (!s.side_b.empty() && (s.side_b.back() == '.' || s.side_b.back() == ';')) {
      s.side_b.pop_back();
      s.side_b = trim(s.side_b);
    }
    if (!s.side_a.empty() && !s.side_b.empty()) scripts.push_back(std::move(s));
  }
  if (scripts.empty()) {
    throw ExtractionError("no conflicting script pairs found", response);
  }
  return scripts;
}

/// Parses a numbered list ("1. text" / "1) text", one item per line).
inline std::vector<std::string> parse_numbered_list(const std::string& response) {
  std::vector<std::string> items;
  for (const std::string& raw : split(response, '\n')) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) continue;
    std::string item = trim(line.substr(i + 1));
    if (!item.empty()) items.push_back(std::move(item));
  }
  return items;
}

enum class Verdict { A, B };

inline char verdict_letter(Verdict v) { return v == Verdict::A ? 'A' : 'B'; }

/// First standalone A/B token in the response.
inline Verdict parse_verdict(const std::string& response) {
  for (std::size_t i = 0; i < response.size(); ++i) {
    char c = response[i];
    if (c != 'A' && c != 'a' && c != 'B' && c != 'b') continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(response[i - 1]));
    const bool right_ok =
        i + 1 >= response.size() || !std::isalnum(static_cast<unsigned char>(response[i + 1]));
    if (left_ok && right_ok) {
      return (c == 'A' || c == 'a') ? Verdict::A : Verdict::B;
    }
  }
  throw JudgeError("judge response carries no A/B verdict: " + response);
}

struct JudgeContext {
  std::optional<std::string> image_ref;
  std::optional<std::string> description;
};

/// Compares caption `a` (candidate) against caption `b` (the human-written
/// reference). Both orderings are evaluated; disagreement between them rules
/// for the human side, as does an identical pair.
inline Verdict judge_funnier(const JudgeContext& context, const std::string& a,
                             const std::string& b, const TemplateSet& templates,
                             Provider& provider, const RetryPolicy& retry,
                             Transcript* transcript = nullptr) {
  if (a.empty() || b.empty()) throw std::invalid_argument("judge_funnier: empty caption");
  if (a == b) return Verdict::B;

  auto ask = [&](const std::string& first, const std::string& second) {
    std::map<std::string, std::string> bindings{
        {"caption_a", first},
        {"caption_b", second},
        {"description", context.description.value_or("(no description available)")},
    };
    if (context.image_ref) bindings["image_ref"] = *context.image_ref;
    RoleRequest req = render_prompt(templates, "judge", bindings);
    return parse_verdict(complete(provider, req, retry, transcript));
  };

  const Verdict forward = ask(a, b);
  const Verdict backward = ask(b, a);
  const bool a_wins_forward = forward == Verdict::A;
  const bool a_wins_backward = backward == Verdict::B;
  if (a_wins_forward && a_wins_backward) return Verdict::A;
  return Verdict::B;
}

}  // namespace homer
