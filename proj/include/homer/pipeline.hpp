#pragma once

// Three-phase orchestration over an image set: script extraction, imagination
// with retrieval, caption generation. Handles per-image seeding, phase
// caching, failure isolation, judging, and report aggregation.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "evalharness.hpp"
#include "imagination.hpp"
#include "jokebase.hpp"
#include "lexdb.hpp"
#include "providers.hpp"
#include "roles.hpp"
#include "scoring.hpp"
#include "util.hpp"

namespace homer {

struct HumorFoundation {
  std::string image_id;
  std::string description;
  std::vector<ConflictScript> scripts;
};

struct RunPaths {
  std::filesystem::path root;
  std::filesystem::path foundations;
  std::filesystem::path trees;
  std::filesystem::path captions;
  std::filesystem::path verdicts;
  std::filesystem::path reports;
  std::filesystem::path transcripts;

  static RunPaths under(const std::filesystem::path& root) {
    return {root,
            root / "foundations",
            root / "trees",
            root / "captions",
            root / "verdicts",
            root / "reports",
            root / "transcripts"};
  }

  void ensure() const {
    for (const auto& p :
         {root, foundations, trees, captions, verdicts, reports, transcripts}) {
      std::filesystem::create_directories(p);
    }
  }
};

inline std::string image_id_for(const std::filesystem::path& image) {
  std::string id = image.stem().string();
  for (char& c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  if (id.empty()) id = "image";
  return id;
}

/// Per-image, per-trial seed derived from the run seed. Uses the stable hash
/// so reruns land on identical streams everywhere.
inline std::uint64_t derive_seed(std::uint64_t run_seed, const std::string& image_id,
                                 int trial) {
  std::uint64_t h = fnv1a64(image_id, run_seed ^ 0x9e3779b97f4a7c15ULL);
  return fnv1a64("trial:" + std::to_string(trial), h);
}

/// Caps the number of in-flight provider calls and enforces minimum spacing
/// between call starts. The mock provider runs ungated.
class GatedProvider : public Provider {
 public:
  GatedProvider(std::unique_ptr<Provider> inner, int max_concurrent, int min_interval_ms)
      : inner_(std::move(inner)),
        slots_(max_concurrent),
        min_interval_(min_interval_ms) {}

  std::string name() const override { return inner_->name(); }

  std::string complete(const RoleRequest& request) override {
    {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_.wait(lock, [&] { return slots_ > 0; });
      --slots_;
      if (min_interval_.count() > 0) {
        auto now = std::chrono::steady_clock::now();
        if (last_start_ + min_interval_ > now) {
          auto wake = last_start_ + min_interval_;
          lock.unlock();
          std::this_thread::sleep_until(wake);
          lock.lock();
        }
        last_start_ = std::chrono::steady_clock::now();
      }
    }
    try {
      std::string out = inner_->complete(request);
      release();
      return out;
    } catch (...) {
      release();
      throw;
    }
  }

 private:
  void release() {
    std::lock_guard<std::mutex> lock(mutex_);
    ++slots_;
    cv_.notify_one();
  }

  std::unique_ptr<Provider> inner_;
  std::mutex mutex_;
  std::condition_variable cv_;
  int slots_;
  std::chrono::milliseconds min_interval_;
  std::chrono::steady_clock::time_point last_start_{};
};

/// Everything a run needs, loaded once: the lexical database, the joke
/// index, templates, and the provider. The lexical database and index are
/// immutable and shared read-only across workers.
struct PipelineRuntime {
  LexicalDatabase db;
  JokeIndex index;
  TemplateSet templates;
  std::unique_ptr<Provider> provider;
  MockProvider* mock = nullptr;  // set when provider.type == mock
  std::string cache_key;

  static PipelineRuntime open(const RunConfig& cfg) {
    PipelineRuntime rt{LexicalDatabase::load(cfg.lexdb_path),
                       load_index(cfg.index_path),
                       TemplateSet::load(cfg.templates_path, cfg.templates_version),
                       nullptr,
                       nullptr,
                       {}};
    if (cfg.provider_type == "mock") {
      auto mock = MockProvider::from_script(cfg.provider_script);
      rt.mock = mock.get();
      rt.provider = std::move(mock);
    } else {
      HttpProviderConfig hc;
      hc.endpoint = cfg.provider_endpoint;
      hc.model = cfg.provider_model;
      hc.credential_env = cfg.provider_credential_env;
      rt.provider = std::make_unique<GatedProvider>(
          std::make_unique<HttpProvider>(hc), cfg.provider_concurrency,
          cfg.provider_rate_limit_ms);
    }
    rt.cache_key = to_hex(fnv1a64(cfg.templates_version + "|" + cfg.canonical() + "|" +
                                  to_hex(fnv1a64(read_file(cfg.index_path)))));
    return rt;
  }

  RetryPolicy retry(const RunConfig& cfg) const {
    return {cfg.provider_retries, cfg.provider_backoff_ms};
  }
};

// --- artifact io -------------------------------------------------------------

inline void save_foundation(const HumorFoundation& f, const std::string& cache_key,
                            const std::filesystem::path& path) {
  nlohmann::json scripts = nlohmann::json::array();
  for (const ConflictScript& s : f.scripts) {
    scripts.push_back({{"side_a", s.side_a}, {"side_b", s.side_b}});
  }
  nlohmann::json doc{{"cache_key", cache_key},
                     {"image_id", f.image_id},
                     {"description", f.description},
                     {"scripts", scripts}};
  write_file(path, doc.dump(2) + "\n");
}

inline std::optional<HumorFoundation> load_foundation(const std::filesystem::path& path,
                                                      const std::string& cache_key) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json doc = nlohmann::json::parse(read_file(path));
  if (doc.value("cache_key", "") != cache_key) return std::nullopt;  // stale
  HumorFoundation f;
  f.image_id = doc.at("image_id").get<std::string>();
  f.description = doc.at("description").get<std::string>();
  for (const auto& s : doc.at("scripts")) {
    f.scripts.push_back({s.at("side_a").get<std::string>(), s.at("side_b").get<std::string>()});
  }
  return f;
}

inline void save_captions(const std::string& image_id,
                          const std::vector<CaptionRecord>& records,
                          const std::string& cache_key,
                          const std::filesystem::path& path) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CaptionRecord& r : records) {
    rows.push_back({{"trial", r.trial},
                    {"text", r.text},
                    {"narrative_strategy", r.options.narrative_strategy},
                    {"linguistic_style", r.options.linguistic_style},
                    {"path", r.path},
                    {"script", {{"side_a", r.script.side_a}, {"side_b", r.script.side_b}}},
                    {"target", r.target}});
  }
  nlohmann::json doc{{"cache_key", cache_key}, {"image_id", image_id}, {"records", rows}};
  write_file(path, doc.dump(2) + "\n");
}

inline std::optional<std::vector<CaptionRecord>> load_captions(
    const std::filesystem::path& path, const std::string& cache_key) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json doc = nlohmann::json::parse(read_file(path));
  if (!cache_key.empty() && doc.value("cache_key", "") != cache_key) return std::nullopt;
  std::vector<CaptionRecord> records;
  for (const auto& r : doc.at("records")) {
    CaptionRecord rec;
    rec.trial = r.at("trial").get<int>();
    rec.text = r.at("text").get<std::string>();
    rec.options.narrative_strategy = r.at("narrative_strategy").get<std::string>();
    rec.options.linguistic_style = r.at("linguistic_style").get<std::string>();
    rec.path = r.at("path").get<std::vector<std::string>>();
    rec.script = {r.at("script").at("side_a").get<std::string>(),
                  r.at("script").at("side_b").get<std::string>()};
    rec.target = r.at("target").get<std::string>();
    records.push_back(std::move(rec));
  }
  return records;
}

// --- phases ------------------------------------------------------------------

namespace detail {

inline HumorFoundation run_phase_extract(const std::filesystem::path& image,
                                         const std::string& image_id,
                                         PipelineRuntime& rt,
                                         const RoleClient& client) {
  RoleRequest describe = render_prompt(rt.templates, "extractor_description",
                                       {{"image_ref", image.string()}});
  HumorFoundation f;
  f.image_id = image_id;
  f.description = trim(complete(*rt.provider, describe, client.retry, client.transcript));
  if (f.description.empty()) {
    throw ExtractionError("extractor produced an empty situation description", "");
  }
  RoleRequest extract_scripts =
      render_prompt(rt.templates, "extractor_scripts",
                    {{"image_ref", image.string()}, {"description", f.description}});
  f.scripts = parse_scripts(complete(*rt.provider, extract_scripts, client.retry,
                                     client.transcript));
  return f;
}

inline ImaginationForest run_phase_imagine(const std::filesystem::path& image,
                                           const HumorFoundation& f, const RunConfig& cfg,
                                           PipelineRuntime& rt, const RoleClient& client) {
  const std::string scripts_text = scripts_to_text(f.scripts);
  ViewTargets targets = identify_targets(f.description, image.string(), scripts_text,
                                         client, rt.db, cfg.m_cap);
  std::vector<ImaginationTree> local_trees, global_trees;
  for (const auto& assoc : targets.local) local_trees.push_back(make_tree(assoc, View::local));
  for (const auto& assoc : targets.global) global_trees.push_back(make_tree(assoc, View::global));
  ImaginationForest forest = merge_chains(local_trees, global_trees);

  // consolidation pass: one call settles the final backbone per merged root
  std::vector<std::string> roots;
  for (const auto& tree : forest.trees) roots.push_back(tree.root.label);
  auto final_chains = consolidate_chains(roots, f.description, scripts_text, client, rt.db);
  for (auto& tree : forest.trees) {
    auto it = final_chains.find(tree.root.label);
    if (it != final_chains.end() && !it->second.empty()) {
      set_backbone(tree, it->second, tree.root.view);
    }
  }
  for (auto& tree : forest.trees) {
    expand_tree(tree, f.description, scripts_text, rt.index, rt.db, cfg.k,
                PruneConfig{cfg.delta});
  }
  return forest;
}

struct PathChoice {
  std::string target;
  std::vector<std::string> path;
};

inline bool target_matches_script(const std::string& target, const ConflictScript& script,
                                  const LexicalDatabase& db) {
  auto target_tokens = label_token_set(target);
  for (const std::string& token :
       lemmatized_content_tokens(script.side_a + " " + script.side_b, db)) {
    if (target_tokens.count(token)) return true;
  }
  return false;
}

inline std::vector<CaptionRecord> run_phase_generate(const HumorFoundation& f,
                                                     const ImaginationForest& forest,
                                                     const RunConfig& cfg,
                                                     PipelineRuntime& rt,
                                                     const RoleClient& client) {
  std::vector<PathChoice> pool;
  for (const ImaginationTree& tree : forest.trees) {
    for (auto& path : enumerate_paths(tree)) {
      pool.push_back({tree.root.label, std::move(path)});
    }
  }
  if (pool.empty()) throw ExtractionError("imagination produced no paths", "");

  std::vector<CaptionRecord> all_records;
  for (int trial = 1; trial <= cfg.trials; ++trial) {
    std::mt19937_64 rng(derive_seed(cfg.seed, f.image_id, trial));

    // one bundle per caption: script, target+path, generation options.
    // (target, path) pairs draw without replacement until the pool runs dry,
    // then with replacement.
    std::vector<std::size_t> remaining(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = i;
    struct Bundle {
      ConflictScript script;
      const PathChoice* choice;
      GenerationOptions options;
    };
    std::vector<Bundle> bundles;
    for (int i = 0; i < cfg.captions_per_image; ++i) {
      Bundle b;
      b.script = f.scripts[uniform_index(rng, f.scripts.size())];
      const bool with_replacement = remaining.empty();
      std::vector<std::size_t> universe;
      if (with_replacement) {
        universe.resize(pool.size());
        for (std::size_t u = 0; u < pool.size(); ++u) universe[u] = u;
      } else {
        universe = remaining;
      }
      std::vector<std::size_t> relevant;
      for (std::size_t idx : universe) {
        if (target_matches_script(pool[idx].target, b.script, rt.db)) {
          relevant.push_back(idx);
        }
      }
      const std::vector<std::size_t>& basket = relevant.empty() ? universe : relevant;
      const std::size_t picked = basket[uniform_index(rng, basket.size())];
      if (!with_replacement) {
        remaining.erase(std::find(remaining.begin(), remaining.end(), picked));
      }
      b.choice = &pool[picked];
      b.options = {cfg.ns_list[uniform_index(rng, cfg.ns_list.size())],
                   cfg.la_list[uniform_index(rng, cfg.la_list.size())]};
      bundles.push_back(std::move(b));
    }

    std::string requests;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
      const Bundle& b = bundles[i];
      std::string path_text;
      for (const std::string& label : b.choice->path) {
        if (!path_text.empty()) path_text += " -> ";
        path_text += label;
      }
      requests += std::to_string(i + 1) + ". conflicting scripts: " + script_text(b.script) +
                  "; humor target: " + b.choice->target +
                  "; association path: " + path_text +
                  "; narrative strategy: " + b.options.narrative_strategy +
                  "; linguistic style: " + b.options.linguistic_style + "\n";
    }

    const std::string n_str = std::to_string(cfg.captions_per_image);
    RoleRequest draft_request = render_prompt(rt.templates, "generator",
                                              {{"description", f.description},
                                               {"requests", requests},
                                               {"n", n_str}});
    const std::string draft_response =
        complete(*rt.provider, draft_request, client.retry, client.transcript);
    auto drafts = parse_numbered_list(draft_response);
    if (drafts.size() != static_cast<std::size_t>(cfg.captions_per_image)) {
      throw ExtractionError("generator returned " + std::to_string(drafts.size()) +
                                " drafts, expected " + n_str,
                            draft_response);
    }

    std::string draft_list;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      draft_list += std::to_string(i + 1) + ". " + drafts[i] + "\n";
    }
    RoleRequest revise_request = render_prompt(rt.templates, "generator_revise",
                                               {{"description", f.description},
                                                {"drafts", draft_list},
                                                {"n", n_str}});
    const std::string revised_response =
        complete(*rt.provider, revise_request, client.retry, client.transcript);
    auto finals = parse_numbered_list(revised_response);
    if (finals.size() != static_cast<std::size_t>(cfg.captions_per_image)) {
      throw ExtractionError("revision returned " + std::to_string(finals.size()) +
                                " captions, expected " + n_str,
                            revised_response);
    }

    for (std::size_t i = 0; i < finals.size(); ++i) {
      CaptionRecord rec;
      rec.trial = trial;
      rec.text = finals[i];
      rec.options = bundles[i].options;
      rec.path = bundles[i].choice->path;
      rec.script = bundles[i].script;
      rec.target = bundles[i].choice->target;
      all_records.push_back(std::move(rec));
    }
  }
  return all_records;
}

}  // namespace detail

struct RunResult {
  int images_total = 0;
  int images_failed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // image id, reason

  int exit_code() const { return images_failed > 0 ? 1 : 0; }
};

/// Full three-phase run. Per-image failures are isolated: the image is
/// marked failed and the run continues. Phases already cached under a
/// matching cache key are skipped, which is what makes interrupted runs
/// resumable.
inline RunResult run_pipeline(const std::vector<std::filesystem::path>& images,
                              const RunConfig& cfg, PipelineRuntime& rt) {
  {
    std::set<std::string> ids;
    for (const auto& image : images) {
      if (!ids.insert(image_id_for(image)).second) {
        throw ConfigError("duplicate image id '" + image_id_for(image) +
                          "'; artifact files would collide");
      }
    }
  }
  const RunPaths paths = RunPaths::under(cfg.output_dir);
  paths.ensure();

  nlohmann::json manifest{{"cache_key", rt.cache_key},
                          {"config", cfg.canonical()},
                          {"seed", cfg.seed},
                          {"templates_version", cfg.templates_version}};
  write_file(paths.reports / "run_manifest.json", manifest.dump(2) + "\n");

  RunResult result;
  result.images_total = static_cast<int>(images.size());
  std::mutex failures_mutex;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= images.size()) return;
      const std::filesystem::path& image = images[i];
      const std::string image_id = image_id_for(image);
      try {
        Transcript transcript(paths.transcripts / (image_id + ".jsonl"));
        RoleClient client{&rt.templates, rt.provider.get(), rt.retry(cfg), &transcript};

        auto foundation =
            load_foundation(paths.foundations / (image_id + ".json"), rt.cache_key);
        if (!foundation) {
          foundation = detail::run_phase_extract(image, image_id, rt, client);
          save_foundation(*foundation, rt.cache_key,
                          paths.foundations / (image_id + ".json"));
        }

        const auto tree_path = paths.trees / (image_id + ".tree");
        std::optional<ImaginationForest> forest;
        if (std::filesystem::exists(tree_path)) {
          nlohmann::json header;
          auto cached = load_forest(tree_path, &header);
          if (header.value("cache_key", "") == rt.cache_key) forest = std::move(cached);
        }
        if (!forest) {
          forest = detail::run_phase_imagine(image, *foundation, cfg, rt, client);
          save_forest(*forest, tree_path,
                      {{"cache_key", rt.cache_key}, {"image_id", image_id}});
        }

        const auto caption_path = paths.captions / (image_id + ".json");
        if (!load_captions(caption_path, rt.cache_key)) {
          auto records = detail::run_phase_generate(*foundation, *forest, cfg, rt, client);
          save_captions(image_id, records, rt.cache_key, caption_path);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        result.failures.emplace_back(image_id, e.what());
        std::cerr << "image " << image_id << " failed: " << e.what() << '\n';
      }
    }
  };

  const int width = std::min<int>(cfg.workers, static_cast<int>(images.size()));
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < width; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  std::sort(result.failures.begin(), result.failures.end());
  result.images_failed = static_cast<int>(result.failures.size());
  if (!result.failures.empty()) {
    std::string report;
    for (const auto& [id, reason] : result.failures) {
      report += id + "\t" + reason + "\n";
    }
    write_file(paths.reports / "failures.txt", report);
  }
  return result;
}

// --- evaluation --------------------------------------------------------------

struct TrialOutcome {
  std::string image_id;
  int trial = 0;
  int n = 0;
  int c = 0;
};

struct EvalResult {
  std::vector<TrialOutcome> outcomes;
  std::vector<int> ks;
  int images_evaluated = 0;
  int images_skipped = 0;  // no reference caption
  int images_failed = 0;

  int exit_code() const { return images_failed > 0 ? 1 : 0; }
};

/// references file: one `image_id<TAB>human caption` per line.
inline std::map<std::string, std::string> load_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open references file: " + path.string());
  std::map<std::string, std::string> refs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected image_id<TAB>caption");
    }
    refs[trim(line.substr(0, tab))] = trim(line.substr(tab + 1));
  }
  return refs;
}

/// Judges every generated caption against the human reference and persists
/// verdicts plus per-trial results. Images without a reference are skipped.
inline EvalResult evaluate_run(const RunConfig& cfg, PipelineRuntime& rt,
                               const std::filesystem::path& references_path,
                               const std::vector<int>& ks,
                               const std::map<std::string, std::string>& image_refs = {}) {
  const RunPaths paths = RunPaths::under(cfg.output_dir);
  paths.ensure();
  const auto references = load_references(references_path);

  EvalResult result;
  result.ks = ks;

  std::vector<std::filesystem::path> caption_files;
  if (std::filesystem::exists(paths.captions)) {
    for (const auto& entry : std::filesystem::directory_iterator(paths.captions)) {
      if (entry.path().extension() == ".json") caption_files.push_back(entry.path());
    }
  }
  std::sort(caption_files.begin(), caption_files.end());

  for (const auto& file : caption_files) {
    const std::string image_id = file.stem().string();
    auto ref = references.find(image_id);
    if (ref == references.end()) {
      ++result.images_skipped;
      std::cerr << "no reference caption for image " << image_id << ", skipping\n";
      continue;
    }
    try {
      auto records = load_captions(file, /*cache_key=*/"");
      if (!records) continue;
      auto foundation =
          load_foundation(paths.foundations / (image_id + ".json"), rt.cache_key);
      JudgeContext ctx;
      if (foundation) ctx.description = foundation->description;
      if (auto it = image_refs.find(image_id); it != image_refs.end()) {
        ctx.image_ref = it->second;
      }

      Transcript transcript(paths.transcripts / (image_id + ".judge.jsonl"));
      std::map<int, TrialOutcome> by_trial;
      nlohmann::json verdict_rows = nlohmann::json::array();
      for (CaptionRecord& rec : *records) {
        Verdict verdict = judge_funnier(ctx, rec.text, ref->second, rt.templates,
                                        *rt.provider, rt.retry(cfg), &transcript);
        rec.win = verdict == Verdict::A;
        TrialOutcome& outcome = by_trial[rec.trial];
        outcome.image_id = image_id;
        outcome.trial = rec.trial;
        outcome.n += 1;
        outcome.c += *rec.win ? 1 : 0;
        verdict_rows.push_back({{"trial", rec.trial},
                                {"caption", rec.text},
                                {"verdict", *rec.win ? "win" : "lose"}});
      }
      nlohmann::json per_trial = nlohmann::json::array();
      for (const auto& [trial, outcome] : by_trial) {
        per_trial.push_back({{"trial", trial}, {"n", outcome.n}, {"c", outcome.c}});
        result.outcomes.push_back(outcome);
      }
      nlohmann::json doc{{"image_id", image_id},
                         {"reference", ref->second},
                         {"records", verdict_rows},
                         {"per_trial", per_trial}};
      write_file(paths.verdicts / (image_id + ".json"), doc.dump(2) + "\n");
      ++result.images_evaluated;
    } catch (const std::exception& e) {
      ++result.images_failed;
      std::cerr << "evaluation of image " << image_id << " failed: " << e.what() << '\n';
    }
  }

  // line-delimited results: one record per image-trial with every pass@k
  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [](const TrialOutcome& a, const TrialOutcome& b) {
              return std::tie(a.image_id, a.trial) < std::tie(b.image_id, b.trial);
            });
  std::string lines;
  for (const TrialOutcome& o : result.outcomes) {
    nlohmann::json row{{"image_id", o.image_id}, {"trial", o.trial}, {"n", o.n}, {"c", o.c}};
    nlohmann::json pass;
    for (int k : ks) {
      if (o.n >= k) {
        pass[std::to_string(k)] = pass_at_k(o.n, o.c, k);
      } else {
        pass[std::to_string(k)] = nullptr;
      }
    }
    row["pass"] = pass;
    lines += row.dump() + "\n";
  }
  write_file(paths.reports / "results.jsonl", lines);
  return result;
}

/// Aggregates trial outcomes: per-trial dataset mean, then the mean over
/// trials, for each k.
struct ReportTable {
  std::vector<int> ks;
  std::vector<int> trials;
  std::map<int, std::map<int, double>> per_trial;  // k -> trial -> dataset pass@k
  std::map<int, double> mean;                      // k -> mean over trials
};

inline ReportTable aggregate_outcomes(const std::vector<TrialOutcome>& outcomes,
                                      const std::vector<int>& ks) {
  ReportTable table;
  table.ks = ks;
  std::set<int> trial_set;
  for (const TrialOutcome& o : outcomes) trial_set.insert(o.trial);
  table.trials.assign(trial_set.begin(), trial_set.end());
  for (int k : ks) {
    double sum = 0.0;
    int counted = 0;
    for (int trial : table.trials) {
      std::vector<ImageResult> images;
      for (const TrialOutcome& o : outcomes) {
        if (o.trial == trial) images.push_back({o.image_id, o.n, o.c, {}});
      }
      if (images.empty()) continue;
      const double v = dataset_pass_at_k(images, k);
      table.per_trial[k][trial] = v;
      sum += v;
      ++counted;
    }
    table.mean[k] = counted > 0 ? sum / counted : 0.0;
  }
  return table;
}

inline std::vector<TrialOutcome> load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open results file: " + path.string());
  std::vector<TrialOutcome> outcomes;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::json row = nlohmann::json::parse(line);
    outcomes.push_back({row.at("image_id").get<std::string>(), row.at("trial").get<int>(),
                        row.at("n").get<int>(), row.at("c").get<int>()});
  }
  return outcomes;
}

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
  return buf;
}

/// Plain-text and tab-delimited summaries, written under reports/ and
/// returned for printing.
inline std::string write_report(const ReportTable& table, const RunPaths& paths) {
  std::string text = "pass@k summary (percent)\n";
  std::string tsv = "k";
  for (int trial : table.trials) tsv += "\ttrial" + std::to_string(trial);
  tsv += "\tmean\n";
  for (int k : table.ks) {
    text += "  pass@" + std::to_string(k) + ":";
    tsv += std::to_string(k);
    auto row = table.per_trial.find(k);
    for (int trial : table.trials) {
      std::optional<double> v;
      if (row != table.per_trial.end()) {
        auto it = row->second.find(trial);
        if (it != row->second.end()) v = it->second;
      }
      text += v ? " " + format_percent(*v) : " -";
      tsv += v ? "\t" + format_percent(*v) : "\t-";
    }
    text += "  mean=" + format_percent(table.mean.at(k)) + "\n";
    tsv += "\t" + format_percent(table.mean.at(k)) + "\n";
  }
  write_file(paths.reports / "summary.txt", text);
  write_file(paths.reports / "summary.tsv", tsv);
  return text;
}

}  // namespace homer
