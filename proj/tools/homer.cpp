// Command-line front end: corpus ingestion and indexing, the generation
// pipeline, judging with pass@k, score auditing, and report rendering.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "homer/homer.hpp"

namespace fs = std::filesystem;
using namespace homer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::vector<fs::path> collect_images(const std::string& images_arg) {
  fs::path p(images_arg);
  if (!fs::exists(p)) throw ConfigError("images path does not exist: " + images_arg);
  std::vector<fs::path> images;
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file()) images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());
  } else {
    images.push_back(p);
  }
  if (images.empty()) throw ConfigError("no image files under " + images_arg);
  return images;
}

std::vector<int> parse_k_list(const std::string& arg) {
  std::vector<int> ks;
  for (const std::string& part : split(arg, ',')) {
    try {
      int k = std::stoi(trim(part));
      if (k < 1) throw std::invalid_argument("k < 1");
      ks.push_back(k);
    } catch (const std::exception&) {
      throw ConfigError("bad --k list entry '" + trim(part) + "'");
    }
  }
  if (ks.empty()) throw ConfigError("--k needs at least one value");
  return ks;
}

int cmd_ingest(const std::string& lexdb_path, const std::vector<std::string>& files,
               const std::string& out, int text_col, int rating_col,
               const std::string& delim_name, bool header) {
  auto db = LexicalDatabase::load(lexdb_path);
  std::vector<CorpusFile> sources;
  for (const std::string& file : files) {
    fs::path p(file);
    CorpusFile src;
    src.path = p;
    src.source_tag = p.stem().string();
    const std::string ext = to_lower(p.extension().string());
    if (ext == ".tsv" || ext == ".csv") {
      src.delimited = true;
      src.delimiter = ext == ".csv" ? ',' : '\t';
      if (delim_name == "comma") src.delimiter = ',';
      if (delim_name == "tab") src.delimiter = '\t';
      src.text_column = text_col;
      src.rating_column = rating_col;
      src.has_header = header;
    }
    sources.push_back(std::move(src));
  }
  IngestStats ingest_stats;
  auto records = ingest(sources, &ingest_stats);
  CurationStats curation_stats;
  auto corpus = curate(records, db, &curation_stats);
  save_corpus_jsonl(corpus, out);
  std::cout << "ingested " << ingest_stats.records << " records ("
            << ingest_stats.skipped << " skipped)\n"
            << "curated " << corpus.size() << " jokes (rating cut "
            << curation_stats.dropped_rating << ", exact dup "
            << curation_stats.dropped_exact << ", near dup "
            << curation_stats.dropped_near << ", empty "
            << curation_stats.dropped_empty << ")\n"
            << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_index(const std::string& corpus_path, const std::string& out) {
  auto corpus = load_corpus_jsonl(corpus_path);
  auto index = build_index(std::move(corpus));
  save_index(index, out);
  std::cout << "indexed " << index.corpus_size() << " jokes, "
            << index.vocabulary().size() << " terms\n"
            << "wrote " << out << "\n";
  return kExitOk;
}

int cmd_generate(const std::string& config_path, const std::string& images_arg) {
  RunConfig cfg = load_config(config_path);
  if (cfg.seed_generated) {
    std::cout << "no seed configured; generated seed " << cfg.seed << "\n";
  }
  auto runtime = PipelineRuntime::open(cfg);
  auto images = collect_images(images_arg);
  RunResult result = run_pipeline(images, cfg, runtime);
  std::cout << "processed " << (result.images_total - result.images_failed) << "/"
            << result.images_total << " images";
  if (result.images_failed > 0) {
    std::cout << " (" << result.images_failed << " failed, see reports/failures.txt)";
  }
  std::cout << "\nartifacts under " << cfg.output_dir.string() << "\n";
  return result.exit_code();
}

int cmd_evaluate(const std::string& config_path, const std::string& references,
                 const std::string& k_arg, const std::string& images_arg) {
  RunConfig cfg = load_config(config_path);
  auto runtime = PipelineRuntime::open(cfg);
  std::map<std::string, std::string> image_refs;
  if (!images_arg.empty()) {
    for (const fs::path& image : collect_images(images_arg)) {
      image_refs[image_id_for(image)] = image.string();
    }
  }
  EvalResult eval = evaluate_run(cfg, runtime, references, parse_k_list(k_arg), image_refs);
  auto table = aggregate_outcomes(eval.outcomes, eval.ks);
  std::cout << write_report(table, RunPaths::under(cfg.output_dir));
  std::cout << "evaluated " << eval.images_evaluated << " images ("
            << eval.images_skipped << " without references, " << eval.images_failed
            << " failed)\n";
  return eval.exit_code();
}

int cmd_score(const std::string& lexdb_path, const std::string& index_path,
              const std::string& entity, const std::string& token,
              const std::string& query, int k, bool tfidf) {
  auto db = LexicalDatabase::load(lexdb_path);
  auto index = load_index(index_path);
  const std::string effective_query = query.empty() ? entity : query;
  auto hits = retrieve_topk(embed(effective_query, "", entity, index, db), k, index);
  std::vector<const Joke*> topk;
  for (const auto& h : hits) topk.push_back(h.joke);

  const std::string token_lemma = db.lemmatize(token);
  auto breakdown = humor_relevance(entity, token_lemma, topk, db);
  nlohmann::json retrieved = nlohmann::json::array();
  for (const auto& h : hits) {
    retrieved.push_back({{"joke_id", h.joke->id}, {"similarity", h.similarity}});
  }
  nlohmann::json doc{{"entity", entity},
                     {"token", token},
                     {"token_lemma", token_lemma},
                     {"tss", tss(entity, token_lemma, db)},
                     {"conceptual_opposition", conceptual_opposition(entity, token_lemma, db)},
                     {"relevance", breakdown.relevance},
                     {"frequency", breakdown.frequency},
                     {"diversity", breakdown.diversity},
                     {"total", breakdown.total},
                     {"retrieved", retrieved}};
  if (tfidf) doc["tfidf_frequency"] = tfidf_frequency(token_lemma, topk, index);
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_report(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  const RunPaths paths = RunPaths::under(cfg.output_dir);
  auto outcomes = load_results(paths.reports / "results.jsonl");
  std::vector<int> ks;
  // recover the k columns from the stored records
  {
    std::ifstream in(paths.reports / "results.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto row = nlohmann::json::parse(line);
      for (const auto& [key, value] : row.at("pass").items()) {
        if (std::find(ks.begin(), ks.end(), std::stoi(key)) == ks.end()) {
          ks.push_back(std::stoi(key));
        }
      }
      break;
    }
  }
  if (ks.empty()) ks = {1, 3, 5};
  std::sort(ks.begin(), ks.end());
  std::cout << write_report(aggregate_outcomes(outcomes, ks), paths);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"humor caption pipeline"};
  app.require_subcommand(1);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "ingest and curate joke corpora");
  std::string lexdb_path, out_path;
  std::vector<std::string> in_files;
  int text_col = 0, rating_col = -1;
  std::string delim = "auto";
  bool header = false;
  ingest_cmd->add_option("--lexdb", lexdb_path, "lexical database directory")
      ->envname("HOMER_LEXDB_PATH")
      ->required();
  ingest_cmd->add_option("--out", out_path, "curated corpus output (jsonl)")->required();
  ingest_cmd->add_option("files", in_files, "corpus files (.txt line records, .tsv/.csv delimited)")
      ->required();
  ingest_cmd->add_option("--text-col", text_col, "text column for delimited files");
  ingest_cmd->add_option("--rating-col", rating_col, "rating column for delimited files (-1 none)");
  ingest_cmd->add_option("--delim", delim, "delimiter override: tab|comma");
  ingest_cmd->add_flag("--header", header, "delimited files start with a header row");

  // index
  auto* index_cmd = app.add_subcommand("index", "build the retrieval index");
  std::string corpus_path, index_out;
  index_cmd->add_option("--corpus", corpus_path, "curated corpus (jsonl)")->required();
  index_cmd->add_option("--out", index_out, "index output file")->required();

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "run the caption pipeline");
  std::string config_path, images_arg;
  generate_cmd->add_option("--config", config_path, "run config file")->required();
  generate_cmd->add_option("--images", images_arg, "image file or directory")->required();

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "judge captions and compute pass@k");
  std::string eval_config, references, k_list = "1,3,5", eval_images;
  evaluate_cmd->add_option("--config", eval_config, "run config file")->required();
  evaluate_cmd->add_option("--references", references, "image_id<TAB>human caption file")
      ->required();
  evaluate_cmd->add_option("--k", k_list, "comma-separated k values");
  evaluate_cmd->add_option("--images", eval_images, "optional image dir for the judge");

  // score
  auto* score_cmd = app.add_subcommand("score", "audit a humor-relevance breakdown");
  std::string score_lexdb, score_index, entity, token, score_query;
  int score_k = 5;
  bool tfidf = false;
  score_cmd->add_option("--lexdb", score_lexdb, "lexical database directory")
      ->envname("HOMER_LEXDB_PATH")
      ->required();
  score_cmd->add_option("--index", score_index, "retrieval index file")->required();
  score_cmd->add_option("--entity", entity, "backbone entity")->required();
  score_cmd->add_option("--token", token, "candidate token")->required();
  score_cmd->add_option("--query", score_query, "retrieval query (defaults to the entity)");
  score_cmd->add_option("--k", score_k, "retrieved jokes");
  score_cmd->add_flag("--tfidf", tfidf, "also print the tf-idf frequency variant");

  // report
  auto* report_cmd = app.add_subcommand("report", "render summary tables from results");
  std::string report_config;
  report_cmd->add_option("--config", report_config, "run config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(lexdb_path, in_files, out_path, text_col, rating_col, delim, header);
    if (*index_cmd) return cmd_index(corpus_path, index_out);
    if (*generate_cmd) return cmd_generate(config_path, images_arg);
    if (*evaluate_cmd) return cmd_evaluate(eval_config, references, k_list, eval_images);
    if (*score_cmd) return cmd_score(score_lexdb, score_index, entity, token, score_query, score_k, tfidf);
    if (*report_cmd) return cmd_report(report_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
