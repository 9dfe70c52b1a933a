#pragma once

// Joke corpus: ingestion of raw corpora, the multi-stage curation pipeline,
// a term-weighted vector index, and exact top-k retrieval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "lexdb.hpp"
#include "text.hpp"
#include "util.hpp"

namespace homer {

struct Joke {
  std::string id;      // content hash of the cleaned text
  std::string text;    // cleaned joke string
  std::optional<double> rating;
  std::string source;  // corpus tag
  std::vector<std::string> tokens;  // lemmatized content tokens, order kept
};

inline std::string joke_id_for(std::string_view text) {
  return to_hex(fnv1a64(text));
}

struct RawRecord {
  std::string text;
  std::optional<double> rating;
  std::string source;
};

/// One corpus input file. Line-record files hold one joke per line;
/// delimited files declare a text column and an optional rating column.
struct CorpusFile {
  std::filesystem::path path;
  std::string source_tag;
  bool delimited = false;
  char delimiter = '\t';
  int text_column = 0;
  int rating_column = -1;
  bool has_header = false;
};

struct IngestStats {
  std::size_t records = 0;
  std::size_t skipped = 0;  // rows with no text
};

inline std::vector<RawRecord> ingest(const std::vector<CorpusFile>& sources,
                                     IngestStats* stats = nullptr) {
  std::vector<RawRecord> records;
  IngestStats local;
  for (const CorpusFile& src : sources) {
    std::ifstream in(src.path);
    if (!in) throw LoadError("cannot open corpus file: " + src.path.string());
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (src.delimited && src.has_header && first) {
        first = false;
        continue;
      }
      first = false;
      RawRecord rec;
      rec.source = src.source_tag;
      if (!src.delimited) {
        rec.text = line;
      } else {
        auto cols = split(line, src.delimiter);
        if (src.text_column < 0 || src.text_column >= static_cast<int>(cols.size())) {
          ++local.skipped;
          continue;
        }
        rec.text = cols[static_cast<std::size_t>(src.text_column)];
        if (src.rating_column >= 0 &&
            src.rating_column < static_cast<int>(cols.size())) {
          const std::string raw = trim(cols[static_cast<std::size_t>(src.rating_column)]);
          if (!raw.empty()) {
            try {
              rec.rating = std::stod(raw);
            } catch (const std::exception&) {
              throw ParseError(src.path.string() + ": bad rating value '" + raw + "'");
            }
          }
        }
      }
      if (trim(rec.text).empty()) {
        ++local.skipped;
        continue;
      }
      records.push_back(std::move(rec));
      ++local.records;
    }
  }
  if (stats) *stats = local;
  return records;
}

/// Overlap coefficient: |a ∩ b| / min(|a|, |b|).
inline double overlap_coefficient(const std::set<std::string>& a,
                                  const std::set<std::string>& b) {
  if (a.empty() || b.empty()) return 0.0;
  const std::set<std::string>& small = a.size() <= b.size() ? a : b;
  const std::set<std::string>& big = a.size() <= b.size() ? b : a;
  std::size_t shared = 0;
  for (const std::string& t : small) shared += big.count(t);
  return static_cast<double>(shared) / static_cast<double>(small.size());
}

/// Near-duplicate test: token sets sharing strictly more than 80% of the
/// smaller set.
inline bool near_duplicate(const Joke& a, const Joke& b) {
  std::set<std::string> sa(a.tokens.begin(), a.tokens.end());
  std::set<std::string> sb(b.tokens.begin(), b.tokens.end());
  return overlap_coefficient(sa, sb) > 0.8;
}

struct CurationStats {
  std::size_t dropped_rating = 0;
  std::size_t dropped_exact = 0;
  std::size_t dropped_near = 0;
  std::size_t dropped_empty = 0;
};

/// Curation pipeline, in order: rating cutoff (< 3 with a rating present),
/// text cleaning, exact-duplicate removal on normalized text, near-duplicate
/// removal keeping the longer member of each flagged pair, then
/// tokenize+lemmatize. Near-duplicate word sets use lowercased surface words,
/// before lemmatization and with stopwords kept.
inline std::vector<Joke> curate(const std::vector<RawRecord>& records,
                                const LexicalDatabase& db,
                                CurationStats* stats = nullptr) {
  CurationStats local;

  struct Candidate {
    std::string text;
    std::optional<double> rating;
    std::string source;
    std::set<std::string> surface_words;
  };
  std::vector<Candidate> kept;
  std::set<std::string> seen_texts;
  for (const RawRecord& rec : records) {
    if (rec.rating && *rec.rating < 3.0) {
      ++local.dropped_rating;
      continue;
    }
    Candidate c;
    c.text = clean_text(rec.text);
    c.rating = rec.rating;
    c.source = rec.source;
    if (c.text.empty()) {
      ++local.dropped_empty;
      continue;
    }
    if (!seen_texts.insert(to_lower(c.text)).second) {
      ++local.dropped_exact;
      continue;
    }
    auto words = tokenize_words(c.text);
    c.surface_words.insert(words.begin(), words.end());
    kept.push_back(std::move(c));
  }

  // Candidate pairs must share at least one non-stopword surface word; the
  // full pairwise scan would be quadratic in the corpus size.
  std::unordered_map<std::string, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (const std::string& w : kept[i].surface_words) {
      if (!is_stopword(w)) buckets[w].push_back(i);
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> candidate_pairs;
  for (const auto& [word, members] : buckets) {
    for (std::size_t i = 0; i + 1 < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        candidate_pairs.emplace(members[i], members[j]);
      }
    }
  }
  std::vector<bool> dropped(kept.size(), false);
  for (const auto& [i, j] : candidate_pairs) {
    if (overlap_coefficient(kept[i].surface_words, kept[j].surface_words) > 0.8) {
      // keep the longer text; ties keep the earlier record
      std::size_t loser = kept[i].text.size() >= kept[j].text.size() ? j : i;
      dropped[loser] = true;
    }
  }

  std::vector<Joke> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (dropped[i]) {
      ++local.dropped_near;
      continue;
    }
    Joke joke;
    joke.text = kept[i].text;
    joke.id = joke_id_for(joke.text);
    joke.rating = kept[i].rating;
    joke.source = kept[i].source;
    joke.tokens = lemmatized_content_tokens(joke.text, db);
    if (joke.tokens.empty()) {
      ++local.dropped_empty;
      continue;
    }
    out.push_back(std::move(joke));
  }
  if (stats) *stats = local;
  return out;
}

using SparseVector = std::vector<std::pair<int, double>>;  // dim-ascending

struct Retrieved {
  const Joke* joke = nullptr;
  double similarity = 0.0;
};

/// Term-weighted corpus index. Vectors are tf*idf, L2-normalized, so cosine
/// similarity is a plain dot product. Immutable once built.
class JokeIndex {
 public:
  static constexpr std::string_view kMagic = "HOMERIDX1";

  const std::vector<Joke>& jokes() const { return jokes_; }
  std::size_t corpus_size() const { return jokes_.size(); }
  const std::map<std::string, int>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<SparseVector>& doc_vectors() const { return doc_vectors_; }

  double idf_of(const std::string& term) const {
    auto it = vocabulary_.find(term);
    return it == vocabulary_.end() ? 0.0 : idf_[static_cast<std::size_t>(it->second)];
  }

  const Joke* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &jokes_[it->second];
  }

  friend JokeIndex build_index(std::vector<Joke> corpus);
  friend JokeIndex load_index(const std::filesystem::path& path);

 private:
  void rebuild_id_map() {
    by_id_.clear();
    for (std::size_t i = 0; i < jokes_.size(); ++i) by_id_[jokes_[i].id] = i;
  }

  std::vector<Joke> jokes_;
  std::map<std::string, int> vocabulary_;  // term -> dimension, sorted terms
  std::vector<double> idf_;                // by dimension
  std::vector<SparseVector> doc_vectors_;  // parallel to jokes_
  std::unordered_map<std::string, std::size_t> by_id_;
};

inline void l2_normalize(SparseVector& v) {
  double norm = 0.0;
  for (const auto& [dim, w] : v) norm += w * w;
  norm = std::sqrt(norm);
  if (norm <= 0.0) return;
  for (auto& [dim, w] : v) w /= norm;
}

/// idf(t) = ln(corpus_size / (1 + doc_freq(t))) + 1. Strictly positive.
inline JokeIndex build_index(std::vector<Joke> corpus) {
  if (corpus.empty()) throw std::invalid_argument("build_index: empty corpus");
  JokeIndex index;
  index.jokes_ = std::move(corpus);

  std::map<std::string, int> doc_freq;
  for (const Joke& joke : index.jokes_) {
    std::set<std::string> uniq(joke.tokens.begin(), joke.tokens.end());
    for (const std::string& t : uniq) ++doc_freq[t];
  }
  int dim = 0;
  for (const auto& [term, df] : doc_freq) index.vocabulary_[term] = dim++;
  index.idf_.resize(static_cast<std::size_t>(dim));
  const double n = static_cast<double>(index.jokes_.size());
  for (const auto& [term, df] : doc_freq) {
    index.idf_[static_cast<std::size_t>(index.vocabulary_[term])] =
        std::log(n / (1.0 + df)) + 1.0;
  }

  index.doc_vectors_.reserve(index.jokes_.size());
  for (const Joke& joke : index.jokes_) {
    std::map<int, double> tf;
    for (const std::string& t : joke.tokens) {
      tf[index.vocabulary_.at(t)] += 1.0;
    }
    SparseVector vec;
    vec.reserve(tf.size());
    for (const auto& [d, count] : tf) {
      vec.emplace_back(d, count * index.idf_[static_cast<std::size_t>(d)]);
    }
    l2_normalize(vec);
    index.doc_vectors_.push_back(std::move(vec));
  }
  index.rebuild_id_map();
  return index;
}

/// Query embedding over (description, conflicting scripts, entity): the parts
/// are concatenated, tokenized and lemmatized, stopwords dropped, weighted by
/// tf*idf and L2-normalized. Terms outside the index vocabulary carry no
/// weight; a query of only such terms embeds as the zero vector.
inline SparseVector embed(const std::string& description,
                          const std::string& scripts_text,
                          const std::string& entity, const JokeIndex& index,
                          const LexicalDatabase& db) {
  if (trim(description).empty() && trim(scripts_text).empty() && trim(entity).empty()) {
    throw std::invalid_argument("empty query");
  }
  const std::string joined = description + " " + scripts_text + " " + entity;
  std::map<int, double> tf;
  for (const std::string& token : lemmatized_content_tokens(joined, db)) {
    auto it = index.vocabulary().find(token);
    if (it != index.vocabulary().end()) tf[it->second] += 1.0;
  }
  SparseVector vec;
  vec.reserve(tf.size());
  for (const auto& [d, count] : tf) {
    vec.emplace_back(d, count * index.idf()[static_cast<std::size_t>(d)]);
  }
  l2_normalize(vec);
  return vec;
}

inline double dot(const SparseVector& doc, const SparseVector& query) {
  // accumulate in the document's dimension order
  double sum = 0.0;
  auto qit = query.begin();
  for (const auto& [dim, w] : doc) {
    while (qit != query.end() && qit->first < dim) ++qit;
    if (qit == query.end()) break;
    if (qit->first == dim) sum += w * qit->second;
  }
  return sum;
}

/// The k most similar jokes, similarity descending, ties broken by joke id
/// ascending. Returns fewer than k when the corpus is smaller.
inline std::vector<Retrieved> retrieve_topk(const SparseVector& query, int k,
                                            const JokeIndex& index) {
  if (k < 1) throw std::invalid_argument("retrieve_topk: k must be >= 1");
  std::vector<std::size_t> order(index.corpus_size());
  std::vector<double> sims(index.corpus_size());
  for (std::size_t i = 0; i < index.corpus_size(); ++i) {
    order[i] = i;
    sims[i] = dot(index.doc_vectors()[i], query);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return index.jokes()[a].id < index.jokes()[b].id;
  };
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), better);
  std::vector<Retrieved> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({&index.jokes()[order[i]], sims[order[i]]});
  }
  return out;
}

// --- persistence ------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

inline void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s.data(), s.size());
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > data.size()) throw ParseError("index file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(data.substr(pos, n));
    pos += n;
    return s;
  }
};

}  // namespace detail

inline void save_index(const JokeIndex& index, const std::filesystem::path& path) {
  std::string out;
  out.append(JokeIndex::kMagic);
  detail::put_u64(out, index.corpus_size());
  detail::put_u64(out, index.vocabulary().size());
  for (const auto& [term, dim] : index.vocabulary()) {
    detail::put_str(out, term);
    detail::put_f64(out, index.idf()[static_cast<std::size_t>(dim)]);
  }
  for (std::size_t i = 0; i < index.corpus_size(); ++i) {
    const Joke& joke = index.jokes()[i];
    detail::put_str(out, joke.id);
    detail::put_str(out, joke.text);
    out.push_back(joke.rating ? 1 : 0);
    detail::put_f64(out, joke.rating.value_or(0.0));
    detail::put_str(out, joke.source);
    detail::put_u32(out, static_cast<std::uint32_t>(joke.tokens.size()));
    for (const std::string& t : joke.tokens) detail::put_str(out, t);
    const SparseVector& vec = index.doc_vectors()[i];
    detail::put_u32(out, static_cast<std::uint32_t>(vec.size()));
    for (const auto& [dim, w] : vec) {
      detail::put_u32(out, static_cast<std::uint32_t>(dim));
      detail::put_f64(out, w);
    }
  }
  write_file(path, out);
}

inline JokeIndex load_index(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  detail::Reader in{blob};
  in.need(JokeIndex::kMagic.size());
  if (blob.substr(0, JokeIndex::kMagic.size()) != JokeIndex::kMagic) {
    throw ParseError("not an index file (bad magic): " + path.string());
  }
  in.pos = JokeIndex::kMagic.size();
  JokeIndex index;
  const std::uint64_t n_jokes = in.u64();
  const std::uint64_t n_terms = in.u64();
  for (std::uint64_t d = 0; d < n_terms; ++d) {
    std::string term = in.str();
    index.vocabulary_[term] = static_cast<int>(d);
    index.idf_.push_back(in.f64());
  }
  for (std::uint64_t i = 0; i < n_jokes; ++i) {
    Joke joke;
    joke.id = in.str();
    joke.text = in.str();
    in.need(1);
    bool has_rating = blob[in.pos++] != 0;
    double rating = in.f64();
    if (has_rating) joke.rating = rating;
    joke.source = in.str();
    const std::uint32_t n_tokens = in.u32();
    for (std::uint32_t t = 0; t < n_tokens; ++t) joke.tokens.push_back(in.str());
    SparseVector vec;
    const std::uint32_t nnz = in.u32();
    for (std::uint32_t t = 0; t < nnz; ++t) {
      int dim = static_cast<int>(in.u32());
      double w = in.f64();
      vec.emplace_back(dim, w);
    }
    index.jokes_.push_back(std::move(joke));
    index.doc_vectors_.push_back(std::move(vec));
  }
  index.rebuild_id_map();
  return index;
}

inline void save_corpus_jsonl(const std::vector<Joke>& corpus,
                              const std::filesystem::path& path) {
  std::string out;
  for (const Joke& joke : corpus) {
    nlohmann::json j{{"id", joke.id},
                     {"text", joke.text},
                     {"rating", nullptr},
                     {"source", joke.source},
                     {"tokens", joke.tokens}};
    if (joke.rating) j["rating"] = *joke.rating;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

inline std::vector<Joke> load_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open corpus file: " + path.string());
  std::vector<Joke> corpus;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Joke joke;
    joke.id = j.at("id").get<std::string>();
    joke.text = j.at("text").get<std::string>();
    if (!j.at("rating").is_null()) joke.rating = j.at("rating").get<double>();
    joke.source = j.at("source").get<std::string>();
    joke.tokens = j.at("tokens").get<std::vector<std::string>>();
    corpus.push_back(std::move(joke));
  }
  return corpus;
}

}  // namespace homer
