#pragma once

// WordNet 3.0 database files (wndb format): synset lookup, Wu-Palmer
// similarity, one-hop concept neighborhoods, morphological lemmatization.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "errors.hpp"
#include "text.hpp"
#include "util.hpp"

namespace homer {

enum class Pos { noun = 0, verb = 1, adjective = 2, adverb = 3 };

inline constexpr std::array<Pos, 4> kAllPos = {Pos::noun, Pos::verb,
                                               Pos::adjective, Pos::adverb};

inline const char* pos_name(Pos p) {
  switch (p) {
    case Pos::noun: return "noun";
    case Pos::verb: return "verb";
    case Pos::adjective: return "adjective";
    case Pos::adverb: return "adverb";
  }
  return "?";
}

/// File-name suffix used by the database ("noun", "verb", "adj", "adv").
inline const char* pos_file_suffix(Pos p) {
  switch (p) {
    case Pos::noun: return "noun";
    case Pos::verb: return "verb";
    case Pos::adjective: return "adj";
    case Pos::adverb: return "adv";
  }
  return "?";
}

/// Synset-type tags as they appear in data files. Satellite adjectives
/// ('s') fold into the adjective category.
inline std::optional<Pos> pos_from_tag(char tag) {
  switch (tag) {
    case 'n': return Pos::noun;
    case 'v': return Pos::verb;
    case 'a': case 's': return Pos::adjective;
    case 'r': return Pos::adverb;
    default: return std::nullopt;
  }
}

struct Synset {
  int id = 0;
  Pos pos = Pos::noun;
  long offset = 0;  // offset within its source data file; stable external name
  std::vector<std::string> lemmas;
  std::vector<int> hypernyms;
  std::vector<int> hyponyms;
  std::vector<int> meronyms;
  std::vector<int> holonyms;
  int depth = 1;  // shortest hypernym distance to a root of its hierarchy; roots are 1
};

namespace morphy {

struct Detachment {
  const char* suffix;
  const char* replacement;
};

// Standard per-POS suffix detachment rules.
inline const std::vector<Detachment>& rules(Pos pos) {
  static const std::vector<Detachment> noun = {
      {"s", ""},     {"ses", "s"},   {"xes", "x"}, {"zes", "z"},
      {"ches", "ch"}, {"shes", "sh"}, {"men", "man"}, {"ies", "y"}};
  static const std::vector<Detachment> verb = {
      {"s", ""},   {"ies", "y"}, {"es", "e"},  {"es", ""},
      {"ed", "e"}, {"ed", ""},   {"ing", "e"}, {"ing", ""}};
  static const std::vector<Detachment> adj = {
      {"er", ""}, {"est", ""}, {"er", "e"}, {"est", "e"}};
  static const std::vector<Detachment> adv = {};
  switch (pos) {
    case Pos::noun: return noun;
    case Pos::verb: return verb;
    case Pos::adjective: return adj;
    case Pos::adverb: return adv;
  }
  return adv;
}

inline bool ends_with(std::string_view word, std::string_view suffix) {
  return word.size() > suffix.size() &&
         word.substr(word.size() - suffix.size()) == suffix;
}

}  // namespace morphy

class LexicalDatabase {
 public:
  /// Parses index.{noun,verb,adj,adv}, data.{...} and {...}.exc from `dir`.
  static LexicalDatabase load(const std::filesystem::path& dir) {
    LexicalDatabase db;
    db.parse_data_files(dir);
    db.resolve_pointers();
    db.parse_index_files(dir);
    db.parse_exception_files(dir);
    db.check_consistency();
    db.compute_depths();
    return db;
  }

  const std::vector<Synset>& synsets() const { return synsets_; }

  const Synset& synset(int id) const { return synsets_.at(static_cast<std::size_t>(id)); }

  /// All synsets whose lemma set contains lemmatize(word), for one POS or,
  /// when omitted, the union over all four. Empty result is a value, not an
  /// error.
  std::vector<const Synset*> synsets_of(const std::string& word,
                                        std::optional<Pos> pos = std::nullopt) const {
    std::vector<const Synset*> out;
    const std::string lemma = lemmatize(word);
    auto collect = [&](Pos p) {
      auto it = lemma_index_[static_cast<int>(p)].find(lemma);
      if (it == lemma_index_[static_cast<int>(p)].end()) return;
      for (int id : it->second) out.push_back(&synsets_[static_cast<std::size_t>(id)]);
    };
    if (pos) {
      collect(*pos);
    } else {
      for (Pos p : kAllPos) collect(p);
    }
    return out;
  }

  /// Wu-Palmer similarity: 2*depth(lcs) / (depth(a)+depth(b)), with the
  /// least common subsumer taken as the deepest shared hypernym ancestor
  /// (a synset counts as its own ancestor). No shared ancestor -> 0.
  double wup_similarity(const Synset& a, const Synset& b) const {
    if (a.pos != b.pos) return 0.0;  // hierarchies never cross POS
    std::set<int> seen_a;
    collect_ancestors(a.id, seen_a);
    int best = 0;
    std::set<int> seen_b;
    collect_ancestors(b.id, seen_b);
    for (int id : seen_b) {
      if (seen_a.count(id)) best = std::max(best, synsets_[static_cast<std::size_t>(id)].depth);
    }
    if (best == 0) return 0.0;
    return 2.0 * best / (a.depth + b.depth);
  }

  /// One-hop concept set: the synset plus its direct hypernyms, hyponyms,
  /// meronyms and holonyms.
  std::set<int> concept_neighborhood(const Synset& s) const {
    std::set<int> out;
    out.insert(s.id);
    out.insert(s.hypernyms.begin(), s.hypernyms.end());
    out.insert(s.hyponyms.begin(), s.hyponyms.end());
    out.insert(s.meronyms.begin(), s.meronyms.end());
    out.insert(s.holonyms.begin(), s.holonyms.end());
    return out;
  }

  /// Lowercases, then searches each POS in order: the form itself, its
  /// exception-list bases, then suffix-detachment candidates. First form
  /// present in the lemma index wins; otherwise the lowercased input.
  /// Multi-word inputs are matched against collocation entries
  /// (spaces become underscores).
  std::string lemmatize(const std::string& token) const {
    std::string key = to_lower(token);
    for (char& c : key) {
      if (c == ' ') c = '_';
    }
    for (Pos pos : kAllPos) {
      const auto& index = lemma_index_[static_cast<int>(pos)];
      if (index.count(key)) return key;
      const auto& exc = exceptions_[static_cast<int>(pos)];
      if (auto it = exc.find(key); it != exc.end()) {
        for (const std::string& base : it->second) {
          if (index.count(base)) return base;
        }
      }
      // nouns ending in "ss" and two-letter words never detach
      if (pos == Pos::noun && (key.size() <= 2 || morphy::ends_with(key, "ss"))) {
        continue;
      }
      for (const auto& rule : morphy::rules(pos)) {
        if (!morphy::ends_with(key, rule.suffix)) continue;
        std::string candidate = key.substr(0, key.size() - std::string_view(rule.suffix).size());
        candidate += rule.replacement;
        if (index.count(candidate)) return candidate;
      }
    }
    std::string lowered = to_lower(token);
    return lowered;
  }

  /// Number of POS categories (0..4) holding at least one synset for
  /// lemmatize(word).
  int pos_count(const std::string& word) const {
    const std::string lemma = lemmatize(word);
    int n = 0;
    for (Pos pos : kAllPos) {
      if (lemma_index_[static_cast<int>(pos)].count(lemma)) ++n;
    }
    return n;
  }

  std::size_t size() const { return synsets_.size(); }

  std::size_t synset_count(Pos pos) const {
    std::size_t n = 0;
    for (const Synset& s : synsets_) {
      if (s.pos == pos) ++n;
    }
    return n;
  }

 private:
  struct RawPointer {
    int source_id;
    std::string symbol;
    long target_offset;
    Pos target_pos;
    std::string origin;  // "file:line" for error reporting
  };

  void parse_data_files(const std::filesystem::path& dir) {
    for (Pos pos : kAllPos) {
      const auto path = dir / (std::string("data.") + pos_file_suffix(pos));
      std::ifstream in(path);
      if (!in) throw LoadError("lexical database file missing: " + path.string());
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == ' ') continue;  // license header
        parse_data_line(line, pos, path.filename().string(), lineno);
      }
    }
  }

  void parse_data_line(const std::string& line, Pos file_pos,
                       const std::string& file, int lineno) {
    const std::string where = file + ":" + std::to_string(lineno);
    std::istringstream in(line);
    long offset;
    int lex_filenum;
    char ss_type;
    std::string w_cnt_hex;
    if (!(in >> offset >> lex_filenum >> ss_type >> w_cnt_hex)) {
      throw ParseError(where + ": truncated synset header");
    }
    auto pos = pos_from_tag(ss_type);
    if (!pos || *pos != file_pos) {
      throw ParseError(where + ": synset type '" + std::string(1, ss_type) +
                       "' does not belong in this file");
    }
    int w_cnt = 0;
    try {
      w_cnt = std::stoi(w_cnt_hex, nullptr, 16);
    } catch (const std::exception&) {
      throw ParseError(where + ": bad word count '" + w_cnt_hex + "'");
    }
    if (w_cnt <= 0) throw ParseError(where + ": synset with no words");

    Synset syn;
    syn.id = static_cast<int>(synsets_.size());
    syn.pos = *pos;
    syn.offset = offset;
    for (int i = 0; i < w_cnt; ++i) {
      std::string word, lex_id;
      if (!(in >> word >> lex_id)) throw ParseError(where + ": truncated word list");
      // Adjective words may carry syntactic markers, e.g. "hot(p)".
      if (auto paren = word.find('('); paren != std::string::npos) word.resize(paren);
      syn.lemmas.push_back(to_lower(word));
    }

    int p_cnt;
    if (!(in >> p_cnt)) throw ParseError(where + ": missing pointer count");
    for (int i = 0; i < p_cnt; ++i) {
      std::string symbol, src_tgt;
      long target_offset;
      char target_tag;
      if (!(in >> symbol >> target_offset >> target_tag >> src_tgt)) {
        throw ParseError(where + ": truncated pointer list");
      }
      auto target_pos = pos_from_tag(target_tag);
      if (!target_pos) throw ParseError(where + ": bad pointer POS '" + std::string(1, target_tag) + "'");
      raw_pointers_.push_back({syn.id, symbol, target_offset, *target_pos, where});
    }
    // Verb frames (if any) sit between the pointers and the gloss; both are skipped.

    id_by_key_[key_of(*pos, offset)] = syn.id;
    synsets_.push_back(std::move(syn));
  }

  void resolve_pointers() {
    for (const RawPointer& p : raw_pointers_) {
      auto it = id_by_key_.find(key_of(p.target_pos, p.target_offset));
      if (it == id_by_key_.end()) {
        throw IntegrityError(p.origin + ": pointer '" + p.symbol + "' to " +
                             std::to_string(p.target_offset) + "/" +
                             pos_name(p.target_pos) + " resolves to no synset");
      }
      Synset& src = synsets_[static_cast<std::size_t>(p.source_id)];
      const int target = it->second;
      if (p.symbol == "@" || p.symbol == "@i") {
        src.hypernyms.push_back(target);
      } else if (p.symbol == "~" || p.symbol == "~i") {
        src.hyponyms.push_back(target);
      } else if (p.symbol[0] == '%') {
        src.meronyms.push_back(target);
      } else if (p.symbol[0] == '#') {
        src.holonyms.push_back(target);
      }
      // Remaining pointer types (antonyms, attributes, domains, ...) are
      // parsed for format validity but not retained.
    }
    raw_pointers_.clear();
  }

  void parse_index_files(const std::filesystem::path& dir) {
    for (Pos pos : kAllPos) {
      const auto path = dir / (std::string("index.") + pos_file_suffix(pos));
      std::ifstream in(path);
      if (!in) throw LoadError("lexical database file missing: " + path.string());
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == ' ') continue;
        parse_index_line(line, pos, path.filename().string(), lineno);
      }
    }
  }

  void parse_index_line(const std::string& line, Pos pos,
                        const std::string& file, int lineno) {
    const std::string where = file + ":" + std::to_string(lineno);
    std::istringstream in(line);
    std::string lemma;
    char pos_tag;
    int synset_cnt, p_cnt;
    if (!(in >> lemma >> pos_tag >> synset_cnt >> p_cnt)) {
      throw ParseError(where + ": truncated index entry");
    }
    for (int i = 0; i < p_cnt; ++i) {
      std::string symbol;
      if (!(in >> symbol)) throw ParseError(where + ": truncated pointer symbols");
    }
    int sense_cnt, tagsense_cnt;
    if (!(in >> sense_cnt >> tagsense_cnt)) {
      throw ParseError(where + ": missing sense counts");
    }
    std::vector<int>& ids = lemma_index_[static_cast<int>(pos)][to_lower(lemma)];
    for (int i = 0; i < synset_cnt; ++i) {
      long offset;
      if (!(in >> offset)) throw ParseError(where + ": missing synset offset");
      auto it = id_by_key_.find(key_of(pos, offset));
      if (it == id_by_key_.end()) {
        throw IntegrityError(where + ": index entry '" + lemma +
                             "' names unknown synset " + std::to_string(offset));
      }
      ids.push_back(it->second);
    }
  }

  void parse_exception_files(const std::filesystem::path& dir) {
    for (Pos pos : kAllPos) {
      const auto path = dir / (std::string(pos_file_suffix(pos)) + ".exc");
      std::ifstream in(path);
      if (!in) throw LoadError("lexical database file missing: " + path.string());
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == ' ') continue;
        std::istringstream row(line);
        std::string inflected, base;
        if (!(row >> inflected >> base)) {
          throw ParseError(path.filename().string() + ":" + std::to_string(lineno) +
                           ": exception entry needs an inflected form and a base");
        }
        auto& bases = exceptions_[static_cast<int>(pos)][to_lower(inflected)];
        bases.push_back(to_lower(base));
        while (row >> base) bases.push_back(to_lower(base));
      }
    }
  }

  void check_consistency() const {
    // every synset lemma must be reachable through the index
    for (const Synset& s : synsets_) {
      const auto& index = lemma_index_[static_cast<int>(s.pos)];
      for (const std::string& lemma : s.lemmas) {
        auto it = index.find(lemma);
        bool found = false;
        if (it != index.end()) {
          for (int id : it->second) {
            if (id == s.id) { found = true; break; }
          }
        }
        if (!found) {
          throw IntegrityError("synset " + std::to_string(s.offset) + "/" +
                               pos_name(s.pos) + " lemma '" + lemma +
                               "' is not indexed");
        }
      }
    }
  }

  /// depth = 1 + shortest hypernym distance to a hierarchy root.
  void compute_depths() {
    std::vector<int> state(synsets_.size(), 0);  // 0 unvisited, 1 in progress, 2 done
    for (std::size_t i = 0; i < synsets_.size(); ++i) {
      depth_of(static_cast<int>(i), state);
    }
  }

  int depth_of(int id, std::vector<int>& state) {
    Synset& s = synsets_[static_cast<std::size_t>(id)];
    if (state[static_cast<std::size_t>(id)] == 2) return s.depth;
    if (state[static_cast<std::size_t>(id)] == 1) return -1;  // cycle guard
    state[static_cast<std::size_t>(id)] = 1;
    int best = -1;
    for (int h : s.hypernyms) {
      int d = depth_of(h, state);
      if (d > 0 && (best < 0 || d + 1 < best)) best = d + 1;
    }
    s.depth = best > 0 ? best : 1;
    state[static_cast<std::size_t>(id)] = 2;
    return s.depth;
  }

  void collect_ancestors(int id, std::set<int>& out) const {
    if (!out.insert(id).second) return;
    for (int h : synsets_[static_cast<std::size_t>(id)].hypernyms) {
      collect_ancestors(h, out);
    }
  }

  static std::uint64_t key_of(Pos pos, long offset) {
    return (static_cast<std::uint64_t>(offset) << 2) |
           static_cast<std::uint64_t>(pos);
  }

  std::vector<Synset> synsets_;
  std::vector<RawPointer> raw_pointers_;
  std::unordered_map<std::uint64_t, int> id_by_key_;
  std::array<std::unordered_map<std::string, std::vector<int>>, 4> lemma_index_;
  std::array<std::unordered_map<std::string, std::vector<std::string>>, 4> exceptions_;
};

/// Tokenize text and reduce it to lemmatized content tokens: lowercase,
/// stopwords dropped (surface or lemma form), order and multiplicity kept.
inline std::vector<std::string> lemmatized_content_tokens(std::string_view text,
                                                          const LexicalDatabase& db) {
  std::vector<std::string> out;
  for (const std::string& word : tokenize_words(normalize_quotes(text))) {
    if (is_stopword(word)) continue;
    std::string lemma = db.lemmatize(word);
    if (is_stopword(lemma)) continue;
    out.push_back(std::move(lemma));
  }
  return out;
}

}  // namespace homer
