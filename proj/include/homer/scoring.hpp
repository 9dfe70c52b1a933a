#pragma once

// Humor-relevance scoring: a relevance-opposition term over the lexical
// taxonomy, an occurrence-frequency term over retrieved jokes, a POS
// diversity term, and rank-threshold pruning of candidate tokens.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "jokebase.hpp"
#include "lexdb.hpp"

namespace homer {

struct HumorScoreBreakdown {
  double relevance = 0.0;  // in [0, 1 + 1/e]
  double frequency = 0.0;  // in [0, 1]
  double diversity = 0.0;  // in [0, 1]
  double total = 0.0;      // sum of the three, exactly
};

struct PruneConfig {
  int delta = 5;  // rank threshold, >= 1
};

/// Gate applied to the opposition bonus: x * exp(-x). Zero at 0, peaks at
/// 1/e when x = 1, keeps the bonus bounded.
inline double opposition_gate(double x) { return x * std::exp(-x); }

inline double relevance_opposition_value(double tss, double co) {
  return tss + opposition_gate(tss) * co;
}

/// Target semantic similarity: max Wu-Palmer similarity over the synset
/// cross product; 0 when either word has no synsets.
inline double tss(const std::string& word_a, const std::string& word_b,
                  const LexicalDatabase& db) {
  auto sa = db.synsets_of(word_a);
  auto sb = db.synsets_of(word_b);
  if (sa.empty() || sb.empty()) return 0.0;
  double best = 0.0;
  for (const Synset* a : sa) {
    for (const Synset* b : sb) {
      best = std::max(best, db.wup_similarity(*a, *b));
    }
  }
  return best;
}

/// Conceptual opposition: 1 minus the best Jaccard overlap between one-hop
/// concept neighborhoods. A word with no synsets contributes an empty max,
/// so the result degrades to 1 (the relevance term still vanishes there
/// because tss is 0).
inline double conceptual_opposition(const std::string& word_a,
                                    const std::string& word_b,
                                    const LexicalDatabase& db) {
  auto sa = db.synsets_of(word_a);
  auto sb = db.synsets_of(word_b);
  double best = 0.0;
  for (const Synset* a : sa) {
    std::set<int> ra = db.concept_neighborhood(*a);
    for (const Synset* b : sb) {
      std::set<int> rb = db.concept_neighborhood(*b);
      std::size_t inter = 0;
      for (int id : ra) inter += rb.count(id);
      const std::size_t uni = ra.size() + rb.size() - inter;
      if (uni > 0) {
        best = std::max(best, static_cast<double>(inter) / static_cast<double>(uni));
      }
    }
  }
  return 1.0 - best;
}

inline double relevance_opposition(const std::string& word_a,
                                   const std::string& word_b,
                                   const LexicalDatabase& db) {
  return relevance_opposition_value(tss(word_a, word_b, db),
                                    conceptual_opposition(word_a, word_b, db));
}

/// Geometric mean of pooled token frequency and joke coverage over the
/// retrieved set. The token is expected in lemmatized form.
inline double humor_frequency(const std::string& token,
                              const std::vector<const Joke*>& topk) {
  if (topk.empty()) throw std::invalid_argument("no retrieval context");
  std::size_t occurrences = 0;
  std::size_t pooled_len = 0;
  std::size_t containing = 0;
  for (const Joke* joke : topk) {
    std::size_t count = 0;
    for (const std::string& t : joke->tokens) {
      if (t == token) ++count;
    }
    occurrences += count;
    pooled_len += joke->tokens.size();
    if (count > 0) ++containing;
  }
  if (pooled_len == 0) return 0.0;
  const double tf = static_cast<double>(occurrences) / static_cast<double>(pooled_len);
  const double coverage = static_cast<double>(containing) / static_cast<double>(topk.size());
  return std::sqrt(tf * coverage);
}

/// Share of the four POS categories in which the token has a sense.
inline double pos_diversity(const std::string& token, const LexicalDatabase& db) {
  return db.pos_count(token) / 4.0;
}

inline HumorScoreBreakdown humor_relevance(const std::string& entity,
                                           const std::string& token,
                                           const std::vector<const Joke*>& topk,
                                           const LexicalDatabase& db) {
  HumorScoreBreakdown b;
  b.relevance = relevance_opposition(entity, token, db);
  b.frequency = humor_frequency(token, topk);
  b.diversity = pos_diversity(token, db);
  b.total = b.relevance + b.frequency + b.diversity;
  return b;
}

/// Replication-only alternative to humor_frequency: pooled term frequency
/// scaled by the corpus idf weight. Not used by the pipeline.
inline double tfidf_frequency(const std::string& token,
                              const std::vector<const Joke*>& topk,
                              const JokeIndex& index) {
  if (topk.empty()) throw std::invalid_argument("no retrieval context");
  std::size_t occurrences = 0;
  std::size_t pooled_len = 0;
  for (const Joke* joke : topk) {
    for (const std::string& t : joke->tokens) {
      if (t == token) ++occurrences;
    }
    pooled_len += joke->tokens.size();
  }
  if (pooled_len == 0) return 0.0;
  return static_cast<double>(occurrences) / static_cast<double>(pooled_len) *
         index.idf_of(token);
}

struct ScoredToken {
  std::string token;
  HumorScoreBreakdown score;
};

/// Scores every candidate against the entity and keeps the top delta by
/// total, descending; exact ties order by token ascending so the boundary
/// cut is deterministic.
inline std::vector<ScoredToken> prune_candidates(
    const std::string& entity, const std::set<std::string>& candidates,
    const std::vector<const Joke*>& topk, const LexicalDatabase& db,
    const PruneConfig& cfg) {
  if (cfg.delta < 1) throw std::invalid_argument("prune_candidates: delta must be >= 1");
  std::vector<ScoredToken> scored;
  scored.reserve(candidates.size());
  for (const std::string& token : candidates) {
    scored.push_back({token, humor_relevance(entity, token, topk, db)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredToken& a, const ScoredToken& b) {
    if (a.score.total != b.score.total) return a.score.total > b.score.total;
    return a.token < b.token;
  });
  if (scored.size() > static_cast<std::size_t>(cfg.delta)) {
    scored.resize(static_cast<std::size_t>(cfg.delta));
  }
  return scored;
}

}  // namespace homer
