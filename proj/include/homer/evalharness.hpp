#pragma once

// Evaluation harness: overflow-safe unbiased pass@k, dataset aggregation,
// and ranking accuracy of a judge against gold-ordered caption pairs.

#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "roles.hpp"

namespace homer {

/// Unbiased pass@k: 1 - C(n-c, k) / C(n, k). The binomial ratio is computed
/// as a product of per-term ratios, so n well beyond factorial range is fine.
inline double pass_at_k(int n, int c, int k) {
  if (n < 1) throw std::domain_error("pass_at_k: n must be >= 1");
  if (k < 1 || k > n) throw std::domain_error("pass_at_k: k must be in [1, n]");
  if (c < 0 || c > n) throw std::domain_error("pass_at_k: c must be in [0, n]");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;  // every k-subset contains a winner
  double ratio = 1.0;
  for (int i = 0; i < k; ++i) {
    ratio *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - ratio;
}

struct CaptionRecord {
  std::string text;
  GenerationOptions options;
  std::vector<std::string> path;  // sampled imagination path labels
  ConflictScript script;
  std::string target;
  std::optional<bool> win;  // judge verdict, once evaluated
  int trial = 0;
};

struct ImageResult {
  std::string image_id;
  int n = 0;  // generated caption count
  int c = 0;  // captions judged funnier than the human caption
  std::vector<CaptionRecord> captions;
};

/// Mean per-image pass@k. Every image must have n >= k.
inline double dataset_pass_at_k(const std::vector<ImageResult>& results, int k) {
  if (results.empty()) throw std::domain_error("dataset_pass_at_k: no results");
  double sum = 0.0;
  for (const ImageResult& r : results) {
    if (r.n < k) {
      throw std::domain_error("dataset_pass_at_k: image '" + r.image_id +
                              "' has n=" + std::to_string(r.n) +
                              " < k=" + std::to_string(k));
    }
    sum += pass_at_k(r.n, r.c, k);
  }
  return sum / static_cast<double>(results.size());
}

/// One gold-ranked caption pair: `better` outranked `worse` in the source
/// contest.
struct GoldPair {
  std::string image_id;
  std::optional<std::string> image_ref;
  std::optional<std::string> description;
  std::string better;
  std::string worse;
};

/// Fraction of pairs where the judge picks the gold-higher caption. Judge
/// errors count as incorrect and are tallied separately.
inline double evaluator_accuracy(
    const std::vector<GoldPair>& pairs,
    const std::function<Verdict(const GoldPair&)>& judge_better_is_a,
    std::size_t* judge_errors = nullptr) {
  if (pairs.empty()) throw std::domain_error("evaluator_accuracy: no pairs");
  std::size_t correct = 0;
  std::size_t errors = 0;
  for (const GoldPair& pair : pairs) {
    try {
      if (judge_better_is_a(pair) == Verdict::A) ++correct;
    } catch (const std::exception& e) {
      ++errors;
      std::cerr << "judge error on image " << pair.image_id << ": " << e.what() << '\n';
    }
  }
  if (judge_errors) *judge_errors = errors;
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace homer
