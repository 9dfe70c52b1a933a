#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace homer {

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// Fixed built-in English stopword list.
inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",       "about",  "above",  "after",   "again",  "against", "all",
      "am",      "an",     "and",    "any",     "are",    "aren't",  "as",
      "at",      "be",     "because","been",    "before", "being",   "below",
      "between", "both",   "but",    "by",      "can",    "can't",   "cannot",
      "could",   "did",    "didn't", "do",      "does",   "doesn't", "doing",
      "don't",   "down",   "during", "each",    "few",    "for",     "from",
      "further", "had",    "has",    "have",    "haven't","having",  "he",
      "he's",    "her",    "here",   "hers",    "herself","him",     "himself",
      "his",     "how",    "i",      "i'm",     "i've",   "if",      "in",
      "into",    "is",     "isn't",  "it",      "it's",   "its",     "itself",
      "just",    "me",     "more",   "most",    "my",     "myself",  "no",
      "nor",     "not",    "now",    "of",      "off",    "on",      "once",
      "only",    "or",     "other",  "our",     "ours",   "ourselves","out",
      "over",    "own",    "same",   "she",     "she's",  "should",  "so",
      "some",    "such",   "than",   "that",    "that's", "the",     "their",
      "theirs",  "them",   "themselves","then", "there",  "these",   "they",
      "they're", "this",   "those",  "through", "to",     "too",     "under",
      "until",   "up",     "very",   "was",     "wasn't", "we",      "we're",
      "were",    "what",   "what's", "when",    "where",  "which",   "while",
      "who",     "who's",  "whom",   "why",     "will",   "with",    "won't",
      "would",   "you",    "you're", "your",    "yours",  "yourself",
      "yourselves",
  };
  return words;
}

inline bool is_stopword(const std::string& word) {
  return stopwords().count(word) > 0;
}

/// Lowercase word tokens: runs of ASCII alphanumerics with internal
/// apostrophes kept ("don't"); everything else separates.
inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    if (!cur.empty()) tokens.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !cur.empty()) {
      cur.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

/// Map common UTF-8 punctuation (curly quotes, dashes, ellipsis, nbsp) to
/// their ASCII equivalents. Other bytes pass through untouched.
inline std::string normalize_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = s[i];
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80) {
      unsigned char third = s[i + 2];
      switch (third) {
        case 0x98: case 0x99: case 0xB2: out += '\''; i += 3; continue;
        case 0x9C: case 0x9D: case 0xB3: out += '"'; i += 3; continue;
        case 0x93: case 0x94: out += '-'; i += 3; continue;
        case 0xA6: out += "..."; i += 3; continue;
        default: break;
      }
    }
    if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) {
      out += ' ';
      i += 2;
      continue;
    }
    out += static_cast<char>(c);
    ++i;
  }
  return out;
}

/// Drop <...> markup spans. Unterminated '<' is kept literally.
inline std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '<') {
      std::size_t close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        out += ' ';
        i = close + 1;
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // also trims leading space
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out += ' ';
      out += static_cast<char>(c);
      in_space = false;
    }
  }
  return out;
}

/// Full cleaning pass: markup out, punctuation normalized, whitespace
/// collapsed. Idempotent.
inline std::string clean_text(std::string_view s) {
  return collapse_whitespace(normalize_quotes(strip_markup(s)));
}

}  // namespace homer
