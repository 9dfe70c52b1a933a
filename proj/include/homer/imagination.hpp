#pragma once

// Imagination trees: multi-view target identification, association backbone
// chains, retrieval-expanded leaves with score provenance, path enumeration
// and seeded sampling.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "jokebase.hpp"
#include "lexdb.hpp"
#include "roles.hpp"
#include "scoring.hpp"
#include "util.hpp"

namespace homer {

enum class View { local, global, merged };
enum class NodeKind { root, chain, leaf };

inline const char* view_name(View v) {
  switch (v) {
    case View::local: return "local";
    case View::global: return "global";
    case View::merged: return "merged";
  }
  return "?";
}

inline const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::root: return "root";
    case NodeKind::chain: return "chain";
    case NodeKind::leaf: return "leaf";
  }
  return "?";
}

inline View view_from_name(const std::string& s) {
  if (s == "local") return View::local;
  if (s == "global") return View::global;
  if (s == "merged") return View::merged;
  throw ParseError("unknown view: " + s);
}

inline NodeKind kind_from_name(const std::string& s) {
  if (s == "root") return NodeKind::root;
  if (s == "chain") return NodeKind::chain;
  if (s == "leaf") return NodeKind::leaf;
  throw ParseError("unknown node kind: " + s);
}

/// Retrieval provenance carried by leaf nodes: the highest-ranked retrieved
/// joke containing the token, plus the full score breakdown that earned the
/// leaf its slot.
struct LeafInfo {
  std::string joke_id;
  HumorScoreBreakdown score;
};

struct ImaginationNode {
  std::string label;  // lemmatized entity
  NodeKind kind = NodeKind::chain;
  View view = View::local;
  std::optional<LeafInfo> leaf;
  std::vector<ImaginationNode> children;
};

struct ImaginationTree {
  ImaginationNode root;
  std::vector<View> origins;  // views that proposed this root
};

struct ImaginationForest {
  std::vector<ImaginationTree> trees;
};

/// One identified target with its free-association chain, as returned by a
/// single imaginator view call.
struct ViewAssociation {
  std::string target;
  std::vector<std::string> chain;
};

/// Everything needed to issue one role call.
struct RoleClient {
  const TemplateSet* templates = nullptr;
  Provider* provider = nullptr;
  RetryPolicy retry;
  Transcript* transcript = nullptr;
};

/// Lemmatize a (possibly multi-word) entity label word by word.
inline std::string lemmatize_label(const std::string& label, const LexicalDatabase& db) {
  std::string out;
  for (const std::string& word : tokenize_words(label)) {
    if (!out.empty()) out += ' ';
    out += db.lemmatize(word);
  }
  return out;
}

inline std::set<std::string> label_token_set(const std::string& label) {
  auto words = split(label, ' ');
  return {words.begin(), words.end()};
}

/// Parses the imaginator's JSON object {entity: [assoc, assoc, assoc], ...},
/// preserving the model's key order.
inline std::vector<ViewAssociation> parse_associations(const std::string& response) {
  nlohmann::ordered_json doc;
  try {
    // tolerate prose or fences around the JSON object
    auto begin = response.find('{');
    auto end = response.rfind('}');
    if (begin == std::string::npos || end == std::string::npos || end < begin) {
      throw ExtractionError("imaginator response holds no JSON object", response);
    }
    doc = nlohmann::ordered_json::parse(response.substr(begin, end - begin + 1));
  } catch (const nlohmann::json::exception& e) {
    throw ExtractionError(std::string("imaginator response is not valid JSON: ") + e.what(),
                          response);
  }
  if (!doc.is_object()) {
    throw ExtractionError("imaginator response is not a JSON object", response);
  }
  std::vector<ViewAssociation> out;
  for (const auto& [key, value] : doc.items()) {
    ViewAssociation assoc;
    assoc.target = key;
    if (value.is_array()) {
      for (const auto& item : value) {
        if (item.is_string()) assoc.chain.push_back(item.get<std::string>());
      }
    }
    out.push_back(std::move(assoc));
  }
  if (out.empty()) throw ExtractionError("imaginator returned no entities", response);
  return out;
}

/// One view call: identify up to m_cap targets and their chains. Targets come
/// back lemmatized, deduplicated within the view in model order; chains are
/// truncated to three steps.
inline std::vector<ViewAssociation> imagine_view(
    View view, const std::string& description, const std::optional<std::string>& image_ref,
    const std::string& scripts_text, const RoleClient& client, const LexicalDatabase& db,
    int m_cap) {
  std::map<std::string, std::string> bindings{
      {"scripts", scripts_text},
      {"m_cap", std::to_string(m_cap)},
  };
  std::string template_name;
  if (view == View::local) {
    template_name = "imaginator_local";
    bindings["description"] = description;
  } else {
    template_name = "imaginator_global";
    if (image_ref) bindings["image_ref"] = *image_ref;
  }
  RoleRequest request = render_prompt(*client.templates, template_name, bindings);
  const std::string response = complete(*client.provider, request, client.retry, client.transcript);

  std::vector<ViewAssociation> out;
  std::set<std::string> seen;
  for (ViewAssociation& assoc : parse_associations(response)) {
    ViewAssociation cooked;
    cooked.target = lemmatize_label(assoc.target, db);
    if (cooked.target.empty() || !seen.insert(cooked.target).second) continue;
    for (const std::string& step : assoc.chain) {
      if (cooked.chain.size() == 3) break;  // prompt contract: three steps
      std::string lemma = lemmatize_label(step, db);
      if (!lemma.empty()) cooked.chain.push_back(std::move(lemma));
    }
    out.push_back(std::move(cooked));
    if (out.size() == static_cast<std::size_t>(m_cap)) break;
  }
  return out;
}

struct ViewTargets {
  std::vector<ViewAssociation> local;
  std::vector<ViewAssociation> global;
};

/// Candidate humor targets from both views: the local view reads the
/// situation description, the global view reads the image. One role call per
/// view; each call also returns the per-target association chains.
inline ViewTargets identify_targets(const std::string& description,
                                    const std::optional<std::string>& image_ref,
                                    const std::string& scripts_text,
                                    const RoleClient& client, const LexicalDatabase& db,
                                    int m_cap) {
  ViewTargets targets;
  targets.local = imagine_view(View::local, description, std::nullopt, scripts_text,
                               client, db, m_cap);
  targets.global = imagine_view(View::global, description, image_ref, scripts_text,
                                client, db, m_cap);
  return targets;
}

/// One consolidation call covering all merged roots: returns the final chain
/// per target. Targets missing from the response keep their merged chain.
inline std::map<std::string, std::vector<std::string>> consolidate_chains(
    const std::vector<std::string>& targets, const std::string& description,
    const std::string& scripts_text, const RoleClient& client, const LexicalDatabase& db) {
  std::string target_list;
  for (const std::string& t : targets) target_list += "- " + t + "\n";
  RoleRequest request = render_prompt(*client.templates, "imaginator_chain",
                                      {{"description", description},
                                       {"scripts", scripts_text},
                                       {"targets", target_list}});
  const std::string response = complete(*client.provider, request, client.retry, client.transcript);
  std::map<std::string, std::vector<std::string>> out;
  for (ViewAssociation& assoc : parse_associations(response)) {
    std::string target = lemmatize_label(assoc.target, db);
    std::vector<std::string> chain;
    for (const std::string& step : assoc.chain) {
      if (chain.size() == 3) break;
      std::string lemma = lemmatize_label(step, db);
      if (!lemma.empty()) chain.push_back(std::move(lemma));
    }
    out[target] = std::move(chain);
  }
  return out;
}

/// Single-target association chain via one role call. An empty result is the
/// degenerate case: the caller proceeds with a root-only tree.
inline std::vector<std::string> build_backbone_chain(const std::string& target,
                                                     const std::string& description,
                                                     const std::string& scripts_text,
                                                     const RoleClient& client,
                                                     const LexicalDatabase& db) {
  auto chains = consolidate_chains({lemmatize_label(target, db)}, description, scripts_text,
                                   client, db);
  auto it = chains.find(lemmatize_label(target, db));
  return it == chains.end() ? std::vector<std::string>{} : it->second;
}

/// Installs `chain` as the backbone under the root: duplicates collapse to
/// their deepest position, the root label never repeats, and at most three
/// chain nodes remain. Replaces all existing children; runs before expansion.
inline void set_backbone(ImaginationTree& tree, const std::vector<std::string>& chain,
                         View view) {
  std::vector<std::string> cooked;
  for (const std::string& label : chain) {
    if (label == tree.root.label) continue;
    // keep the deepest occurrence of a duplicate
    for (auto it = cooked.begin(); it != cooked.end();) {
      it = *it == label ? cooked.erase(it) : it + 1;
    }
    cooked.push_back(label);
  }
  if (cooked.size() > 3) cooked.resize(3);

  tree.root.children.clear();
  ImaginationNode* parent = &tree.root;
  for (const std::string& label : cooked) {
    ImaginationNode node;
    node.label = label;
    node.kind = NodeKind::chain;
    node.view = view;
    parent->children.push_back(std::move(node));
    parent = &parent->children.back();
  }
}

inline ImaginationTree make_tree(const ViewAssociation& assoc, View view) {
  ImaginationTree tree;
  tree.root.label = assoc.target;
  tree.root.kind = NodeKind::root;
  tree.root.view = view;
  tree.origins = {view};
  set_backbone(tree, assoc.chain, view);
  return tree;
}

/// Two roots merge when their label token sets are equal or one contains the
/// other. The longer label survives (more tokens, then more characters).
inline bool roots_mergeable(const std::string& a, const std::string& b) {
  auto ta = label_token_set(a);
  auto tb = label_token_set(b);
  const auto& small = ta.size() <= tb.size() ? ta : tb;
  const auto& big = ta.size() <= tb.size() ? tb : ta;
  for (const std::string& t : small) {
    if (!big.count(t)) return false;
  }
  return true;
}

inline std::vector<std::string> backbone_labels(const ImaginationTree& tree) {
  std::vector<std::string> labels;
  const ImaginationNode* node = &tree.root;
  while (true) {
    const ImaginationNode* next = nullptr;
    for (const ImaginationNode& child : node->children) {
      if (child.kind == NodeKind::chain) {
        next = &child;
        break;
      }
    }
    if (!next) return labels;
    labels.push_back(next->label);
    node = next;
  }
}

/// Merges local- and global-view trees into one forest: mergeable roots
/// collapse pairwise until no pair qualifies, each merged tree keeps the
/// longer root label and the surviving root's chain (falling back to the
/// other chain when the survivor had none).
inline ImaginationForest merge_chains(const std::vector<ImaginationTree>& local_trees,
                                      const std::vector<ImaginationTree>& global_trees) {
  std::vector<ImaginationTree> trees = local_trees;
  trees.insert(trees.end(), global_trees.begin(), global_trees.end());

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < trees.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < trees.size() && !changed; ++j) {
        if (!roots_mergeable(trees[i].root.label, trees[j].root.label)) continue;
        ImaginationTree& keep = trees[i];
        ImaginationTree& drop = trees[j];
        const auto keep_tokens = label_token_set(keep.root.label).size();
        const auto drop_tokens = label_token_set(drop.root.label).size();
        const bool drop_is_longer =
            drop_tokens > keep_tokens ||
            (drop_tokens == keep_tokens &&
             drop.root.label.size() > keep.root.label.size());
        std::vector<std::string> chain = backbone_labels(drop_is_longer ? drop : keep);
        if (chain.empty()) chain = backbone_labels(drop_is_longer ? keep : drop);
        if (drop_is_longer) keep.root.label = drop.root.label;
        keep.root.view = View::merged;
        for (View origin : drop.origins) {
          if (std::find(keep.origins.begin(), keep.origins.end(), origin) == keep.origins.end()) {
            keep.origins.push_back(origin);
          }
        }
        set_backbone(keep, chain, View::merged);
        trees.erase(trees.begin() + static_cast<std::ptrdiff_t>(j));
        changed = true;
      }
    }
  }
  ImaginationForest forest;
  forest.trees = std::move(trees);
  return forest;
}

/// Expands a backbone node with retrieval: embeds (description, scripts,
/// label) as the query, pools the retrieved jokes' tokens (minus the node's
/// own lemma), keeps the top-delta scored candidates as leaves. A node whose
/// pool is empty simply stays leafless.
inline std::size_t expand_node(ImaginationNode& node, const std::string& description,
                               const std::string& scripts_text, const JokeIndex& index,
                               const LexicalDatabase& db, int k, const PruneConfig& cfg) {
  SparseVector query = embed(description, scripts_text, node.label, index, db);
  auto hits = retrieve_topk(query, k, index);
  if (hits.empty()) return 0;
  std::vector<const Joke*> topk;
  topk.reserve(hits.size());
  for (const Retrieved& r : hits) topk.push_back(r.joke);

  const std::string own_lemma = db.lemmatize(node.label);
  std::set<std::string> candidates;
  for (const Joke* joke : topk) {
    for (const std::string& token : joke->tokens) {
      if (token != own_lemma) candidates.insert(token);
    }
  }
  if (candidates.empty()) return 0;

  std::size_t attached = 0;
  for (const ScoredToken& scored : prune_candidates(node.label, candidates, topk, db, cfg)) {
    ImaginationNode leaf;
    leaf.label = scored.token;
    leaf.kind = NodeKind::leaf;
    leaf.view = node.view;
    LeafInfo info;
    info.score = scored.score;
    for (const Joke* joke : topk) {
      if (std::find(joke->tokens.begin(), joke->tokens.end(), scored.token) !=
          joke->tokens.end()) {
        info.joke_id = joke->id;
        break;
      }
    }
    leaf.leaf = std::move(info);
    node.children.push_back(std::move(leaf));
    ++attached;
  }
  return attached;
}

/// Expansion over every backbone node, root included.
inline std::size_t expand_tree(ImaginationTree& tree, const std::string& description,
                               const std::string& scripts_text, const JokeIndex& index,
                               const LexicalDatabase& db, int k, const PruneConfig& cfg) {
  std::size_t attached = 0;
  ImaginationNode* node = &tree.root;
  while (node) {
    attached += expand_node(*node, description, scripts_text, index, db, k, cfg);
    ImaginationNode* next = nullptr;
    for (ImaginationNode& child : node->children) {
      if (child.kind == NodeKind::chain) {
        next = &child;
        break;
      }
    }
    node = next;
  }
  return attached;
}

/// Root-to-leaf label sequences in construction order. A tree with no leaf
/// nodes yields its single backbone path.
inline std::vector<std::vector<std::string>> enumerate_paths(const ImaginationTree& tree) {
  std::vector<std::vector<std::string>> paths;
  std::vector<std::string> current;

  auto dfs = [&](auto&& self, const ImaginationNode& node) -> void {
    current.push_back(node.label);
    if (node.kind == NodeKind::leaf) {
      paths.push_back(current);
    } else {
      for (const ImaginationNode& child : node.children) self(self, child);
    }
    current.pop_back();
  };
  dfs(dfs, tree.root);

  if (paths.empty()) {
    std::vector<std::string> backbone{tree.root.label};
    for (const std::string& label : backbone_labels(tree)) backbone.push_back(label);
    paths.push_back(std::move(backbone));
  }
  return paths;
}

inline const std::vector<std::string>& sample_path(
    const std::vector<std::vector<std::string>>& paths, std::mt19937_64& rng) {
  if (paths.empty()) throw std::invalid_argument("sample_path: no paths");
  return paths[uniform_index(rng, paths.size())];
}

// --- persistence -------------------------------------------------------------

namespace detail {

inline nlohmann::json node_to_json(const ImaginationNode& node, int tree_index,
                                   int id, int parent) {
  nlohmann::json j{{"tree", tree_index}, {"id", id},     {"parent", parent},
                   {"label", node.label}, {"kind", kind_name(node.kind)},
                   {"view", view_name(node.view)}};
  if (node.leaf) {
    j["joke_id"] = node.leaf->joke_id;
    j["score"] = {{"relevance", node.leaf->score.relevance},
                  {"frequency", node.leaf->score.frequency},
                  {"diversity", node.leaf->score.diversity},
                  {"total", node.leaf->score.total}};
  }
  return j;
}

inline void write_nodes(std::string& out, const ImaginationNode& node, int tree_index,
                        int& next_id, int parent) {
  const int id = next_id++;
  out += node_to_json(node, tree_index, id, parent).dump();
  out += '\n';
  for (const ImaginationNode& child : node.children) {
    write_nodes(out, child, tree_index, next_id, id);
  }
}

}  // namespace detail

/// Line-delimited tree cache: a header object, then one node per line with
/// parent links, labels, kinds, provenance and score breakdowns.
inline void save_forest(const ImaginationForest& forest, const std::filesystem::path& path,
                        const nlohmann::json& header) {
  std::string out;
  nlohmann::json head = header;
  nlohmann::json origins = nlohmann::json::array();
  for (const ImaginationTree& tree : forest.trees) {
    nlohmann::json tree_origins = nlohmann::json::array();
    for (View v : tree.origins) tree_origins.push_back(view_name(v));
    origins.push_back(tree_origins);
  }
  head["tree_origins"] = origins;
  out += head.dump();
  out += '\n';
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    int next_id = 0;
    detail::write_nodes(out, forest.trees[t].root, static_cast<int>(t), next_id, -1);
  }
  write_file(path, out);
}

inline ImaginationForest load_forest(const std::filesystem::path& path,
                                     nlohmann::json* header_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open tree cache: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("tree cache is empty: " + path.string());
  nlohmann::json header = nlohmann::json::parse(line);
  if (header_out) *header_out = header;

  struct FlatNode {
    ImaginationNode node;
    int parent = -1;
  };
  std::map<int, std::vector<FlatNode>> flat;  // tree index -> nodes in id order
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    FlatNode f;
    f.parent = j.at("parent").get<int>();
    f.node.label = j.at("label").get<std::string>();
    f.node.kind = kind_from_name(j.at("kind").get<std::string>());
    f.node.view = view_from_name(j.at("view").get<std::string>());
    if (j.contains("joke_id")) {
      LeafInfo info;
      info.joke_id = j.at("joke_id").get<std::string>();
      const auto& score = j.at("score");
      info.score.relevance = score.at("relevance").get<double>();
      info.score.frequency = score.at("frequency").get<double>();
      info.score.diversity = score.at("diversity").get<double>();
      info.score.total = score.at("total").get<double>();
      f.node.leaf = std::move(info);
    }
    auto& nodes = flat[j.at("tree").get<int>()];
    if (static_cast<std::size_t>(j.at("id").get<int>()) != nodes.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": node ids out of order");
    }
    nodes.push_back(std::move(f));
  }

  ImaginationForest forest;
  for (auto& [tree_index, nodes] : flat) {
    if (nodes.empty() || nodes[0].parent != -1) {
      throw ParseError(path.string() + ": tree " + std::to_string(tree_index) + " has no root");
    }
    // assemble children-index lists, then build depth-first; ids are pre-order
    std::vector<std::vector<std::size_t>> children(nodes.size());
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (nodes[i].parent < 0 || static_cast<std::size_t>(nodes[i].parent) >= i) {
        throw ParseError(path.string() + ": bad parent link in tree " + std::to_string(tree_index));
      }
      children[static_cast<std::size_t>(nodes[i].parent)].push_back(i);
    }
    auto build = [&](auto&& self, std::size_t id) -> ImaginationNode {
      ImaginationNode node = std::move(nodes[id].node);
      for (std::size_t child : children[id]) {
        node.children.push_back(self(self, child));
      }
      return node;
    };
    forest.trees.push_back({build(build, 0), {}});
  }

  if (header.contains("tree_origins")) {
    const auto& origins = header.at("tree_origins");
    for (std::size_t t = 0; t < forest.trees.size() && t < origins.size(); ++t) {
      for (const auto& v : origins[t]) {
        forest.trees[t].origins.push_back(view_from_name(v.get<std::string>()));
      }
    }
  }
  return forest;
}

}  // namespace homer
