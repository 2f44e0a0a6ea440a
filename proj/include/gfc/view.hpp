#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "gfc/network.hpp"

namespace gfc {

// What an agent can know about the network around it: its own input and
// out-link weights, plus, per in-channel heard on, the channel's weight,
// whether the channel is two-way, and the sender's own view. Views are
// interned trees; node identity is structural, so equal knowledge states
// compare pointer-equal regardless of how they were assembled.
struct view_node {
  struct in_edge {
    Token weight;
    bool bidi = false;
    const view_node* child = nullptr;
  };

  Token input;
  std::vector<Token> out_weights;  // sorted
  std::vector<in_edge> ins;        // sorted by (weight, bidi, child encoding)

  // cached
  std::string enc;
  int depth = 0;
  int atoms = 0;
};

class view_pool {
 public:
  static view_pool& instance() {
    static view_pool p;
    return p;
  }

  const view_node* make(Token input, std::vector<Token> out_weights,
                        std::vector<view_node::in_edge> ins) {
    std::sort(out_weights.begin(), out_weights.end());
    std::sort(ins.begin(), ins.end(), [](const auto& a, const auto& b) {
      return std::tie(a.weight, a.bidi, a.child->enc) < std::tie(b.weight, b.bidi, b.child->enc);
    });
    std::string enc = encode(input, out_weights, ins);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_enc_.find(enc);
    if (it != by_enc_.end()) return it->second.get();
    auto node = std::make_unique<view_node>();
    node->input = std::move(input);
    node->out_weights = std::move(out_weights);
    node->ins = std::move(ins);
    node->enc = enc;
    node->depth = 0;
    node->atoms = 1 + static_cast<int>(node->out_weights.size());
    for (auto& e : node->ins) {
      node->depth = std::max(node->depth, e.child->depth + 1);
      node->atoms += 2 + e.child->atoms;
    }
    const view_node* raw = node.get();
    by_enc_.emplace(std::move(enc), std::move(node));
    return raw;
  }

 private:
  static std::string encode(const Token& input, const std::vector<Token>& outw,
                            const std::vector<view_node::in_edge>& ins) {
    std::string s = "(" + input + "|";
    for (auto& w : outw) s += w + ",";
    s += "|";
    for (auto& e : ins) s += "[" + e.weight + (e.bidi ? "+" : "-") + e.child->enc + "]";
    s += ")";
    return s;
  }

  std::mutex mu_;
  std::map<std::string, std::unique_ptr<view_node>> by_enc_;
};

inline const view_node* make_view(Token input, std::vector<Token> out_weights,
                                  std::vector<view_node::in_edge> ins) {
  return view_pool::instance().make(std::move(input), std::move(out_weights), std::move(ins));
}

// The depth-k in-unfolding of an agent: everything it could have heard after
// k rounds in which every agent reports all it knows.
inline const view_node* unfold(const network& n, int agent, int k) {
  std::vector<view_node::in_edge> ins;
  if (k > 0)
    for (auto& [src, w] : n.in_links(agent))
      ins.push_back({w, n.is_bidirectional(src, agent), unfold(n, src, k - 1)});
  return make_view(n.input_of(agent), n.out_weight_multiset(agent), std::move(ins));
}

// a includes b: a carries at least the knowledge of b
inline bool view_includes(const view_node* a, const view_node* b) {
  if (a == b) return true;
  if (a->input != b->input || a->out_weights != b->out_weights) return false;
  // every in-edge of b must be matched by a distinct compatible in-edge of a
  std::vector<bool> used(a->ins.size(), false);
  for (auto& eb : b->ins) {
    bool found = false;
    for (size_t i = 0; i < a->ins.size(); ++i) {
      if (used[i]) continue;
      auto& ea = a->ins[i];
      if (ea.weight == eb.weight && ea.bidi == eb.bidi && view_includes(ea.child, eb.child)) {
        used[i] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Merge two views of the same agent. In-edges are matched by (weight, bidi)
// and inclusion; the result carries the union of the knowledge.
inline const view_node* merge_views(const view_node* a, const view_node* b) {
  if (a == b || view_includes(a, b)) return a;
  if (view_includes(b, a)) return b;
  if (a->input != b->input || a->out_weights != b->out_weights)
    throw invariant_error("merging views of different agents");
  std::vector<view_node::in_edge> ins;
  std::vector<bool> used(b->ins.size(), false);
  for (auto& ea : a->ins) {
    bool merged = false;
    for (size_t j = 0; j < b->ins.size(); ++j) {
      if (used[j]) continue;
      auto& eb = b->ins[j];
      if (ea.weight != eb.weight || ea.bidi != eb.bidi) continue;
      if (view_includes(ea.child, eb.child) || view_includes(eb.child, ea.child)) {
        ins.push_back({ea.weight, ea.bidi, merge_views(ea.child, eb.child)});
        used[j] = true;
        merged = true;
        break;
      }
    }
    if (!merged) ins.push_back(ea);
  }
  for (size_t j = 0; j < b->ins.size(); ++j)
    if (!used[j]) ins.push_back(b->ins[j]);
  return make_view(a->input, a->out_weights, std::move(ins));
}

// Does this view hold of agent `root` in network `n`? Tree in-edges must map
// to distinct real in-edges with matching labels, recursively.
inline bool view_embeds(const view_node* v, const network& n, int root) {
  if (v->input != n.input_of(root) || v->out_weights != n.out_weight_multiset(root)) return false;
  auto& ins = n.in_links(root);
  std::vector<bool> used(ins.size(), false);
  std::function<bool(size_t)> match = [&](size_t at) -> bool {
    if (at == v->ins.size()) return true;
    auto& e = v->ins[at];
    for (size_t i = 0; i < ins.size(); ++i) {
      if (used[i]) continue;
      auto& [src, w] = ins[i];
      if (w != e.weight || n.is_bidirectional(src, root) != e.bidi) continue;
      if (!view_embeds(e.child, n, src)) continue;
      used[i] = true;
      if (match(at + 1)) return true;
      used[i] = false;
    }
    return false;
  };
  return match(0);
}

}  // namespace gfc
