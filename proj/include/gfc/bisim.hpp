#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "gfc/network.hpp"

namespace gfc {

// (network, agent) pair; `net` indexes into the owning family, `agent` is the
// external id within that member.
struct pointed_network {
  int net = 0;
  int agent = 0;
  friend bool operator==(const pointed_network&, const pointed_network&) = default;
  friend auto operator<=>(const pointed_network&, const pointed_network&) = default;
};

struct bisim_partition {
  int level = 0;
  std::vector<std::vector<pointed_network>> blocks;
};

// k-level local equivalence over all (network, agent) pairs of a family.
//
// Level 0 compares inputs and out-link weight multisets. Level k+1 additionally
// requires a bijection over in-neighbors preserving in-edge weight,
// bidirectionality, and level-k equivalence. Out-link bidirectionality is
// deliberately not compared at level 0; only in-edges carry that condition.
class bisim_context {
 public:
  explicit bisim_context(const network_family& fam) : fam_(&fam) {
    int off = 0;
    for (auto& n : fam.members) {
      offsets_.push_back(off);
      off += n.n();
    }
    total_ = off;
  }

  const network_family& family() const { return *fam_; }

  int flat(const pointed_network& p) const {
    return offsets_[p.net] + fam_->members[p.net].index_of(p.agent);
  }
  pointed_network unflat(int ix) const {
    int net = 0;
    while (net + 1 < static_cast<int>(offsets_.size()) && offsets_[net + 1] <= ix) ++net;
    return {net, fam_->members[net].id_at(ix - offsets_[net])};
  }

  bool bisim0(const pointed_network& p, const pointed_network& q) {
    const network& a = fam_->members[p.net];
    const network& b = fam_->members[q.net];
    return a.input_of(p.agent) == b.input_of(q.agent) &&
           a.out_weight_multiset(p.agent) == b.out_weight_multiset(q.agent);
  }

  // Memoized on (k, p, q) with the pair canonically ordered. After
  // stabilization the answer is a pure partition lookup, safe to share.
  bool bisimK(int k, const pointed_network& p, const pointed_network& q) {
    if (p == q) return true;
    if (k_star_ >= 0) {
      int lvl = std::min(k, k_star_);  // deeper levels agree once stabilized
      return levels_[lvl][flat(p)] == levels_[lvl][flat(q)];
    }
    int fp = flat(p), fq = flat(q);
    if (fp > fq) std::swap(fp, fq);
    uint64_t key = (static_cast<uint64_t>(k) << 40) | (static_cast<uint64_t>(fp) << 20) |
                   static_cast<uint64_t>(fq);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool r = compute(k, unflat(fp), unflat(fq));
    memo_[key] = r;
    return r;
  }

  // Equivalence classes of level-k over all pairs of the family.
  bisim_partition partition(int k) {
    ensure_levels(k);
    bisim_partition part;
    part.level = k;
    std::map<int, std::vector<pointed_network>> by_class;
    for (int ix = 0; ix < total_; ++ix) by_class[levels_[k][ix]].push_back(unflat(ix));
    for (auto& [c, members] : by_class) part.blocks.push_back(members);
    return part;
  }

  // Smallest k with partition(k) == partition(k+1); refinement over a finite
  // set must reach this fixpoint, after which every deeper level agrees.
  std::pair<int, bisim_partition> stabilize() {
    int k = 0;
    ensure_levels(1);
    while (levels_[k] != levels_[k + 1]) {
      ++k;
      ensure_levels(k + 1);
    }
    k_star_ = k;
    return {k, partition(k)};
  }

  int k_star() {
    if (k_star_ < 0) stabilize();
    return k_star_;
  }

 private:
  bool compute(int k, const pointed_network& p, const pointed_network& q) {
    if (!bisim0(p, q)) return false;
    if (k == 0) return true;
    const network& a = fam_->members[p.net];
    const network& b = fam_->members[q.net];
    auto& ina = a.in_links(p.agent);
    auto& inb = b.in_links(q.agent);
    if (ina.size() != inb.size()) return false;
    // Group in-neighbors by (weight, bidirectional); within a group the
    // level-(k-1) relation is an equivalence, so a label-preserving bijection
    // exists exactly when class sizes agree.
    using group_key = std::pair<Token, bool>;
    std::map<group_key, std::vector<pointed_network>> ga, gb;
    for (auto& [s, w] : ina) ga[{w, a.is_bidirectional(s, p.agent)}].push_back({p.net, s});
    for (auto& [s, w] : inb) gb[{w, b.is_bidirectional(s, q.agent)}].push_back({q.net, s});
    if (ga.size() != gb.size()) return false;
    for (auto& [key, va] : ga) {
      auto it = gb.find(key);
      if (it == gb.end() || it->second.size() != va.size()) return false;
      auto& vb = it->second;
      // partition va into level-(k-1) classes, then drain matching members of vb
      std::vector<bool> used(vb.size(), false);
      for (auto& x : va) {
        bool found = false;
        for (size_t j = 0; j < vb.size(); ++j) {
          if (used[j]) continue;
          if (bisimK(k - 1, x, vb[j])) {
            used[j] = true;
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
    }
    return true;
  }

  void ensure_levels(int k) {
    if (levels_.empty()) {
      // level 0: classes by (input, out-weight multiset)
      std::map<std::pair<Token, std::vector<Token>>, int> ids;
      std::vector<int> cls(total_);
      for (int ix = 0; ix < total_; ++ix) {
        pointed_network p = unflat(ix);
        const network& n = fam_->members[p.net];
        auto key = std::make_pair(n.input_of(p.agent), n.out_weight_multiset(p.agent));
        auto [it, fresh] = ids.emplace(key, static_cast<int>(ids.size()));
        cls[ix] = it->second;
      }
      levels_.push_back(std::move(cls));
    }
    while (static_cast<int>(levels_.size()) <= k) {
      const std::vector<int>& prev = levels_.back();
      std::map<std::vector<int64_t>, int> ids;
      std::vector<int> cls(total_);
      for (int ix = 0; ix < total_; ++ix) {
        pointed_network p = unflat(ix);
        const network& n = fam_->members[p.net];
        std::vector<int64_t> sig;
        sig.push_back(prev[ix]);
        std::vector<std::tuple<Token, bool, int>> ins;
        for (auto& [s, w] : n.in_links(p.agent))
          ins.push_back({w, n.is_bidirectional(s, p.agent), prev[flat({p.net, s})]});
        std::sort(ins.begin(), ins.end());
        for (auto& [w, bd, c] : ins) {
          sig.push_back(intern(w));
          sig.push_back(bd ? 1 : 0);
          sig.push_back(c);
        }
        auto [it, fresh] = ids.emplace(sig, static_cast<int>(ids.size()));
        cls[ix] = it->second;
      }
      levels_.push_back(std::move(cls));
    }
  }

  int64_t intern(const Token& t) {
    auto [it, fresh] = token_ids_.emplace(t, static_cast<int64_t>(token_ids_.size()));
    return it->second;
  }

  const network_family* fam_;
  std::vector<int> offsets_;
  int total_ = 0;
  int k_star_ = -1;
  std::unordered_map<uint64_t, bool> memo_;
  std::vector<std::vector<int>> levels_;
  std::map<Token, int64_t> token_ids_;
};

// Refinement check helper used by property tests: does `fine` refine `coarse`?
inline bool refines(const bisim_partition& fine, const bisim_partition& coarse) {
  std::map<pointed_network, int> block_of;
  for (size_t b = 0; b < coarse.blocks.size(); ++b)
    for (auto& p : coarse.blocks[b]) block_of[p] = static_cast<int>(b);
  for (auto& blk : fine.blocks) {
    for (size_t i = 1; i < blk.size(); ++i)
      if (block_of.at(blk[i]) != block_of.at(blk[0])) return false;
  }
  return true;
}

}  // namespace gfc
