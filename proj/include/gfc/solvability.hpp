#pragma once

#include <optional>
#include <sstream>

#include "gfc/bisim.hpp"
#include "gfc/network.hpp"

namespace gfc {

struct solvability_counterexample {
  int k_star = 0;
  pointed_network p, q;
  Token f_p, f_q;
};

struct solvability_report {
  bool solvable = false;
  int k_star = 0;
  // per member (by family index): minimal k at which every level-k block
  // containing one of its agents is f-constant
  std::vector<int> witness_k;
  std::optional<solvability_counterexample> counterexample;

  int max_witness() const {
    int m = 0;
    for (int k : witness_k) m = std::max(m, k);
    return m;
  }
};

// f is computable on the family iff, once the level partitions stabilize,
// every block takes a single f value across the networks its members live in.
inline solvability_report is_solvable(bisim_context& ctx, const global_function& f) {
  const network_family& fam = ctx.family();
  std::vector<Token> fval;
  for (auto& n : fam.members) fval.push_back(f.eval(n));

  solvability_report rep;
  auto [k_star, part] = ctx.stabilize();
  rep.k_star = k_star;

  for (auto& blk : part.blocks) {
    for (size_t i = 1; i < blk.size(); ++i) {
      if (fval[blk[i].net] != fval[blk[0].net]) {
        rep.solvable = false;
        rep.counterexample = {k_star, blk[0], blk[i], fval[blk[0].net], fval[blk[i].net]};
        return rep;
      }
    }
  }
  rep.solvable = true;

  // constancy is monotone in k (blocks only refine), so the witness for
  // member m is the first k at which all blocks touching m are f-constant
  rep.witness_k.assign(fam.members.size(), -1);
  for (int k = 0; k <= k_star; ++k) {
    bisim_partition pk = ctx.partition(k);
    std::vector<bool> constant(fam.members.size(), true);
    for (auto& blk : pk.blocks) {
      bool same = true;
      for (size_t i = 1; i < blk.size(); ++i)
        if (fval[blk[i].net] != fval[blk[0].net]) same = false;
      if (!same)
        for (auto& p : blk) constant[p.net] = false;
    }
    for (size_t m = 0; m < fam.members.size(); ++m)
      if (constant[m] && rep.witness_k[m] < 0) rep.witness_k[m] = k;
  }
  return rep;
}

struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Requires every member strongly connected with no two agents locally the
// same; then each member's witness level is at most diam(N)+1.
inline bool check_diameter_bound(bisim_context& ctx, const global_function& f) {
  const network_family& fam = ctx.family();
  for (size_t m = 0; m < fam.members.size(); ++m) {
    const network& n = fam.members[m];
    if (!strongly_connected(n))
      throw precondition_error("member " + n.name + " is not strongly connected");
    for (auto& a : n.agents)
      for (auto& b : n.agents)
        if (a.id < b.id && locally_same(n, a.id, b.id))
          throw precondition_error("member " + n.name + ": agents " + std::to_string(a.id) +
                                   " and " + std::to_string(b.id) + " are locally the same");
  }
  solvability_report rep = is_solvable(ctx, f);
  if (!rep.solvable) return false;
  for (size_t m = 0; m < fam.members.size(); ++m)
    if (rep.witness_k[m] > diameter(fam.members[m]) + 1) return false;
  return true;
}

inline std::string render_report(const network_family& fam, const global_function& f,
                                 const solvability_report& rep) {
  std::ostringstream os;
  os << "family " << fam.description << " members=" << fam.members.size() << " fn=" << f.name
     << "\n";
  os << "stabilized k_star=" << rep.k_star << "\n";
  if (rep.solvable) {
    os << "solvable yes\n";
    for (size_t m = 0; m < fam.members.size(); ++m)
      os << "witness net=" << fam.members[m].name << " k=" << rep.witness_k[m]
         << " f=" << f.eval(fam.members[m]) << "\n";
  } else {
    os << "solvable no\n";
    auto& cx = *rep.counterexample;
    os << "counterexample k=" << cx.k_star << " (" << fam.members[cx.p.net].name << ",agent "
       << cx.p.agent << ") f=" << cx.f_p << " vs (" << fam.members[cx.q.net].name << ",agent "
       << cx.q.agent << ") f=" << cx.f_q << "\n";
  }
  return os.str();
}

}  // namespace gfc
