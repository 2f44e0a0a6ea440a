#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfc/election.hpp"
#include "gfc/network.hpp"
#include "gfc/runtime.hpp"

namespace gfc {

// (run, time, agent), with time given as the agent's event-prefix length
struct situation {
  int run_ix = 0;
  int agent = 0;
  int prefix = 0;
};

struct build_policy {
  int async_seeds = 0;       // sampled asynchronous runs per network, besides sync
  int step_budget = 4096;
  uint32_t seed_base = 9000;
};

// Rank-0 runs of a protocol over a family, with a local-state index. Runs that
// deviate from the protocol in exactly one send (rank 1) are built on demand
// by the close construction and cached.
class run_system {
 public:
  run_system(const protocol& proto, const network_family& fam, build_policy pol = {})
      : proto_(&proto), fam_(&fam), pol_(pol) {
    for (auto& n : fam.members) {
      push_run(run_protocol(n, proto, scheduler::sync(), pol.step_budget));
      for (int s = 1; s <= pol.async_seeds; ++s)
        push_run(run_protocol(n, proto, scheduler::async(pol.seed_base + s), pol.step_budget));
      // a bidirectional ring admits the mirror orientation of the L/R
      // convention; those runs are runs of the protocol as well
      if (proto.channel_names() == naming_style::ring_lr && n.n() > 2) {
        push_run(run_protocol(n, proto, scheduler::sync(), pol.step_budget, {}, true));
        for (int s = 1; s <= pol.async_seeds; ++s)
          push_run(run_protocol(n, proto, scheduler::async(pol.seed_base + s), pol.step_budget,
                                {}, true));
      }
    }
  }

  const std::vector<run>& rank0() const { return rank0_; }
  const protocol& proto() const { return *proto_; }
  const network_family& family() const { return *fam_; }

  const std::vector<situation>& matches(const state_hash& h) const {
    static const std::vector<situation> none;
    auto it = index_.find(h);
    return it == index_.end() ? none : it->second;
  }

  // single-drop deviation run, identical to rank0_[run_ix] up to the decision;
  // insert-only memo, readers share while inserts serialize
  const run& deviation(int run_ix, int agent, int ordinal, const Token& channel) {
    auto key = std::make_tuple(run_ix, agent, ordinal, channel);
    {
      std::lock_guard<std::mutex> lock(dev_mu_);
      auto it = dev_cache_.find(key);
      if (it != dev_cache_.end()) return *it->second;
    }
    send_drop drop;
    drop.agent = agent;
    drop.ordinal = ordinal;
    drop.dropped_channel = channel;
    auto r = std::make_unique<run>(run_protocol(rank0_[run_ix].net, *proto_,
                                                rank0_[run_ix].sched,
                                                pol_.step_budget * 2 + 64, drop,
                                                rank0_[run_ix].mirrored));
    std::lock_guard<std::mutex> lock(dev_mu_);
    auto [it, fresh] = dev_cache_.emplace(key, std::move(r));
    return *it->second;
  }

  std::optional<int> decision_ordinal(int run_ix, int agent, int prefix) const {
    for (auto& d : rank0_[run_ix].decisions)
      if (d.agent == agent && d.prefix_events == prefix) return d.ordinal;
    return std::nullopt;
  }

 private:
  void push_run(run&& r) {
    int ix = static_cast<int>(rank0_.size());
    rank0_.push_back(std::move(r));
    const run& rr = rank0_.back();
    for (auto& [agent, keys] : rr.state_keys)
      for (size_t p = 0; p < keys.size(); ++p)
        index_[keys[p]].push_back({ix, agent, static_cast<int>(p)});
  }

  const protocol* proto_;
  const network_family* fam_;
  build_policy pol_;
  std::vector<run> rank0_;
  std::map<state_hash, std::vector<situation>> index_;
  std::mutex dev_mu_;
  std::map<std::tuple<int, int, int, Token>, std::unique_ptr<run>> dev_cache_;
};

inline run_system build_system(const protocol& proto, const network_family& fam,
                               build_policy pol = {}) {
  return run_system(proto, fam, pol);
}

// all rank-0 situations sharing the local state at s
inline std::vector<situation> possible_situations(const run_system& sys, const situation& s) {
  return sys.matches(sys.rank0()[s.run_ix].state_key(s.agent, s.prefix));
}

// f takes one value across every network the agent thinks possible
inline bool knows_value(const run_system& sys, const situation& s, const global_function& f) {
  auto m = possible_situations(sys, s);
  if (m.empty()) return false;
  Token v = f.eval(sys.rank0()[m[0].run_ix].net);
  for (auto& s2 : m)
    if (f.eval(sys.rank0()[s2.run_ix].net) != v) return false;
  return true;
}

// ---------------------------------------------------------------------------
// counterfactuals

// closest situations where the agent does not send to `n`: the situation
// itself when its protocol does not send there, otherwise the same-time point
// of the single-drop deviation run
struct close_result {
  bool deviated = false;
  const run* r = nullptr;
  int step = 0;
  int agent = 0;
};

inline close_result close_drop_send(run_system& sys, const situation& s, const Token& n) {
  const run& base = sys.rank0()[s.run_ix];
  auto ord = sys.decision_ordinal(s.run_ix, s.agent, s.prefix);
  close_result res;
  res.agent = s.agent;
  auto& ev = base.events.at(s.agent);
  res.step = s.prefix > 0 ? ev[s.prefix - 1].step : 0;
  bool sends_n = false;
  if (ord)
    for (auto& d : base.decisions)
      if (d.agent == s.agent && d.ordinal == *ord)
        for (auto& t : d.sent_to)
          if (t == n) sends_n = true;
  if (!sends_n) {
    res.r = &base;
    return res;
  }
  res.deviated = true;
  res.r = &sys.deviation(s.run_ix, s.agent, *ord, n);
  return res;
}

// ---------------------------------------------------------------------------
// message content

struct content_atoms {
  std::vector<std::pair<int, long long>> cells;
  bool wrap = false;
  int ring_size = 0;
  const view_node* tree = nullptr;  // tree-protocol content, checked by embedding
  bool empty() const { return cells.empty() && !wrap && !tree; }
};

// What the agent would say to the neighbor over `channel`: everything it
// knows and has not already passed that way. Tree protocols broadcast, so the
// accumulated view stands in, checked later by embedding.
inline content_atoms new_info_atoms(const run& r, int agent, int prefix, const Token& channel) {
  content_atoms out;
  bool segments = false, trees = false;
  for (auto& [id, evs] : r.events)
    for (auto& e : evs) {
      if (e.pl.k == payload::kind::segment) segments = true;
      if (e.pl.k == payload::kind::tree) trees = true;
    }
  if (segments) {
    ring_segment seg = ring_segment::seed(parse_id(r.net.input_of(agent)));
    std::set<long long> sent;
    bool sent_wrap = false;
    auto& evs = r.events.at(agent);
    for (int i = 0; i < prefix && i < static_cast<int>(evs.size()); ++i) {
      const run_event& e = evs[i];
      if (e.k == run_event::kind::recv && e.pl.k == payload::kind::segment) {
        seg = graft_segment(seg, e.pl.seg, side_offset(e.channel));
        continue;
      }
      if (e.k != run_event::kind::send) continue;
      for (auto& t : e.targets)
        if (t == channel) {
          for (auto& [p, v] : seg.at) sent.insert(v);
          if (seg.wrapped) sent_wrap = true;
        }
    }
    ring_segment d = seg.minus_ids(sent, sent_wrap);
    out.cells.assign(d.at.begin(), d.at.end());
    out.wrap = seg.wrapped && !sent_wrap;
    out.ring_size = seg.ring_size;
    return out;
  }
  if (trees) {
    const view_node* now = nullptr;
    std::map<Token, std::tuple<Token, bool, const view_node*>> ch;
    for (int i = 0; i < prefix; ++i) {
      const run_event& e = r.events.at(agent)[i];
      if (e.k == run_event::kind::recv && e.pl.k == payload::kind::tree)
        ch[e.channel] = {e.link_weight, e.link_bidi, e.pl.tree};
    }
    std::vector<view_node::in_edge> ins;
    for (auto& [tag, t] : ch) ins.push_back({std::get<0>(t), std::get<1>(t), std::get<2>(t)});
    now = make_view(r.net.input_of(agent), r.net.out_weight_multiset(agent), std::move(ins));
    out.tree = now;
  }
  return out;
}

// ---------------------------------------------------------------------------
// belief

namespace detail {

inline long long id_at_offset(const ring_layout& ring, long long from_id, int offset) {
  int n = ring.n();
  int p = ring.pos_of_id(from_id);
  // positions count +1 per step right; ring vector is ordered leftward
  int ix = ((p - offset) % n + n) % n;
  return ring.ids[ix];
}

inline bool atoms_hold(const content_atoms& atoms, int shift, const network& net, int agent) {
  if (atoms.tree) {
    // the sender's view must hold of some in-neighbor of `agent`
    for (auto& [src, w] : net.in_links(agent))
      if (view_embeds(atoms.tree, net, src)) return true;
    return false;
  }
  ring_shape rs = classify_ring(net);
  if (!rs.is_ring) return false;
  ring_layout ring;
  for (int a : rs.order) {
    ring.ids.push_back(parse_id(net.input_of(a)));
    ring.agent_ids.push_back(a);
  }
  if (atoms.wrap && net.n() != atoms.ring_size) return false;
  long long me = parse_id(net.input_of(agent));
  for (auto& [p, v] : atoms.cells)
    if (id_at_offset(ring, me, p + shift) != v) return false;
  return true;
}

// The believed-possible (network, agent) pairs behind a local state. When the
// state occurs in runs of the protocol, those runs are the minimal rank and
// belief ranges over them. Otherwise the state only occurs in deviating runs;
// message contents are truthful in every run, so the possibilities are all
// family positions consistent with everything the agent has observed.
struct belief_set {
  std::vector<std::pair<const network*, int>> nets;
};

inline belief_set believed(const run_system& sys, const run& r, int agent, int prefix) {
  belief_set out;
  for (auto& s : sys.matches(r.state_key(agent, prefix)))
    out.nets.push_back({&sys.rank0()[s.run_ix].net, s.agent});
  if (!out.nets.empty()) return out;
  bool tree_world = false;
  for (auto& [id, evs] : r.events) {
    for (auto& e : evs)
      if (e.pl.k == payload::kind::tree) tree_world = true;
    break;
  }
  if (!tree_world) {
    ring_segment seg = segment_at(r, agent, prefix);
    content_atoms obs;
    for (auto& [p, v] : seg.at) obs.cells.push_back({p, v});
    obs.wrap = seg.wrapped;
    obs.ring_size = seg.ring_size;
    for (auto& net : sys.family().members)
      for (auto& ag : net.agents)
        if (atoms_hold(obs, 0, net, ag.id)) out.nets.push_back({&net, ag.id});
    return out;
  }
  // tree protocols: the accumulated view must hold of the candidate position
  content_atoms obs = new_info_atoms(r, agent, prefix, Token());
  for (auto& net : sys.family().members)
    for (auto& ag : net.agents)
      if (obs.tree && view_embeds(obs.tree, net, ag.id)) out.nets.push_back({&net, ag.id});
  return out;
}

inline bool segment_world(const run& r) {
  for (auto& [id, evs] : r.events)
    for (auto& e : evs)
      if (e.pl.k == payload::kind::tree) return false;
  return true;
}

// Belief in the sender's content: every atom must already follow from the
// agent's own accumulated view. Ring protocols assume nothing about sizes or
// the id pool, so entailment over all consistent ring extensions reduces to
// the atoms sitting inside the view (position-exact, folding once the size is
// known).
inline bool believes_content(const run_system& sys, const run& r, int agent, int prefix,
                             const content_atoms& atoms, int shift) {
  if (segment_world(r)) {
    ring_segment seg = segment_at(r, agent, prefix);
    if (atoms.wrap && !seg.wrapped) return false;
    if (atoms.wrap && seg.ring_size != atoms.ring_size) return false;
    for (auto& [p, v] : atoms.cells) {
      int pos = p + shift;
      if (seg.wrapped) pos = ((pos % seg.ring_size) + seg.ring_size) % seg.ring_size;
      auto it = seg.at.find(pos);
      if (it == seg.at.end() || it->second != v) return false;
    }
    return true;
  }
  belief_set b = believed(sys, r, agent, prefix);
  if (b.nets.empty()) return false;
  for (auto& [net, ag] : b.nets)
    if (!atoms_hold(atoms, shift, *net, ag)) return false;
  return true;
}

// Belief in some value of f: in a ring world the agent can rule out larger
// rings and unseen ids only once its picture is complete; f is then read off
// the pinned ring. Tree worlds quantify over the family's runs.
inline bool believes_value(const run_system& sys, const run& r, int agent, int prefix,
                           const global_function& f, std::map<std::string, Token>& fcache) {
  if (segment_world(r)) {
    ring_segment seg = segment_at(r, agent, prefix);
    return seg.complete();
  }
  belief_set b = believed(sys, r, agent, prefix);
  if (b.nets.empty()) return false;
  std::optional<Token> v;
  for (auto& [net, ag] : b.nets) {
    auto it = fcache.find(net->name);
    if (it == fcache.end()) it = fcache.emplace(net->name, f.eval(*net)).first;
    if (!v)
      v = it->second;
    else if (*v != it->second)
      return false;
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// the counterfactual send condition

struct cb_formula_result {
  bool must_send = false;
  // witnessing believed situation whose counterfactual future fails, if any
  std::optional<situation> witness;
};

// Checked along a (possibly deviated) run from `start_step` on: does the
// neighbor reached over `n` eventually either believe the content of the
// sender's new information, attributed to the sender's relative position, or
// believe some value of f?
inline bool eventually_covered(const run_system& sys, const run& r, int start_step, int sender,
                               const Token& n, const content_atoms& atoms,
                               const global_function& f, std::map<std::string, Token>& fcache) {
  relative_naming rn = build_naming(r.net, r.names, r.mirrored);
  int j = rn.resolve(sender, n);
  int shift = 0;
  bool ring_names = n == "L" || n == "R";
  if (ring_names) shift = n == "L" ? 1 : -1;  // the sender sits there, seen from j
  auto& evs = r.events.at(j);
  int p0 = 0;
  while (p0 < static_cast<int>(evs.size()) && evs[p0].step <= start_step) ++p0;
  for (int p = p0; p <= static_cast<int>(evs.size()); ++p) {
    if (detail::believes_value(sys, r, j, p, f, fcache)) return true;
    if (!atoms.empty() && (ring_names || atoms.tree) &&
        detail::believes_content(sys, r, j, p, atoms, shift))
      return true;
  }
  return false;
}

// Precondition of the counterfactual program for sending to `n` at a decision
// point: true (the agent must send) exactly when some believed-possible
// situation would, without this send, leave the n-neighbor never learning the
// content or the function value.
inline cb_formula_result eval_send_condition(run_system& sys, const situation& s, const Token& n,
                                             const global_function& f) {
  const run& base = sys.rank0()[s.run_ix];
  cb_formula_result res;
  content_atoms atoms = new_info_atoms(base, s.agent, s.prefix, n);
  if (atoms.empty()) return res;  // nothing new for that side: nothing to send
  auto ord = sys.decision_ordinal(s.run_ix, s.agent, s.prefix);
  bool sends_n = false;
  if (ord)
    for (auto& d : base.decisions)
      if (d.agent == s.agent && d.ordinal == *ord)
        for (auto& t : d.sent_to)
          if (t == n) sends_n = true;

  std::vector<situation> believed = possible_situations(sys, s);
  struct probe {
    const run* r;
    int step;
    int sender;
    situation at;
  };
  std::vector<probe> probes;
  for (auto& s2 : believed) {
    const run& r2 = sys.rank0()[s2.run_ix];
    int step = s2.prefix > 0 ? r2.events.at(s2.agent)[s2.prefix - 1].step : 0;
    if (sends_n) {
      auto ord2 = sys.decision_ordinal(s2.run_ix, s2.agent, s2.prefix);
      if (!ord2) continue;  // transient occurrences share the acting twin's fate
      const run& dev = sys.deviation(s2.run_ix, s2.agent, *ord2, n);
      probes.push_back({&dev, step, s2.agent, s2});
    } else {
      probes.push_back({&r2, step, s2.agent, s2});
    }
  }
  std::map<std::string, Token> fcache;
  for (auto& pr : probes) {
    if (!eventually_covered(sys, *pr.r, pr.step, pr.sender, n, atoms, f, fcache)) {
      res.must_send = true;
      res.witness = pr.at;
      return res;
    }
  }
  return res;
}

// The knowledge-only variant (no counterfactual, no eventuality): send unless
// the agent knows the n-neighbor already knows the content.
inline bool eval_kb_send_condition(run_system& sys, const situation& s, const Token& n) {
  const run& base = sys.rank0()[s.run_ix];
  content_atoms atoms = new_info_atoms(base, s.agent, s.prefix, n);
  if (atoms.empty()) return false;
  bool ring_names = n == "L" || n == "R";
  if (!ring_names) return true;
  int shift = n == "L" ? 1 : -1;
  for (auto& s2 : possible_situations(sys, s)) {
    const run& r2 = sys.rank0()[s2.run_ix];
    relative_naming rn = build_naming(r2.net, r2.names, r2.mirrored);
    int j = rn.resolve(s2.agent, n);
    int step = s2.prefix > 0 ? r2.events.at(s2.agent)[s2.prefix - 1].step : 0;
    auto& evs = r2.events.at(j);
    int p = 0;
    while (p < static_cast<int>(evs.size()) && evs[p].step <= step) ++p;
    if (!detail::believes_content(sys, r2, j, p, atoms, shift)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// de facto implementation check

struct de_facto_mismatch {
  std::string net;
  int step = 0;
  int agent = 0;
  std::set<Token> proto_sends;
  std::set<Token> kb_sends;
};

struct de_facto_report {
  int states = 0;
  std::vector<de_facto_mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

inline de_facto_report de_facto_check(run_system& sys, const global_function& f) {
  de_facto_report rep;
  struct verdict {
    std::set<Token> kb;
  };
  std::map<state_hash, verdict> cache;
  for (int rx = 0; rx < static_cast<int>(sys.rank0().size()); ++rx) {
    const run& r = sys.rank0()[rx];
    relative_naming rn = build_naming(r.net, r.names, r.mirrored);
    for (auto d : r.decisions) {
      const state_hash& key = r.state_key(d.agent, d.prefix_events);
      auto it = cache.find(key);
      if (it == cache.end()) {
        verdict v;
        std::set<Token> names;
        for (auto& [nm, dst] : rn.names[d.agent]) names.insert(nm);
        for (auto& nm : names) {
          situation s{rx, d.agent, d.prefix_events};
          if (eval_send_condition(sys, s, nm, f).must_send) v.kb.insert(nm);
        }
        it = cache.emplace(key, std::move(v)).first;
        ++rep.states;
      }
      std::set<Token> proto_set(d.sent_to.begin(), d.sent_to.end());
      if (proto_set != it->second.kb) {
        de_facto_mismatch m;
        m.net = r.net.name;
        m.step = d.step;
        m.agent = d.agent;
        m.proto_sends = proto_set;
        m.kb_sends = it->second.kb;
        rep.mismatches.push_back(m);
      }
    }
  }
  return rep;
}

inline std::string render_de_facto(const de_facto_report& rep) {
  std::ostringstream os;
  auto set_str = [](const std::set<Token>& s) {
    std::string out = "{";
    bool first = true;
    for (auto& t : s) {
      if (!first) out += ",";
      out += t;
      first = false;
    }
    return out + "}";
  };
  for (auto& m : rep.mismatches)
    os << "MISMATCH net=" << m.net << " time=" << m.step << " agent=" << m.agent
       << " proto_sends=" << set_str(m.proto_sends) << " kb_sends=" << set_str(m.kb_sends)
       << "\n";
  if (rep.ok()) os << "OK states=" << rep.states << "\n";
  return os.str();
}

}  // namespace gfc
