#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfc/network.hpp"
#include "gfc/runtime.hpp"
#include "gfc/segment.hpp"

namespace gfc {

// ---------------------------------------------------------------------------
// ring helpers

inline long long parse_id(const Token& t) {
  size_t pos = 0;
  long long v = std::stoll(t, &pos);
  if (pos != t.size()) throw invariant_error("ring protocols need integer ids, got '" + t + "'");
  return v;
}

// ids in leftward order: ids[k]'s L-neighbor is ids[(k+1) % n]
struct ring_layout {
  std::vector<long long> ids;
  std::vector<int> agent_ids;  // external ids aligned with `ids`
  bool bidirectional = false;

  int pos_of_id(long long id) const {
    for (size_t k = 0; k < ids.size(); ++k)
      if (ids[k] == id) return static_cast<int>(k);
    throw invariant_error("id not on ring");
  }
  int n() const { return static_cast<int>(ids.size()); }
  long long left_of(long long id, int hops = 1) const {
    return ids[(pos_of_id(id) + hops) % n()];
  }
  long long right_of(long long id, int hops = 1) const {
    return ids[(pos_of_id(id) + n() - hops % n()) % n()];
  }
  long long max_id() const {
    long long m = ids[0];
    for (long long v : ids) m = std::max(m, v);
    return m;
  }
};

inline ring_layout ring_of(const network& net, bool need_bidirectional) {
  ring_shape rs = classify_ring(net);
  if (!rs.is_ring) throw invariant_error("network " + net.name + " is not a ring");
  if (need_bidirectional && !rs.bidirectional)
    throw invariant_error("network " + net.name + " is not a bidirectional ring");
  ring_layout rl;
  rl.bidirectional = rs.bidirectional;
  std::set<long long> seen;
  for (int a : rs.order) {
    long long id = parse_id(net.input_of(a));
    if (!seen.insert(id).second)
      throw invariant_error("duplicate id " + std::to_string(id) + " on ring " + net.name);
    rl.ids.push_back(id);
    rl.agent_ids.push_back(a);
  }
  return rl;
}

inline int side_offset(const Token& side) {
  if (side == "R") return 1;  // traffic from the right sits one step right
  if (side == "L") return -1;
  throw invariant_error("not a ring side: " + side);
}

// rebuild an agent's ring knowledge from its event log (recv grafts only)
inline ring_segment segment_at(const run& r, int agent, int prefix) {
  ring_segment seg = ring_segment::seed(parse_id(r.net.input_of(agent)));
  auto& ev = r.events.at(agent);
  for (int i = 0; i < prefix && i < static_cast<int>(ev.size()); ++i) {
    const run_event& e = ev[i];
    if (e.k != run_event::kind::recv || e.pl.k != payload::kind::segment) continue;
    seg = graft_segment(seg, e.pl.seg, side_offset(e.channel));
  }
  return seg;
}

// ---------------------------------------------------------------------------
// LCR and LCR': unidirectional, send left, hear from the right

class lcr_machine : public agent_machine {
 public:
  lcr_machine(const agent_ctx& ctx, bool prime) : prime_(prime) {
    seg_ = ring_segment::seed(parse_id(ctx.input));
  }

  void start(std::vector<action>& out) override { send_left(out); }

  void process(const arrival& a, std::vector<action>& out) override {
    if (a.pl.k != payload::kind::segment) return;
    bool msg_complete = a.pl.complete;
    ring_segment before = seg_;
    seg_ = graft_segment(seg_, a.pl.seg, +1);
    bool grew = seg_.enc() != before.enc();
    if (done_) return;
    if (!grew) return;
    auto delta = segment_delta(before, seg_);
    long long val_max = 0;
    bool have_val = !delta.empty();
    for (auto& [p, v] : delta) val_max = std::max(val_max, v);
    bool completed_now = seg_.complete() && !before.complete();
    long long maxid_before = before.max_id();

    if (prime_) {
      // stop before the send when the leader sits to the left or we already
      // forwarded a complete picture
      if (seg_.complete()) {
        long long left_id = seg_.at.at(detail_fold(-1));
        if (sent_leader_ || seg_.max_id() == left_id) {
          done_ = true;
          return;
        }
      }
      bool guard = completed_now || (have_val && val_max > maxid_before);
      if (guard) {
        send_left(out);
        if (seg_.complete()) {
          sent_leader_ = true;
          done_ = true;
        }
      }
      return;
    }

    // plain LCR: forward complete pictures unconditionally (the classic
    // leader message), including the redundant final hop back to the leader
    if (msg_complete) {
      send_left(out);
      done_ = true;
      return;
    }
    if (completed_now) {  // own id came back: only the maximum survives the loop
      send_left(out);
      done_ = true;
      return;
    }
    if (have_val && val_max > maxid_before) send_left(out);
  }

  bool done() const override { return done_; }
  std::optional<Token> learned() const override {
    if (seg_.complete()) return std::to_string(seg_.max_id());
    return std::nullopt;
  }

 private:
  int detail_fold(int p) const { return ((p % seg_.ring_size) + seg_.ring_size) % seg_.ring_size; }

  void send_left(std::vector<action>& out) {
    action act;
    act.to = {"L"};
    act.pl = payload::make_segment(seg_.minus_ids(sent_ids_, sent_wrap_));
    act.pl.complete = seg_.complete();
    for (auto& [p, v] : seg_.at) sent_ids_.insert(v);
    if (seg_.wrapped) sent_wrap_ = true;
    out.push_back(act);
  }

  bool prime_;
  bool done_ = false;
  bool sent_leader_ = false;
  ring_segment seg_;
  std::set<long long> sent_ids_;
  bool sent_wrap_ = false;
};

class lcr_protocol : public protocol {
 public:
  explicit lcr_protocol(bool prime) : prime_(prime) {}
  std::string name() const override { return prime_ ? "lcr_prime" : "lcr"; }
  naming_style channel_names() const override { return naming_style::ring_l; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    ring_of(*ctx.net, false);  // validates ring shape and distinct integer ids
    return std::make_unique<lcr_machine>(ctx, prime_);
  }

 private:
  bool prime_;
};

inline std::unique_ptr<protocol> lcr() { return std::make_unique<lcr_protocol>(false); }
inline std::unique_ptr<protocol> lcr_prime() { return std::make_unique<lcr_protocol>(true); }

// ---------------------------------------------------------------------------
// Peterson's bidirectional protocol P2 (plain id payloads)

class p2_machine : public agent_machine {
 public:
  explicit p2_machine(const agent_ctx& ctx) : id_(parse_id(ctx.input)) {}

  void start(std::vector<action>& out) override { send(out, "L", std::to_string(id_)); }

  std::optional<Token> next_channel(const queues_snapshot& queued) override {
    Token want = wl_ ? "L" : "R";
    auto it = queued.find(want);
    if (it != queued.end() && it->second.count > 0) return want;
    if (done_) {  // drain leftovers once finished
      for (auto& [c, k] : queued)
        if (k.count > 0) return c;
    }
    return std::nullopt;
  }

  void process(const arrival& a, std::vector<action>& out) override {
    bool from_right = a.channel == "R";
    wl_ = from_right ? 1 : 0;
    if (done_) return;
    bool was_active = active_;
    bool leader_msg = a.pl.val.rfind("leader:", 0) == 0;
    if (leader_msg) {
      // forward and stop; the announcement travels one full circle
      send(out, from_right ? "L" : "R", a.pl.val);
      leader_id_ = std::stoll(a.pl.val.substr(7));
      done_ = true;
      return;
    }
    long long val = std::stoll(a.pl.val);
    if (val == id_) {  // own id made it around: maximum
      send(out, from_right ? "R" : "L", "leader:" + a.pl.val);
      leader_id_ = id_;
      done_ = true;
      return;
    }
    if (was_active) {
      if (val > id_) {
        active_ = false;
        passive_ = true;  // the beating value is consumed, not relayed
      } else {
        send(out, from_right ? "R" : "L", std::to_string(id_));
      }
      return;
    }
    // passive relay keeps the value moving in its travel direction
    send(out, from_right ? "L" : "R", a.pl.val);
  }

  bool done() const override { return done_; }
  std::optional<Token> learned() const override {
    if (leader_id_) return std::to_string(*leader_id_);
    return std::nullopt;
  }

 private:
  void send(std::vector<action>& out, const Token& side, Token v) {
    action act;
    act.to = {side};
    act.pl = payload::make_plain(std::move(v));
    out.push_back(act);
  }

  long long id_;
  bool active_ = true;
  bool passive_ = false;
  int wl_ = 0;
  bool done_ = false;
  std::optional<long long> leader_id_;
};

class p2_protocol : public protocol {
 public:
  std::string name() const override { return "p2"; }
  naming_style channel_names() const override { return naming_style::ring_lr; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    ring_of(*ctx.net, true);
    return std::make_unique<p2_machine>(ctx);
  }
};

inline std::unique_ptr<protocol> p2() { return std::make_unique<p2_protocol>(); }

// ---------------------------------------------------------------------------
// P2': P2 sending new information, with a case-analysis endgame once some
// agent knows it has all the information.

// Pre-endgame transition shared by the live machine and the planning
// simulation agents run privately once they know the whole ring.
struct p2p_step_result {
  bool completed_now = false;
  std::vector<Token> send_sides;
};

// Pre-endgame transition state. A message to a side carries exactly the cells
// (and the ring size, once known) not yet passed that way.
struct p2p_core {
  ring_segment seg;
  int wl = 0;
  int processed = 0;
  std::set<long long> sent_ids[2];
  bool sent_wrap[2] = {false, false};

  explicit p2p_core(long long id) : seg(ring_segment::seed(id)) {}

  bool active() const { return seg.max_id() == seg.self_id(); }
  static int side_ix(const Token& s) { return s == "L" ? 0 : 1; }

  ring_segment delta_for(const Token& side) const {
    return seg.minus_ids(sent_ids[side_ix(side)], sent_wrap[side_ix(side)]);
  }
  bool has_news_for(const Token& side) const {
    return seg.carries_news(sent_ids[side_ix(side)], sent_wrap[side_ix(side)]);
  }
  void mark_sent(const Token& side) {
    for (auto& [p, v] : seg.at) sent_ids[side_ix(side)].insert(v);
    if (seg.wrapped) sent_wrap[side_ix(side)] = true;
  }

  p2p_step_result process(const Token& side, const ring_segment& in) {
    p2p_step_result res;
    bool from_right = side == "R";
    wl = from_right ? 1 : 0;
    ++processed;
    bool was_active = active();
    bool was_complete = seg.complete();
    ring_segment before = seg;
    seg = graft_segment(seg, in, side_offset(side));
    if (seg.complete() && !was_complete) {
      res.completed_now = true;
      return res;  // the endgame decides any sends from here on
    }
    auto delta = segment_delta(before, seg);
    if (delta.empty()) return res;
    long long val = delta[0].second;
    for (auto& [p, v] : delta) val = std::max(val, v);
    if (was_active) {
      if (val < seg.self_id()) res.send_sides.push_back(side);
      // val > id: the agent drops out; the beating message is consumed
      return res;
    }
    res.send_sides.push_back(from_right ? Token("L") : Token("R"));
    return res;
  }
};

// Who can be the first to know everything, and how the information then
// spreads. Computed from the ring alone: what agents know depends only on
// how many messages they have processed, so one lockstep simulation decides
// it. The dissemination is organized in directed waves; each wave's coverage
// list tells a recipient whether to forward.
struct p2_endgame_plan {
  struct wave {
    long long origin = 0;
    Token side;                      // direction of travel: origin sends this way
    std::vector<long long> covered;  // recipients in order; last one does not forward
  };
  std::vector<long long> first_learners;
  std::map<long long, Token> learn_side;  // F member -> side its completing message came from
  std::vector<wave> waves;
};

namespace detail {

struct flow_event {
  int agent = -1;   // position on the ring
  int index = 0;    // processing count when this event fired
  int parent_msg = -1;
};

struct flow_msg {
  ring_segment seg;
  int origin_event = -1;    // event that emitted it (-1: initial send)
  int origin_agent = -1;    // originating active agent
  int origin_ordinal = 0;   // how many times the originator had sent this way
  bool clean = true;        // whole relay chain ran before anyone completed
  int sender = -1;
};

// lockstep pre-endgame run used for first-learner analysis
struct p2_flow {
  std::vector<int> first_wrap_index;       // per agent: processing count at wrap
  std::vector<Token> wrap_side;            // side of the completing message
  std::vector<int> wrap_originator;        // position that originated it
  std::vector<int> wrap_event;             // event id of the wrap
  std::vector<std::vector<int>> parents;   // event graph
  std::vector<flow_event> events;
  // phase alignment: the p-th message an agent processes from a side
  // originated as its originator's p-th send that way (checked while the
  // chain stays ahead of anyone completing)
  bool phase_aligned = true;
};

inline p2_flow simulate_p2_flow(const std::vector<long long>& ids) {
  int n = static_cast<int>(ids.size());
  p2_flow fl;
  fl.first_wrap_index.assign(n, -1);
  fl.wrap_side.assign(n, "");
  fl.wrap_originator.assign(n, -1);
  fl.wrap_event.assign(n, -1);

  std::vector<p2p_core> core;
  for (int k = 0; k < n; ++k) core.emplace_back(ids[k]);
  std::vector<int> last_event(n, -1);
  std::map<std::pair<int, Token>, int> sends_by;      // (agent, side) -> count
  std::map<std::pair<int, Token>, int> processed_by;  // (agent, side) -> count
  // queues keyed by (receiver, side)
  std::map<std::pair<int, Token>, std::deque<flow_msg>> q;
  auto left = [&](int k) { return (k + 1) % n; };
  auto right = [&](int k) { return (k + n - 1) % n; };
  auto post = [&](int from, const Token& side, const ring_segment& seg, int ev, int orig,
                  int orig_ordinal, bool clean) {
    int to = side == "L" ? left(from) : right(from);
    Token tag = side == "L" ? "R" : "L";
    q[{to, tag}].push_back({seg, ev, orig, orig_ordinal, clean, from});
  };
  for (int k = 0; k < n; ++k) {
    int ord = ++sends_by[{k, Token("L")}];
    post(k, "L", core[k].delta_for("L"), -1, k, ord, true);
    core[k].mark_sent("L");
  }

  // One message processed per visit. Before anyone completes the picture this
  // follows the protocol exactly; completed agents then simply relay onward,
  // and a stalled strict pass falls back to a relaxed one. The completion
  // order of the earliest learners does not depend on these liveness choices:
  // their causal pasts lie entirely in the faithful part of the flow.
  // originations count the originator's sends in the travel direction;
  // relays pass the originator's tally through unchanged
  auto emit_fresh = [&](int k, const Token& side, int ev_id) {
    int ord = ++sends_by[{k, side}];
    post(k, side, core[k].delta_for(side), ev_id, k, ord, !core[k].seg.complete());
    core[k].mark_sent(side);
  };
  auto emit_relay = [&](int k, const Token& side, int ev_id, const flow_msg& m) {
    ++sends_by[{k, side}];
    post(k, side, core[k].delta_for(side), ev_id, m.origin_agent, m.origin_ordinal,
         m.clean && !core[k].seg.complete());
    core[k].mark_sent(side);
  };
  auto consume = [&](int k, const Token& side) {
    auto it = q.find({k, side});
    if (it == q.end() || it->second.empty()) return false;
    flow_msg m = it->second.front();
    it->second.pop_front();
    int ev_id = static_cast<int>(fl.events.size());
    fl.events.push_back({k, core[k].processed + 1, m.origin_event});
    fl.parents.push_back({});
    if (last_event[k] >= 0) fl.parents[ev_id].push_back(last_event[k]);
    if (m.origin_event >= 0) fl.parents[ev_id].push_back(m.origin_event);
    last_event[k] = ev_id;

    bool was_active = core[k].active();
    bool was_complete = core[k].seg.complete();
    int processed_here = ++processed_by[{k, side}];
    if (m.clean && !was_complete && processed_here != m.origin_ordinal)
      fl.phase_aligned = false;
    p2p_step_result res = core[k].process(side, m.seg);
    if (res.completed_now && fl.first_wrap_index[k] < 0) {
      fl.first_wrap_index[k] = core[k].processed;
      fl.wrap_side[k] = side;
      fl.wrap_originator[k] = m.origin_agent;
      fl.wrap_event[k] = ev_id;
      emit_fresh(k, "L", ev_id);
      emit_fresh(k, "R", ev_id);
      return true;
    }
    if (was_complete) {  // completed agents keep the traffic moving
      emit_fresh(k, side == "R" ? "L" : "R", ev_id);
      return true;
    }
    for (auto& sd : res.send_sides) {
      if (was_active)
        emit_fresh(k, sd, ev_id);
      else
        emit_relay(k, sd, ev_id, m);
    }
    return true;
  };

  int guard = 0;
  while (true) {
    bool everyone = true;
    for (int k = 0; k < n; ++k)
      if (fl.first_wrap_index[k] < 0) everyone = false;
    if (everyone) break;
    if (++guard > 64 * n * n + 64) throw invariant_error("ring flow failed to converge");
    bool progressed = false;
    for (int k = 0; k < n; ++k) {
      if (core[k].seg.complete()) {
        if (consume(k, "R") || consume(k, "L")) progressed = true;
        continue;
      }
      if (consume(k, core[k].wl ? "L" : "R")) progressed = true;
    }
    if (!progressed) {
      for (int k = 0; k < n && !progressed; ++k)
        if (consume(k, "R") || consume(k, "L")) progressed = true;
    }
    if (!progressed) throw invariant_error("ring flow deadlocked");
  }
  return fl;
}

inline std::set<int> ancestors(const p2_flow& fl, int ev) {
  std::set<int> out;
  std::vector<int> stack = {ev};
  while (!stack.empty()) {
    int e = stack.back();
    stack.pop_back();
    for (int p : fl.parents[e])
      if (out.insert(p).second) stack.push_back(p);
  }
  return out;
}

}  // namespace detail

// Deterministic plan every agent recomputes once it knows the ring.
inline p2_endgame_plan plan_p2_endgame(const ring_layout& ring) {
  int n = ring.n();
  detail::p2_flow fl = detail::simulate_p2_flow(ring.ids);

  // first learners: wrap events with no other wrap event in their causal past
  std::vector<int> fmembers;
  for (int k = 0; k < n; ++k) {
    std::set<int> anc = detail::ancestors(fl, fl.wrap_event[k]);
    bool minimal = true;
    for (int j = 0; j < n; ++j)
      if (j != k && anc.count(fl.wrap_event[j])) minimal = false;
    if (minimal) fmembers.push_back(k);
  }

  p2_endgame_plan plan;
  for (int k : fmembers) {
    plan.first_learners.push_back(ring.ids[k]);
    plan.learn_side[ring.ids[k]] = fl.wrap_side[k];
  }

  int istar = 0;
  for (int k = 1; k < n; ++k)
    if (ring.ids[k] > ring.ids[istar]) istar = k;
  long long leader = ring.ids[istar];

  auto coverage = [&](long long origin, const Token& side, long long stop,
                      bool include_stop) {
    std::vector<long long> cov;
    long long cur = origin;
    for (int steps = 0; steps < n; ++steps) {
      cur = side == "L" ? ring.left_of(cur) : ring.right_of(cur);
      if (cur == stop) {
        if (include_stop) cov.push_back(cur);
        break;
      }
      cov.push_back(cur);
    }
    return cov;
  };
  auto add_wave = [&](long long origin, const Token& side, long long stop, bool include_stop) {
    p2_endgame_plan::wave w;
    w.origin = origin;
    w.side = side;
    w.covered = coverage(origin, side, stop, include_stop);
    plan.waves.push_back(w);
  };
  auto opp = [](const Token& s) { return s == "L" ? Token("R") : Token("L"); };

  if (fmembers.size() == 1) {
    long long z = ring.ids[fmembers[0]];
    Token d = fl.wrap_side[fmembers[0]];
    // one wave all the way around, back to the origin
    add_wave(z, d, z, false);
  } else if (fmembers.size() == 2) {
    long long a = ring.ids[fmembers[0]];
    long long b = ring.ids[fmembers[1]];
    if (a == leader || b == leader) {
      long long z = a == leader ? b : a;
      Token dz = plan.learn_side.at(z);
      Token dl = plan.learn_side.at(leader);
      add_wave(z, dz, leader, false);
      add_wave(leader, dl, z, false);
    } else {
      // the member whose completing message originated with the leader runs a
      // wave through the leader; the other covers the two remaining stretches
      long long i = a, iprime = b;
      if (fl.wrap_originator[fmembers[1]] == istar &&
          fl.wrap_originator[fmembers[0]] != istar) {
        i = b;
        iprime = a;
      }
      add_wave(i, plan.learn_side.at(i), leader, true);
      add_wave(iprime, plan.learn_side.at(iprime), i, false);
      add_wave(iprime, opp(plan.learn_side.at(iprime)), leader, false);
    }
  } else {
    // the analysis promises at most two; leave a full circle from the first
    // as a recovery plan and let verification flag the breach
    long long z = ring.ids[fmembers[0]];
    add_wave(z, fl.wrap_side[fmembers[0]], z, false);
  }
  return plan;
}

class p2_prime_machine : public agent_machine {
 public:
  explicit p2_prime_machine(const agent_ctx& ctx) : core_(parse_id(ctx.input)) {}

  void start(std::vector<action>& out) override { send(out, "L"); }

  std::optional<Token> next_channel(const queues_snapshot& queued) override {
    auto count = [&](const Token& c) {
      auto it = queued.find(c);
      return it != queued.end() ? it->second.count : 0;
    };
    auto complete_head = [&](const Token& c) {
      auto it = queued.find(c);
      return it != queued.end() && it->second.head_complete;
    };
    if (core_.seg.complete()) {
      if (count("R") > 0) return Token("R");
      if (count("L") > 0) return Token("L");
      return std::nullopt;
    }
    // a message carrying a complete picture is processed promptly; everything
    // else obeys the strict alternation
    if (complete_head("R")) return Token("R");
    if (complete_head("L")) return Token("L");
    Token want = core_.wl ? "L" : "R";
    if (count(want) > 0) return want;
    return std::nullopt;
  }

  void process(const arrival& a, std::vector<action>& out) override {
    if (a.pl.k != payload::kind::segment) return;
    if (core_.seg.complete()) {
      core_.seg = graft_segment(core_.seg, a.pl.seg, side_offset(a.channel));
      ++core_.processed;
      if (forward_pending_ && a.pl.complete && a.channel == opp(forward_side_)) {
        send(out, forward_side_);
        forward_pending_ = false;
      }
      return;
    }
    p2p_step_result res = core_.process(a.channel, a.pl.seg);
    for (auto& side : res.send_sides) send(out, side);
    if (res.completed_now) enter_endgame(a.channel, a.pl.complete, out);
  }

  bool done() const override { return core_.seg.complete() && !forward_pending_; }
  std::optional<Token> learned() const override {
    if (core_.seg.complete()) return std::to_string(core_.seg.max_id());
    return std::nullopt;
  }

 private:
  static Token opp(const Token& s) { return s == "L" ? Token("R") : Token("L"); }

  void send(std::vector<action>& out, const Token& side) {
    action act;
    act.to = {side};
    act.pl = payload::make_segment(core_.delta_for(side));
    act.pl.complete = core_.seg.complete();
    core_.mark_sent(side);
    out.push_back(act);
  }

  void enter_endgame(const Token& arrival_side, bool msg_complete, std::vector<action>& out) {
    ring_layout ring;
    int n = core_.seg.ring_size;
    for (int k = 0; k < n; ++k) ring.ids.push_back(core_.seg.at.at(((n - k) % n + n) % n));
    ring.bidirectional = true;
    p2_endgame_plan plan = plan_p2_endgame(ring);
    long long me = core_.seg.self_id();

    for (long long f : plan.first_learners)
      if (f == me) {
        for (auto& w : plan.waves)
          if (w.origin == me) send(out, w.side);
        return;
      }
    // a non-first agent sits in exactly one wave's coverage; it forwards the
    // wave unless it is the last recipient
    for (auto& w : plan.waves) {
      for (size_t i = 0; i < w.covered.size(); ++i) {
        if (w.covered[i] != me) continue;
        if (i + 1 == w.covered.size()) return;  // end of the wave
        if (msg_complete && w.side == opp(arrival_side)) {
          send(out, w.side);  // the wave itself completed our picture
        } else {
          // completed early through a leftover; pass the wave on when it comes
          forward_side_ = w.side;
          forward_pending_ = true;
        }
        return;
      }
    }
    // leftovers completed the picture and no wave covers us: nothing to send
  }

  p2p_core core_;
  Token forward_side_;
  bool forward_pending_ = false;
};

class p2_prime_protocol : public protocol {
 public:
  std::string name() const override { return "p2_prime"; }
  naming_style channel_names() const override { return naming_style::ring_lr; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    ring_of(*ctx.net, true);
    return std::make_unique<p2_prime_machine>(ctx);
  }
};

inline std::unique_ptr<protocol> p2_prime() { return std::make_unique<p2_prime_protocol>(); }

// ---------------------------------------------------------------------------
// optimal flooding for diameter-bounded networks (synchronous)

class flooding_machine : public agent_machine {
 public:
  flooding_machine(const agent_ctx& ctx, int d) : d_(d), maxid_(parse_id(ctx.input)) {
    for (auto& [nm, w] : ctx.out_names) out_names_.push_back(nm);
  }

  void start(std::vector<action>& out) override {
    if (d_ >= 1) broadcast(out, 1);
  }

  void process_batch(const std::vector<arrival>& batch, std::vector<action>& out) override {
    if (batch.empty()) return;
    int round = batch.front().pl.round;
    for (auto& a : batch)
      if (a.pl.k == payload::kind::plain) maxid_ = std::max(maxid_, parse_id(a.pl.val));
    if (round < d_)
      broadcast(out, round + 1);
    else if (round == d_)
      learned_ = std::to_string(maxid_);
  }

  void process(const arrival&, std::vector<action>&) override {}
  bool done() const override { return learned_.has_value(); }
  std::optional<Token> learned() const override { return learned_; }

 private:
  void broadcast(std::vector<action>& out, int round) {
    action act;
    act.to = out_names_;
    act.pl = payload::make_plain(std::to_string(maxid_));
    act.pl.round = round;
    out.push_back(act);
  }

  int d_;
  long long maxid_;
  std::vector<Token> out_names_;
  std::optional<Token> learned_;
};

class flooding_protocol : public protocol {
 public:
  explicit flooding_protocol(int d) : d_(d) {}
  std::string name() const override { return "flooding"; }
  bool round_disciplined() const override { return true; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    std::set<Token> seen;
    for (auto& a : ctx.net->agents) {
      parse_id(a.input);
      if (!seen.insert(a.input).second) throw invariant_error("duplicate ids");
    }
    return std::make_unique<flooding_machine>(ctx, d_);
  }

 private:
  int d_;
};

inline std::unique_ptr<protocol> flooding(int d) { return std::make_unique<flooding_protocol>(d); }

// ---------------------------------------------------------------------------
// interval tracking: the I_L / I_R recurrences replayed over a finished run

struct interval_state {
  // per agent: snapshots after each of its processing events
  struct snap {
    int step = 0;
    int processed = 0;
    Token side;                 // which side this processing consumed
    std::set<int> left, right;  // external agent ids
    bool has_all_info = false;
  };
  std::map<int, std::vector<snap>> timeline;
};

inline interval_state track_intervals(const run& r) {
  std::vector<int> walk = ring_walk(r.net, r.mirrored);
  std::map<int, int> pos;
  int n = static_cast<int>(walk.size());
  for (int k = 0; k < n; ++k) pos[walk[k]] = k;
  auto left_of = [&](int agent) { return walk[(pos[agent] + 1) % n]; };
  auto right_of = [&](int agent) { return walk[(pos[agent] + n - 1) % n]; };

  struct agent_track {
    std::set<int> left, right;
    int processed = 0;
  };
  std::map<int, agent_track> tr;
  for (auto& a : r.net.agents) {
    tr[a.id].left = {a.id};
    tr[a.id].right = {a.id};
  }

  // chronological replay over all events; FIFO pairs the k-th recv on a link
  // with the sender's k-th send on it
  struct ev_ref {
    int agent;
    int index;
    int step;
  };
  std::vector<ev_ref> order;
  for (auto& [id, evs] : r.events)
    for (size_t i = 0; i < evs.size(); ++i) order.push_back({id, static_cast<int>(i), evs[i].step});
  std::stable_sort(order.begin(), order.end(), [&](const ev_ref& a, const ev_ref& b) {
    if (a.step != b.step) return a.step < b.step;
    // within a step, sends precede the recvs they feed only across agents;
    // per-agent order is the log order which stable_sort keeps
    return false;
  });

  interval_state out;
  // pair recvs with sends through per-link FIFO queues, like the engine does;
  // each queued entry is the sender's interval snapshot at send time
  std::map<std::pair<int, int>, std::deque<std::pair<std::set<int>, std::set<int>>>> link_q;
  for (auto& e : order) {
    const run_event& ev = r.events.at(e.agent)[e.index];
    agent_track& t = tr[e.agent];
    if (ev.k == run_event::kind::send) {
      for (auto& side : ev.targets) {
        int dst = side == "L" ? left_of(e.agent) : right_of(e.agent);
        link_q[{e.agent, dst}].push_back({t.left, t.right});
      }
      continue;
    }
    if (ev.pl.k != payload::kind::segment && ev.pl.k != payload::kind::plain) continue;
    bool from_right = ev.channel == "R";
    int sender = from_right ? right_of(e.agent) : left_of(e.agent);
    auto& q = link_q[{sender, e.agent}];
    if (q.empty()) throw invariant_error("interval replay lost a message");
    auto [sl, sr] = q.front();
    q.pop_front();
    ++t.processed;
    if (from_right) {
      for (int x : sr) t.right.insert(x);
      for (int x : sl)
        if (x != sender) t.left.insert(x);
    } else {
      for (int x : sl) t.left.insert(x);
      for (int x : sr)
        if (x != sender) t.right.insert(x);
    }
    interval_state::snap s;
    s.step = ev.step;
    s.processed = t.processed;
    s.side = ev.channel;
    s.left = t.left;
    s.right = t.right;
    std::set<int> inter;
    for (int x : t.left)
      if (t.right.count(x) && x != e.agent) inter.insert(x);
    s.has_all_info = !inter.empty();
    out.timeline[e.agent].push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// first learners over schedules

inline std::set<int> first_learners(const network& net, int async_samples = 12) {
  ring_of(net, true);
  auto proto = p2_prime();
  std::set<int> out;
  auto collect = [&](scheduler sched) {
    run r = run_protocol(net, *proto, sched, 4096);
    int best = -1;
    // the wrap is the moment an agent's knowledge first covers the ring:
    // detect via learned_at (set when its segment wrapped)
    for (auto& [id, step] : r.learned_at)
      if (best < 0 || step < best) best = step;
    for (auto& [id, step] : r.learned_at)
      if (step == best) out.insert(id);
  };
  collect(scheduler::sync());
  for (int s = 1; s <= async_samples; ++s) collect(scheduler::async(1000 + s));
  return out;
}

// first learners as the agents themselves predict them
inline std::set<int> predicted_first_learners(const network& net) {
  ring_layout ring = ring_of(net, true);
  p2_endgame_plan plan = plan_p2_endgame(ring);
  std::set<int> out;
  for (long long f : plan.first_learners)
    for (size_t k = 0; k < ring.ids.size(); ++k)
      if (ring.ids[k] == f) out.insert(ring.agent_ids[k]);
  return out;
}

// ---------------------------------------------------------------------------
// message accounting

struct message_stats {
  std::string protocol;
  std::string net;
  int total = 0;
  int bytes = 0;
  int steps = 0;
  std::map<std::string, int> by_kind;
  std::map<int, int> per_phase;  // sender-send-ordinal pairs bucketed per phase
};

inline message_stats collect_stats(const run& r) {
  message_stats st;
  st.protocol = r.protocol_name;
  st.net = r.net.name;
  st.steps = r.steps;
  std::map<int, int> sends_of;
  for (auto& [id, evs] : r.events)
    for (auto& e : evs) {
      if (e.k != run_event::kind::send) continue;
      for (auto& t : e.targets) {
        (void)t;
        ++st.total;
        st.bytes += e.pl.atoms();
        ++st.by_kind[e.pl.kind_tag()];
        int ord = ++sends_of[id];
        ++st.per_phase[(ord + 1) / 2];
      }
    }
  return st;
}

}  // namespace gfc
