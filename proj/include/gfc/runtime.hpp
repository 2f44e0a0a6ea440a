#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfc/bisim.hpp"
#include "gfc/network.hpp"
#include "gfc/segment.hpp"
#include "gfc/view.hpp"

namespace gfc {

// ---------------------------------------------------------------------------
// messages

struct payload {
  enum class kind { tree, segment, value, plain, noop };
  kind k = kind::noop;
  const view_node* tree = nullptr;  // kind::tree
  ring_segment seg;                 // kind::segment
  Token val;                        // kind::value (function value) / kind::plain (raw token)
  int round = 0;                    // stamp, round-disciplined protocols only
  bool complete = false;            // sender knew the entire network when sending

  static payload make_tree(const view_node* t, int round, bool complete = false) {
    payload p;
    p.k = kind::tree;
    p.tree = t;
    p.round = round;
    p.complete = complete;
    return p;
  }
  static payload make_segment(ring_segment s) {
    payload p;
    p.k = kind::segment;
    p.complete = s.wrapped;
    p.seg = std::move(s);
    return p;
  }
  static payload make_value(Token v, int round = 0) {
    payload p;
    p.k = kind::value;
    p.val = std::move(v);
    p.round = round;
    return p;
  }
  static payload make_plain(Token v) {
    payload p;
    p.k = kind::plain;
    p.val = std::move(v);
    return p;
  }
  static payload make_noop(int round) {
    payload p;
    p.k = kind::noop;
    p.round = round;
    return p;
  }

  const char* kind_tag() const {
    switch (k) {
      case kind::tree: return "info";
      case kind::segment: return "info";
      case kind::value: return "value";
      case kind::plain: return "plain";
      case kind::noop: return "noop";
    }
    return "?";
  }

  int atoms() const {
    switch (k) {
      case kind::tree: return tree ? tree->atoms : 0;
      case kind::segment: return seg.atom_count();
      case kind::value:
      case kind::plain: return 1;
      case kind::noop: return 0;
    }
    return 0;
  }

  std::string enc() const {
    std::ostringstream os;
    os << kind_tag() << "@" << round << ":";
    switch (k) {
      case kind::tree: os << (tree ? tree->enc : ""); break;
      case kind::segment: os << seg.enc(); break;
      case kind::value:
      case kind::plain: os << val; break;
      case kind::noop: break;
    }
    if (complete) os << "!";
    return os.str();
  }
};

// observed metadata of an in-channel at delivery time
struct arrival {
  Token channel;  // receiver-side tag ("R"/"L" on rings, "in1".. elsewhere)
  Token weight;   // link weight
  bool bidi = false;
  payload pl;
};

struct action {
  std::vector<Token> to;  // out-link names
  payload pl;
};

// ---------------------------------------------------------------------------
// local states and runs

struct run_event {
  enum class kind { recv, send };
  kind k = kind::recv;
  Token channel;               // recv
  Token link_weight;           // recv
  bool link_bidi = false;      // recv
  std::vector<Token> targets;  // send (out-link names actually sent on)
  payload pl;
  int step = 0;

  std::string enc() const {
    std::ostringstream os;
    if (k == kind::recv) {
      os << "r[" << channel << "," << link_weight << (link_bidi ? "+" : "-") << "]"
         << pl.enc();
    } else {
      os << "s[";
      for (auto& t : targets) os << t << ",";
      os << "]" << pl.enc();
    }
    return os.str();
  }
};

// canonical digest of an agent's local state: initial info plus the ordered
// log of processed and sent messages. Chained 128-bit FNV keeps comparisons
// cheap without storing whole prefixes.
struct state_hash {
  uint64_t a = 1469598103934665603ull;
  uint64_t b = 1099511628211ull;

  void feed(const std::string& s) {
    for (unsigned char c : s) {
      a = (a ^ c) * 1099511628211ull;
      b = (b ^ c) * 0x100000001b3ull ^ (b >> 29);
    }
    a ^= 0x9e3779b97f4a7c15ull;
    b += 0x517cc1b727220a95ull;
  }
  friend bool operator==(const state_hash&, const state_hash&) = default;
  friend auto operator<=>(const state_hash&, const state_hash&) = default;
};

// a point at which an agent's protocol chose its sends
struct decision_point {
  int agent = 0;
  int prefix_events = 0;  // events in the agent's log before this decision's sends
  int step = 0;
  int ordinal = 0;                 // nth decision of this agent in the run
  std::vector<Token> sent_to;      // out-link names sent on (empty = no send)
  bool had_new_info = false;
};

struct scheduler {
  enum class mode { sync, async };
  mode m = mode::sync;
  uint32_t seed = 0;
  bool fifo_per_link = true;
  int fairness_bound = 8;

  static scheduler sync() { return scheduler{}; }
  static scheduler async(uint32_t seed, bool fifo = true, int fairness = 8) {
    scheduler s;
    s.m = mode::async;
    s.seed = seed;
    s.fifo_per_link = fifo;
    s.fairness_bound = fairness;
    return s;
  }
};

struct budget_exhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct run {
  network net;
  scheduler sched;
  std::string protocol_name;
  naming_style names = naming_style::by_degree;
  bool mirrored = false;  // ring orientation of the L/R convention
  bool quiescent = false;
  bool out_of_budget = false;
  int steps = 0;
  int messages = 0;

  std::map<int, std::vector<run_event>> events;       // per agent
  std::map<int, std::vector<state_hash>> state_keys;  // per agent, prefix -> state digest
  std::vector<decision_point> decisions;
  std::map<int, int> learned_at;          // agent -> step at which it first knew f
  std::map<int, Token> learned_value;     // agent -> claimed value
  std::vector<std::string> trace;

  const state_hash& state_key(int agent, int prefix) const {
    return state_keys.at(agent).at(prefix);
  }
};

// intervention: at one agent's nth decision, drop some of its send targets
struct send_drop {
  int agent = -1;
  int ordinal = -1;
  Token dropped_channel;
  bool active() const { return agent >= 0; }
};

// ---------------------------------------------------------------------------
// protocol interface

struct agent_ctx {
  const network* net = nullptr;
  int id = 0;
  Token input;
  std::vector<std::pair<Token, Token>> out_names;  // (name, weight), canonical order
  bool on_ring = false;
  bool ring_bidirectional = false;
};

struct queue_peek {
  int count = 0;
  bool head_complete = false;  // head message carries a complete picture
};
using queues_snapshot = std::map<Token, queue_peek>;

class agent_machine {
 public:
  virtual ~agent_machine() = default;
  virtual void start(std::vector<action>& out) = 0;
  // event-driven protocols: pick the next in-channel to process, if any
  virtual std::optional<Token> next_channel(const queues_snapshot& queued) {
    for (auto& [c, k] : queued)
      if (k.count > 0) return c;
    return std::nullopt;
  }
  virtual void process(const arrival& a, std::vector<action>& out) = 0;
  // round-disciplined protocols consume a whole round batch at once
  virtual void process_batch(const std::vector<arrival>& batch, std::vector<action>& out) {
    (void)batch;
    (void)out;
  }
  virtual bool done() const { return false; }
  virtual std::optional<Token> learned() const { return std::nullopt; }
};

class protocol {
 public:
  virtual ~protocol() = default;
  virtual std::string name() const = 0;
  virtual bool round_disciplined() const { return false; }
  virtual naming_style channel_names() const { return naming_style::by_degree; }
  virtual std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const = 0;
};

// ---------------------------------------------------------------------------
// engine

namespace detail {

struct in_flight {
  int src = 0, dst = 0;
  Token src_name;  // sender's out-link name for this link
  payload pl;
  int sent_step = 0;
  long long seq = 0;  // per-link FIFO order
};

inline Token flip_side(const Token& t) {
  if (t == "L") return "R";
  if (t == "R") return "L";
  return t;
}

}  // namespace detail

class engine {
 public:
  engine(const network& net, const protocol& proto, scheduler sched, int step_budget,
         bool mirrored = false)
      : proto_(&proto), sched_(sched), budget_(step_budget) {
    r_.net = net;
    r_.sched = sched;
    r_.protocol_name = proto.name();
    r_.names = proto.channel_names();
    r_.mirrored = mirrored;
    naming_ = build_naming(net, r_.names, mirrored);
    shape_ = classify_ring(net);
    for (auto& a : net.agents) {
      agent_ctx ctx;
      ctx.net = &r_.net;
      ctx.id = a.id;
      ctx.input = a.input;
      for (auto& [nm, dst] : naming_.names[a.id]) ctx.out_names.push_back({nm, net.weight(a.id, dst)});
      ctx.on_ring = shape_.is_ring;
      ctx.ring_bidirectional = shape_.bidirectional;
      machines_[a.id] = proto.make_machine(ctx);
      r_.events[a.id] = {};
      r_.state_keys[a.id] = {initial_state_key(ctx)};
      decision_count_[a.id] = 0;
    }
  }

  void set_intervention(send_drop d) { drop_ = d; }

  run&& take_run() { return std::move(r_); }

  void execute() {
    // step 0: initial decisions
    for (auto& a : r_.net.agents) {
      std::vector<action> acts;
      machines_[a.id]->start(acts);
      commit_decision(a.id, acts, /*had_new_info=*/true);
      poll_learn(a.id);
    }
    if (sched_.m == scheduler::mode::sync)
      run_sync();
    else
      run_async();
    finish();
  }

 private:
  void run_sync() {
    while (true) {
      if (pool_.empty() && !any_queued()) {
        r_.quiescent = true;
        break;
      }
      if (r_.steps >= budget_) {
        r_.out_of_budget = true;
        break;
      }
      ++r_.steps;
      // deliver everything sent before this round
      std::vector<detail::in_flight> batch = std::move(pool_);
      pool_.clear();
      std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) {
        return std::tie(a.dst, a.src, a.seq) < std::tie(b.dst, b.src, b.seq);
      });
      for (auto& m : batch) deliver(m);
      for (auto& a : r_.net.agents) activate(a.id);
    }
  }

  void run_async() {
    std::mt19937 rng(sched_.seed);
    while (true) {
      if (pool_.empty() && !any_queued()) {
        r_.quiescent = true;
        break;
      }
      if (r_.steps >= budget_) {
        r_.out_of_budget = true;
        break;
      }
      ++r_.steps;
      if (!pool_.empty()) {
        auto eligible_now = [&]() {
          // FIFO applies per logical channel: a two-agent ring carries both
          // ring directions over the same physical pair
          std::vector<size_t> eligible;
          std::map<std::tuple<int, int, Token>, long long> oldest;
          if (sched_.fifo_per_link)
            for (auto& m : pool_) {
              auto key = std::make_tuple(m.src, m.dst, m.src_name);
              auto it = oldest.find(key);
              if (it == oldest.end() || m.seq < it->second) oldest[key] = m.seq;
            }
          for (size_t i = 0; i < pool_.size(); ++i) {
            if (sched_.fifo_per_link &&
                pool_[i].seq != oldest[{pool_[i].src, pool_[i].dst, pool_[i].src_name}])
              continue;
            eligible.push_back(i);
          }
          return eligible;
        };
        // fairness first: everything that exhausted its patience goes out now,
        // oldest first, so no deliverable message waits past the bound
        bool delivered_urgent = false;
        for (;;) {
          std::vector<size_t> urgent;
          for (size_t i : eligible_now())
            if (r_.steps - pool_[i].sent_step >= sched_.fairness_bound) urgent.push_back(i);
          if (urgent.empty()) break;
          std::sort(urgent.begin(), urgent.end(),
                    [&](size_t a, size_t b) { return pool_[a].seq < pool_[b].seq; });
          detail::in_flight m = pool_[urgent[0]];
          pool_.erase(pool_.begin() + urgent[0]);
          deliver(m);
          delivered_urgent = true;
        }
        if (!delivered_urgent && !pool_.empty()) {
          std::vector<size_t> eligible = eligible_now();
          size_t pick = eligible[rng() % eligible.size()];
          detail::in_flight m = pool_[pick];
          pool_.erase(pool_.begin() + pick);
          deliver(m);
        }
        for (auto& a : r_.net.agents) activate(a.id);
      } else {
        // no traffic in flight but queued batches may have become processable
        int before = r_.messages + total_events();
        for (auto& a : r_.net.agents) activate(a.id);
        if (r_.messages + total_events() == before) break;  // nothing can move
      }
    }
  }

  int total_events() const {
    int n = 0;
    for (auto& [id, ev] : r_.events) n += static_cast<int>(ev.size());
    return n;
  }

  bool any_queued() const {
    for (auto& [id, qs] : queues_)
      for (auto& [tag, q] : qs)
        if (!q.empty()) return true;
    return false;
  }

  void deliver(const detail::in_flight& m) {
    Token tag = channel_tag(m);
    std::ostringstream os;
    os << "STEP " << r_.steps << " DELIVER " << m.src << "->" << m.dst;
    r_.trace.push_back(os.str());
    arrival a;
    a.channel = tag;
    a.weight = r_.net.weight(m.src, m.dst);
    // the orientation observable follows the channel model: in a one-way ring
    // context the reverse edge of a 2-ring is the other agent's ring link,
    // not a return channel
    a.bidi = r_.net.is_bidirectional(m.src, m.dst) && r_.names != naming_style::ring_l;
    a.pl = m.pl;
    queues_[m.dst][tag].push_back(a);
  }

  Token channel_tag(const detail::in_flight& m) {
    if (r_.names != naming_style::by_degree) return detail::flip_side(m.src_name);
    auto& tags = channel_tags_[m.dst];
    auto it = tags.find(m.src);
    if (it != tags.end()) return it->second;
    Token t = "in" + std::to_string(tags.size() + 1);
    tags[m.src] = t;
    return t;
  }

  void activate(int id) {
    agent_machine& m = *machines_[id];
    auto& qs = queues_[id];
    if (proto_->round_disciplined()) {
      // release full round batches: one stamp-r message per in-link whose
      // sender has not already finished with an earlier final message
      while (!m.done()) {
        int round = -1;
        for (auto& [tag, q] : qs)
          if (!q.empty() && (round < 0 || q.front().pl.round < round)) round = q.front().pl.round;
        if (round < 0) break;
        int expected = 0;
        for (auto& [src, w] : r_.net.in_links(id)) {
          (void)w;
          auto it = final_stamp_.find(src);
          if (it == final_stamp_.end() || it->second >= round) ++expected;
        }
        std::vector<std::pair<Token, arrival>> heads;
        for (auto& [tag, q] : qs)
          if (!q.empty() && q.front().pl.round == round) heads.push_back({tag, q.front()});
        if (static_cast<int>(heads.size()) < expected) break;  // wait for the rest
        std::sort(heads.begin(), heads.end(), [](const auto& a, const auto& b) {
          std::string ea = a.second.pl.enc(), eb = b.second.pl.enc();
          return ea != eb ? ea < eb : a.first < b.first;
        });
        std::vector<arrival> batch;
        for (auto& [tag, a] : heads) {
          qs[tag].pop_front();
          batch.push_back(a);
          record_recv(id, a);
        }
        std::vector<action> acts;
        m.process_batch(batch, acts);
        commit_decision(id, acts, true);
        poll_learn(id);
      }
      if (m.done()) drain(id);
      return;
    }
    while (true) {
      queues_snapshot counts;
      for (auto& [tag, q] : qs)
        counts[tag] = {static_cast<int>(q.size()), !q.empty() && q.front().pl.complete};
      auto c = m.next_channel(counts);
      if (!c) break;
      auto& q = qs[*c];
      if (q.empty()) break;
      arrival a = q.front();
      q.pop_front();
      record_recv(id, a);
      std::vector<action> acts;
      m.process(a, acts);
      commit_decision(id, acts, true);
      poll_learn(id);
    }
  }

  // leftovers addressed to an agent that already finished are consumed
  void drain(int id) {
    for (auto& [tag, q] : queues_[id])
      while (!q.empty()) {
        record_recv(id, q.front());
        q.pop_front();
      }
  }

  void record_recv(int id, const arrival& a) {
    run_event e;
    e.k = run_event::kind::recv;
    e.channel = a.channel;
    e.link_weight = a.weight;
    e.link_bidi = a.bidi;
    e.pl = a.pl;
    e.step = r_.steps;
    push_event(id, e);
  }

  void commit_decision(int id, std::vector<action>& acts, bool had_new_info) {
    decision_point d;
    d.agent = id;
    d.prefix_events = static_cast<int>(r_.events[id].size());
    d.step = r_.steps;
    d.ordinal = decision_count_[id]++;
    d.had_new_info = had_new_info;
    // apply intervention: this decision loses one target
    for (auto& act : acts) {
      std::vector<Token> to = act.to;
      if (drop_.active() && drop_.agent == id && drop_.ordinal == d.ordinal) {
        std::erase(to, drop_.dropped_channel);
      }
      for (auto& t : to) d.sent_to.push_back(t);
      if (!to.empty() || !act.to.empty()) {
        run_event e;
        e.k = run_event::kind::send;
        e.targets = to;
        e.pl = act.pl;
        e.step = r_.steps;
        push_event(id, e);
      }
      for (auto& t : to) {
        int dst = naming_.resolve(id, t);
        detail::in_flight m;
        m.src = id;
        m.dst = dst;
        m.src_name = t;
        m.pl = act.pl;
        m.sent_step = r_.steps;
        m.seq = seq_++;
        pool_.push_back(m);
        ++r_.messages;
        std::ostringstream os;
        os << "STEP " << r_.steps << " SEND " << id << "->" << dst << " bytes=" << act.pl.atoms()
           << " kind=" << act.pl.kind_tag();
        r_.trace.push_back(os.str());
      }
      if (act.pl.k == payload::kind::value) final_stamp_[id] = act.pl.round;
    }
    r_.decisions.push_back(d);
  }

  void poll_learn(int id) {
    if (r_.learned_at.count(id)) return;
    auto v = machines_[id]->learned();
    if (!v) return;
    r_.learned_at[id] = r_.steps;
    r_.learned_value[id] = *v;
    std::ostringstream os;
    os << "STEP " << r_.steps << " LEARN " << id << " f=" << *v;
    r_.trace.push_back(os.str());
  }

  void push_event(int id, const run_event& e) {
    r_.events[id].push_back(e);
    state_hash h = r_.state_keys[id].back();
    h.feed(e.enc());
    r_.state_keys[id].push_back(h);
  }

  state_hash initial_state_key(const agent_ctx& ctx) {
    std::ostringstream os;
    os << "init(" << ctx.input << "|";
    for (auto& [nm, w] : ctx.out_names) os << nm << "=" << w << ",";
    os << ")";
    state_hash h;
    h.feed(os.str());
    return h;
  }

  void finish() {
    std::ostringstream os;
    os << "END steps=" << r_.steps << " msgs=" << r_.messages;
    r_.trace.push_back(os.str());
  }

  const protocol* proto_;
  scheduler sched_;
  int budget_;
  run r_;
  relative_naming naming_;
  ring_shape shape_;
  std::map<int, std::unique_ptr<agent_machine>> machines_;
  std::map<int, std::map<Token, std::deque<arrival>>> queues_;
  std::map<int, std::map<int, Token>> channel_tags_;
  std::map<int, int> decision_count_;
  std::vector<detail::in_flight> pool_;
  std::map<int, int> final_stamp_;  // agent -> stamp of its last (value) message
  send_drop drop_;
  long long seq_ = 0;
};

// Runs a protocol to quiescence or budget. Deterministic for fixed inputs.
inline run run_protocol(const network& net, const protocol& proto, scheduler sched,
                        int step_budget, send_drop drop = {}, bool mirrored = false) {
  engine e(net, proto, sched, step_budget, mirrored);
  if (drop.active()) e.set_intervention(drop);
  e.execute();
  return e.take_run();
}

inline std::string render_trace(const run& r) {
  std::string out;
  for (auto& l : r.trace) out += l + "\n";
  return out;
}

// multiset of messages processed by `agent` in its round k, each with the
// observed link weight and orientation but no channel names
inline std::vector<std::string> transcript(const run& r, int agent, int k) {
  std::vector<std::string> out;
  int max_round = 0;
  for (auto& e : r.events.at(agent))
    if (e.k == run_event::kind::recv) max_round = std::max(max_round, e.pl.round);
  if (k > max_round && k > 0) throw invariant_error("round not reached");
  for (auto& e : r.events.at(agent))
    if (e.k == run_event::kind::recv && e.pl.round == k && e.pl.k != payload::kind::noop)
      out.push_back(e.link_weight + (e.link_bidi ? "<>" : ">") + e.pl.enc());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// full-information protocol: every round, send everything known to everyone

class full_information_machine : public agent_machine {
 public:
  full_information_machine(const agent_ctx& ctx, int rounds) : ctx_(ctx), rounds_(rounds) {
    std::vector<Token> outw;
    for (auto& [nm, w] : ctx.out_names) outw.push_back(w);
    view_ = make_view(ctx.input, outw, {});
  }

  void start(std::vector<action>& out) override {
    if (rounds_ < 1) return;
    out.push_back(broadcast(1));
  }

  void process_batch(const std::vector<arrival>& batch, std::vector<action>& out) override {
    int round = batch.empty() ? round_ : batch.front().pl.round;
    for (auto& a : batch) {
      if (a.pl.k != payload::kind::tree) continue;
      auto& sub = channel_view_[a.channel];
      sub = {a.weight, a.bidi, a.pl.tree};
    }
    rebuild();
    round_ = round;
    if (round_ < rounds_) out.push_back(broadcast(round_ + 1));
  }

  void process(const arrival&, std::vector<action>&) override {}

  const view_node* view() const { return view_; }

 private:
  action broadcast(int round) {
    action act;
    for (auto& [nm, w] : ctx_.out_names) act.to.push_back(nm);
    act.pl = payload::make_tree(view_, round);
    return act;
  }

  void rebuild() {
    std::vector<view_node::in_edge> ins;
    for (auto& [tag, e] : channel_view_) ins.push_back({std::get<0>(e), std::get<1>(e), std::get<2>(e)});
    std::vector<Token> outw;
    for (auto& [nm, w] : ctx_.out_names) outw.push_back(w);
    view_ = make_view(ctx_.input, outw, std::move(ins));
  }

  agent_ctx ctx_;
  int rounds_;
  int round_ = 0;
  const view_node* view_;
  std::map<Token, std::tuple<Token, bool, const view_node*>> channel_view_;
};

class full_information_protocol : public protocol {
 public:
  explicit full_information_protocol(int rounds) : rounds_(rounds) {
    if (rounds < 1) throw invariant_error("full_information needs rounds >= 1");
  }
  std::string name() const override { return "full_info"; }
  bool round_disciplined() const override { return true; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    return std::make_unique<full_information_machine>(ctx, rounds_);
  }

 private:
  int rounds_;
};

inline std::unique_ptr<protocol> full_information(int rounds) {
  return std::make_unique<full_information_protocol>(rounds);
}

// ---------------------------------------------------------------------------
// the terminating global-computation program: forward whatever is new; once f
// is constant on every network consistent with the local state, send the
// value once and stop. Consistency is checked through the level-k local
// equivalence classes: after k full rounds an agent's information pins its
// class at level k.

class pg_gc_protocol;

class pg_gc_machine : public agent_machine {
 public:
  pg_gc_machine(const agent_ctx& ctx, const pg_gc_protocol& proto);

  void start(std::vector<action>& out) override;
  void process_batch(const std::vector<arrival>& batch, std::vector<action>& out) override;
  void process(const arrival&, std::vector<action>&) override {}
  bool done() const override { return done_; }
  std::optional<Token> learned() const override { return known_; }
  const view_node* view() const { return view_; }

 private:
  void rebuild();
  action broadcast(payload pl);

  agent_ctx ctx_;
  const pg_gc_protocol* proto_;
  int round_ = 0;
  bool done_ = false;
  std::optional<Token> known_;
  const view_node* view_;
  const view_node* last_sent_ = nullptr;
  std::map<Token, std::tuple<Token, bool, const view_node*>> channel_view_;
};

class pg_gc_protocol : public protocol {
 public:
  // `terminating`: once f is settled, announce it once and stop. The plain
  // variant keeps forwarding forever and only a step budget ends it.
  pg_gc_protocol(const network_family& fam, const global_function& f, bool terminating = true)
      : fam_(&fam), f_(f), terminating_(terminating), ctx_(fam) {
    for (auto& n : fam.members) fvals_.push_back(f.eval(n));
    ctx_.stabilize();  // knowledge queries become pure partition lookups
  }

  bool terminating() const { return terminating_; }

  std::string name() const override { return "pg_gc"; }
  bool round_disciplined() const override { return true; }
  std::unique_ptr<agent_machine> make_machine(const agent_ctx& ctx) const override {
    return std::make_unique<pg_gc_machine>(ctx, *this);
  }

  int member_index(const network& n) const {
    for (size_t i = 0; i < fam_->members.size(); ++i)
      if (fam_->members[i].name == n.name && fam_->members[i].n() == n.n()) return static_cast<int>(i);
    throw invariant_error("pg_gc must run on a family member");
  }

  // f constant over the agent's level-k class?
  std::optional<Token> value_if_known(const network& n, int agent, int k) const {
    int m = member_index(n);
    std::optional<Token> v = fvals_[m];
    pointed_network p{m, agent};
    for (size_t q = 0; q < fam_->members.size(); ++q)
      for (auto& a : fam_->members[q].agents)
        if (ctx_.bisimK(k, p, {static_cast<int>(q), a.id}) && fvals_[q] != *v)
          return std::nullopt;
    return v;
  }

  // the agent's class pins the network itself: no further agents exist
  bool network_known(const network& n, int agent, int k) const {
    int m = member_index(n);
    pointed_network p{m, agent};
    for (size_t q = 0; q < fam_->members.size(); ++q) {
      if (static_cast<int>(q) == m) continue;
      for (auto& a : fam_->members[q].agents)
        if (ctx_.bisimK(k, p, {static_cast<int>(q), a.id})) return false;
    }
    return true;
  }

  const global_function& fn() const { return f_; }

 private:
  const network_family* fam_;
  global_function f_;
  bool terminating_;
  mutable bisim_context ctx_;
  std::vector<Token> fvals_;
};

inline pg_gc_machine::pg_gc_machine(const agent_ctx& ctx, const pg_gc_protocol& proto)
    : ctx_(ctx), proto_(&proto) {
  std::vector<Token> outw;
  for (auto& [nm, w] : ctx.out_names) outw.push_back(w);
  view_ = make_view(ctx.input, outw, {});
}

inline action pg_gc_machine::broadcast(payload pl) {
  action act;
  for (auto& [nm, w] : ctx_.out_names) act.to.push_back(nm);
  act.pl = std::move(pl);
  return act;
}

inline void pg_gc_machine::start(std::vector<action>& out) {
  known_ = proto_->value_if_known(*ctx_.net, ctx_.id, 0);
  if (known_ && proto_->terminating()) {
    out.push_back(broadcast(payload::make_value(*known_, 1)));
    done_ = true;
    return;
  }
  last_sent_ = view_;
  out.push_back(broadcast(
      payload::make_tree(view_, 1, proto_->network_known(*ctx_.net, ctx_.id, 0))));
}

inline void pg_gc_machine::process_batch(const std::vector<arrival>& batch,
                                         std::vector<action>& out) {
  if (done_) return;
  for (auto& a : batch) {
    if (a.pl.k == payload::kind::value && !known_) known_ = a.pl.val;
    if (a.pl.k == payload::kind::tree) channel_view_[a.channel] = {a.weight, a.bidi, a.pl.tree};
  }
  rebuild();
  ++round_;
  if (!known_) known_ = proto_->value_if_known(*ctx_.net, ctx_.id, round_);
  if (known_ && proto_->terminating()) {
    out.push_back(broadcast(payload::make_value(*known_, round_ + 1)));
    done_ = true;
    return;
  }
  if (view_ != last_sent_) {
    last_sent_ = view_;
    out.push_back(broadcast(payload::make_tree(
        view_, round_ + 1, proto_->network_known(*ctx_.net, ctx_.id, round_))));
  } else {
    out.push_back(broadcast(payload::make_noop(round_ + 1)));
  }
}

inline void pg_gc_machine::rebuild() {
  std::vector<view_node::in_edge> ins;
  for (auto& [tag, e] : channel_view_) ins.push_back({std::get<0>(e), std::get<1>(e), std::get<2>(e)});
  std::vector<Token> outw;
  for (auto& [nm, w] : ctx_.out_names) outw.push_back(w);
  view_ = make_view(ctx_.input, outw, std::move(ins));
}

inline std::unique_ptr<protocol> pg_gc(const network_family& fam, const global_function& f,
                                       bool terminating = true) {
  return std::make_unique<pg_gc_protocol>(fam, f, terminating);
}

}  // namespace gfc
