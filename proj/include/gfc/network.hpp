#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfc {

// Inputs, weights and function values are opaque tokens compared exactly.
using Token = std::string;

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct invariant_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct agent_decl {
  int id = 0;  // external id, bookkeeping only; never visible to protocols
  Token input;
};

struct edge_decl {
  int src = 0;
  int dst = 0;
  Token weight;
};

// Directed, simple, connected, finite labeled graph.
class network {
 public:
  std::string name;
  std::vector<agent_decl> agents;
  std::vector<edge_decl> edges;

  network() = default;
  network(std::string nm, std::vector<agent_decl> ag, std::vector<edge_decl> ed)
      : name(std::move(nm)), agents(std::move(ag)), edges(std::move(ed)) {
    build_index();
    validate();
  }

  int n() const { return static_cast<int>(agents.size()); }

  int index_of(int external_id) const {
    auto it = id_to_index_.find(external_id);
    if (it == id_to_index_.end())
      throw invariant_error("unknown external id " + std::to_string(external_id));
    return it->second;
  }
  bool has_agent(int external_id) const { return id_to_index_.count(external_id) > 0; }
  int id_at(int index) const { return agents[index].id; }
  const Token& input_of(int external_id) const { return agents[index_of(external_id)].input; }

  // out/in neighbor lists hold (neighbor external id, weight), in declaration order
  const std::vector<std::pair<int, Token>>& out_links(int external_id) const {
    return out_[index_of(external_id)];
  }
  const std::vector<std::pair<int, Token>>& in_links(int external_id) const {
    return in_[index_of(external_id)];
  }

  bool has_edge(int src, int dst) const { return edge_set_.count({src, dst}) > 0; }
  const Token& weight(int src, int dst) const {
    auto it = edge_weight_.find({src, dst});
    if (it == edge_weight_.end())
      throw invariant_error("no edge " + std::to_string(src) + "->" + std::to_string(dst));
    return it->second;
  }
  // derived, never stored: an edge is bidirectional exactly when its reverse exists
  bool is_bidirectional(int src, int dst) const { return has_edge(src, dst) && has_edge(dst, src); }

  std::vector<Token> out_weight_multiset(int external_id) const {
    std::vector<Token> w;
    for (auto& [d, wt] : out_links(external_id)) w.push_back(wt);
    std::sort(w.begin(), w.end());
    return w;
  }

  void build_index() {
    id_to_index_.clear();
    edge_set_.clear();
    edge_weight_.clear();
    out_.assign(agents.size(), {});
    in_.assign(agents.size(), {});
    for (size_t i = 0; i < agents.size(); ++i) {
      if (!id_to_index_.emplace(agents[i].id, static_cast<int>(i)).second)
        throw invariant_error("duplicate agent id " + std::to_string(agents[i].id));
    }
    for (auto& e : edges) {
      if (!id_to_index_.count(e.src) || !id_to_index_.count(e.dst))
        throw invariant_error("edge references unknown agent");
      if (e.src == e.dst) throw invariant_error("self-loop on agent " + std::to_string(e.src));
      if (!edge_set_.insert({e.src, e.dst}).second)
        throw invariant_error("duplicate edge " + std::to_string(e.src) + "->" +
                              std::to_string(e.dst));
      edge_weight_[{e.src, e.dst}] = e.weight;
      out_[id_to_index_[e.src]].push_back({e.dst, e.weight});
      in_[id_to_index_[e.dst]].push_back({e.src, e.weight});
    }
  }

  void validate() const {
    if (agents.empty()) throw invariant_error("network has no agents");
    // weak connectivity over the undirected skeleton
    std::vector<int> seen(agents.size(), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      auto visit = [&](int id) {
        int ix = id_to_index_.at(id);
        if (!seen[ix]) {
          seen[ix] = 1;
          stack.push_back(ix);
        }
      };
      for (auto& [d, w] : out_[v]) visit(d);
      for (auto& [s, w] : in_[v]) visit(s);
    }
    for (size_t i = 0; i < agents.size(); ++i)
      if (!seen[i])
        throw invariant_error("network is not connected (agent " + std::to_string(agents[i].id) +
                              " unreachable)");
  }

 private:
  std::map<int, int> id_to_index_;
  std::set<std::pair<int, int>> edge_set_;
  std::map<std::pair<int, int>, Token> edge_weight_;
  std::vector<std::vector<std::pair<int, Token>>> out_;
  std::vector<std::vector<std::pair<int, Token>>> in_;
};

// --- file format -----------------------------------------------------------
//   network <name>
//   agent <id> input=<token>
//   edge <src> <dst> w=<token>
// '#' starts a comment.

inline network parse_network(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string name;
  std::vector<agent_decl> agents;
  std::vector<edge_decl> edges;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto fail = [&](const std::string& what) {
      throw parse_error("line " + std::to_string(lineno) + ": " + what);
    };
    if (kw == "network") {
      if (!(ls >> name)) fail("expected network name");
      saw_header = true;
    } else if (kw == "agent") {
      if (!saw_header) fail("missing 'network <name>' header");
      int id;
      std::string kv;
      if (!(ls >> id >> kv) || kv.rfind("input=", 0) != 0) fail("expected 'agent <id> input=<token>'");
      agents.push_back({id, kv.substr(6)});
    } else if (kw == "edge") {
      if (!saw_header) fail("missing 'network <name>' header");
      int s, d;
      std::string kv;
      if (!(ls >> s >> d >> kv) || kv.rfind("w=", 0) != 0) fail("expected 'edge <src> <dst> w=<token>'");
      edges.push_back({s, d, kv.substr(2)});
    } else {
      fail("unknown keyword '" + kw + "'");
    }
  }
  if (!saw_header) throw parse_error("line 1: missing 'network <name>' header");
  try {
    return network(name, std::move(agents), std::move(edges));
  } catch (const invariant_error& e) {
    throw parse_error(std::string("invalid network: ") + e.what());
  }
}

inline std::string render_network(const network& n) {
  std::ostringstream os;
  os << "network " << n.name << "\n";
  for (auto& a : n.agents) os << "agent " << a.id << " input=" << a.input << "\n";
  for (auto& e : n.edges) os << "edge " << e.src << " " << e.dst << " w=" << e.weight << "\n";
  return os.str();
}

// --- local sameness and distances -------------------------------------------

// Same input and a weight-preserving bijection between out-link multisets.
inline bool locally_same(const network& n, int i, int j) {
  if (n.input_of(i) != n.input_of(j)) return false;
  return n.out_weight_multiset(i) == n.out_weight_multiset(j);
}

struct not_strongly_connected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Max over ordered pairs of shortest directed hop-count.
inline int diameter(const network& n) {
  int best = 0;
  for (auto& a : n.agents) {
    std::map<int, int> dist;
    dist[a.id] = 0;
    std::vector<int> frontier = {a.id};
    int d = 0;
    while (!frontier.empty()) {
      ++d;
      std::vector<int> next;
      for (int v : frontier)
        for (auto& [w, wt] : n.out_links(v))
          if (!dist.count(w)) {
            dist[w] = d;
            next.push_back(w);
          }
      frontier = std::move(next);
    }
    if (static_cast<int>(dist.size()) != n.n())
      throw not_strongly_connected("not strongly connected (from agent " + std::to_string(a.id) +
                                   ")");
    for (auto& [v, dd] : dist) best = std::max(best, dd);
  }
  return best;
}

inline bool strongly_connected(const network& n) {
  try {
    diameter(n);
    return true;
  } catch (const not_strongly_connected&) {
    return false;
  }
}

// --- isomorphism -------------------------------------------------------------

namespace detail {
inline std::string iso_signature(const network& n, int id) {
  std::ostringstream os;
  os << n.input_of(id) << "|";
  for (auto& w : n.out_weight_multiset(id)) os << w << ",";
  os << "|";
  std::vector<Token> inw;
  for (auto& [s, w] : n.in_links(id)) inw.push_back(w);
  std::sort(inw.begin(), inw.end());
  for (auto& w : inw) os << w << ",";
  return os.str();
}

inline bool iso_extend(const network& a, const network& b, std::map<int, int>& fwd,
                       std::map<int, int>& bwd, size_t at,
                       const std::vector<int>& order,
                       const std::map<int, std::vector<int>>& candidates) {
  if (at == order.size()) {
    // full map built greedily edge-consistent; verify every edge once more
    for (auto& e : a.edges) {
      if (!b.has_edge(fwd[e.src], fwd[e.dst])) return false;
      if (b.weight(fwd[e.src], fwd[e.dst]) != e.weight) return false;
    }
    return true;
  }
  int v = order[at];
  for (int w : candidates.at(v)) {
    if (bwd.count(w)) continue;
    bool ok = true;
    // check edges between v and already-mapped vertices, both directions
    for (auto& [d, wt] : a.out_links(v)) {
      auto it = fwd.find(d);
      if (it != fwd.end() && (!b.has_edge(w, it->second) || b.weight(w, it->second) != wt)) {
        ok = false;
        break;
      }
    }
    if (ok)
      for (auto& [s, wt] : a.in_links(v)) {
        auto it = fwd.find(s);
        if (it != fwd.end() && (!b.has_edge(it->second, w) || b.weight(it->second, w) != wt)) {
          ok = false;
          break;
        }
      }
    if (!ok) continue;
    fwd[v] = w;
    bwd[w] = v;
    if (iso_extend(a, b, fwd, bwd, at + 1, order, candidates)) return true;
    fwd.erase(v);
    bwd.erase(w);
  }
  return false;
}
}  // namespace detail

// Label- and weight-preserving directed-graph bijection; optional witness.
inline bool isomorphic(const network& a, const network& b,
                       std::map<int, int>* witness = nullptr) {
  if (a.n() != b.n() || a.edges.size() != b.edges.size()) return false;
  std::map<std::string, std::vector<int>> sig_b;
  for (auto& ag : b.agents) sig_b[detail::iso_signature(b, ag.id)].push_back(ag.id);
  std::map<int, std::vector<int>> candidates;
  for (auto& ag : a.agents) {
    auto it = sig_b.find(detail::iso_signature(a, ag.id));
    if (it == sig_b.end()) return false;
    candidates[ag.id] = it->second;
  }
  std::vector<int> order;
  for (auto& ag : a.agents) order.push_back(ag.id);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return candidates[x].size() < candidates[y].size();
  });
  std::map<int, int> fwd, bwd;
  if (!detail::iso_extend(a, b, fwd, bwd, 0, order, candidates)) return false;
  if (witness) *witness = fwd;
  return true;
}

// --- ring constructors --------------------------------------------------------

// agents 1..n, edge k -> k+1 (mod n); each agent's single out-link points "left"
inline network make_uni_ring(const std::vector<Token>& inputs, const Token& w,
                             const std::string& name) {
  int n = static_cast<int>(inputs.size());
  if (n < 2) throw invariant_error("ring needs at least 2 agents");
  std::vector<agent_decl> ag;
  std::vector<edge_decl> ed;
  for (int k = 0; k < n; ++k) ag.push_back({k + 1, inputs[k]});
  for (int k = 0; k < n; ++k) ed.push_back({k + 1, (k + 1) % n + 1, w});
  return network(name, std::move(ag), std::move(ed));
}

// A 2-agent bidirectional ring degenerates to the same simple graph as the
// unidirectional one; protocols still get two logical sides over it.
inline network make_bi_ring(const std::vector<Token>& inputs, const Token& w,
                            const std::string& name) {
  int n = static_cast<int>(inputs.size());
  if (n < 2) throw invariant_error("ring needs at least 2 agents");
  std::vector<agent_decl> ag;
  std::vector<edge_decl> ed;
  for (int k = 0; k < n; ++k) ag.push_back({k + 1, inputs[k]});
  for (int k = 0; k < n; ++k) ed.push_back({k + 1, (k + 1) % n + 1, w});
  if (n > 2)
    for (int k = 0; k < n; ++k) ed.push_back({k + 1, (k + n - 1) % n + 1, w});
  return network(name, std::move(ag), std::move(ed));
}

// --- relative naming ----------------------------------------------------------
// Local names are per-agent tokens over outgoing links ("L"/"R" on rings,
// "1".."d" elsewhere); "I" always resolves to the agent itself.

struct ring_shape {
  bool is_ring = false;
  bool bidirectional = false;
  std::vector<int> order;  // external ids in "left" direction: order[k]'s L-target is order[k+1]
};

inline ring_shape classify_ring(const network& n) {
  ring_shape rs;
  if (n.n() < 2) return rs;
  bool uni = true, bi = n.n() > 2;
  for (auto& a : n.agents) {
    size_t od = n.out_links(a.id).size();
    size_t id = n.in_links(a.id).size();
    if (od != 1 || id != 1) uni = false;
    if (od != 2 || id != 2) bi = false;
  }
  if (bi)
    for (auto& e : n.edges)
      if (!n.is_bidirectional(e.src, e.dst)) bi = false;
  if (!uni && !bi) return rs;
  // walk the cycle; on a bidirectional ring avoid stepping back where we came from
  std::vector<int> order;
  int start = n.agents[0].id;
  int prev = -1, cur = start;
  for (int steps = 0; steps < n.n(); ++steps) {
    order.push_back(cur);
    int next = -1;
    for (auto& [d, w] : n.out_links(cur))
      if (d != prev || n.n() == 2) {
        next = d;
        break;
      }
    if (next < 0) return rs;
    prev = cur;
    cur = next;
  }
  if (cur != start) return rs;
  if (std::set<int>(order.begin(), order.end()).size() != order.size()) return rs;
  rs.is_ring = true;
  // a 2-ring with one edge each way carries two logical sides as well
  rs.bidirectional = bi || (n.n() == 2 && uni && n.is_bidirectional(order[0], order[1]));
  rs.order = std::move(order);
  return rs;
}

struct relative_naming {
  // per agent id: name -> neighbor id (outgoing)
  std::map<int, std::vector<std::pair<Token, int>>> names;

  int resolve(int agent, const Token& name) const {
    if (name == "I") return agent;
    for (auto& [nm, dst] : names.at(agent))
      if (nm == name) return dst;
    throw invariant_error("agent " + std::to_string(agent) + " has no name '" + name + "'");
  }
  // how does `other` refer to `agent`, if at all (Calls resolution)
  std::optional<Token> name_for(int other, int agent) const {
    for (auto& [nm, dst] : names.at(other))
      if (dst == agent) return nm;
    return std::nullopt;
  }
};

// How a protocol addresses its out-links: plain indices over the outgoing
// links, a single leftward ring name, or both ring directions. A two-agent
// ring carries both logical sides over the one physical edge pair.
enum class naming_style { by_degree, ring_l, ring_lr };

// `mirrored` flips the walk on a bidirectional ring: the same graph admits
// two orientations of the L/R convention, and runs on both are legitimate.
inline relative_naming build_naming(const network& n,
                                    naming_style style = naming_style::by_degree,
                                    bool mirrored = false) {
  relative_naming rn;
  if (style != naming_style::by_degree) {
    ring_shape rs = classify_ring(n);
    if (!rs.is_ring) throw invariant_error("network " + n.name + " is not a ring");
    if (style == naming_style::ring_lr && !rs.bidirectional)
      throw invariant_error("network " + n.name + " is not a bidirectional ring");
    if (mirrored) {
      if (style != naming_style::ring_lr)
        throw invariant_error("one-way rings have a fixed orientation");
      std::reverse(rs.order.begin(), rs.order.end());
    }
    std::map<int, int> pos;
    for (size_t k = 0; k < rs.order.size(); ++k) pos[rs.order[k]] = static_cast<int>(k);
    int sz = static_cast<int>(rs.order.size());
    for (int id : rs.order) {
      rn.names[id].push_back({"L", rs.order[(pos[id] + 1) % sz]});
      if (style == naming_style::ring_lr)
        rn.names[id].push_back({"R", rs.order[(pos[id] + sz - 1) % sz]});
    }
    return rn;
  }
  for (auto& a : n.agents) {
    int k = 0;
    for (auto& [d, w] : n.out_links(a.id)) rn.names[a.id].push_back({std::to_string(++k), d});
  }
  return rn;
}

// ring order as seen by a protocol convention (leftward), honoring mirroring
inline std::vector<int> ring_walk(const network& n, bool mirrored) {
  ring_shape rs = classify_ring(n);
  if (!rs.is_ring) throw invariant_error("network " + n.name + " is not a ring");
  if (mirrored) std::reverse(rs.order.begin(), rs.order.end());
  return rs.order;
}

// --- global functions ----------------------------------------------------------

struct global_function {
  std::string name;
  std::function<Token(const network&)> eval;
};

namespace detail {
inline long long to_int(const Token& t) {
  size_t pos = 0;
  long long v = std::stoll(t, &pos);
  if (pos != t.size()) throw invariant_error("token '" + t + "' is not an integer");
  return v;
}
}  // namespace detail

inline global_function fn_size() {
  return {"size", [](const network& n) { return std::to_string(n.n()); }};
}
inline global_function fn_max_input() {
  return {"max_input", [](const network& n) {
            bool numeric = true;
            for (auto& a : n.agents) {
              try {
                detail::to_int(a.input);
              } catch (...) {
                numeric = false;
                break;
              }
            }
            Token best;
            bool first = true;
            for (auto& a : n.agents) {
              bool bigger = first || (numeric ? detail::to_int(a.input) > detail::to_int(best)
                                              : a.input > best);
              if (bigger) best = a.input;
              first = false;
            }
            return best;
          }};
}
inline global_function fn_sum_inputs() {
  return {"sum_inputs", [](const network& n) {
            long long s = 0;
            for (auto& a : n.agents) s += detail::to_int(a.input);
            return std::to_string(s);
          }};
}
inline global_function fn_multiset_inputs() {
  return {"multiset_inputs", [](const network& n) {
            std::vector<Token> v;
            for (auto& a : n.agents) v.push_back(a.input);
            std::sort(v.begin(), v.end());
            std::string out;
            for (auto& t : v) {
              if (!out.empty()) out += ",";
              out += t;
            }
            return out;
          }};
}
inline global_function fn_diameter() {
  return {"diameter", [](const network& n) { return std::to_string(diameter(n)); }};
}

inline std::vector<global_function> function_catalog() {
  return {fn_max_input(), fn_size(), fn_sum_inputs(), fn_multiset_inputs(), fn_diameter()};
}

inline global_function find_function(const std::string& name) {
  for (auto& f : function_catalog())
    if (f.name == name) return f;
  throw invariant_error("unknown function '" + name + "'");
}

// Spot-check invariance under relabeling of external ids.
inline void check_isomorphism_invariance(const global_function& f,
                                         const std::vector<network>& samples,
                                         unsigned seed = 17) {
  std::mt19937 rng(seed);
  for (auto& n : samples) {
    std::vector<int> ids;
    for (auto& a : n.agents) ids.push_back(a.id);
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<int> perm = ids;
      std::shuffle(perm.begin(), perm.end(), rng);
      std::map<int, int> m;
      for (size_t i = 0; i < ids.size(); ++i) m[ids[i]] = perm[i];
      std::vector<agent_decl> ag;
      std::vector<edge_decl> ed;
      for (auto& a : n.agents) ag.push_back({m[a.id], a.input});
      for (auto& e : n.edges) ed.push_back({m[e.src], m[e.dst], e.weight});
      network relabeled(n.name + "'", std::move(ag), std::move(ed));
      if (f.eval(n) != f.eval(relabeled))
        throw invariant_error("function '" + f.name + "' depends on external ids");
    }
  }
}

// --- families -------------------------------------------------------------------

struct network_family {
  std::vector<network> members;
  std::string description;
};

struct family_spec {
  enum class kind { uni_rings, bi_rings, labelings_of, explicit_list } k = kind::explicit_list;
  int max_n = 0;
  std::vector<Token> inputs;
  std::vector<Token> weights;
  bool distinct_inputs = false;  // keep only labelings with pairwise-distinct inputs
  std::optional<network> base;   // for labelings_of
  std::vector<network> list;     // for explicit_list
};

namespace detail {
template <typename F>
inline void for_each_assignment(const std::vector<Token>& alphabet, int slots, F&& emit) {
  std::vector<int> ix(slots, 0);
  for (;;) {
    std::vector<Token> a;
    a.reserve(slots);
    for (int v : ix) a.push_back(alphabet[v]);
    emit(a);
    int p = slots - 1;
    while (p >= 0 && ++ix[p] == static_cast<int>(alphabet.size())) ix[p--] = 0;
    if (p < 0) break;
  }
}
}  // namespace detail

// Deduplicated finite family; deterministic enumeration order.
inline network_family generate_family(const family_spec& spec) {
  network_family fam;
  auto add = [&](network&& n) {
    for (auto& m : fam.members)
      if (isomorphic(m, n)) return;
    fam.members.push_back(std::move(n));
  };
  auto distinct = [&](const std::vector<Token>& in) {
    std::set<Token> s(in.begin(), in.end());
    return s.size() == in.size();
  };
  switch (spec.k) {
    case family_spec::kind::uni_rings:
    case family_spec::kind::bi_rings: {
      if (spec.inputs.empty() || spec.weights.empty())
        throw invariant_error("family spec needs nonempty input and weight alphabets");
      if (spec.max_n < 2) throw invariant_error("family spec needs max_n >= 2");
      bool bi = spec.k == family_spec::kind::bi_rings;
      fam.description = std::string(bi ? "bi" : "uni") + "-rings n<=" + std::to_string(spec.max_n);
      int serial = 0;
      for (int n = 2; n <= spec.max_n; ++n) {
        detail::for_each_assignment(spec.inputs, n, [&](const std::vector<Token>& in) {
          if (spec.distinct_inputs && !distinct(in)) return;
          detail::for_each_assignment(spec.weights, 1, [&](const std::vector<Token>& w) {
            std::string nm = (bi ? "bi" : "uni") + std::to_string(n) + "_" + std::to_string(++serial);
            add(bi ? make_bi_ring(in, w[0], nm) : make_uni_ring(in, w[0], nm));
          });
        });
      }
      break;
    }
    case family_spec::kind::labelings_of: {
      if (!spec.base) throw invariant_error("labelings_of needs a base network");
      if (spec.inputs.empty() || spec.weights.empty())
        throw invariant_error("family spec needs nonempty input and weight alphabets");
      const network& g = *spec.base;
      fam.description = "labelings of " + g.name;
      int serial = 0;
      detail::for_each_assignment(spec.inputs, g.n(), [&](const std::vector<Token>& in) {
        if (spec.distinct_inputs && !distinct(in)) return;
        detail::for_each_assignment(spec.weights, static_cast<int>(g.edges.size()),
                                    [&](const std::vector<Token>& w) {
                                      std::vector<agent_decl> ag;
                                      std::vector<edge_decl> ed;
                                      for (int i = 0; i < g.n(); ++i)
                                        ag.push_back({g.agents[i].id, in[i]});
                                      for (size_t i = 0; i < g.edges.size(); ++i)
                                        ed.push_back({g.edges[i].src, g.edges[i].dst, w[i]});
                                      add(network(g.name + "_" + std::to_string(++serial),
                                                  std::move(ag), std::move(ed)));
                                    });
      });
      break;
    }
    case family_spec::kind::explicit_list: {
      fam.description = "explicit";
      for (auto n : spec.list) add(std::move(n));
      break;
    }
  }
  if (fam.members.empty()) throw invariant_error("family is empty");
  return fam;
}

// All non-isomorphic rings with pairwise-distinct integer ids drawn from 1..id_max.
inline network_family distinct_id_rings(bool bidirectional, int min_n, int max_n, int id_max,
                                        const Token& w = "1") {
  network_family fam;
  fam.description = std::string(bidirectional ? "bi" : "uni") + "-rings distinct ids 1.." +
                    std::to_string(id_max) + " n=" + std::to_string(min_n) + ".." +
                    std::to_string(max_n);
  std::vector<int> ids;
  int serial = 0;
  std::function<void(int)> rec = [&](int n) {
    if (static_cast<int>(ids.size()) == n) {
      std::vector<Token> in;
      for (int v : ids) in.push_back(std::to_string(v));
      std::string nm = (bidirectional ? "bi" : "uni") + std::to_string(n) + "_" +
                       std::to_string(++serial);
      network cand = bidirectional ? make_bi_ring(in, w, nm) : make_uni_ring(in, w, nm);
      for (auto& m : fam.members)
        if (isomorphic(m, cand)) return;
      fam.members.push_back(std::move(cand));
      return;
    }
    for (int v = 1; v <= id_max; ++v) {
      if (std::find(ids.begin(), ids.end(), v) != ids.end()) continue;
      ids.push_back(v);
      rec(n);
      ids.pop_back();
    }
  };
  for (int n = min_n; n <= max_n; ++n) rec(n);
  return fam;
}

}  // namespace gfc
