#pragma once

#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gfc/network.hpp"

namespace gfc {

// Contiguous stretch of a ring an agent knows about, positions relative to
// the agent: +1 is one step right (where unidirectional traffic comes from),
// -1 one step left. Ids are the distinct integer inputs ring protocols run
// on. Once some id shows up twice the ring size is pinned and the segment
// folds into the full ring (`wrapped`, positions 0..ring_size-1).
struct ring_segment {
  std::map<int, long long> at;  // position -> id; contiguous, contains 0
  bool wrapped = false;         // the ring size is pinned
  int ring_size = 0;            // valid when wrapped

  long long self_id() const { return at.at(0); }
  int lo() const { return at.empty() ? 0 : at.begin()->first; }
  int hi() const { return at.empty() ? 0 : at.rbegin()->first; }
  // knowing the size and every position: the agent has all the information
  bool complete() const { return wrapped && static_cast<int>(at.size()) == ring_size; }

  static ring_segment seed(long long id) {
    ring_segment s;
    s.at[0] = id;
    return s;
  }

  bool knows(long long id) const {
    for (auto& [p, v] : at)
      if (v == id) return true;
    return false;
  }

  long long max_id() const {
    long long m = at.begin()->second;
    for (auto& [p, v] : at) m = std::max(m, v);
    return m;
  }

  // the cells of this segment the receiver of `side_offset` has not seen,
  // given the set of ids already passed along that way
  ring_segment minus_ids(const std::set<long long>& sent, bool wrap_sent) const {
    ring_segment d;
    d.wrapped = wrapped;
    d.ring_size = ring_size;
    for (auto& [p, v] : at)
      if (!sent.count(v)) d.at[p] = v;
    if (d.at.empty() && (!wrapped || wrap_sent)) d.wrapped = false;
    return d;
  }
  bool carries_news(const std::set<long long>& sent, bool wrap_sent) const {
    for (auto& [p, v] : at)
      if (!sent.count(v)) return true;
    return wrapped && !wrap_sent;
  }

  // position of an id, preferring the occurrence nearest 0
  std::optional<int> position_of(long long id) const {
    std::optional<int> best;
    for (auto& [p, v] : at)
      if (v == id && (!best || std::abs(p) < std::abs(*best))) best = p;
    return best;
  }

  std::string enc() const {
    std::ostringstream os;
    os << (wrapped ? "w" : "s") << lo() << ":";
    for (auto& [p, v] : at) os << v << ",";
    return os.str();
  }

  int atom_count() const { return static_cast<int>(at.size()) + (wrapped ? 1 : 0); }
};

namespace detail {
inline int fold_pos(int p, int size) { return ((p % size) + size) % size; }

inline ring_segment fold_segment(const ring_segment& s, int size) {
  ring_segment out;
  out.wrapped = true;
  out.ring_size = size;
  for (auto& [p, v] : s.at) {
    int pos = fold_pos(p, size);
    auto it = out.at.find(pos);
    if (it != out.at.end() && it->second != v) throw invariant_error("inconsistent ring wrap");
    out.at[pos] = v;
  }
  return out;
}
}  // namespace detail

// The sender's segment shifted so its own position lands at `offset` relative
// to the receiver (+1 when the message came in from the right, -1 from the
// left).
inline ring_segment graft_segment(const ring_segment& mine, const ring_segment& theirs,
                                  int offset) {
  int size = 0;
  if (mine.wrapped) size = mine.ring_size;
  if (theirs.wrapped) {
    if (size != 0 && size != theirs.ring_size) throw invariant_error("ring size disagreement");
    size = theirs.ring_size;
  }
  if (size > 0) {
    ring_segment out = detail::fold_segment(mine, size);
    for (auto& [p, v] : theirs.at) {
      int pos = detail::fold_pos(p + offset, size);
      auto it = out.at.find(pos);
      if (it != out.at.end() && it->second != v) throw invariant_error("inconsistent ring wrap");
      out.at[pos] = v;
    }
    return out;
  }
  ring_segment out = mine;
  for (auto& [p, v] : theirs.at) {
    int pos = p + offset;
    auto it = out.at.find(pos);
    if (it != out.at.end()) {
      if (it->second != v) throw invariant_error("inconsistent ring knowledge");
      continue;
    }
    out.at[pos] = v;
  }
  // wrap when some id repeats; with distinct ids the repeat distance is the size
  std::map<long long, int> first_at;
  for (auto& [p, v] : out.at) {
    auto it = first_at.find(v);
    if (it == first_at.end()) {
      first_at[v] = p;
      continue;
    }
    int s = p - it->second;
    return detail::fold_segment(out, s);
  }
  return out;
}

// positions (relative to the receiver) that `next` knows and `prev` did not
inline std::vector<std::pair<int, long long>> segment_delta(const ring_segment& prev,
                                                            const ring_segment& next) {
  std::vector<std::pair<int, long long>> d;
  for (auto& [p, v] : next.at) {
    if (next.wrapped && !prev.wrapped) {
      if (!prev.knows(v)) d.push_back({p, v});
      continue;
    }
    if (!prev.at.count(p)) d.push_back({p, v});
  }
  return d;
}

}  // namespace gfc
