#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gfc/bisim.hpp>
#include <gfc/runtime.hpp>
#include <gfc/solvability.hpp>

#include <set>

using namespace gfc;

static network_family fig2_family() {
  network_family fam;
  fam.members = {make_uni_ring({"a", "b", "c"}, "w", "r3"),
                 make_uni_ring({"a", "b", "c", "a", "b", "c"}, "w", "r6")};
  fam.description = "fig2";
  return fam;
}

TEST_CASE("full information round one carries exactly the initial fragment") {
  network r3 = make_uni_ring({"a", "b", "c"}, "w", "r3");
  auto proto = full_information(3);
  run r = run_protocol(r3, *proto, scheduler::sync(), 64);
  REQUIRE(r.quiescent);
  for (auto& ag : r3.agents) {
    auto t0 = transcript(r, ag.id, 0);
    CHECK(t0.empty());
    auto t1 = transcript(r, ag.id, 1);
    REQUIRE(t1.size() == 1);  // single in-neighbor
    const view_node* init = unfold(r3, (ag.id + 1) % 3 + 1, 0);  // the incoming side
    payload p = payload::make_tree(init, 1);
    CHECK(t1[0] == "w>" + p.enc());  // link weight and orientation travel along
  }
}

TEST_CASE("round sanity: the view after k rounds covers distance-k senders") {
  network net("d", {{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}},
              {{1, 2, "1"}, {2, 3, "1"}, {3, 4, "1"}, {4, 1, "1"}, {2, 1, "2"}});
  for (int rounds = 1; rounds <= 4; ++rounds) {
    auto proto = full_information(rounds);
    run r = run_protocol(net, *proto, scheduler::sync(), 64);
    for (auto& ag : net.agents) {
      // reconstruct the final view from the log and compare with the unfolding
      std::map<Token, std::tuple<Token, bool, const view_node*>> ch;
      for (auto& e : r.events.at(ag.id))
        if (e.k == run_event::kind::recv && e.pl.k == payload::kind::tree)
          ch[e.channel] = {e.link_weight, e.link_bidi, e.pl.tree};
      std::vector<view_node::in_edge> ins;
      for (auto& [tag, t] : ch) ins.push_back({std::get<0>(t), std::get<1>(t), std::get<2>(t)});
      const view_node* v =
          make_view(net.input_of(ag.id), net.out_weight_multiset(ag.id), std::move(ins));
      CHECK(v == unfold(net, ag.id, rounds));
    }
  }
}

TEST_CASE("doubled-ring counterparts share transcripts") {
  network_family fam = fig2_family();
  auto proto = full_information(6);
  run a = run_protocol(fam.members[0], *proto, scheduler::sync(), 64);
  run b = run_protocol(fam.members[1], *proto, scheduler::sync(), 64);
  for (int agent = 1; agent <= 3; ++agent)
    for (int k = 1; k <= 6; ++k) {
      CHECK(transcript(a, agent, k) == transcript(b, agent, k));
      CHECK(transcript(a, agent, k) == transcript(b, agent + 3, k));
    }
}

TEST_CASE("seed determinism and delivery exactness") {
  network net = make_bi_ring({"2", "4", "1", "3"}, "1", "b4");
  auto proto = full_information(4);
  run r1 = run_protocol(net, *proto, scheduler::async(42), 4096);
  run r2 = run_protocol(net, *proto, scheduler::async(42), 4096);
  CHECK(render_trace(r1) == render_trace(r2));
  run r3 = run_protocol(net, *proto, scheduler::async(43), 4096);
  REQUIRE(r1.quiescent);
  REQUIRE(r3.quiescent);
  int sends = 0, delivers = 0;
  for (auto& l : r1.trace) {
    if (l.find(" SEND ") != std::string::npos) ++sends;
    if (l.find(" DELIVER ") != std::string::npos) ++delivers;
  }
  CHECK(sends == delivers);
}

TEST_CASE("fairness bound keeps messages moving") {
  network net = make_bi_ring({"2", "4", "1", "3"}, "1", "b4");
  auto proto = full_information(5);
  scheduler sched = scheduler::async(7, true, 5);
  run r = run_protocol(net, *proto, sched, 4096);
  REQUIRE(r.quiescent);
  // every send is delivered within the bound
  std::map<std::pair<int, int>, std::vector<int>> sent, got;
  for (auto& l : r.trace) {
    std::istringstream is(l);
    std::string w1, kind, arrow;
    int step;
    is >> w1 >> step >> kind;
    if (kind != "SEND" && kind != "DELIVER") continue;
    std::string link;
    is >> link;
    auto p = link.find("->");
    int src = std::stoi(link.substr(0, p));
    int dst = std::stoi(link.substr(p + 2));
    if (kind == "SEND") sent[{src, dst}].push_back(step);
    else got[{src, dst}].push_back(step);
  }
  for (auto& [link, times] : sent)
    for (size_t i = 0; i < times.size(); ++i) {
      REQUIRE(got[link].size() > i);
      CHECK(got[link][i] - times[i] <= sched.fairness_bound);
    }
}

TEST_CASE("zero budget reports exhaustion") {
  network net("p", {{1, "a"}, {2, "b"}}, {{1, 2, "1"}, {2, 1, "1"}});
  auto proto = full_information(2);
  run r = run_protocol(net, *proto, scheduler::sync(), 0);
  CHECK(r.out_of_budget);
  CHECK_FALSE(r.quiescent);
}

TEST_CASE("the terminating program learns on a solvable family") {
  network_family fam = distinct_id_rings(false, 2, 4, 4);
  bisim_context ctx(fam);
  solvability_report rep = is_solvable(ctx, fn_max_input());
  REQUIRE(rep.solvable);
  auto proto = pg_gc(fam, fn_max_input());
  for (size_t m = 0; m < fam.members.size(); ++m) {
    run r = run_protocol(fam.members[m], *proto, scheduler::sync(), 256);
    REQUIRE(r.quiescent);
    Token expect = fn_max_input().eval(fam.members[m]);
    for (auto& ag : fam.members[m].agents) {
      REQUIRE(r.learned_at.count(ag.id));
      CHECK(r.learned_value.at(ag.id) == expect);
      // learned by round witness+1 (steps are rounds under the sync scheduler)
      CHECK(r.learned_at.at(ag.id) <= rep.witness_k[m] + 1);
    }
  }
}

TEST_CASE("the terminating program learns under asynchrony") {
  network_family fam = distinct_id_rings(false, 2, 3, 3);
  auto proto = pg_gc(fam, fn_max_input());
  for (size_t m = 0; m < fam.members.size(); ++m)
    for (uint32_t seed = 1; seed <= 5; ++seed) {
      run r = run_protocol(fam.members[m], *proto, scheduler::async(seed), 4096);
      REQUIRE(r.quiescent);
      for (auto& ag : fam.members[m].agents) {
        REQUIRE(r.learned_at.count(ag.id));
        CHECK(r.learned_value.at(ag.id) == fn_max_input().eval(fam.members[m]));
      }
    }
}

TEST_CASE("a singleton family needs only the value announcements") {
  network_family fam;
  fam.members = {make_uni_ring({"7", "3", "5"}, "1", "solo")};
  fam.description = "solo";
  auto proto = pg_gc(fam, fn_max_input());
  run r = run_protocol(fam.members[0], *proto, scheduler::sync(), 64);
  REQUIRE(r.quiescent);
  int data = 0, value = 0;
  for (auto& l : r.trace) {
    if (l.find("kind=info") != std::string::npos) ++data;
    if (l.find("kind=value") != std::string::npos) ++value;
  }
  CHECK(data == 0);
  CHECK(value == 3);  // one announcement each, never more
  for (auto& ag : fam.members[0].agents) CHECK(r.learned_at.at(ag.id) == 0);
}

TEST_CASE("no agent ever claims a value on the unsolvable family") {
  network_family fam = fig2_family();
  auto proto = pg_gc(fam, fn_size());
  for (auto& net : fam.members) {
    run r = run_protocol(net, *proto, scheduler::sync(), 40);
    CHECK((r.out_of_budget || r.quiescent));
    CHECK(r.learned_at.empty());  // soundness: silence rather than a wrong claim
  }
}

TEST_CASE("local-state transcripts versus the level relation, small scale") {
  family_spec fs;
  fs.k = family_spec::kind::uni_rings;
  fs.max_n = 4;
  fs.inputs = {"a", "b"};
  fs.weights = {"1"};
  network_family fam = generate_family(fs);
  bisim_context ctx(fam);
  auto proto = full_information(3);
  std::vector<run> runs;
  for (auto& n : fam.members) runs.push_back(run_protocol(n, *proto, scheduler::sync(), 64));
  for (int m1 = 0; m1 < static_cast<int>(fam.members.size()); ++m1)
    for (int m2 = 0; m2 < static_cast<int>(fam.members.size()); ++m2)
      for (auto& a1 : fam.members[m1].agents)
        for (auto& a2 : fam.members[m2].agents)
          for (int k = 0; k <= 3; ++k) {
            bool same_info =
                fam.members[m1].input_of(a1.id) == fam.members[m2].input_of(a2.id) &&
                fam.members[m1].out_weight_multiset(a1.id) ==
                    fam.members[m2].out_weight_multiset(a2.id);
            for (int kk = 1; kk <= k && same_info; ++kk)
              if (transcript(runs[m1], a1.id, kk) != transcript(runs[m2], a2.id, kk))
                same_info = false;
            CHECK(ctx.bisimK(k, {m1, a1.id}, {m2, a2.id}) == same_info);
          }
}

TEST_CASE("the plain variant never stops by itself") {
  network_family fam = distinct_id_rings(false, 2, 3, 3);
  auto proto = pg_gc(fam, fn_max_input(), /*terminating=*/false);
  run r = run_protocol(fam.members[0], *proto, scheduler::sync(), 30);
  CHECK(r.out_of_budget);
  // knowledge still arrives, there is just no final announcement
  for (auto& ag : fam.members[0].agents) CHECK(r.learned_at.count(ag.id));
  int values = 0;
  for (auto& l : r.trace)
    if (l.find("kind=value") != std::string::npos) ++values;
  CHECK(values == 0);
}

TEST_CASE("view merging is associative and order-blind") {
  network net("m", {{1, "a"}, {2, "b"}, {3, "c"}, {4, "a"}},
              {{1, 2, "1"}, {2, 3, "2"}, {3, 1, "1"}, {4, 2, "1"}, {2, 4, "1"}, {3, 4, "2"}});
  for (auto& ag : net.agents) {
    const view_node* d1 = unfold(net, ag.id, 1);
    const view_node* d2 = unfold(net, ag.id, 2);
    const view_node* d3 = unfold(net, ag.id, 3);
    // idempotent, and any merge order reaches the deepest knowledge
    CHECK(merge_views(d2, d2) == d2);
    CHECK(merge_views(d1, d3) == d3);
    CHECK(merge_views(d3, d1) == d3);
    CHECK(merge_views(merge_views(d1, d2), d3) == merge_views(d1, merge_views(d2, d3)));
    CHECK(view_includes(d3, d2));
    CHECK(view_includes(d2, d1));
  }
}
