// gfc: analyze when global functions are computable on network families,
// simulate the protocols, benchmark ring elections, and verify protocols
// against the counterfactual send condition.

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>

#include <gfc/election.hpp>
#include <gfc/epistemic.hpp>
#include <gfc/solvability.hpp>

using namespace gfc;

namespace {

struct family_flags {
  std::string kind = "uni-rings";
  int max_n = 4;
  std::string inputs = "1,2,3,4";
  std::string weights = "1";
  bool distinct = false;
  std::string net_file;

  void attach(CLI::App* cmd) {
    cmd->add_option("--family", kind, "uni-rings | bi-rings | labelings | explicit");
    cmd->add_option("--max-n", max_n, "largest ring size (ring families)");
    cmd->add_option("--inputs", inputs, "comma-separated input alphabet");
    cmd->add_option("--weights", weights, "comma-separated weight alphabet");
    cmd->add_flag("--distinct", distinct, "keep only labelings with pairwise-distinct inputs");
    cmd->add_option("--net", net_file, "network file (labelings base / explicit member)");
  }

  static std::vector<Token> split(const std::string& s) {
    std::vector<Token> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }

  network load_net() const {
    std::ifstream in(net_file);
    if (!in) throw std::runtime_error("cannot open " + net_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
  }

  network_family build() const {
    family_spec fs;
    fs.max_n = max_n;
    fs.inputs = split(inputs);
    fs.weights = split(weights);
    fs.distinct_inputs = distinct;
    if (kind == "uni-rings")
      fs.k = family_spec::kind::uni_rings;
    else if (kind == "bi-rings")
      fs.k = family_spec::kind::bi_rings;
    else if (kind == "labelings") {
      fs.k = family_spec::kind::labelings_of;
      fs.base = load_net();
    } else if (kind == "explicit") {
      fs.k = family_spec::kind::explicit_list;
      fs.list = {load_net()};
    } else {
      throw std::runtime_error("unknown family kind '" + kind + "'");
    }
    return generate_family(fs);
  }
};

std::unique_ptr<protocol> make_named_protocol(const std::string& name,
                                              const network_family* fam,
                                              const global_function* f, int flood_d) {
  if (name == "lcr") return lcr();
  if (name == "lcr_prime") return lcr_prime();
  if (name == "p2") return p2();
  if (name == "p2_prime") return p2_prime();
  if (name == "flooding") return flooding(flood_d);
  if (name == "full_info") return full_information(flood_d > 0 ? flood_d : 4);
  if (name == "pg_gc") {
    if (!fam || !f) throw std::runtime_error("pg_gc needs a family and a function");
    return pg_gc(*fam, *f);
  }
  throw std::runtime_error("unknown protocol '" + name + "'");
}

int cmd_check(const family_flags& ff, const std::string& fn_name, bool tsv) {
  network_family fam = ff.build();
  global_function f = find_function(fn_name);
  check_isomorphism_invariance(f, fam.members);
  bisim_context ctx(fam);
  solvability_report rep = is_solvable(ctx, f);
  if (tsv) {
    std::cout << "family\tmembers\tfn\tsolvable\tk_star\n";
    std::cout << fam.description << "\t" << fam.members.size() << "\t" << f.name << "\t"
              << (rep.solvable ? "yes" : "no") << "\t" << rep.k_star << "\n";
  } else {
    std::cout << render_report(fam, f, rep);
  }
  return rep.solvable ? 0 : 3;
}

int cmd_bisim(const family_flags& ff, int k, bool stabilize_only) {
  network_family fam = ff.build();
  bisim_context ctx(fam);
  auto [kstar, part] = ctx.stabilize();
  std::cout << "family " << fam.description << " members=" << fam.members.size() << "\n";
  std::cout << "k_star=" << kstar << "\n";
  if (!stabilize_only) {
    bisim_partition pk = ctx.partition(k);
    std::cout << "partition k=" << k << " blocks=" << pk.blocks.size() << "\n";
    for (auto& b : pk.blocks) {
      std::cout << "block";
      for (auto& p : b) std::cout << " (" << fam.members[p.net].name << "," << p.agent << ")";
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_simulate(const family_flags& ff, const std::string& proto_name,
                 const std::string& fn_name, bool async, uint32_t seed, int budget, int flood_d,
                 const std::string& trace_out, bool assume_known) {
  network net = ff.load_net();
  network_family fam;
  global_function f = find_function(fn_name);
  std::unique_ptr<protocol> proto;
  if (proto_name == "pg_gc") {
    if (assume_known) {
      fam.members = {net};
      fam.description = "singleton";
    } else {
      // everything that looks like this network: all relabelings over the
      // tokens it carries
      family_spec fs;
      fs.k = family_spec::kind::labelings_of;
      fs.base = net;
      std::set<Token> ins, ws;
      for (auto& a : net.agents) ins.insert(a.input);
      for (auto& e : net.edges) ws.insert(e.weight);
      fs.inputs.assign(ins.begin(), ins.end());
      fs.weights.assign(ws.begin(), ws.end());
      fam = generate_family(fs);
      bool member = false;
      for (auto& m : fam.members)
        if (isomorphic(m, net)) {
          net = m;  // run the family's own copy
          member = true;
        }
      if (!member) fam.members.push_back(net);
    }
    proto = pg_gc(fam, f);
  } else {
    proto = make_named_protocol(proto_name, nullptr, nullptr, flood_d);
  }
  scheduler sched = async ? scheduler::async(seed) : scheduler::sync();
  std::cout << "# protocol=" << proto->name() << " net=" << net.name
            << " mode=" << (async ? "async" : "sync") << " seed=" << (async ? seed : 0) << "\n";
  run r = run_protocol(net, *proto, sched, budget);
  std::string trace = render_trace(r);
  if (!trace_out.empty()) {
    std::ofstream out(trace_out);
    out << trace;
  } else {
    std::cout << trace;
  }
  if (r.out_of_budget) {
    std::cerr << "step budget exhausted (divergence?)\n";
    return 1;
  }
  return 0;
}

int cmd_bench(int max_n, const std::string& protos, bool tsv, int jobs) {
  std::vector<std::string> names = family_flags::split(protos);
  struct row {
    std::string proto, net;
    int n, msgs, steps, bytes;
  };
  struct job {
    std::string proto;
    std::vector<long long> ids;
  };
  std::vector<job> jobs_list;
  for (int n = 2; n <= max_n; ++n) {
    std::vector<long long> asc, desc;
    for (int i = 1; i <= n; ++i) asc.push_back(i);
    desc = asc;
    std::reverse(desc.begin(), desc.end());
    for (auto& nm : names)
      for (auto ids : {asc, desc}) jobs_list.push_back({nm, ids});
  }
  auto run_one = [](const job& j) -> row {
    bool bidir = j.proto == "p2" || j.proto == "p2_prime";
    std::vector<Token> in;
    std::string nm = (bidir ? "b" : "u");
    for (long long v : j.ids) {
      in.push_back(std::to_string(v));
      nm += "_" + std::to_string(v);
    }
    network net = bidir ? make_bi_ring(in, "1", nm) : make_uni_ring(in, "1", nm);
    auto proto = make_named_protocol(j.proto, nullptr, nullptr, 2);
    run r = run_protocol(net, *proto, scheduler::sync(), 65536);
    message_stats st = collect_stats(r);
    return {j.proto, nm, static_cast<int>(j.ids.size()), st.total, st.steps, st.bytes};
  };
  std::vector<row> rows(jobs_list.size());
  if (jobs > 1) {
    std::vector<std::future<row>> futs;
    for (auto& j : jobs_list)
      futs.push_back(std::async(std::launch::async, run_one, j));
    for (size_t i = 0; i < futs.size(); ++i) rows[i] = futs[i].get();
  } else {
    for (size_t i = 0; i < jobs_list.size(); ++i) rows[i] = run_one(jobs_list[i]);
  }
  const char* sep = tsv ? "\t" : " ";
  std::cout << "protocol" << sep << "ring" << sep << "n" << sep << "messages" << sep << "steps"
            << sep << "bytes" << "\n";
  for (auto& r : rows)
    std::cout << r.proto << sep << r.net << sep << r.n << sep << r.msgs << sep << r.steps << sep
              << r.bytes << "\n";
  return 0;
}

int cmd_verify(const std::string& proto_name, int max_n, int async_seeds) {
  bool bidir = proto_name == "p2" || proto_name == "p2_prime";
  network_family fam = distinct_id_rings(bidir, 2, max_n, max_n);
  auto proto = make_named_protocol(proto_name, nullptr, nullptr, 2);
  build_policy pol;
  pol.async_seeds = async_seeds;
  std::cout << "# protocol=" << proto_name << " family=" << fam.description
            << " async_seeds=" << async_seeds << "\n";
  run_system sys(*proto, fam, pol);
  de_facto_report rep = de_facto_check(sys, fn_max_input());
  std::cout << render_de_facto(rep);
  return rep.ok() ? 0 : 4;
}

int cmd_gen(const family_flags& ff, const std::string& outdir) {
  network_family fam = ff.build();
  for (auto& n : fam.members) {
    std::string path = outdir + "/" + n.name + ".net";
    std::ofstream out(path);
    out << render_network(n);
    std::cout << path << "\n";
  }
  std::cout << "# members=" << fam.members.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"global function computation on network families"};
  app.require_subcommand(1);

  family_flags ff;
  std::string fn_name = "max_input";
  std::string format = "text";
  int jobs = 1;
  app.add_option("--jobs", jobs, "parallelize across networks");

  auto* check = app.add_subcommand("check", "decide whether fn is computable on the family");
  ff.attach(check);
  check->add_option("--fn", fn_name, "function from the catalog");
  check->add_option("--format", format, "text | tsv");

  auto* bisim = app.add_subcommand("bisim", "dump level partitions and the stabilization level");
  ff.attach(bisim);
  int k = 0;
  bool stab_only = false;
  bisim->add_option("--k", k, "partition level to print");
  bisim->add_flag("--stabilize-only", stab_only, "print only k_star");

  auto* sim = app.add_subcommand("simulate", "run a protocol on a network file");
  std::string proto_name = "pg_gc", trace_out;
  bool async = false, assume_known = false;
  uint32_t seed = 1;
  int budget = 4096, flood_d = 2;
  sim->add_option("--net", ff.net_file, "network file")->required();
  sim->add_option("--protocol", proto_name, "pg_gc|full_info|lcr|lcr_prime|p2|p2_prime|flooding");
  sim->add_option("--fn", fn_name, "function (pg_gc)");
  sim->add_flag("--async", async, "asynchronous delivery");
  sim->add_flag("--sync", [](int64_t) {}, "synchronous rounds (default)");
  sim->add_option("--seed", seed, "scheduler seed (async)");
  sim->add_option("--budget", budget, "step budget");
  sim->add_option("--flood-d", flood_d, "round bound for flooding / full_info");
  sim->add_option("--trace", trace_out, "write the trace to a file");
  sim->add_flag("--assume-known", assume_known, "pg_gc: the network itself is common knowledge");

  auto* bench = app.add_subcommand("bench", "message tables for the ring elections");
  int bench_max_n = 8;
  std::string bench_protos = "lcr,lcr_prime,p2,p2_prime";
  bench->add_option("--max-n", bench_max_n, "largest ring size");
  bench->add_option("--protocols", bench_protos, "comma-separated protocol list");
  bench->add_option("--format", format, "text | tsv");

  auto* verify = app.add_subcommand("verify", "check a protocol against the send condition");
  std::string verify_proto = "lcr_prime";
  int verify_max_n = 4, async_seeds = 0;
  verify->add_option("--protocol", verify_proto, "lcr|lcr_prime|p2|p2_prime")->required();
  verify->add_option("--max-n", verify_max_n, "largest ring size; ids drawn from 1..max-n");
  verify->add_option("--async-seeds", async_seeds, "additional sampled schedules per ring");

  auto* gen = app.add_subcommand("gen", "enumerate a family into network files");
  std::string outdir = ".";
  ff.attach(gen);
  gen->add_option("--out", outdir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return cmd_check(ff, fn_name, format == "tsv");
    if (bisim->parsed()) return cmd_bisim(ff, k, stab_only);
    if (sim->parsed())
      return cmd_simulate(ff, proto_name, fn_name, async, seed, budget, flood_d, trace_out,
                          assume_known);
    if (bench->parsed()) return cmd_bench(bench_max_n, bench_protos, format == "tsv", jobs);
    if (verify->parsed()) return cmd_verify(verify_proto, verify_max_n, async_seeds);
    if (gen->parsed()) return cmd_gen(ff, outdir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
