#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string bin() {
  const char* b = std::getenv("GFC_BIN");
  REQUIRE(b != nullptr);
  return b;
}

struct result {
  int code = 0;
  std::string out;
};

result run_cli(const std::string& args) {
  std::string cmd = bin() + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  while (fgets(buf.data(), buf.size(), p)) out += buf.data();
  int status = pclose(p);
  return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_CASE("check finds the doubled-ring obstruction") {
  result r = run_cli("check --family uni-rings --max-n 6 --inputs a,b,c --weights 1 --fn size");
  CHECK(r.code == 3);
  CHECK(r.out.find("solvable no") != std::string::npos);
  CHECK(r.out.find("counterexample") != std::string::npos);
}

TEST_CASE("check passes a solvable family") {
  result r =
      run_cli("check --family uni-rings --max-n 4 --inputs 1,2,3,4 --weights 1 --distinct "
              "--fn max_input");
  CHECK(r.code == 0);
  CHECK(r.out.find("solvable yes") != std::string::npos);
}

TEST_CASE("simulate writes learn lines for every agent") {
  std::string net = std::string(std::getenv("GFC_SRC")) + "/nets/ring3.net";
  result r = run_cli("simulate --net " + net + " --protocol pg_gc --fn multiset_inputs --sync");
  CHECK(r.code == 0);
  for (std::string agent : {"LEARN 1 ", "LEARN 2 ", "LEARN 3 "})
    CHECK(r.out.find(agent) != std::string::npos);
  CHECK(r.out.find("END steps=") != std::string::npos);
}

TEST_CASE("verify accepts the modified protocol and rejects the plain one") {
  result ok = run_cli("verify --protocol lcr_prime --max-n 3");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("OK states=") != std::string::npos);
  result bad = run_cli("verify --protocol lcr --max-n 3");
  CHECK(bad.code == 4);
  CHECK(bad.out.find("MISMATCH") != std::string::npos);
}

TEST_CASE("identical invocations are byte-identical") {
  for (std::string args : {std::string("bench --max-n 5"),
                           std::string("check --family uni-rings --max-n 4 --inputs a,b "
                                       "--weights 1 --fn size"),
                           std::string("simulate --net ") + std::getenv("GFC_SRC") +
                               "/nets/ring4.net --protocol lcr_prime --async --seed 11"}) {
    result a = run_cli(args);
    result b = run_cli(args);
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("usage errors exit with 2") {
  result r = run_cli("frobnicate");
  CHECK(r.code == 2);
}

TEST_CASE("outputs match the committed golden files") {
  std::string src = std::getenv("GFC_SRC");
  auto golden = [&](const std::string& name) {
    std::ifstream in(src + "/tests/golden/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(run_cli("bench --max-n 4").out == golden("bench_max4.txt"));
  CHECK(run_cli("check --family uni-rings --max-n 4 --inputs a,b --weights 1 --fn size").out ==
        golden("check_uni4_ab_size.txt"));
  CHECK(run_cli("simulate --net " + src + "/nets/ring4.net --protocol lcr_prime --async "
                "--seed 11")
            .out == golden("simulate_ring4_lcrp_s11.txt"));
}

TEST_CASE("failures are reported, not crashed") {
  CHECK(run_cli("check --family no-such-kind --fn size").code == 1);
  CHECK(run_cli("check --family uni-rings --max-n 3 --inputs a --weights 1 --fn bogus").code == 1);
  CHECK(run_cli("simulate --net /no/such/file.net --protocol lcr").code == 1);
  CHECK(run_cli("verify --protocol frobnicate --max-n 3").code == 1);
}

TEST_CASE("trace files land on disk") {
  std::string src = std::getenv("GFC_SRC");
  std::string out = "/tmp/gfc_trace_test.txt";
  std::remove(out.c_str());
  result r = run_cli("simulate --net " + src + "/nets/ring4.net --protocol lcr --sync --trace " + out);
  CHECK(r.code == 0);
  std::ifstream in(out);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("END steps=") != std::string::npos);
}
