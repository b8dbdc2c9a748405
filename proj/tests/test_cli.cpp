#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(RAMANML_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) res.output.append(buf, n);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("ramanml_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("simulate: zero pumps print a flat 0.00 dB profile") {
  RunResult res = run_cli("simulate --pumps 1430,0,1447,0,1470,0,1492,0,1514,0");
  CHECK(res.exit_code == 0);
  CHECK_THAT(res.output, ContainsSubstring("effective-config:"));
  CHECK_THAT(res.output, ContainsSubstring("gain min 0.00 dB, max 0.00 dB"));
}

TEST_CASE("simulate: four pump pairs are a usage error") {
  RunResult res = run_cli("simulate --pumps 1430,100,1447,100,1470,100,1492,100");
  CHECK(res.exit_code == 1);
  CHECK_THAT(res.output, ContainsSubstring("5"));
}

TEST_CASE("simulate: out-of-range wavelength warns but proceeds") {
  RunResult res = run_cli("simulate --pumps 1410,10,1447,10,1470,10,1492,10,1514,10");
  CHECK(res.exit_code == 0);
  CHECK_THAT(res.output, ContainsSubstring("warning"));
}

TEST_CASE("simulate: max pump powers land above the practical window floor") {
  RunResult res = run_cli("simulate --pumps 1430,160,1447,160,1470,160,1492,160,1514,160");
  REQUIRE(res.exit_code == 0);
  double mn = 0.0, mx = 0.0;
  std::size_t at = res.output.find("gain min ");
  REQUIRE(at != std::string::npos);
  REQUIRE(std::sscanf(res.output.c_str() + at, "gain min %lf dB, max %lf dB", &mn, &mx) == 2);
  CHECK(mx > 4.0);
}

TEST_CASE("gen: identical flags give byte-identical files") {
  TempDir tmp;
  RunResult a = run_cli("gen --count 2 --seed 5 --out " + tmp.p("a.jsonl"));
  RunResult b = run_cli("gen --count 2 --seed 5 --out " + tmp.p("b.jsonl"));
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(tmp.p("a.jsonl")) == slurp(tmp.p("b.jsonl")));
  CHECK_THAT(a.output, ContainsSubstring("generated 2 records"));
}

TEST_CASE("train/eval pipeline over the CLI") {
  TempDir tmp;
  REQUIRE(run_cli("gen --count 8 --seed 6 --out " + tmp.p("train.jsonl")).exit_code == 0);

  SECTION("missing --data is a usage error") {
    RunResult res = run_cli("train --method rp --out " + tmp.p("m.json"));
    CHECK(res.exit_code == 1);
    CHECK_THAT(res.output, ContainsSubstring("--data"));
  }

  SECTION("a hidden list is rejected for rp") {
    RunResult res = run_cli("train --method rp --hidden 10,10 --data " + tmp.p("train.jsonl") +
                            " --out " + tmp.p("m.json"));
    CHECK(res.exit_code == 1);
  }

  SECTION("rp does not take bp flags") {
    RunResult res = run_cli("train --method rp --max-epochs 5 --data " + tmp.p("train.jsonl") +
                            " --out " + tmp.p("m.json"));
    CHECK(res.exit_code == 1);
  }

  SECTION("train, predict, eval round trip") {
    RunResult tr = run_cli("train --method rp --target gain --hidden 12 --ensemble 2 --data " +
                           tmp.p("train.jsonl") + " --out " + tmp.p("m.json"));
    REQUIRE(tr.exit_code == 0);
    CHECK_THAT(tr.output, ContainsSubstring("train RMSE"));

    RunResult pr = run_cli("predict --model " + tmp.p("m.json") +
                           " --pumps 1430,100,1447,100,1470,100,1492,100,1514,100 --out " +
                           tmp.p("pred.csv"));
    CHECK(pr.exit_code == 0);
    CHECK(slurp(tmp.p("pred.csv")).rfind("frequency_THz,gain_dB", 0) == 0);

    RunResult wrong = run_cli("predict --model " + tmp.p("m.json") + " --pumps 1430,100");
    CHECK(wrong.exit_code == 1);

    RunResult ev = run_cli("eval --model " + tmp.p("m.json") + " --data " + tmp.p("train.jsonl") +
                           " --allow-unpruned --out " + tmp.p("rep"));
    CHECK(ev.exit_code == 0);
    CHECK_THAT(ev.output, ContainsSubstring("RMSE mean"));
    CHECK(fs::exists(tmp.p("rep.json")));
    CHECK(fs::exists(tmp.p("rep_cdf.csv")));
  }

  SECTION("bp training with the logistic alternative works end to end") {
    REQUIRE(run_cli("gen --count 12 --seed 16 --out " + tmp.p("train12.jsonl")).exit_code == 0);
    RunResult tr = run_cli("train --method bp --target noise --activation logistic "
                           "--hidden 4,4 --ensemble 1 --max-epochs 4 --data " +
                           tmp.p("train12.jsonl") + " --out " + tmp.p("bp.json"));
    REQUIRE(tr.exit_code == 0);
    CHECK(fs::exists(tmp.p("bp.json")));
    CHECK(fs::exists(tmp.p("bp.json.member0.log.csv")));

    RunResult bad = run_cli("train --method bp --activation sine --data " +
                            tmp.p("train12.jsonl") + " --out " + tmp.p("bad.json"));
    CHECK(bad.exit_code == 1);
  }

  SECTION("config-hash mismatch between model and dataset is a runtime error") {
    RunResult tr = run_cli("train --method rp --hidden 8 --ensemble 1 --data " +
                           tmp.p("train.jsonl") + " --out " + tmp.p("m.json"));
    REQUIRE(tr.exit_code == 0);
    std::ofstream cfg(tmp.p("other.cfg"));
    cfg << "fiber.span_length_km = 80\n";
    cfg.close();
    REQUIRE(run_cli("gen --count 2 --seed 7 --config " + tmp.p("other.cfg") + " --out " +
                    tmp.p("other.jsonl"))
                .exit_code == 0);
    RunResult ev = run_cli("eval --model " + tmp.p("m.json") + " --data " + tmp.p("other.jsonl") +
                           " --allow-unpruned");
    CHECK(ev.exit_code == 2);
    CHECK_THAT(ev.output, ContainsSubstring("config"));
  }
}

TEST_CASE("sweep over a tiny grid writes the table") {
  TempDir tmp;
  REQUIRE(run_cli("gen --count 10 --seed 8 --out " + tmp.p("pool.jsonl")).exit_code == 0);
  RunResult sw = run_cli("sweep --data " + tmp.p("pool.jsonl") +
                         " --grid 5,10,5 --ensemble 1 --out " + tmp.p("sweep.csv"));
  REQUIRE(sw.exit_code == 0);
  CHECK_THAT(sw.output, ContainsSubstring("best n_hidden"));
  std::string csv = slurp(tmp.p("sweep.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 grid points
}

TEST_CASE("bench rejects too few trials as a usage error") {
  TempDir tmp;
  REQUIRE(run_cli("gen --count 1 --seed 9 --out " + tmp.p("one.jsonl")).exit_code == 0);
  REQUIRE(run_cli("train --method rp --hidden 5 --ensemble 1 --data " + tmp.p("one.jsonl") +
                  " --out " + tmp.p("m.json"))
              .exit_code == 0);
  RunResult res = run_cli("bench --model " + tmp.p("m.json") + " --trials 3");
  CHECK(res.exit_code == 1);
}

TEST_CASE("unknown config keys are reported") {
  TempDir tmp;
  std::ofstream cfg(tmp.p("bad.cfg"));
  cfg << "fiber.unknown_field = 3\n";
  cfg.close();
  RunResult res = run_cli("simulate --pumps 1430,0,1447,0,1470,0,1492,0,1514,0 --config " +
                          tmp.p("bad.cfg"));
  CHECK(res.exit_code == 2);
  CHECK_THAT(res.output, ContainsSubstring("unknown key"));
}
