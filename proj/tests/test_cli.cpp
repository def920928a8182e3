#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "beaq/io.hpp"
#include "commands.hpp"
#include "test_util.hpp"

using namespace beaq;
using beaq::tools::run_cli;

TEST_SUITE_BEGIN("cli");

namespace {

const std::string kFixtures = BEAQ_FIXTURES;

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<double> scores_of(const std::string& csv) {
  std::istringstream in(csv);
  return io::parse_scores_csv(in);
}

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("score: uniform fixture under balentacq") {
  const auto r = cli({"score", "--input", kFixtures + "/uniform_dirichlet.csv", "--measure", "balentacq"});
  REQUIRE(r.code == tools::kExitOk);
  const auto s = scores_of(r.out);
  REQUIRE(s.size() == 3);
  for (double v : s) CHECK(std::abs(v - 4.0 * std::numbers::ln2) < 1e-3);
}

TEST_CASE("score: entropy of one-hot draws is zero") {
  const auto r = cli({"score", "--input", kFixtures + "/one_hot.csv", "--measure", "entropy"});
  REQUIRE(r.code == tools::kExitOk);
  for (double v : scores_of(r.out)) CHECK(std::abs(v) < 1e-4);
}

TEST_CASE("score: reruns are byte-identical, across worker counts too") {
  testutil::TempDir dir("cli_score");
  const auto pool = dir.file("pool.bin");
  REQUIRE(cli({"--seed", "5", "gen-pool", "--points", "40", "--draws", "50", "--classes", "4", "--output", pool})
              .code == 0);
  const auto a = cli({"--seed", "3", "score", "--input", pool, "--measure", "power_bald", "--workers", "1"});
  const auto b = cli({"--seed", "3", "score", "--input", pool, "--measure", "power_bald", "--workers", "3"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(cli({"--seed", "4", "score", "--input", pool, "--measure", "power_bald"}).out != a.out);

  REQUIRE(cli({"score", "--input", pool, "--output", dir.file("s1.csv")}).code == 0);
  REQUIRE(cli({"score", "--input", pool, "--output", dir.file("s2.csv")}).code == 0);
  CHECK(io::read_file(dir.file("s1.csv")) == io::read_file(dir.file("s2.csv")));
}

TEST_CASE("import-csv writes a tensor that scores like the CSV") {
  testutil::TempDir dir("cli_import");
  const auto bin = dir.file("u.bin");
  REQUIRE(cli({"import-csv", "--input", kFixtures + "/uniform_dirichlet.csv", "--output", bin}).code == 0);
  CHECK(cli({"score", "--input", bin}).out ==
        cli({"score", "--input", kFixtures + "/uniform_dirichlet.csv"}).out);
}

TEST_CASE("fit-beta prints marginals") {
  const auto r = cli({"fit-beta", "--input", kFixtures + "/uniform_dirichlet.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("point,class,alpha,beta,mean,variance,flags\n", 0) == 0);
}

TEST_CASE("select: top-K by rule, budget exhaustion, replay") {
  testutil::TempDir dir("cli_select");
  const auto state = dir.file("state.json");
  const auto scores = kFixtures + "/three_points.csv";

  auto r = cli({"select", "--scores", scores, "--k", "2", "--state", state});
  REQUIRE(r.code == 0);
  CHECK(r.out == "rank,index,score\n0,1,0.90000000000000002\n1,2,0.5\n");

  r = cli({"select", "--scores", scores, "--k", "2", "--state", state});
  REQUIRE(r.code == 0);
  CHECK(r.out == "rank,index,score\n0,0,0.10000000000000001\n");

  r = cli({"select", "--scores", scores, "--k", "2", "--state", state});
  CHECK(r.code == 0);
  CHECK(r.out == "rank,index,score\n");
  CHECK(r.err.find("budget exhausted") != std::string::npos);

  const auto saved = io::decode_pool_state(io::read_file(state));
  CHECK(saved.labeled() == std::vector<std::size_t>{0, 1, 2});
  CHECK(saved.history().size() == 2);
}

TEST_CASE("select: tensor input continues identically from a saved state") {
  testutil::TempDir dir("cli_replay");
  const auto pool = dir.file("pool.bin");
  REQUIRE(cli({"gen-pool", "--kind", "dirichlet", "--points", "12", "--draws", "40", "--classes", "3",
               "--output", pool})
              .code == 0);
  const auto full = io::read_tensor(pool);

  auto step = [&](const std::string& state) {
    const auto current = std::filesystem::exists(state) ? io::decode_pool_state(io::read_file(state)) : PoolState(12);
    io::write_tensor(dir.file("unl.bin"), full.select_points(current.unlabeled()));
    return cli({"--seed", "8", "select", "--input", dir.file("unl.bin"), "--k", "3", "--k-total", "9",
                "--state", state, "--measure", "random"});
  };
  const auto a1 = step(dir.file("a.json"));
  const auto a2 = step(dir.file("a.json"));
  std::filesystem::copy_file(dir.file("a.json"), dir.file("b.json"));
  const auto a3 = step(dir.file("a.json"));
  const auto b3 = step(dir.file("b.json"));
  REQUIRE(a1.code == 0);
  CHECK(a3.out == b3.out);
  CHECK(io::read_file(dir.file("a.json")) == io::read_file(dir.file("b.json")));
  const auto a4 = step(dir.file("a.json"));
  CHECK(a4.err.find("budget exhausted") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(cli({"--help"}).code == tools::kExitOk);
  CHECK(cli({"no-such-command"}).code == tools::kExitUsage);
  CHECK(cli({"score"}).code == tools::kExitUsage);
  CHECK(cli({"score", "--input", kFixtures + "/one_hot.csv", "--measure", "bogus"}).code == tools::kExitUsage);
  CHECK(cli({"score", "--input", kFixtures + "/one_hot.csv", "--precision-case", "-1", "--measure", "balent"})
            .code == tools::kExitUsage);
  CHECK(cli({"score", "--input", "/nonexistent.bin"}).code == tools::kExitData);

  testutil::TempDir dir("cli_codes");
  write_text(dir.file("bad.bin"), "BEAQ1\x01");
  const auto r = cli({"score", "--input", dir.file("bad.bin")});
  CHECK(r.code == tools::kExitData);
  CHECK(r.err.find("byte") != std::string::npos);

  write_text(dir.file("rows.csv"), "0,0,0,0.5\n0,0,1,0.6\n");
  const auto rows = cli({"score", "--input", dir.file("rows.csv")});
  CHECK(rows.code == tools::kExitData);
  CHECK(rows.err.find("(point 0, draw 0)") != std::string::npos);

  CHECK(cli({"select", "--scores", kFixtures + "/three_points.csv", "--k", "5", "--state", dir.file("s.json")})
            .code == tools::kExitUsage);
}

TEST_CASE("oracle-check passes, and fails with a perturbed digamma") {
  const auto ok = cli({"oracle-check"});
  CHECK(ok.code == tools::kExitOk);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const auto bad = cli({"oracle-check", "--inject-digamma-fault"});
  CHECK(bad.code == tools::kExitCheckFailed);
  CHECK(bad.out.find("FAIL decomposition_vs_quadrature") != std::string::npos);
}

TEST_CASE("rankcorr and rmse reports") {
  const auto rc = cli({"rankcorr", "--classes", "10", "--points", "30", "--draws", "100", "--repeats", "1"});
  REQUIRE(rc.code == 0);
  CHECK(rc.out.rfind("measure_a,measure_b,n_classes,n_points,repeats,rho_mean,rho_sd\n", 0) == 0);
  // rho_sd is empty with a single repeat.
  CHECK(rc.out.find(",\n") != std::string::npos);
  CHECK(cli({"rankcorr", "--classes", "10", "--points", "30", "--draws", "100", "--repeats", "1"}).out == rc.out);

  const auto rm = cli({"rmse", "--classes", "10", "--points", "30", "--draws", "500", "--repeats", "1"});
  REQUIRE(rm.code == 0);
  CHECK(rm.out.rfind("n_classes,n_draws,repeats,rmse_mean,spearman_mean\n10,500,1,", 0) == 0);
}

TEST_CASE("simulate writes curve and grid CSVs, identically on rerun") {
  testutil::TempDir dir("cli_simulate");
  write_text(dir.file("small.cfg"),
             "mode = both\nmeasures = random,balentacq\npool_per_class = 30\ntest_per_class = 50\n"
             "initial_labeled = 6\nk_per_iter = 3\niterations = 2\nm_draws = 20\nrepeats = 1\nepochs = 20\n"
             "grid_nx = 12\ngrid_ny = 10\ngrid_train_per_class = 30\nseed = 4\n");
  const auto a = cli({"simulate", "--config", dir.file("small.cfg"), "--out-dir", dir.file("a")});
  REQUIRE(a.code == 0);
  const auto curve = io::read_file(dir.file("a/curve.csv"));
  const auto grid = io::read_file(dir.file("a/grid.csv"));
  CHECK(curve.rfind("measure,iteration,n_labeled,accuracy\n", 0) == 0);
  CHECK(grid.rfind("x,y,score,balent_sign\n", 0) == 0);
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 1 + 12 * 10);
  CHECK(std::filesystem::exists(dir.file("a/model.bin")));
  CHECK(io::read_file(dir.file("a/config.txt")).find("seed = 4") != std::string::npos);

  REQUIRE(cli({"simulate", "--config", dir.file("small.cfg"), "--out-dir", dir.file("b")}).code == 0);
  CHECK(io::read_file(dir.file("b/curve.csv")) == curve);
  CHECK(io::read_file(dir.file("b/grid.csv")) == grid);

  write_text(dir.file("typo.cfg"), "iteratoins = 3\n");
  CHECK(cli({"simulate", "--config", dir.file("typo.cfg"), "--out-dir", dir.file("c")}).code == tools::kExitUsage);
}

TEST_SUITE_END();
