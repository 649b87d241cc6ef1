#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("latnet_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the tool with the given arguments, console output discarded.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(LATNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

const char* kSmallSimCfg =
    "case = I\n"
    "blocks = 150, 150\n"
    "prob_diag = 0.10, 0.12\n"
    "prob_offdiag = 0.01\n"
    "delta = 0.5\n"
    "seed = 777\n";

}  // namespace

TEST_CASE("version and usage errors") {
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("") == 1);                    // a subcommand is required
  CHECK(run_cli("frobnicate") == 1);          // unknown subcommand
  CHECK(run_cli("test --no-such-flag") == 1); // unknown option
  CHECK(run_cli("test") == 1);                // missing required options
}

TEST_CASE("missing inputs exit with the input error code") {
  TempDir tmp;
  CHECK(run_cli("test --nodes " + tmp.file("absent.csv") + " --edges " + tmp.file("absent2.csv") +
                " --report " + tmp.file("r.json")) == 1);
  write_file(tmp.file("bad.cfg"), "kind = nonsense\ndeltas = 0\n");
  CHECK(run_cli("study --config " + tmp.file("bad.cfg") + " --report " + tmp.file("r.json") +
                " --rows " + tmp.file("rows.csv")) == 1);
  write_file(tmp.file("typo.cfg"), "kindd = size_power\ndeltas = 0\n");
  CHECK(run_cli("study --config " + tmp.file("typo.cfg") + " --report " + tmp.file("r.json") +
                " --rows " + tmp.file("rows.csv")) == 1);
}

TEST_CASE("numerical failures exit with their own code") {
  TempDir tmp;
  // Three nodes, no edges, outcomes perfectly separated by x1.
  write_file(tmp.file("nodes.csv"), "id,y,x1,x2\na,1,0.5,1\nb,0,0.25,2\nc,1,0.75,3\n");
  write_file(tmp.file("edges.csv"), "# no edges\n");
  CHECK(run_cli("test --nodes " + tmp.file("nodes.csv") + " --edges " + tmp.file("edges.csv") +
                " --report " + tmp.file("r.json") + " --B 50") == 2);
}

TEST_CASE("simulate, test, fit, predict, roc chain") {
  TempDir tmp;
  write_file(tmp.file("sim.cfg"), kSmallSimCfg);
  const std::string nodes = tmp.file("nodes.csv");
  const std::string edges = tmp.file("edges.csv");

  REQUIRE(run_cli("simulate --config " + tmp.file("sim.cfg") + " --nodes " + nodes + " --edges " +
                  edges + " --report " + tmp.file("sim.json")) == 0);
  const json sim = read_json(tmp.file("sim.json"));
  CHECK(sim["manifest"]["command"] == "simulate");
  CHECK(sim["dataset"]["n"] == 300);
  CHECK(sim["delta"] == 0.5);

  REQUIRE(run_cli("test --nodes " + nodes + " --edges " + edges + " --report " +
                  tmp.file("test.json") + " --B 99 --seed 42") == 0);
  const json t = read_json(tmp.file("test.json"));
  CHECK(t["B"] == 99);
  CHECK(t["alpha"] == 0.05);
  CHECK(t["t_n"].is_number());
  CHECK(t["p_value"].get<double>() >= 0.01);
  CHECK(t["p_value"].get<double>() <= 1.0);
  CHECK(t["grid"]["points"] == 125);
  CHECK(t["reject"].is_boolean());

  REQUIRE(run_cli("fit --nodes " + nodes + " --edges " + edges + " --report " +
                  tmp.file("fit.json") + " --weights " + tmp.file("w.csv") +
                  " --max-iter 40") == 0);
  const json f = read_json(tmp.file("fit.json"));
  CHECK(f["iterations"].get<int>() >= 1);
  CHECK(f["iterations"].get<int>() <= 40);
  CHECK(f["params"]["beta"].size() == 2);
  CHECK(f["marginal_loglik"]["final"].get<double>() >=
        f["marginal_loglik"]["initial"].get<double>() - 1e-8);
  const std::string wcsv = read_file(tmp.file("w.csv"));
  CHECK(wcsv.rfind("id,weight\n", 0) == 0);

  REQUIRE(run_cli("predict --fit " + tmp.file("fit.json") + " --nodes " + nodes + " --edges " +
                  edges + " --output " + tmp.file("scores.csv") + " --report " +
                  tmp.file("pred.json")) == 0);
  const std::string scores = read_file(tmp.file("scores.csv"));
  CHECK(scores.rfind("id,score\n", 0) == 0);

  REQUIRE(run_cli("roc --scores " + tmp.file("scores.csv") + " --nodes " + nodes + " --edges " +
                  edges + " --report " + tmp.file("roc.json") + " --points " +
                  tmp.file("pts.csv")) == 0);
  const json r = read_json(tmp.file("roc.json"));
  CHECK(r["auc"].get<double>() > 0.0);
  CHECK(r["auc"].get<double>() < 1.0);
  CHECK(r["n_pos"].get<int>() + r["n_neg"].get<int>() == 300);
  const auto& pts = r["points"];
  REQUIRE(pts.size() >= 2u);
  CHECK(pts.front()[0] == 0.0);
  CHECK(pts.front()[1] == 0.0);
  CHECK(pts.back()[0] == 1.0);
  CHECK(pts.back()[1] == 1.0);
  const std::string pcsv = read_file(tmp.file("pts.csv"));
  CHECK(pcsv.rfind("fpr,tpr\n", 0) == 0);

  // sampled mode is seeded and deterministic
  REQUIRE(run_cli("predict --fit " + tmp.file("fit.json") + " --nodes " + nodes + " --edges " +
                  edges + " --output " + tmp.file("s1.csv") + " --report " + tmp.file("p1.json") +
                  " --mode sampled --seed 5") == 0);
  REQUIRE(run_cli("predict --fit " + tmp.file("fit.json") + " --nodes " + nodes + " --edges " +
                  edges + " --output " + tmp.file("s2.csv") + " --report " + tmp.file("p2.json") +
                  " --mode sampled --seed 5") == 0);
  CHECK(read_file(tmp.file("s1.csv")) == read_file(tmp.file("s2.csv")));
}

TEST_CASE("fit on an edgeless dataset reports an unidentified prior") {
  TempDir tmp;
  write_file(tmp.file("sim.cfg"),
             "case = I\n"
             "blocks = 40, 40\n"
             "prob_diag = 0, 0\n"
             "prob_offdiag = 0\n"
             "delta = 0\n"
             "seed = 99\n");
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.cfg") + " --nodes " + tmp.file("n.csv") +
                  " --edges " + tmp.file("e.csv") + " --report " + tmp.file("s.json")) == 0);
  REQUIRE(run_cli("fit --nodes " + tmp.file("n.csv") + " --edges " + tmp.file("e.csv") +
                  " --report " + tmp.file("f.json") + " --weights " + tmp.file("w.csv")) == 0);
  const json f = read_json(tmp.file("f.json"));
  CHECK(f["phi_identified"] == false);
  CHECK(std::fabs(f["params"]["delta"].get<double>()) < 1e-8);
}

TEST_CASE("study subcommand writes cells and per replicate rows") {
  TempDir tmp;
  write_file(tmp.file("study.cfg"),
             "kind = size_power\n"
             "case = I\n"
             "blocks = 100, 100\n"
             "prob_diag = 0.10, 0.12\n"
             "prob_offdiag = 0.01\n"
             "deltas = 0, 0.5\n"
             "replicates = 6\n"
             "B = 60\n"
             "seed = 2024\n");
  REQUIRE(run_cli("study --config " + tmp.file("study.cfg") + " --report " + tmp.file("r.json") +
                  " --rows " + tmp.file("rows.csv") + " --threads 2") == 0);
  const json rep = read_json(tmp.file("r.json"));
  CHECK(rep["kind"] == "size_power");
  REQUIRE(rep["cells"].size() == 2u);
  CHECK(rep["cells"][0]["delta"] == 0.0);
  CHECK(rep["cells"][0]["used"].get<int>() + rep["cells"][0]["excluded"].get<int>() == 6);
  const std::string rows = read_file(tmp.file("rows.csv"));
  CHECK(rows.rfind("delta,replicate,excluded,t_n,c_alpha,p_value,reject\n", 0) == 0);
  // header plus 12 replicate lines
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 13);

  write_file(tmp.file("bm.cfg"),
             "kind = bias_mse\n"
             "estimator = logistic\n"
             "case = II\n"
             "blocks = 100, 100\n"
             "prob_diag = 0.10, 0.12\n"
             "prob_offdiag = 0.01\n"
             "deltas = 0.3\n"
             "replicates = 4\n"
             "seed = 2025\n");
  REQUIRE(run_cli("study --config " + tmp.file("bm.cfg") + " --report " + tmp.file("bm.json") +
                  " --rows " + tmp.file("bm_rows.csv")) == 0);
  const json bm = read_json(tmp.file("bm.json"));
  CHECK(bm["param_names"] == json({"beta0", "beta1", "beta2"}));
  REQUIRE(bm["cells"].size() == 1u);
  CHECK(bm["cells"][0]["params"][0]["name"] == "beta0");
  const std::string bmr = read_file(tmp.file("bm_rows.csv"));
  CHECK(bmr.rfind("delta,replicate,excluded,converged,iterations,est_beta0,est_beta1,est_beta2\n",
                  0) == 0);
}

TEST_CASE("pca subcommand reduces a feature table") {
  TempDir tmp;
  // f2 is exactly twice f1, so the centered data has rank 2
  write_file(tmp.file("f.csv"),
             "id,f1,f2,f3\na,1,2,0.5\nb,2,4,0.4\nc,3,6,0.6\nd,4,8,0.3\ne,5,10,0.7\n");
  REQUIRE(run_cli("pca --features " + tmp.file("f.csv") + " --k 2 --output " + tmp.file("pc.csv") +
                  " --report " + tmp.file("pca.json")) == 0);
  const std::string pc = read_file(tmp.file("pc.csv"));
  CHECK(pc.rfind("id,pc1,pc2\n", 0) == 0);
  CHECK(std::count(pc.begin(), pc.end(), '\n') == 6);
  const json rep = read_json(tmp.file("pca.json"));
  CHECK(rep["n"] == 5);
  CHECK(rep["d"] == 3);
  CHECK(rep["k"] == 2);
  // k above the numerical rank is an input error
  CHECK(run_cli("pca --features " + tmp.file("f.csv") + " --k 3 --output " + tmp.file("pc3.csv") +
                " --report " + tmp.file("pca3.json")) == 1);
}

TEST_CASE("reports are byte identical across reruns and thread counts") {
  TempDir tmp;
  write_file(tmp.file("sim.cfg"), kSmallSimCfg);
  const std::string nodes = tmp.file("nodes.csv");
  const std::string edges = tmp.file("edges.csv");
  REQUIRE(run_cli("simulate --config " + tmp.file("sim.cfg") + " --nodes " + nodes + " --edges " +
                  edges + " --report " + tmp.file("sim.json")) == 0);

  const std::string test_args = "test --nodes " + nodes + " --edges " + edges + " --report " +
                                tmp.file("t.json") + " --B 150 --seed 9";
  REQUIRE(run_cli(test_args + " --threads 1") == 0);
  const std::string first = read_file(tmp.file("t.json"));
  REQUIRE(run_cli(test_args + " --threads 3") == 0);
  CHECK(read_file(tmp.file("t.json")) == first);
  REQUIRE(run_cli(test_args + " --threads 3") == 0);
  CHECK(read_file(tmp.file("t.json")) == first);

  write_file(tmp.file("study.cfg"),
             "kind = size_power\n"
             "case = I\n"
             "blocks = 90, 90\n"
             "prob_diag = 0.10, 0.12\n"
             "prob_offdiag = 0.01\n"
             "deltas = 0\n"
             "replicates = 5\n"
             "B = 50\n"
             "seed = 321\n");
  const std::string study_args = "study --config " + tmp.file("study.cfg") + " --report " +
                                 tmp.file("s.json") + " --rows " + tmp.file("rows.csv");
  REQUIRE(run_cli(study_args + " --threads 1") == 0);
  const std::string srep = read_file(tmp.file("s.json"));
  const std::string srows = read_file(tmp.file("rows.csv"));
  REQUIRE(run_cli(study_args + " --threads 4") == 0);
  CHECK(read_file(tmp.file("s.json")) == srep);
  CHECK(read_file(tmp.file("rows.csv")) == srows);
}

TEST_CASE("p values on null data stay mostly above the level across seeds") {
  TempDir tmp;
  int above = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    write_file(tmp.file("sim.cfg"), "case = I\n"
                                    "blocks = 150, 150\n"
                                    "prob_diag = 0.10, 0.12\n"
                                    "prob_offdiag = 0.01\n"
                                    "delta = 0\n"
                                    "seed = " +
                                        std::to_string(4000 + s) + "\n");
    REQUIRE(run_cli("simulate --config " + tmp.file("sim.cfg") + " --nodes " + tmp.file("n.csv") +
                    " --edges " + tmp.file("e.csv") + " --report " + tmp.file("s.json")) == 0);
    REQUIRE(run_cli("test --nodes " + tmp.file("n.csv") + " --edges " + tmp.file("e.csv") +
                    " --report " + tmp.file("t.json") + " --B 99 --seed " +
                    std::to_string(8800 + s)) == 0);
    const json t = read_json(tmp.file("t.json"));
    if (t["p_value"].get<double>() > 0.05) ++above;
  }
  CHECK(above >= 18);  // the run is fully seeded, so this count is fixed
}
