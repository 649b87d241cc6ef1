// Command-line front end: simulate, test, fit, predict, study, roc, pca.
// Every command writes a JSON report that embeds its run manifest (inputs,
// config, seed, outputs, tool version) so a result is reproducible from its
// own header. Wall-clock timing goes to the console only, never into report
// files, so reports are byte-identical across reruns and thread counts.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "latnet/em.hpp"
#include "latnet/errors.hpp"
#include "latnet/evaluation.hpp"
#include "latnet/graph.hpp"
#include "latnet/io.hpp"
#include "latnet/model.hpp"
#include "latnet/pca.hpp"
#include "latnet/rng.hpp"
#include "latnet/score_test.hpp"
#include "latnet/sim_study.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace latnet;

namespace {

constexpr const char* kToolVersion = "0.1.0";

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void require_input(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw input_error(what + " not found: " + path);
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw input_error("write failed: " + path);
}

void write_report(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

using PathList = std::vector<std::pair<std::string, std::string>>;

json make_manifest(const std::string& command, const PathList& inputs,
                   const std::string& config_path, const json& seed, const PathList& outputs) {
  json m;
  m["command"] = command;
  m["version"] = kToolVersion;
  json in = json::object();
  for (const auto& [name, path] : inputs) in[name] = path;
  m["inputs"] = in;
  m["config"] = config_path.empty() ? json(nullptr) : json(config_path);
  m["seed"] = seed;
  json out = json::object();
  for (const auto& [name, path] : outputs) out[name] = path;
  m["outputs"] = out;
  return m;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& field, const std::string& path, int line_no) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw input_error(path + ":" + std::to_string(line_no) + ": expected a number, got '" +
                      field + "'");
  }
  return v;
}

std::vector<double> parse_level_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& f : split_fields(text)) {
    if (f.empty()) throw input_error("grid levels: empty entry in '" + text + "'");
    out.push_back(parse_number(f, "grid levels", 1));
  }
  return out;
}

// `id,score` table, one row per node, as written by the predict command.
void load_scores(const std::string& path, std::vector<std::string>& ids,
                 std::vector<double>& scores) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open scores file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ": empty file");
  const auto header = split_fields(line);
  if (header.size() != 2 || header[0] != "id" || header[1] != "score") {
    throw input_error(path + ":1: header must be id,score");
  }
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 2) {
      throw input_error(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    if (f[0].empty()) throw input_error(path + ":" + std::to_string(line_no) + ": empty id");
    if (!seen.insert(f[0]).second) {
      throw input_error(path + ":" + std::to_string(line_no) + ": duplicate id '" + f[0] + "'");
    }
    ids.push_back(f[0]);
    scores.push_back(parse_number(f[1], path, line_no));
  }
  if (ids.empty()) throw input_error(path + ": no data rows");
}

// `id,<name>,...` numeric table for the pca command; column names after the
// id column are free-form.
Matrix load_feature_table(const std::string& path, std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open feature file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ": empty file");
  const auto header = split_fields(line);
  if (header.size() < 2 || header[0] != "id") {
    throw input_error(path + ":1: header must be id followed by feature columns");
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != header.size()) {
      throw input_error(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields");
    }
    if (f[0].empty()) throw input_error(path + ":" + std::to_string(line_no) + ": empty id");
    if (!seen.insert(f[0]).second) {
      throw input_error(path + ":" + std::to_string(line_no) + ": duplicate id '" + f[0] + "'");
    }
    ids.push_back(f[0]);
    for (std::size_t j = 1; j < f.size(); ++j) values.push_back(parse_number(f[j], path, line_no));
  }
  if (ids.empty()) throw input_error(path + ": no data rows");
  Matrix M(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) M(i, j) = values[i * d + j];
  }
  return M;
}

// Zero mean, unit sample variance per covariate column.
void standardize_columns(Matrix& X) {
  const std::size_t n = X.rows();
  if (n < 2) throw input_error("standardize: needs at least two rows");
  for (std::size_t j = 0; j < X.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += X(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = X(i, j) - mean;
      ss += dev * dev;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw input_error("standardize: covariate x" + std::to_string(j + 1) + " is constant");
    }
    for (std::size_t i = 0; i < n; ++i) X(i, j) = (X(i, j) - mean) / sd;
  }
}

json params_to_json(const FullParams& th) {
  json j;
  j["delta"] = th.delta;
  j["beta0"] = th.beta0;
  j["beta"] = th.beta;
  j["gamma0"] = th.gamma0;
  j["gamma"] = th.gamma;
  return j;
}

FullParams params_from_json(const json& j, const std::string& origin) {
  try {
    FullParams th;
    th.delta = j.at("delta").get<double>();
    th.beta0 = j.at("beta0").get<double>();
    th.beta = j.at("beta").get<std::vector<double>>();
    th.gamma0 = j.at("gamma0").get<double>();
    th.gamma = j.at("gamma").get<std::vector<double>>();
    th.validate();
    return th;
  } catch (const json::exception& e) {
    throw input_error(origin + ": malformed parameter block: " + e.what());
  }
}

json dataset_summary(const Dataset& d) {
  json j;
  j["n"] = d.n();
  j["p"] = d.p();
  j["edges"] = d.graph.edge_count();
  return j;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

// ---- config parsing shared by simulate and study ----

const std::vector<std::string> kSimKeys = {
    "case",   "blocks", "prob_diag", "prob_offdiag",   "beta0", "beta",
    "gamma0", "gamma",  "seed",      "x2_scale_is_sd",
};

SimConfig sim_config_from(const KvConfig& kv) {
  SimConfig cfg = default_sim_config();

  const std::string cas = kv.get_string("case", "I");
  if (cas == "I") {
    cfg.cov_case = CovCase::kI;
  } else if (cas == "II") {
    cfg.cov_case = CovCase::kII;
  } else {
    throw input_error("config: case must be I or II, got '" + cas + "'");
  }

  std::vector<double> def_diag;
  for (std::size_t k = 0; k < cfg.sbm.block_sizes.size(); ++k) {
    def_diag.push_back(cfg.sbm.connect_prob(k, k));
  }
  const double def_off = cfg.sbm.block_sizes.size() > 1 ? cfg.sbm.connect_prob(0, 1) : 0.0;
  const std::vector<int> blocks = kv.get_int_list("blocks", cfg.sbm.block_sizes);
  const std::vector<double> diag = kv.get_double_list("prob_diag", def_diag);
  const double off = kv.get_double("prob_offdiag", def_off);
  if (diag.size() != blocks.size()) {
    throw input_error("config: prob_diag must have one entry per block");
  }
  const std::size_t K = blocks.size();
  Matrix P(K, K, off);
  for (std::size_t k = 0; k < K; ++k) P(k, k) = diag[k];
  cfg.sbm.block_sizes = blocks;
  cfg.sbm.connect_prob = P;
  cfg.sbm.validate();

  cfg.truth.beta0 = kv.get_double("beta0", cfg.truth.beta0);
  cfg.truth.beta = kv.get_double_list("beta", cfg.truth.beta);
  cfg.truth.gamma0 = kv.get_double("gamma0", cfg.truth.gamma0);
  cfg.truth.gamma = kv.get_double_list("gamma", cfg.truth.gamma);
  if (cfg.truth.beta.size() != 2 || cfg.truth.gamma.size() != 2) {
    throw input_error("config: beta and gamma must have exactly two entries; the built-in "
                      "covariate cases generate two covariates");
  }
  cfg.x2_scale_is_sd = kv.get_bool("x2_scale_is_sd", cfg.x2_scale_is_sd);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  return cfg;
}

json sim_config_json(const SimConfig& cfg) {
  json j;
  j["case"] = cfg.cov_case == CovCase::kI ? "I" : "II";
  j["blocks"] = cfg.sbm.block_sizes;
  json diag = json::array();
  for (std::size_t k = 0; k < cfg.sbm.block_sizes.size(); ++k) {
    diag.push_back(cfg.sbm.connect_prob(k, k));
  }
  j["prob_diag"] = diag;
  j["prob_offdiag"] =
      cfg.sbm.block_sizes.size() > 1 ? cfg.sbm.connect_prob(0, 1) : 0.0;
  j["beta0"] = cfg.truth.beta0;
  j["beta"] = cfg.truth.beta;
  j["gamma0"] = cfg.truth.gamma0;
  j["gamma"] = cfg.truth.gamma;
  j["x2_scale_is_sd"] = cfg.x2_scale_is_sd;
  j["seed"] = cfg.seed;
  return j;
}

// ---- subcommand bodies ----

struct SimulateArgs {
  std::string config, nodes_out, edges_out, report_out;
  int replicate = 0;
};

void cmd_simulate(const SimulateArgs& a) {
  Stopwatch timer;
  require_input(a.config, "config file");
  const KvConfig kv = KvConfig::parse_file(a.config);
  std::vector<std::string> allowed = kSimKeys;
  allowed.push_back("delta");
  kv.restrict_keys(allowed);
  const SimConfig cfg = sim_config_from(kv);
  const double delta = kv.get_double("delta", 0.0);
  if (a.replicate < 0) throw input_error("simulate: replicate index must be nonnegative");

  // Stream r+1 matches replicate r of a fresh-graph study with this seed.
  Rng rng(cfg.seed, static_cast<std::uint64_t>(a.replicate) + 1);
  const Dataset d = generate_case(cfg, delta, rng);
  ensure_parent(a.nodes_out);
  ensure_parent(a.edges_out);
  save_dataset(d, a.nodes_out, a.edges_out);

  json rep;
  rep["manifest"] = make_manifest("simulate", {}, a.config, cfg.seed,
                                  {{"nodes", a.nodes_out},
                                   {"edges", a.edges_out},
                                   {"report", a.report_out}});
  rep["config"] = sim_config_json(cfg);
  rep["delta"] = delta;
  rep["replicate"] = a.replicate;
  rep["dataset"] = dataset_summary(d);
  write_report(a.report_out, rep);
  std::printf("simulate: n=%d p=%d edges=%lld -> %s (%.2fs)\n", d.n(), d.p(),
              static_cast<long long>(d.graph.edge_count()), a.nodes_out.c_str(), timer.seconds());
}

struct TestArgs {
  std::string nodes, edges, report_out;
  std::string grid_levels = "-2,-1,0,1,2";
  int grid_random = 0;
  double grid_lo = -2.0, grid_hi = 2.0;
  int B = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 12345;
  bool standardize = false;
  int threads = 1;
};

void cmd_test(const TestArgs& a) {
  Stopwatch timer;
  require_input(a.nodes, "node file");
  require_input(a.edges, "edge file");
  Dataset d = load_dataset(a.nodes, a.edges);
  if (a.standardize) standardize_columns(d.X);

  PhiGrid grid;
  if (a.grid_random > 0) {
    grid = uniform_box_grid(d.p(), a.grid_random, a.grid_lo, a.grid_hi, a.seed);
  } else {
    grid = default_grid(d.p(), parse_level_list(a.grid_levels));
  }
  const TestResult res = run_test(d, grid, a.B, a.alpha, a.seed, a.threads);

  json rep;
  rep["manifest"] = make_manifest("test", {{"nodes", a.nodes}, {"edges", a.edges}}, "", a.seed,
                                  {{"report", a.report_out}});
  rep["dataset"] = dataset_summary(d);
  rep["standardize"] = a.standardize;
  json grid_info;
  grid_info["description"] = grid.description;
  grid_info["points"] = grid.points.size();
  grid_info["skipped_points"] = res.skipped_points;
  rep["grid"] = grid_info;
  rep["B"] = a.B;
  rep["alpha"] = a.alpha;
  rep["seed"] = a.seed;
  rep["t_n"] = res.t_n;
  rep["c_alpha"] = res.c_alpha;
  rep["p_value"] = res.p_value;
  rep["reject"] = res.reject;
  write_report(a.report_out, rep);
  std::printf("test: t_n=%.6g c_alpha=%.6g p=%.6g reject=%s (%.2fs)\n", res.t_n, res.c_alpha,
              res.p_value, res.reject ? "yes" : "no", timer.seconds());
}

struct FitArgs {
  std::string nodes, edges, report_out, weights_out;
  double tol = 1e-6;
  int max_iter = 500;
};

void cmd_fit(const FitArgs& a) {
  Stopwatch timer;
  require_input(a.nodes, "node file");
  require_input(a.edges, "edge file");
  const Dataset d = load_dataset(a.nodes, a.edges);
  EmConfig cfg;
  cfg.tol = a.tol;
  cfg.max_iter = a.max_iter;
  const FitResult fit = fit_em(d, cfg);

  std::string wcsv = "id,weight\n";
  for (int i = 0; i < d.n(); ++i) {
    wcsv += d.ids[i] + "," + format_double(fit.weights[i]) + "\n";
  }
  write_text_file(a.weights_out, wcsv);

  json rep;
  rep["manifest"] = make_manifest("fit", {{"nodes", a.nodes}, {"edges", a.edges}}, "", json(),
                                  {{"report", a.report_out}, {"weights", a.weights_out}});
  rep["dataset"] = dataset_summary(d);
  rep["tol"] = cfg.tol;
  rep["max_iter"] = cfg.max_iter;
  rep["converged"] = fit.converged;
  rep["iterations"] = fit.iterations;
  rep["phi_identified"] = fit.phi_identified;
  rep["saturated"] = fit.saturated;
  rep["params"] = params_to_json(fit.params);
  rep["init"] = params_to_json(fit.init);
  json ll;
  ll["initial"] = fit.marginal_loglik_trace.front();
  ll["final"] = fit.marginal_loglik_trace.back();
  ll["trace"] = fit.marginal_loglik_trace;
  rep["marginal_loglik"] = ll;
  write_report(a.report_out, rep);
  std::printf("fit: converged=%s iterations=%d delta=%.6g phi_identified=%s (%.2fs)\n",
              fit.converged ? "yes" : "no", fit.iterations, fit.params.delta,
              fit.phi_identified ? "yes" : "no", timer.seconds());
}

struct PredictArgs {
  std::string fit_report, nodes, edges, scores_out, report_out;
  std::string mode = "marginal";
  std::uint64_t seed = 0;
};

void cmd_predict(const PredictArgs& a) {
  Stopwatch timer;
  require_input(a.fit_report, "fit report");
  require_input(a.nodes, "node file");
  require_input(a.edges, "edge file");
  const Dataset d = load_dataset(a.nodes, a.edges);

  json fit_json;
  {
    std::ifstream in(a.fit_report);
    if (!in) throw input_error("cannot open fit report: " + a.fit_report);
    try {
      fit_json = json::parse(in);
    } catch (const json::exception& e) {
      throw input_error(a.fit_report + ": invalid report: " + e.what());
    }
  }
  if (!fit_json.contains("params")) {
    throw input_error(a.fit_report + ": report has no params block");
  }
  FitResult fit;
  fit.params = params_from_json(fit_json["params"], a.fit_report);
  fit.converged = fit_json.value("converged", true);
  // Posterior weights are a function of the parameters and the data, so they
  // are recomputed here; on the training data this reproduces the fit's own
  // weights exactly.
  fit.weights = e_step(fit.params, d);

  const PredictMode mode =
      a.mode == "sampled" ? PredictMode::kSampled : PredictMode::kMarginal;
  const std::vector<double> scores = predict_proba(fit, d, mode, a.seed);

  std::string csv = "id,score\n";
  for (int i = 0; i < d.n(); ++i) csv += d.ids[i] + "," + format_double(scores[i]) + "\n";
  write_text_file(a.scores_out, csv);

  json rep;
  rep["manifest"] = make_manifest(
      "predict", {{"fit", a.fit_report}, {"nodes", a.nodes}, {"edges", a.edges}}, "",
      mode == PredictMode::kSampled ? json(a.seed) : json(),
      {{"scores", a.scores_out}, {"report", a.report_out}});
  rep["dataset"] = dataset_summary(d);
  rep["mode"] = a.mode;
  rep["params"] = params_to_json(fit.params);
  write_report(a.report_out, rep);
  std::printf("predict: %d scores (%s mode) -> %s (%.2fs)\n", d.n(), a.mode.c_str(),
              a.scores_out.c_str(), timer.seconds());
}

struct StudyArgs {
  std::string config, report_out, rows_out;
  int threads = 1;
};

void cmd_study(const StudyArgs& a) {
  Stopwatch timer;
  require_input(a.config, "config file");
  const KvConfig kv = KvConfig::parse_file(a.config);
  std::vector<std::string> allowed = kSimKeys;
  for (const char* k : {"kind", "estimator", "deltas", "replicates", "fixed_graph", "B", "alpha",
                        "grid_levels", "em_tol", "em_max_iter", "em_inner_newton"}) {
    allowed.push_back(k);
  }
  kv.restrict_keys(allowed);

  SimConfig cfg = sim_config_from(kv);
  cfg.replicates = kv.get_int("replicates", cfg.replicates);
  cfg.fixed_graph = kv.get_bool("fixed_graph", cfg.fixed_graph);
  cfg.test_B = kv.get_int("B", cfg.test_B);
  cfg.alpha = kv.get_double("alpha", cfg.alpha);
  cfg.grid_levels = kv.get_double_list("grid_levels", cfg.grid_levels);
  cfg.em.tol = kv.get_double("em_tol", cfg.em.tol);
  cfg.em.max_iter = kv.get_int("em_max_iter", cfg.em.max_iter);
  cfg.em.inner_newton_iter = kv.get_int("em_inner_newton", cfg.em.inner_newton_iter);
  cfg.threads = a.threads;
  if (!kv.has("deltas")) throw input_error("config: study needs a deltas list");
  const std::vector<double> deltas = kv.get_double_list("deltas", {});
  const std::string kind = kv.get_string("kind", "");
  if (kind != "size_power" && kind != "bias_mse") {
    throw input_error("config: kind must be size_power or bias_mse, got '" + kind + "'");
  }

  json rep;
  rep["manifest"] = make_manifest("study", {}, a.config, cfg.seed,
                                  {{"report", a.report_out}, {"rows", a.rows_out}});
  rep["kind"] = kind;
  json cj = sim_config_json(cfg);
  cj["replicates"] = cfg.replicates;
  cj["fixed_graph"] = cfg.fixed_graph;
  cj["deltas"] = deltas;

  if (kind == "size_power") {
    cj["B"] = cfg.test_B;
    cj["alpha"] = cfg.alpha;
    cj["grid_levels"] = cfg.grid_levels;
    rep["config"] = cj;
    const SizePowerReport sp = size_power_study(cfg, deltas);
    json cells = json::array();
    for (const auto& c : sp.cells) {
      json cc;
      cc["delta"] = c.delta;
      cc["used"] = c.used;
      cc["excluded"] = c.excluded;
      cc["rejections"] = c.rejections;
      cc["rejection_rate"] = c.rejection_rate;
      cells.push_back(cc);
    }
    rep["cells"] = cells;

    std::string csv = "delta,replicate,excluded,t_n,c_alpha,p_value,reject\n";
    for (const auto& r : sp.rows) {
      std::vector<std::string> f = {format_double(r.delta), std::to_string(r.replicate),
                                    r.excluded ? "1" : "0"};
      if (r.excluded) {
        f.insert(f.end(), {"", "", "", ""});
      } else {
        f.push_back(format_double(r.t_n));
        f.push_back(format_double(r.c_alpha));
        f.push_back(format_double(r.p_value));
        f.push_back(r.reject ? "1" : "0");
      }
      csv += join_csv(f) + "\n";
    }
    write_text_file(a.rows_out, csv);
    write_report(a.report_out, rep);
    for (const auto& c : sp.cells) {
      std::printf("study: delta=%g rejection_rate=%.4f (%d of %d rejected, %d excluded)\n",
                  c.delta, c.rejection_rate, c.rejections, c.used, c.excluded);
    }
  } else {
    const std::string est_name = kv.get_string("estimator", "em");
    if (est_name != "em" && est_name != "logistic") {
      throw input_error("config: estimator must be em or logistic, got '" + est_name + "'");
    }
    const Estimator est = est_name == "em" ? Estimator::kEm : Estimator::kLogistic;
    cj["estimator"] = est_name;
    cj["em_tol"] = cfg.em.tol;
    cj["em_max_iter"] = cfg.em.max_iter;
    cj["em_inner_newton"] = cfg.em.inner_newton_iter;
    rep["config"] = cj;
    const BiasMseReport bm = bias_mse_study(cfg, deltas, est);
    rep["param_names"] = bm.param_names;
    json cells = json::array();
    for (const auto& c : bm.cells) {
      json cc;
      cc["delta"] = c.delta;
      cc["used"] = c.used;
      cc["excluded"] = c.excluded;
      cc["converged"] = c.converged;
      json ps = json::array();
      for (const auto& p : c.params) {
        json pj;
        pj["name"] = p.name;
        pj["truth"] = p.truth;
        pj["bias"] = p.bias;
        pj["mse"] = p.mse;
        ps.push_back(pj);
      }
      cc["params"] = ps;
      cells.push_back(cc);
    }
    rep["cells"] = cells;

    std::string csv = "delta,replicate,excluded,converged,iterations";
    for (const std::string& name : bm.param_names) csv += ",est_" + name;
    csv += "\n";
    for (const auto& r : bm.rows) {
      std::vector<std::string> f = {format_double(r.delta), std::to_string(r.replicate),
                                    r.excluded ? "1" : "0", r.converged ? "1" : "0",
                                    std::to_string(r.iterations)};
      for (std::size_t k = 0; k < bm.param_names.size(); ++k) {
        f.push_back(k < r.estimates.size() ? format_double(r.estimates[k]) : "");
      }
      csv += join_csv(f) + "\n";
    }
    write_text_file(a.rows_out, csv);
    write_report(a.report_out, rep);
    for (const auto& c : bm.cells) {
      std::printf("study: delta=%g used=%d excluded=%d converged=%d\n", c.delta, c.used,
                  c.excluded, c.converged);
    }
  }
  std::printf("study: reports -> %s, %s (%.2fs)\n", a.report_out.c_str(), a.rows_out.c_str(),
              timer.seconds());
}

struct RocArgs {
  std::string scores, nodes, edges, report_out, points_out;
};

void cmd_roc(const RocArgs& a) {
  Stopwatch timer;
  require_input(a.scores, "scores file");
  require_input(a.nodes, "node file");
  require_input(a.edges, "edge file");
  const Dataset d = load_dataset(a.nodes, a.edges);

  std::vector<std::string> ids;
  std::vector<double> scores;
  load_scores(a.scores, ids, scores);

  std::map<std::string, int> index;
  for (int i = 0; i < d.n(); ++i) index[d.ids[i]] = i;
  std::vector<std::int8_t> labels(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto it = index.find(ids[k]);
    if (it == index.end()) {
      throw input_error(a.scores + ": unknown node label '" + ids[k] + "'");
    }
    labels[k] = d.y[it->second];
  }
  const RocCurve roc = roc_curve(scores, labels);

  json rep;
  rep["manifest"] = make_manifest(
      "roc", {{"scores", a.scores}, {"nodes", a.nodes}, {"edges", a.edges}}, "", json(),
      a.points_out.empty()
          ? PathList{{"report", a.report_out}}
          : PathList{{"report", a.report_out}, {"points", a.points_out}});
  rep["n"] = ids.size();
  rep["n_pos"] = roc.n_pos;
  rep["n_neg"] = roc.n_neg;
  rep["auc"] = roc.auc;
  json pts = json::array();
  for (const auto& [fpr, tpr] : roc.points) pts.push_back(json::array({fpr, tpr}));
  rep["points"] = pts;
  write_report(a.report_out, rep);

  if (!a.points_out.empty()) {
    std::string csv = "fpr,tpr\n";
    for (const auto& [fpr, tpr] : roc.points) {
      csv += format_double(fpr) + "," + format_double(tpr) + "\n";
    }
    write_text_file(a.points_out, csv);
  }
  std::printf("roc: auc=%.6g over %zu scores (%d pos, %d neg) (%.2fs)\n", roc.auc, ids.size(),
              roc.n_pos, roc.n_neg, timer.seconds());
}

struct PcaArgs {
  std::string features, scores_out, report_out;
  int k = 2;
};

void cmd_pca(const PcaArgs& a) {
  Stopwatch timer;
  require_input(a.features, "feature file");
  std::vector<std::string> ids;
  const Matrix M = load_feature_table(a.features, ids);
  const Matrix S = pca_reduce(M, a.k);

  std::string csv = "id";
  for (int j = 0; j < a.k; ++j) csv += ",pc" + std::to_string(j + 1);
  csv += "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    csv += ids[i];
    for (std::size_t j = 0; j < S.cols(); ++j) csv += "," + format_double(S(i, j));
    csv += "\n";
  }
  write_text_file(a.scores_out, csv);

  json rep;
  rep["manifest"] = make_manifest("pca", {{"features", a.features}}, "", json(),
                                  {{"scores", a.scores_out}, {"report", a.report_out}});
  rep["n"] = M.rows();
  rep["d"] = M.cols();
  rep["k"] = a.k;
  write_report(a.report_out, rep);
  std::printf("pca: %zu x %zu -> %d components, %s (%.2fs)\n", M.rows(), M.cols(), a.k,
              a.scores_out.c_str(), timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-effect logistic regression on graph data"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic dataset from a config file");
  c_sim->add_option("--config", sim.config, "key = value config file")->required();
  c_sim->add_option("--nodes", sim.nodes_out, "output node table (id,y,x1,x2)")->required();
  c_sim->add_option("--edges", sim.edges_out, "output edge list")->required();
  c_sim->add_option("--report", sim.report_out, "output JSON report")->required();
  c_sim->add_option("--replicate", sim.replicate,
                    "replicate index selecting the generator stream (default 0)");
  c_sim->callback([&] { cmd_simulate(sim); });

  TestArgs tst;
  auto* c_tst = app.add_subcommand("test", "score test for network dependence");
  c_tst->add_option("--nodes", tst.nodes, "node table")->required();
  c_tst->add_option("--edges", tst.edges, "edge list")->required();
  c_tst->add_option("--report", tst.report_out, "output JSON report")->required();
  c_tst->add_option("--grid-levels", tst.grid_levels,
                    "comma list of grid levels per coordinate; write as "
                    "--grid-levels=-2,-1,0,1,2 (default)");
  c_tst->add_option("--grid-random", tst.grid_random,
                    "use this many uniform random grid points instead of the level grid");
  c_tst->add_option("--grid-lo", tst.grid_lo, "lower bound of the random grid box (default -2)");
  c_tst->add_option("--grid-hi", tst.grid_hi, "upper bound of the random grid box (default 2)");
  c_tst->add_option("--B", tst.B, "resampling replicates (default 1000)");
  c_tst->add_option("--alpha", tst.alpha, "test level (default 0.05)");
  c_tst->add_option("--seed", tst.seed, "random seed (default 12345)");
  c_tst->add_flag("--standardize", tst.standardize,
                  "scale covariates to zero mean, unit variance before testing");
  c_tst->add_option("--threads", tst.threads, "worker threads (default 1)");
  c_tst->callback([&] { cmd_test(tst); });

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "EM fit of the latent susceptibility model");
  c_fit->add_option("--nodes", fit.nodes, "node table")->required();
  c_fit->add_option("--edges", fit.edges, "edge list")->required();
  c_fit->add_option("--report", fit.report_out, "output JSON report")->required();
  c_fit->add_option("--weights", fit.weights_out, "output per-node susceptibility CSV")
      ->required();
  c_fit->add_option("--tol", fit.tol, "parameter-change stopping tolerance (default 1e-6)");
  c_fit->add_option("--max-iter", fit.max_iter, "EM iteration cap (default 500)");
  c_fit->callback([&] { cmd_fit(fit); });

  PredictArgs prd;
  auto* c_prd = app.add_subcommand("predict", "outcome probabilities from a fit report");
  c_prd->add_option("--fit", prd.fit_report, "fit report JSON")->required();
  c_prd->add_option("--nodes", prd.nodes, "node table")->required();
  c_prd->add_option("--edges", prd.edges, "edge list")->required();
  c_prd->add_option("--output", prd.scores_out, "output scores CSV (id,score)")->required();
  c_prd->add_option("--report", prd.report_out, "output JSON report")->required();
  c_prd->add_option("--mode", prd.mode, "marginal (default) or sampled")
      ->check(CLI::IsMember({"marginal", "sampled"}));
  c_prd->add_option("--seed", prd.seed, "seed for sampled mode (default 0)");
  c_prd->callback([&] { cmd_predict(prd); });

  StudyArgs stu;
  auto* c_stu = app.add_subcommand("study", "Monte Carlo study from a config file");
  c_stu->add_option("--config", stu.config, "key = value config file")->required();
  c_stu->add_option("--report", stu.report_out, "output JSON report")->required();
  c_stu->add_option("--rows", stu.rows_out, "output per-replicate CSV")->required();
  c_stu->add_option("--threads", stu.threads, "worker threads (default 1)");
  c_stu->callback([&] { cmd_study(stu); });

  RocArgs roc;
  auto* c_roc = app.add_subcommand("roc", "ROC curve and AUC of scores against outcomes");
  c_roc->add_option("--scores", roc.scores, "scores CSV (id,score)")->required();
  c_roc->add_option("--nodes", roc.nodes, "node table carrying the outcomes")->required();
  c_roc->add_option("--edges", roc.edges, "edge list")->required();
  c_roc->add_option("--report", roc.report_out, "output JSON report")->required();
  c_roc->add_option("--points", roc.points_out, "optional fpr,tpr CSV");
  c_roc->callback([&] { cmd_roc(roc); });

  PcaArgs pca;
  auto* c_pca = app.add_subcommand("pca", "reduce a raw feature table to k components");
  c_pca->add_option("--features", pca.features, "feature CSV (id,f1,...)")->required();
  c_pca->add_option("--k", pca.k, "number of components (default 2)");
  c_pca->add_option("--output", pca.scores_out, "output scores CSV (id,pc1,...)")->required();
  c_pca->add_option("--report", pca.report_out, "output JSON report")->required();
  c_pca->callback([&] { cmd_pca(pca); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const input_error& e) {
    std::fprintf(stderr, "latnet: input error: %s\n", e.what());
    return 1;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "latnet: numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "latnet: unexpected error: %s\n", e.what());
    return 2;
  }
  return 0;
}
