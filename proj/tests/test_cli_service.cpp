// Copyright 2026 The SCOM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "scom/http_server.hpp"
#include "support.hpp"

namespace scom {
namespace {

using Set = std::vector<std::size_t>;
namespace fs = std::filesystem;

/// A generated dataset, config and trained checkpoint in a temp directory.
class Workspace {
 public:
  explicit Workspace(Generator g = Generator::duplicated, std::size_t n = 1000, std::size_t epochs = 80) {
    auto spec = test::spec_for(g, n, 2);
    cmd_gen_synthetic(spec, dir_ / "data");
    config_ = {{"seed", 7},
               {"data", {{"schema", "data/schema.json"}, {"data", "data/data.csv"}}},
               {"output_dir", "out"},
               {"train", {{"epochs", epochs}}},
               {"report", {{"random_seeds", 3}}},
               {"intervention", {{"seeds", 4}}}};
    write_config();
  }

  void write_config() const { write_file(config_path(), config_.dump(2)); }
  fs::path config_path() const { return dir_ / "config.json"; }
  const fs::path& path() const { return dir_.path(); }
  json& config() { return config_; }
  RunConfig load() const { return load_config(config_path()); }

 private:
  test::TempDir dir_;
  json config_;
};

/// Runs the CLI binary and returns (exit status, combined output).
std::pair<int, std::string> run_cli(const std::string& args) {
  const std::string cmd = std::string(SCOM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, ResolvesPathsAgainstConfigDir) {
  Workspace w;
  const auto cfg = w.load();
  EXPECT_EQ(cfg.schema_file, (w.path() / "data/schema.json").lexically_normal());
  EXPECT_EQ(cfg.checkpoint, (w.path() / "out/model.json").lexically_normal());
  EXPECT_EQ(cfg.report.output_dir, cfg.output_dir / "report");
  EXPECT_EQ(cfg.seed, 7U);
  EXPECT_EQ(cfg.train.seed, 7U);
  EXPECT_EQ(cfg.train.epochs, 80U);
  EXPECT_EQ(cfg.service.port, 8080);
  EXPECT_EQ(cfg.report.random_seeds, 3U);
  EXPECT_FALSE(cfg.hash.empty());
}

TEST(Config, Errors) {
  Workspace w;
  w.config()["service"] = {{"port", 70000}};
  w.write_config();
  EXPECT_THROW((void)w.load(), Error);
  w.config()["service"] = {{"port", 0}};
  w.write_config();
  EXPECT_THROW((void)w.load(), Error);
  w.config()["service"] = {{"port", 9000}};
  w.config()["data"]["data"] = "data/missing.csv";
  w.write_config();
  try {
    (void)w.load();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
    EXPECT_NE(std::string(e.what()).find("missing.csv"), std::string::npos);
  }
  EXPECT_NO_THROW((void)load_config(w.config_path(), false));
  write_file(w.config_path(), "{ nope");
  EXPECT_THROW((void)w.load(), Error);
  EXPECT_THROW((void)load_config(w.path() / "none.json"), Error);
}

TEST(Config, SeedFromEnvironment) {
  Workspace w;
  ::setenv("SCOM_SEED", "123", 1);
  const auto cfg = w.load();
  ::unsetenv("SCOM_SEED");
  EXPECT_EQ(cfg.seed, 123U);
  EXPECT_EQ(cfg.train.seed, 123U);
  EXPECT_TRUE(cfg.seed_from_env);
  ::setenv("SCOM_SEED", "abc", 1);
  EXPECT_THROW((void)w.load(), Error);
  ::unsetenv("SCOM_SEED");
  EXPECT_EQ(w.load().seed, 7U);
}

TEST(Config, HashTracksContent) {
  Workspace w;
  const auto a = w.load().hash;
  EXPECT_EQ(w.load().hash, a);
  w.config()["seed"] = 8;
  w.write_config();
  EXPECT_NE(w.load().hash, a);
}

// ---------------------------------------------------------------------------
// Commands

class Commands : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ws_ = new Workspace();
    const auto cfg = ws_->load();
    hash_ = new std::string(cmd_train(cfg).checkpoint_hash);
  }
  static void TearDownTestSuite() {
    delete ws_;
    delete hash_;
  }
  static RunConfig cfg() { return ws_->load(); }
  static Workspace* ws_;
  static std::string* hash_;
};
Workspace* Commands::ws_ = nullptr;
std::string* Commands::hash_ = nullptr;

TEST_F(Commands, TrainWritesCheckpointAndLog) {
  const auto c = cfg();
  EXPECT_TRUE(fs::exists(c.checkpoint));
  const auto log = read_file(fs::path(c.checkpoint.string() + ".log.csv"));
  EXPECT_EQ(log.substr(0, 11), "epoch,loss\n");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 81);
  EXPECT_EQ(file_fingerprint(c.checkpoint), *hash_);
}

TEST_F(Commands, RetrainIsIdentical) {
  auto c = cfg();
  c.checkpoint = c.output_dir / "again.json";
  EXPECT_EQ(cmd_train(c).checkpoint_hash, *hash_);
}

TEST_F(Commands, SelectBackwardKeepsOneCopy) {
  const auto c = cfg();
  SelectionDefaults opts;
  opts.method = Method::backward;
  opts.k = 1;
  const auto r = cmd_select(c, opts);
  ASSERT_TRUE(r.set);
  const auto run = load_run(c);
  // The two copies tie up to model noise; the pick is the lower-entropy one.
  EXPECT_EQ(*r.set, exhaustive_best_subset(run.dataset, 1, Objective::proxy_entropy, &run.model).subset);
  const auto doc = json::parse(read_file(r.path));
  EXPECT_EQ(doc["selected"]["set"], *r.set);
  EXPECT_EQ(load_trace(r.path, run.dataset.schema), r.trace);
}

TEST_F(Commands, SelectForwardWithExclusion) {
  SelectionDefaults opts;
  opts.method = Method::forward;
  opts.k = 1;
  opts.excluded = {"C1"};
  EXPECT_EQ(*cmd_select(cfg(), opts).set, (Set{1}));
  opts.locked_in = {"C1"};
  try {
    (void)cmd_select(cfg(), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infeasible_constraints);
  }
}

TEST_F(Commands, SelectRandomReproducible) {
  SelectionDefaults opts;
  opts.method = Method::random;
  opts.k = 1;
  const auto a = cmd_select(cfg(), opts, ws_->path() / "r1.json");
  const auto b = cmd_select(cfg(), opts, ws_->path() / "r2.json");
  EXPECT_EQ(read_file(a.path), read_file(b.path));
}

TEST_F(Commands, SelectInstanceLevel) {
  SelectionDefaults opts;
  opts.method = Method::forward;
  opts.level = Level::instance;
  opts.instance = "5";
  const auto r = cmd_select(cfg(), opts);
  EXPECT_EQ(r.path.filename(), "trace_forward_instance_5.json");
  EXPECT_EQ(r.trace.instance_index, 5U);
  opts.instance = "nope";
  EXPECT_THROW((void)cmd_select(cfg(), opts), Error);
}

TEST_F(Commands, ReportFullSetRowsCoincide) {
  const auto c = cfg();
  const auto report = cmd_report(c, c.report);
  const auto* fwd = report.find("forward", 2);
  const auto* bwd = report.find("backward", 2);
  const auto* rnd = report.find("random", 2);
  ASSERT_TRUE(fwd && bwd && rnd);
  EXPECT_EQ(fwd->accuracy, bwd->accuracy);
  EXPECT_EQ(fwd->accuracy, rnd->accuracy);
  EXPECT_EQ(rnd->stderr_, 0.0);
  EXPECT_EQ(rnd->seeds, 3U);
  const auto run = load_run(c);
  EXPECT_EQ(fwd->accuracy, evaluate(run.model, run.dataset, Mask::full(2), Split::test).accuracy);
  EXPECT_EQ(report.provenance.checkpoint_hash, *hash_);
  EXPECT_EQ(report.provenance.config_hash, c.hash);
  EXPECT_EQ(report.provenance.seeds.size(), 3U);
  const auto csv = read_file(c.report.output_dir / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,level,k,accuracy,stderr,entropy_nats,entropy_bits,rows,seeds,set");
  const auto j = json::parse(read_file(c.report.output_dir / "report.json"));
  EXPECT_EQ(j["provenance"]["checkpoint_hash"], *hash_);
  for (const auto& row : j["rows"])
    EXPECT_NEAR(row["entropy_bits"].get<double>(), row["entropy_nats"].get<double>() / std::log(2.0), 1e-15);
}

TEST_F(Commands, ReportInstanceLevel) {
  auto c = cfg();
  auto opts = c.report;
  opts.methods = {Method::backward};
  opts.level = Level::instance;
  opts.ks = {2};
  const auto report = cmd_report(c, opts);
  ASSERT_EQ(report.rows.size(), 1U);
  EXPECT_EQ(report.rows[0].level, "instance");
  const auto run = load_run(c);
  EXPECT_EQ(report.rows[0].accuracy, evaluate(run.model, run.dataset, Mask::full(2), Split::test).accuracy);
}

TEST_F(Commands, ExternalFullSetMatchesEvaluate) {
  const auto c = cfg();
  const auto run = load_run(c);
  std::string text = "instance_id,selected\n";
  for (auto r : run.dataset.rows_in(Split::test)) text += std::to_string(r) + ",C1;C2\n";
  write_file(ws_->path() / "full.csv", text);
  const auto report = cmd_eval_selections(c, {ws_->path() / "full.csv"});
  const auto expect = evaluate(run.model, run.dataset, Mask::full(2), Split::test);
  const auto* row = report.find("external", 2);
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->accuracy, expect.accuracy);
  EXPECT_EQ(row->level, "instance");
  EXPECT_EQ(report.find("external", std::nullopt)->accuracy, expect.accuracy);
  EXPECT_TRUE(fs::exists(c.report.output_dir / "selections.csv"));
}

TEST_F(Commands, ExternalMixedSizes) {
  const auto c = cfg();
  const auto run = load_run(c);
  write_file(ws_->path() / "mixed.csv", "instance_id,selected\n0,C1\n1,\"C2;C1\"\n2,\n");
  const auto report = cmd_eval_selections(c, {ws_->path() / "mixed.csv"});
  ASSERT_EQ(report.rows.size(), 4U);
  EXPECT_EQ(report.find("external", 0)->rows, 1U);
  EXPECT_EQ(report.find("external", std::nullopt)->rows, 3U);
  const bool ok = run.model.predict(run.dataset.concepts.row(0), mask_from_set(Set{0}, 2)).predicted_class() ==
                  run.dataset.labels[0];
  EXPECT_EQ(report.find("external", 1)->accuracy, ok ? 1.0 : 0.0);
}

TEST_F(Commands, ExternalUnknownGroupNamesTheRow) {
  write_file(ws_->path() / "bad.csv", "instance_id,selected\n0,C1\n1,C1;wings\n");
  try {
    (void)cmd_eval_selections(cfg(), {ws_->path() / "bad.csv"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_input);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("wings"), std::string::npos);
  }
  write_file(ws_->path() / "bad2.csv", "instance_id,selected\n99999,C1\n");
  EXPECT_THROW((void)cmd_eval_selections(cfg(), {ws_->path() / "bad2.csv"}), Error);
  write_file(ws_->path() / "bad3.csv", "id,sel\n0,C1\n");
  EXPECT_THROW((void)cmd_eval_selections(cfg(), {ws_->path() / "bad3.csv"}), Error);
}

TEST_F(Commands, SelectionFileRoundTrip) {
  const auto run = load_run(cfg());
  const auto sel = resolve_selections(parse_selection_file("instance_id,selected\n3,C2;C1\n4,C2\n"), run.dataset);
  EXPECT_EQ(sel.sets[0], (Set{0, 1}));
  EXPECT_EQ(selection_file_csv(sel, run.dataset), "instance_id,selected\n3,C1;C2\n4,C2\n");
}

TEST_F(Commands, InterveneSweepWritesFiles) {
  const auto c = cfg();
  const auto r = cmd_intervene_sweep(c, c.intervention);
  EXPECT_TRUE(fs::exists(r.csv));
  EXPECT_EQ(read_file(r.csv), r.report.to_csv());
  const auto run = load_run(c);
  SelectionDefaults sel;
  const auto trace = run_selection(run.model, run.dataset, make_request(run.dataset, sel, c.seed), {}).first;
  for (std::size_t k = 1; k <= 2; ++k)
    EXPECT_EQ(r.report.find(k, 0)->accuracy,
              evaluate(run.model, run.dataset, mask_from_set(trace.set_at(k), 2), Split::test).accuracy);
  const auto j = json::parse(read_file(r.json_path));
  EXPECT_EQ(j["provenance"]["checkpoint_hash"], *hash_);
  EXPECT_EQ(j["seeds"], 4);
}

TEST_F(Commands, CheckpointUntouchedAcrossCommands) {
  const auto c = cfg();
  for (auto m : {Method::forward, Method::backward, Method::random})
    for (std::size_t k = 1; k <= 2; ++k) {
      SelectionDefaults opts;
      opts.method = m;
      opts.k = k;
      (void)cmd_select(c, opts, ws_->path() / "t.json");
      opts.excluded = {"C2"};
      if (k == 1) (void)cmd_select(c, opts, ws_->path() / "t.json");
      opts.excluded.clear();
      opts.locked_in = {"C2"};
      (void)cmd_select(c, opts, ws_->path() / "t.json");
    }
  (void)cmd_report(c, c.report);
  (void)cmd_intervene_sweep(c, c.intervention);
  EXPECT_EQ(file_fingerprint(c.checkpoint), *hash_);
}

TEST_F(Commands, GenSyntheticIsDeterministic) {
  const auto spec = test::spec_for(Generator::xor_distractor, 100, 4, 0.1);
  const auto a = cmd_gen_synthetic(spec, ws_->path() / "g1");
  const auto b = cmd_gen_synthetic(spec, ws_->path() / "g2");
  EXPECT_EQ(read_file(a.data), read_file(b.data));
  EXPECT_EQ(load_dataset(a.schema, a.data), generate_synthetic(spec));
}

// ---------------------------------------------------------------------------
// CLI binary

TEST(Cli, MissingDataFileExitsTwo) {
  Workspace w;
  w.config()["data"]["data"] = "data/absent.csv";
  w.write_config();
  const auto [code, out] = run_cli("train --config " + w.config_path().string());
  EXPECT_EQ(code, 2);
  EXPECT_NE(out.find("absent.csv"), std::string::npos) << out;
}

TEST(Cli, ParseErrorsExitTwo) {
  EXPECT_EQ(run_cli("frobnicate").first, 2);
  EXPECT_EQ(run_cli("train").first, 2);
  EXPECT_EQ(run_cli("gen-synthetic --generator nope").first, 2);
  EXPECT_EQ(run_cli("--help").first, 0);
}

TEST(Cli, EndToEnd) {
  test::TempDir dir;
  auto [code, out] = run_cli("gen-synthetic --generator duplicated --n 400 --seed 3 --out " + (dir / "d").string());
  ASSERT_EQ(code, 0) << out;
  write_file(dir / "c.json", json{{"data", {{"schema", "d/schema.json"}, {"data", "d/data.csv"}}},
                                  {"train", {{"epochs", 20}}},
                                  {"report", {{"random_seeds", 2}}},
                                  {"intervention", {{"seeds", 2}}}}
                                 .dump());
  const std::string cfg = " --config " + (dir / "c.json").string();
  std::tie(code, out) = run_cli("train" + cfg);
  ASSERT_EQ(code, 0) << out;
  const auto hash = file_fingerprint(dir / "out/model.json");
  std::tie(code, out) = run_cli("select --method forward -k 1 --exclude C1" + cfg);
  EXPECT_EQ(code, 0) << out;
  EXPECT_NE(out.find("k=1 set: C2"), std::string::npos) << out;
  std::tie(code, out) = run_cli("select --method forward -k 2 --lock C1 --exclude C1" + cfg);
  EXPECT_EQ(code, 2) << out;
  std::tie(code, out) = run_cli("report" + cfg);
  EXPECT_EQ(code, 0) << out;
  EXPECT_TRUE(fs::exists(dir / "out/report/report.csv"));
  std::tie(code, out) = run_cli("intervene-sweep --ks 1 2" + cfg);
  EXPECT_EQ(code, 0) << out;
  EXPECT_TRUE(fs::exists(dir / "out/report/sweep.csv"));
  write_file(dir / "s.csv", "instance_id,selected\n0,C1\n1,nope\n");
  std::tie(code, out) = run_cli("eval-selections" + cfg + " " + (dir / "s.csv").string());
  EXPECT_EQ(code, 2);
  EXPECT_NE(out.find("row 2"), std::string::npos) << out;
  EXPECT_EQ(file_fingerprint(dir / "out/model.json"), hash);
  std::tie(code, out) = run_cli("train" + cfg);
  EXPECT_EQ(file_fingerprint(dir / "out/model.json"), hash);
}

// ---------------------------------------------------------------------------
// Service

class Service : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto& t = test::trained(test::spec_for(Generator::correlated_blocks, 600, 5, 0.05), [] {
      TrainConfig c;
      c.epochs = 30;
      return c;
    }());
    api_ = new ApiService(*t.model, t.ds, t.model->checkpoint().fingerprint(), 9);
    model_ = t.model.get();
    ds_ = &t.ds;
  }
  static void TearDownTestSuite() { delete api_; }

  static json post(const std::string& route, const json& body, int expect = 200) {
    const auto r = api_->handle("POST", "/api/v1/" + route, body.dump());
    EXPECT_EQ(r.status, expect) << r.body.dump();
    return r.body;
  }

  static ApiService* api_;
  static const OutputModel* model_;
  static const ConceptDataset* ds_;
};
ApiService* Service::api_ = nullptr;
const OutputModel* Service::model_ = nullptr;
const ConceptDataset* Service::ds_ = nullptr;

/// A fixed suite of mixed requests against the service: (method, path, body).
std::vector<std::tuple<std::string, std::string, std::string>> fixture_requests(const ConceptDataset& ds) {
  std::vector<std::tuple<std::string, std::string, std::string>> out;
  Rng rng = make_rng(42, 0);
  const std::size_t n = ds.schema.num_groups();
  out.emplace_back("GET", "/api/v1/meta", "");
  for (int i = 0; i < 20; ++i) {
    const Mask m = sample_mask(n, rng);
    json bits = json::array();
    for (auto b : m.bits()) bits.push_back(static_cast<int>(b));
    const std::size_t r = uniform_index(rng, ds.size());
    std::vector<double> c(ds.concepts.row(r).begin(), ds.concepts.row(r).end());
    out.emplace_back("POST", "/api/v1/predict", json{{"concepts", c}, {"mask", bits}}.dump());
    out.emplace_back("POST", "/api/v1/predict", json{{"instance", r}, {"mask", bits}}.dump());
    out.emplace_back("GET", "/api/v1/instances/" + std::to_string(r), "");
    out.emplace_back("POST", "/api/v1/intervene",
                     json{{"instance", std::to_string(r)}, {"mask", bits}, {"groups", m.selected()},
                          {"oracle", "soft"}}
                         .dump());
  }
  for (std::size_t k = 1; k <= n; ++k) {
    out.emplace_back("POST", "/api/v1/select", json{{"k", k}, {"method", "backward"}}.dump());
    out.emplace_back("POST", "/api/v1/select", json{{"k", k}, {"method", "random"}, {"seed", k}}.dump());
  }
  out.emplace_back("POST", "/api/v1/select",
                   json{{"k", 3}, {"method", "forward"}, {"locked_in", {"C2"}}, {"excluded", {0, 7}}}.dump());
  out.emplace_back("POST", "/api/v1/select",
                   json{{"k", 2}, {"method", "forward"}, {"level", "instance"}, {"instance", 3}}.dump());
  out.emplace_back("POST", "/api/v1/evaluate", json{{"mask", json::array({1, 0, 1, 0, 1, 0, 1, 0})}}.dump());
  out.emplace_back("POST", "/api/v1/evaluate",
                   json{{"mask", json::array({1, 1, 1, 1, 1, 1, 1, 1})}, {"split", "val"}}.dump());
  out.emplace_back("POST", "/api/v1/predict", R"({"mask": [1]})");
  out.emplace_back("POST", "/api/v1/select", R"({"k": 9})");
  out.emplace_back("GET", "/api/v1/nothing", "");
  return out;
}

TEST_F(Service, MetaEchoesSchemaAndFingerprint) {
  const auto r = api_->handle("GET", "/api/v1/meta");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["checkpoint_fingerprint"], model_->checkpoint().fingerprint());
  EXPECT_EQ(r.body["schema"], ds_->schema.to_json());
  EXPECT_EQ(r.body["splits"]["test"], ds_->rows_in(Split::test).size());
  EXPECT_EQ(r.body["oracles"], json::array({"soft"}));
}

TEST_F(Service, PredictParity) {
  Rng rng = make_rng(1, 0);
  for (int i = 0; i < 60; ++i) {
    const Mask m = sample_mask(8, rng);
    json bits = json::array();
    for (auto b : m.bits()) bits.push_back(b == 1);
    std::vector<double> c(8);
    for (double& v : c) v = uniform_real(rng, -1, 2);
    const auto body = post("predict", {{"concepts", c}, {"mask", bits}});
    EXPECT_EQ(body.dump(), prediction_json(model_->predict(c, m)).dump());
    const auto p = body["probs"].get<std::vector<double>>();
    EXPECT_EQ(p, model_->predict(c, m).probs);
  }
}

TEST_F(Service, SelectParity) {
  for (auto method : {"forward", "backward", "random"})
    for (std::size_t k = 1; k <= 8; ++k) {
      const auto body =
          post("select", {{"k", k}, {"method", method}, {"excluded", {"C8"}}, {"seed", 4}}, k == 8 ? 400 : 200);
      if (k == 8) {
        EXPECT_EQ(body["code"], "infeasible_constraints");
        continue;
      }
      SelectionRequest req;
      req.method = method_from_string(method);
      req.excluded = {7};
      req.seed = 4;
      const auto [trace, set] = run_selection(*model_, *ds_, req, k);
      EXPECT_EQ(body["set"], *set);
      EXPECT_EQ(body["trace"]["steps"].size(), trace.steps_to(k));
      EXPECT_EQ(SelectionTrace::from_json(body["trace"]).set_at(k), *set);
    }
}

TEST_F(Service, SelectUsesServiceSeedByDefault) {
  const auto body = post("select", {{"k", 3}, {"method", "random"}});
  SelectionRequest req;
  req.method = Method::random;
  req.seed = 9;
  EXPECT_EQ(body["set"], *run_selection(*model_, *ds_, req, 3).second);
}

TEST_F(Service, InterveneParity) {
  const std::size_t r = ds_->rows_in(Split::test)[0];
  const Mask m = mask_from_set(Set{0, 3, 5}, 8);
  const auto body = post("intervene", {{"instance", r}, {"mask", {1, 0, 0, 1, 0, 1, 0, 0}}, {"groups", {"C4", 5}},
                                       {"oracle", "soft"}});
  const auto oracle = OracleInputMap::from_training(*ds_).to_input(soft_oracle(*ds_).for_row(*ds_, r));
  const auto after = apply_interventions(ds_->concepts.row(r), m, oracle, Set{3, 5}, ds_->schema);
  EXPECT_EQ(body["concepts"].get<std::vector<double>>(), after);
  EXPECT_EQ(body["after"].dump(), prediction_json(model_->predict(after, m)).dump());
  EXPECT_EQ(body["before"].dump(), prediction_json(model_->predict(ds_->concepts.row(r), m)).dump());
  const auto bad = post("intervene", {{"instance", r}, {"mask", {1, 0, 0, 0, 0, 0, 0, 0}}, {"groups", {1}},
                                      {"oracle", "soft"}},
                        400);
  EXPECT_EQ(bad["detail"], "C2");
  const auto none = post("intervene", {{"instance", r}, {"mask", {1, 0, 0, 0, 0, 0, 0, 0}}, {"groups", {0}}}, 400);
  EXPECT_EQ(none["code"], "oracle");
}

TEST_F(Service, EvaluateParity) {
  const auto body = post("evaluate", {{"mask", {0, 1, 1, 0, 0, 1, 0, 1}}});
  const auto r = evaluate(*model_, *ds_, mask_from_set(Set{1, 2, 5, 7}, 8), Split::test);
  EXPECT_EQ(body["accuracy"].get<double>(), r.accuracy);
  EXPECT_EQ(body["mean_entropy_nats"].get<double>(), r.mean_entropy_nats);
  EXPECT_EQ(body["correct"], r.correct);
  EXPECT_EQ(post("evaluate", {{"mask", {1, 1, 1, 1, 1, 1, 1, 1}}, {"split", "bogus"}}, 400)["code"], "invalid_input");
}

TEST_F(Service, InstanceView) {
  const auto r = api_->handle("GET", "/api/v1/instances/4");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["label"], ds_->labels[4]);
  EXPECT_EQ(r.body["concepts"].get<std::vector<double>>(),
            std::vector<double>(ds_->concepts.row(4).begin(), ds_->concepts.row(4).end()));
  EXPECT_TRUE(r.body["oracle"].contains("soft"));
  EXPECT_EQ(api_->handle("GET", "/api/v1/instances/zzz").status, 400);
}

TEST_F(Service, ErrorShapes) {
  auto check = [](const ApiResponse& r, int status) {
    EXPECT_EQ(r.status, status);
    EXPECT_TRUE(r.body.contains("code") && r.body.contains("message") && r.body.contains("detail")) << r.body.dump();
  };
  check(api_->handle("GET", "/api/v1/unknown"), 404);
  check(api_->handle("GET", "/other"), 404);
  check(api_->handle("DELETE", "/api/v1/meta"), 405);
  check(api_->handle("POST", "/api/v1/predict", "not json"), 400);
  check(api_->handle("POST", "/api/v1/predict", "[1,2]"), 400);
  check(api_->handle("POST", "/api/v1/predict", R"({"mask":[1,1,1,1,1,1,1,1]})"), 400);
  check(api_->handle("POST", "/api/v1/predict", R"({"instance":0,"mask":[1,2,1,1,1,1,1,1]})"), 400);
  check(api_->handle("POST", "/api/v1/predict", R"({"concepts":[1],"mask":[1,1,1,1,1,1,1,1]})"), 400);
  check(api_->handle("POST", "/api/v1/select", R"({"method":"backward"})"), 400);
  check(api_->handle("POST", "/api/v1/select", R"({"k":2,"locked_in":["nope"]})"), 400);
}

TEST_F(Service, StateUnchangedAcrossManyRequests) {
  const auto before_ckpt = model_->checkpoint().to_json().dump();
  const ConceptDataset before_ds = api_->dataset();
  const auto fixtures = fixture_requests(*ds_);
  std::size_t sent = 0;
  while (sent < 1000)
    for (const auto& [method, path, body] : fixtures) {
      (void)api_->handle(method, path, body);
      if (++sent == 1000) break;
    }
  EXPECT_EQ(api_->model().checkpoint().to_json().dump(), before_ckpt);
  EXPECT_TRUE(api_->dataset() == before_ds);
  EXPECT_EQ(api_->handle("GET", "/api/v1/meta").body["checkpoint_fingerprint"], model_->checkpoint().fingerprint());
}

TEST_F(Service, ConcurrentRequestsAgree) {
  const auto fixtures = fixture_requests(*ds_);
  std::vector<std::string> expected;
  for (const auto& [method, path, body] : fixtures) expected.push_back(api_->handle(method, path, body).body.dump());
  std::vector<std::future<std::size_t>> workers;
  for (int w = 0; w < 4; ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      std::size_t mismatches = 0;
      for (std::size_t i = 0; i < fixtures.size(); ++i) {
        const auto& [method, path, body] = fixtures[i];
        mismatches += api_->handle(method, path, body).body.dump() != expected[i];
      }
      return mismatches;
    }));
  for (auto& f : workers) EXPECT_EQ(f.get(), 0U);
}

TEST_F(Service, HttpParityOnFixtureSuite) {
  ServiceSettings settings;
  settings.port = 0;
  settings.cors_origin = "http://localhost:5173";
  HttpServer server(*api_, settings);
  const int port = server.bind();
  std::thread th([&] { server.run(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto fixtures = fixture_requests(*ds_);
  ASSERT_GE(fixtures.size(), 50U);
  for (const auto& [method, path, body] : fixtures) {
    const auto expect = api_->handle(method, path, body);
    const auto res = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
    ASSERT_TRUE(res) << path;
    EXPECT_EQ(res->status, expect.status) << path;
    EXPECT_EQ(res->body, expect.body.dump()) << path;
    EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  }
  const auto pre = client.Options("/api/v1/predict");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);

  ServiceSettings clash;
  clash.port = port;
  HttpServer second(*api_, clash);
  try {
    (void)second.bind();
    ADD_FAILURE() << "second bind succeeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
  server.stop();
  th.join();
}

TEST(ServiceCli, BusyPortExitsTwo) {
  Workspace w(Generator::duplicated, 200, 2);
  ASSERT_EQ(run_cli("train --config " + w.config_path().string()).first, 0);
  const auto run = load_run(w.load());
  const ApiService api(run.model, run.dataset, run.checkpoint_hash);
  ServiceSettings s;
  s.port = 0;
  HttpServer holder(api, s);
  const int port = holder.bind();
  const auto [code, out] = run_cli("serve --config " + w.config_path().string() + " --port " + std::to_string(port));
  EXPECT_EQ(code, 2);
  EXPECT_NE(out.find(std::to_string(port)), std::string::npos) << out;
  EXPECT_EQ(run_cli("serve --config " + w.config_path().string() + " --port 70000").first, 2);
}

}  // namespace
}  // namespace scom
