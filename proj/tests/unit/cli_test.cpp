// Copyright 2026 The imcnas Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "imcnas/arch_json.hpp"
#include "imcnas_cli/commands.hpp"
#include "imcnas_cli/config.hpp"

namespace imcnas::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imcnas_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "imcnas");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  static std::size_t lines(const std::string& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST(Config, DefaultsAndKeys) {
  EngineConfig c;
  EXPECT_NO_THROW(c.check());
  const auto keys = EngineConfig::keys();
  EXPECT_GT(keys.size(), 60u);
  for (const auto& k : keys) EXPECT_NE(k.find('.'), std::string::npos) << k;
  const auto echo = c.echo();
  EXPECT_FALSE(echo.at("run").contains("workers"));
  EXPECT_FALSE(echo.at("run").contains("out"));
}

TEST(Config, IniGrammar) {
  EngineConfig c;
  apply_ini(c,
            "# comment\n"
            "[rpu]\n"
            "tile_size = 256   ; trailing comment\n"
            "mapping = tile-differential\n"
            "\n"
            "[SPACE]\n"
            "CT = A,B\n"
            "[search]\n"
            "t_p = none\n"
            "t_avm = 0.02\n"
            "[rpu_grid]\n"
            "prog_noise_stds = 0.0, 0.05\n");
  EXPECT_EQ(c.rpu.tile_size, 256);
  EXPECT_EQ(c.rpu.mapping, TileMapping::kTileDifferential);
  EXPECT_EQ(c.space.ct.size(), 2u);
  EXPECT_FALSE(c.search.t_p.has_value());
  EXPECT_EQ(c.search.t_avm, 0.02);
  EXPECT_EQ(c.rpu_grid().size(), 2u);
}

TEST(Config, ErrorsNameTheKey) {
  EngineConfig c;
  auto key_of = [&](const std::string& text) -> std::string {
    try {
      apply_ini(c, text, "f.ini");
    } catch (const ConfigError& e) {
      return e.key();
    }
    return "";
  };
  EXPECT_EQ(key_of("[rpu]\ntile_sise = 3\n"), "rpu.tile_sise");
  EXPECT_EQ(key_of("[rpu]\ntile_size = big\n"), "rpu.tile_size");
  EXPECT_EQ(key_of("[search]\nt_avm = 0.1x\n"), "search.t_avm");
  EXPECT_EQ(key_of("tile_size = 3\n"), "f.ini:1");
  EXPECT_EQ(key_of("[rpu\n"), "f.ini:1");
  EXPECT_EQ(key_of("[rpu]\njust words\n"), "f.ini:2");
  EXPECT_THROW(apply_override(c, "rpu.tile_size"), ConfigError);
}

TEST(Config, LayerPrecedence) {
  EngineConfig c;
  apply_ini(c, "[rpu]\ntile_size = 128\nadc_bits = 4\n[run]\nseed = 3\n");
  apply_env(c, {{"IMCNAS__RPU__TILE_SIZE", "256"}, {"IMCNAS__RUN__SEED", "4"}, {"PATH", "/bin"}});
  apply_override(c, "run.seed=5");
  EXPECT_EQ(c.rpu.adc_bits, 4);
  EXPECT_EQ(c.rpu.tile_size, 256);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW(apply_env(c, {{"IMCNAS__RPU", "1"}}), ConfigError);
}

TEST(Config, GridOrderTilesOutermost) {
  EngineConfig c;
  c.set("rpu_grid.tile_sizes", "256,512");
  c.set("rpu_grid.prog_noise_stds", "0,0.1,0.2");
  const auto g = c.rpu_grid();
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g[0].tile_size, 256);
  EXPECT_EQ(g[2].prog_noise_std, 0.2);
  EXPECT_EQ(g[3].tile_size, 512);
}

TEST(Config, CrossFieldChecks) {
  EngineConfig c;
  c.set("surrogate.train_fraction", "1.0");
  EXPECT_THROW(c.check(), ConfigError);
  c = {};
  c.set("space.oc0_min", "50");
  c.set("space.oc0_max", "20");
  EXPECT_THROW(c.check(), ConfigError);
}

TEST_F(CliTest, GenDatasetRowCountsAndDeterminism) {
  ASSERT_EQ(run({"--set", "dataset.n_lhs=10", "--out", path("a.ndjson"), "gen-dataset"}), kOk) << err_.str();
  EXPECT_EQ(lines(path("a.ndjson")), 10u);
  EXPECT_NE(out_.str().find("rows=10"), std::string::npos);
  ASSERT_EQ(run({"--set", "dataset.n_lhs=10", "--out", path("b.ndjson"), "gen-dataset"}), kOk);
  EXPECT_EQ(slurp(path("a.ndjson")), slurp(path("b.ndjson")));
  const auto meta = json::parse(slurp(path("a.ndjson.meta.json")));
  EXPECT_EQ(meta.at("schema_version"), 1);
  EXPECT_EQ(meta.at("config").at("dataset").at("n_lhs"), 10);

  ASSERT_EQ(run({"--set", "dataset.n_lhs=50", "--set", "rpu_grid.tile_sizes=256,512", "--set",
                 "rpu_grid.prog_noise_stds=0,0.02,0.05", "--out", path("grid.ndjson"), "gen-dataset"}),
            kOk);
  EXPECT_EQ(lines(path("grid.ndjson")), 300u);
}

TEST_F(CliTest, ConfigFileAndBadKeys) {
  std::ofstream(path("c.ini")) << "[dataset]\nn_lhs = 4\n[run]\nseed = 9\n";
  ASSERT_EQ(run({"--config", path("c.ini"), "--out", path("d.ndjson"), "gen-dataset"}), kOk);
  EXPECT_EQ(lines(path("d.ndjson")), 4u);
  std::ofstream(path("bad.ini")) << "[dataset]\nn_lsh = 4\n";
  EXPECT_EQ(run({"--config", path("bad.ini"), "--out", path("e.ndjson"), "gen-dataset"}), kConfigError);
  EXPECT_NE(err_.str().find("dataset.n_lsh"), std::string::npos);
  EXPECT_EQ(run({"--config", path("missing.ini"), "--out", path("e.ndjson"), "gen-dataset"}), kConfigError);
  EXPECT_EQ(run({"gen-dataset"}), kConfigError);  // no --out
  EXPECT_EQ(run({"frobnicate"}), kConfigError);
  EXPECT_EQ(run({"--help"}), kOk);
}

TEST_F(CliTest, TrainSurrogateMetricsAndDegenerateData) {
  ASSERT_EQ(run({"--set", "dataset.n_lhs=120", "--out", path("ds.ndjson"), "gen-dataset"}), kOk);
  ASSERT_EQ(run({"--set", "surrogate.rounds=60", "--out", path("m.json"), "train-surrogate", "--dataset",
                 path("ds.ndjson")}),
            kOk)
      << err_.str();
  EXPECT_NE(out_.str().find("kendall_tau="), std::string::npos);
  const auto model = json::parse(slurp(path("m.json")));
  EXPECT_TRUE(model.at("metrics").contains("kendall_tau"));
  EXPECT_TRUE(model.contains("config"));
  EXPECT_EQ(model.at("schema_version"), 1);

  // Reloading gives the same held-out metrics.
  const auto ds = surrogate::Dataset::load(path("ds.ndjson"));
  const auto [tr, te] = ds.split(0.8, 0);
  const auto m = surrogate::SurrogateEnsemble::load(path("m.json"));
  EXPECT_DOUBLE_EQ(surrogate::evaluate_model(m, te).kendall_tau, model.at("metrics").at("kendall_tau").get<double>());

  ASSERT_EQ(run({"--set", "dataset.n_lhs=1", "--out", path("one.ndjson"), "gen-dataset"}), kOk);
  EXPECT_EQ(run({"--out", path("m1.json"), "train-surrogate", "--dataset", path("one.ndjson")}), kTrainError);
  EXPECT_EQ(run({"--out", path("m1.json"), "train-surrogate", "--dataset", path("nope.ndjson")}), kConfigError);
}

TEST_F(CliTest, SearchOutputsSweepAndInfeasible) {
  ASSERT_EQ(run({"--set", "dataset.n_lhs=150", "--out", path("ds.ndjson"), "gen-dataset"}), kOk);
  ASSERT_EQ(run({"--set", "surrogate.rounds=60", "--out", path("m.json"), "train-surrogate", "--dataset",
                 path("ds.ndjson")}),
            kOk);
  const std::vector<std::string> small = {"--set", "search.population_size=20", "--set", "search.n_iterations=10",
                                          "--set", "search.t_p=500000"};
  auto args = concat(small, {"--out", path("r.json"), "search", "--model", path("m.json")});
  ASSERT_EQ(run(args), kOk) << err_.str();
  const auto r = json::parse(slurp(path("r.json")));
  EXPECT_LT(r.at("best_params").get<long>(), 500'000);
  EXPECT_EQ(r.at("harvested").at("path"), "r.harvested.ndjson");
  EXPECT_TRUE(fs::exists(path("r.harvested.ndjson")));
  EXPECT_EQ(r.at("config").at("search").at("t_p"), 500'000);
  EXPECT_NE(out_.str().find("generations: 10"), std::string::npos);
  const auto first = slurp(path("r.json"));
  ASSERT_EQ(run(args), kOk);
  EXPECT_EQ(slurp(path("r.json")), first);

  args = concat(small, {"--out", path("s.json"), "search", "--model", path("m.json"), "--sweep-t-avm", "0.03,0.05"});
  ASSERT_EQ(run(args), kOk) << err_.str();
  EXPECT_TRUE(fs::exists(path("s.tavm-0.03.json")));
  EXPECT_TRUE(fs::exists(path("s.tavm-0.05.json")));
  EXPECT_EQ(lines(path("s.sweep.csv")), 3u);

  args = concat(small, {"--set", "search.t_avm=0.000001", "--out", path("x.json"), "search", "--model", path("m.json")});
  EXPECT_EQ(run(args), kInfeasible);
  EXPECT_NE(err_.str().find("infeasible"), std::string::npos);
}

TEST_F(CliTest, EvaluateRecordsAndCsv) {
  ASSERT_EQ(run({"--out", path("ev.json"), "evaluate", "--arch", "published:cifar10/AnalogNAS_T500", "--arch",
                 "published:cifar10/Resnet32"}),
            kOk)
      << err_.str();
  const auto j = json::parse(slurp(path("ev.json")));
  ASSERT_EQ(j.at("records").size(), 2u);
  EXPECT_EQ(j.at("records")[0].at("times"), (std::vector<double>{20.0, 86'400.0, 2'592'000.0}));
  EXPECT_TRUE(j.contains("config"));
  EXPECT_EQ(lines(path("ev.csv")), 1u + 2u * 3u);

  std::ofstream(path("a.json")) << arch::to_json(arch::published("kws/AnalogNAS_T200")).dump();
  ASSERT_EQ(run({"--set", "backend.n_trials=1", "--out", path("one.json"), "evaluate", "--arch", path("a.json")}), kOk);
  EXPECT_EQ(json::parse(slurp(path("one.json"))).at("records")[0].at("acc_1day_std"), 0.0);

  std::ofstream(path("bad.json")) << R"({"schema_version":1,"oc0":2,"ks0":3,"blocks":[]})";
  EXPECT_EQ(run({"--out", path("bad_out.json"), "evaluate", "--arch", path("bad.json")}), kConfigError);
  EXPECT_EQ(run({"--out", path("bad_out.json"), "evaluate", "--arch", "published:nope/x"}), kConfigError);
}

TEST_F(CliTest, WorkersDoNotChangeResults) {
  ASSERT_EQ(run({"--set", "dataset.n_lhs=30", "--workers", "1", "--out", path("w1.ndjson"), "gen-dataset"}), kOk);
  ASSERT_EQ(run({"--set", "dataset.n_lhs=30", "--workers", "8", "--out", path("w8.ndjson"), "gen-dataset"}), kOk);
  EXPECT_EQ(slurp(path("w1.ndjson")), slurp(path("w8.ndjson")));
  EXPECT_EQ(slurp(path("w1.ndjson.meta.json")), slurp(path("w8.ndjson.meta.json")));
}

}  // namespace
}  // namespace imcnas::cli
