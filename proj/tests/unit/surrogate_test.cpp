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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "imcnas/dataset.hpp"
#include "imcnas/lhs.hpp"
#include "imcnas/surrogate.hpp"

namespace imcnas::surrogate {
namespace {

std::size_t index_of(const std::string& name) {
  const auto& n = feature_names();
  return static_cast<std::size_t>(std::find(n.begin(), n.end(), name) - n.begin());
}

const Dataset& oracle_dataset() {
  static const Dataset ds = [] {
    eval::SyntheticOracle o;
    return build_dataset(400, o, {RpuConfig{}}, 42);
  }();
  return ds;
}

TEST(Features, SchemaAndT500Values) {
  EXPECT_EQ(feature_count(), 36u);
  EXPECT_EQ(feature_names().size(), feature_count());
  const auto& t500 = arch::published("cifar10/AnalogNAS_T500");
  const auto f = featurize(t500);
  ASSERT_EQ(f.size(), feature_count());
  EXPECT_EQ(f[index_of("depth")], 17.0);
  EXPECT_EQ(f[index_of("param_count")], 121'674.0);
  EXPECT_EQ(f[index_of("mean_wf")], 2.0);
  EXPECT_EQ(f[index_of("total_branches")], 3.0);
  EXPECT_NEAR(f[index_of("util512")], 2.0 * 119'744.0 / (18.0 * 512 * 512), 1e-15);
  const auto g = arch::encode(t500);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(f[i], g[i]);
  EXPECT_EQ(featurize(t500), featurize(arch::published("cifar10/AnalogNAS_T500")));
  for (const auto& a : arch::sample_lhs(30, 1)) EXPECT_EQ(featurize(a).size(), feature_count());
}

TEST(Dataset, BuildCountsAndProvenance) {
  eval::SyntheticOracle o;
  RpuConfig a, b;
  b.tile_size = 256;
  const auto ds = build_dataset(25, o, {a, b}, 3);
  EXPECT_EQ(ds.size(), 50u);
  for (const auto& r : ds.rows()) EXPECT_EQ(r.provenance, Provenance::kLhs);
  EXPECT_EQ(ds.rows()[0].arch, ds.rows()[1].arch);
  EXPECT_NE(ds.rows()[0].key(), ds.rows()[1].key());
}

TEST(Dataset, DeterministicBytesAcrossWorkers) {
  eval::SyntheticOracle o;
  BuildOptions one, many;
  many.workers = 4;
  std::ostringstream x, y, z;
  build_dataset(40, o, {RpuConfig{}}, 9, one).write_ndjson(x);
  build_dataset(40, o, {RpuConfig{}}, 9, many).write_ndjson(y);
  build_dataset(40, o, {RpuConfig{}}, 9, one).write_ndjson(z);
  EXPECT_EQ(x.str(), y.str());
  EXPECT_EQ(x.str(), z.str());
}

TEST(Dataset, AccuracyFallsWithProgrammingNoise) {
  eval::SyntheticOracle o;
  std::vector<RpuConfig> grid;
  for (double s : {0.1, 1.0, 5.0}) {
    RpuConfig r;
    r.prog_noise_std = s;
    grid.push_back(r);
  }
  const auto ds = build_dataset(60, o, grid, 5);
  double mean[3] = {0, 0, 0};
  for (std::size_t i = 0; i < ds.size(); ++i) mean[i % 3] += ds.rows()[i].acc_1day();
  EXPECT_GE(mean[0], mean[1]);
  EXPECT_GE(mean[1], mean[2]);
}

TEST(Dataset, DuplicateKeysRejected) {
  Dataset ds = oracle_dataset().subset({0, 1});
  EXPECT_FALSE(ds.add(ds.rows()[0]));
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_TRUE(ds.contains(ds.rows()[1].key()));
}

TEST(Dataset, NdjsonRoundTrip) {
  const auto& ds = oracle_dataset();
  std::stringstream ss;
  ds.write_ndjson(ss);
  const auto back = Dataset::read_ndjson(ss);
  ASSERT_EQ(back.size(), ds.size());
  std::ostringstream again;
  back.write_ndjson(again);
  EXPECT_EQ(again.str(), ss.str());
  EXPECT_EQ(back.features(), ds.features());
}

TEST(Dataset, ReaderRejectsCorruption) {
  std::ostringstream os;
  oracle_dataset().subset({0}).write_ndjson(os);
  auto j = nlohmann::json::parse(os.str());
  auto bad = j;
  bad["features"].erase(0);
  std::istringstream a(bad.dump() + "\n");
  EXPECT_THROW(Dataset::read_ndjson(a), SchemaError);
  bad = j;
  bad["arch_id"] = "0000000000000000";
  std::istringstream b(bad.dump() + "\n");
  EXPECT_THROW(Dataset::read_ndjson(b), SchemaError);
  std::istringstream c("{not json\n");
  EXPECT_THROW(Dataset::read_ndjson(c), SchemaError);
}

TEST(Dataset, SplitIsAPartition) {
  const auto& ds = oracle_dataset();
  const auto [tr, te] = ds.split(0.8, 1);
  EXPECT_EQ(tr.size(), 320u);
  EXPECT_EQ(te.size(), 80u);
  for (const auto& r : te.rows()) EXPECT_FALSE(tr.contains(r.key()));
  const auto [tr2, te2] = ds.split(0.8, 1);
  EXPECT_EQ(tr2.features(), tr.features());
}

TEST(Hinge, HandCases) {
  EXPECT_EQ(hinge_pair_loss(0.5, 0.3, 0.1), 0.0);
  EXPECT_NEAR(hinge_pair_loss(0.3, 0.5, 0.1), 0.3, 1e-15);
  EXPECT_NEAR(hinge_pair_loss(0.35, 0.3, 0.1), 0.05, 1e-15);
  EXPECT_EQ(hinge_pair_loss(0.4, 0.3, 0.1), 0.0);  // gap exactly m
}

TEST(Hinge, MeanOverOrderedPairs) {
  // labels 3 > 2 > 1; scores give gaps (a,b)=0.5, (a,c)=0.2, (b,c)=-0.3.
  const std::vector<double> scores{0.7, 0.2, 0.5}, labels{3, 2, 1};
  const double expected = (0.0 + 0.0 + 0.4) / 3.0;
  EXPECT_NEAR(pairwise_hinge_loss(scores, labels, 0.1), expected, 1e-15);
  const std::vector<double> flat{1, 1, 1};
  EXPECT_EQ(pairwise_hinge_loss(scores, flat, 0.1), 0.0);
}

TEST(Hinge, ZeroIffGapAtLeastMargin) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    EXPECT_EQ(hinge_pair_loss(a, b, 0.1) == 0.0, a - b >= 0.1);
  }
}

TEST(Surrogate, RanksHeldOutOracleData) {
  const auto [tr, te] = oracle_dataset().split(0.8, 42);
  const auto m = SurrogateEnsemble::train(tr);
  const auto metrics = evaluate_model(m, te);
  EXPECT_GE(metrics.kendall_tau, 0.8);
  EXPECT_LT(metrics.avm_rmse, metrics.avm_label_std);
  EXPECT_LT(metrics.std_rmse, metrics.std_label_std);
}

TEST(Surrogate, TwoRowsAreSeparated) {
  const auto ds = oracle_dataset().subset({0, 1});
  ASSERT_NE(ds.rows()[0].acc_1day(), ds.rows()[1].acc_1day());
  SurrogateParams p;
  p.gbdt.min_child_hessian = 0.0;
  p.gbdt.subsample = 1.0;
  const auto m = SurrogateEnsemble::train(ds, p);
  const auto s0 = m.predict(ds.rows()[0].features).score;
  const auto s1 = m.predict(ds.rows()[1].features).score;
  EXPECT_EQ(s0 > s1, ds.rows()[0].acc_1day() > ds.rows()[1].acc_1day());
}

TEST(Surrogate, MonotoneToyFeature) {
  // Labels increase with oc0 only; the ranker must order by oc0.
  Dataset ds;
  for (int oc0 = 8; oc0 < 108; oc0 += 2) {
    DatasetRow r;
    r.arch = arch::Architecture{oc0, 3, {{1, 1, arch::ConvType::B, 1}}};
    r.features = featurize(r.arch);
    const std::vector<double> times{20, eval::kOneDay, eval::kOneMonth};
    const double y = oc0 / 200.0;
    r.record = eval::make_record(arch::arch_id(r.arch), times, {{y, y, y}}, "toy", 0);
    ds.add(r);
  }
  SurrogateParams p;
  p.gbdt.rounds = 200;
  p.gbdt.subsample = 1.0;
  p.gbdt.min_child_hessian = 0.0;
  const auto m = SurrogateEnsemble::train(ds, p);
  const auto pred = m.predict(ds.features());
  for (std::size_t i = 1; i < pred.scores.size(); ++i) EXPECT_GE(pred.scores[i], pred.scores[i - 1]);
  EXPECT_GT(pred.scores.back(), pred.scores.front());
}

TEST(Surrogate, DegenerateDataRejected) {
  EXPECT_THROW(SurrogateEnsemble::train(oracle_dataset().subset({0})), TrainError);
  Dataset flat;
  for (std::size_t i = 0; i < 5; ++i) {
    DatasetRow r = oracle_dataset().rows()[i];
    const std::vector<double> times = r.record.times;
    r.record = eval::make_record(r.record.arch_id, times, {{0.5, 0.5, 0.5}}, "x", 0);
    flat.add(r);
  }
  EXPECT_THROW(SurrogateEnsemble::train(flat), TrainError);
}

TEST(Surrogate, PredictIsPureAndChecksSchema) {
  const auto m = SurrogateEnsemble::train(oracle_dataset().subset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  const auto f = featurize(arch::published("cifar10/AnalogNAS_T500"));
  const auto a = m.predict(f), b = m.predict(f);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.avm, b.avm);
  EXPECT_GE(a.std, 0.0);
  std::vector<double> short_f(f.begin(), f.end() - 1);
  EXPECT_THROW(m.predict(short_f), SchemaError);
}

// Tree evaluation straight from the documented JSON layout.
double eval_booster_json(const nlohmann::json& b, const std::vector<double>& x) {
  double s = b.at("base_score").get<double>();
  for (const auto& t : b.at("trees")) {
    int n = 0;
    while (t.at("feature")[n].get<int>() >= 0) {
      const int f = t.at("feature")[n].get<int>();
      n = x[static_cast<std::size_t>(f)] < t.at("threshold")[n].get<double>() ? t.at("left")[n].get<int>()
                                                                                : t.at("right")[n].get<int>();
    }
    s += t.at("value")[n].get<double>();
  }
  return s;
}

TEST(Surrogate, SerializationIsPredictionExact) {
  const auto m = SurrogateEnsemble::train(oracle_dataset());
  const auto path = (std::filesystem::temp_directory_path() / "imcnas_model_test.json").string();
  m.save(path);
  const auto back = SurrogateEnsemble::load(path);
  std::filesystem::remove(path);
  const auto archs = arch::sample_lhs(100, 77);
  const auto p1 = m.predict(archs, {});
  const auto p2 = back.predict(archs, {});
  EXPECT_EQ(p1.scores, p2.scores);
  EXPECT_EQ(p1.avm, p2.avm);
  EXPECT_EQ(p1.std, p2.std);

  const auto j = m.to_json();
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("margin"), 0.1);
  EXPECT_EQ(j.at("feature_schema").get<std::vector<std::string>>(), feature_names());
  for (std::size_t i = 0; i < 10; ++i) {
    const auto f = featurize(archs[i]);
    EXPECT_NEAR(eval_booster_json(j.at("ranker"), f), p1.scores[i], 1e-12);
    EXPECT_NEAR(eval_booster_json(j.at("avm_regressor"), f), p1.avm[i], 1e-12);
  }
}

TEST(Surrogate, LoadRejectsForeignSchema) {
  auto j = SurrogateEnsemble::train(oracle_dataset().subset({0, 1, 2, 3})).to_json();
  j["feature_schema"][0] = "something_else";
  EXPECT_THROW(SurrogateEnsemble::from_json(j), SchemaError);
  j.erase("feature_schema");
  EXPECT_THROW(SurrogateEnsemble::from_json(j), SchemaError);
}

TEST(FineTune, EmptyRowsRejected) {
  const auto m = SurrogateEnsemble::train(oracle_dataset().subset({0, 1, 2, 3}));
  EXPECT_THROW(m.fine_tune(Dataset{}), TrainError);
}

TEST(FineTune, SameDistributionDoesNotForget) {
  const auto [tr, te] = oracle_dataset().split(0.75, 7);
  const auto [base, extra] = tr.split(0.7, 8);
  const auto m = SurrogateEnsemble::train(base);
  FineTuneReport rep;
  const auto ft = m.fine_tune(extra, &rep);
  EXPECT_GE(rep.tau_after, rep.tau_before);
  EXPECT_GE(evaluate_model(ft, te).kendall_tau, evaluate_model(m, te).kendall_tau - 0.02);
  EXPECT_GT(ft.retained_rows(), m.retained_rows());
}

TEST(FineTune, ShiftedRegionImproves) {
  eval::SyntheticOracle o;
  BuildOptions small;
  small.t_p = 150'000;
  const auto base = build_dataset(200, o, {RpuConfig{}}, 10, small);
  // Rows from a region the base set never saw: large, noisy devices.
  RpuConfig noisy;
  noisy.prog_noise_std = 0.8;
  const auto shifted = build_dataset(150, o, {noisy}, 11);
  const auto m = SurrogateEnsemble::train(base);
  FineTuneReport rep;
  const auto ft = m.fine_tune(shifted, &rep);
  EXPECT_TRUE(rep.accepted);
  EXPECT_GT(rep.tau_after, rep.tau_before);
  const auto ds = shifted.features();
  EXPECT_NEAR(kendall_tau(ft.predict(ds).scores, shifted.acc_1day()), rep.tau_after, 1e-12);
}

}  // namespace
}  // namespace imcnas::surrogate
