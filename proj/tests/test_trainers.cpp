#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "pinnfm/trainers.hpp"

using namespace pinnfm;

namespace {

TrainConfig tiny(PdeProblem problem) {
  TrainConfig cfg;
  cfg.problem = std::move(problem);
  cfg.counts = {20, 40, 10};
  cfg.seeds = {0, 1};
  cfg.lbfgs.max_iters = 15;
  cfg.sweep_lrs = {0.5, 1.0};
  cfg.grid_nx = 32;
  cfg.grid_nt = 11;
  return cfg;
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(TrainConfig, ValidationNamesField) {
  TrainConfig cfg = tiny(PdeProblem::convection(1.0));
  EXPECT_NO_THROW(cfg.validate());
  const auto message_of = [](const TrainConfig& c) {
    try {
      c.validate();
    } catch (const DomainError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  TrainConfig bad = cfg;
  bad.counts.n_f = 0;
  EXPECT_EQ(message_of(bad).rfind("n_f", 0), 0u);
  bad = cfg;
  bad.seeds.clear();
  EXPECT_EQ(message_of(bad).rfind("seeds", 0), 0u);
  bad = cfg;
  bad.lambda = -1.0;
  EXPECT_EQ(message_of(bad).rfind("lambda", 0), 0u);
  bad = cfg;
  bad.sweep_lrs = {1.0, -0.1};
  EXPECT_EQ(message_of(bad).rfind("sweep_lrs", 0), 0u);
}

TEST(CurriculumSchedule, DefaultsAndValidation) {
  const auto conv = CurriculumSchedule::defaults_for(PdeProblem::convection(30.0));
  ASSERT_GE(conv.coefficient_path.size(), 3u);
  EXPECT_EQ(conv.coefficient_path.front(), 1.0);
  EXPECT_EQ(conv.coefficient_path.back(), 30.0);
  EXPECT_TRUE(std::is_sorted(conv.coefficient_path.begin(), conv.coefficient_path.end()));
  EXPECT_NO_THROW(conv.validate(30.0));

  const auto re = CurriculumSchedule::defaults_for(PdeProblem::reaction(5.0));
  EXPECT_EQ(re.coefficient_path, (std::vector<double>{1, 2, 3, 4, 5}));

  CurriculumSchedule s{{1.0, 10.0, 20.0}, std::nullopt, std::nullopt};
  EXPECT_NO_THROW(s.validate(20.0));
  EXPECT_THROW(s.validate(30.0), DomainError);
  s.coefficient_path = {1.0, 10.0, 10.0, 20.0};
  EXPECT_THROW(s.validate(20.0), DomainError);
  s.coefficient_path = {};
  EXPECT_THROW(s.validate(20.0), DomainError);
}

TEST(SegmentSchedule, CountAndBudget) {
  EXPECT_EQ(SegmentSchedule{0.1}.segment_count(1.0), 10);
  EXPECT_EQ(SegmentSchedule{0.05}.segment_count(1.0), 20);
  EXPECT_THROW(SegmentSchedule{0.3}.segment_count(1.0), DomainError);
  EXPECT_THROW(SegmentSchedule{0.0}.validate(1.0), DomainError);

  const auto even = SegmentSchedule::split_budget(1000, 10);
  EXPECT_EQ(even, std::vector<int>(10, 100));
  for (int total : {1000, 1003, 7, 10000}) {
    for (int k : {1, 3, 10, 20}) {
      const auto parts = SegmentSchedule::split_budget(total, k);
      ASSERT_EQ(static_cast<int>(parts.size()), k);
      EXPECT_EQ(std::accumulate(parts.begin(), parts.end(), 0), total);
      const auto [lo, hi] = std::minmax_element(parts.begin(), parts.end());
      EXPECT_LE(*hi - *lo, 1);
    }
  }
}

TEST(Curriculum, WarmStartIsBitIdentical) {
  TrainConfig cfg = tiny(PdeProblem::convection(4.0));
  cfg.seeds = {3};
  std::vector<Vector> starts;
  std::vector<Vector> finals;
  TrainHooks hooks;
  hooks.on_stage_start = [&](std::uint64_t, std::size_t, const Vector& v) { starts.push_back(v); };
  hooks.on_stage_end = [&](std::uint64_t, const StageLog& s) { finals.push_back(s.final_params); };
  const TrainReport r =
      train_curriculum(cfg, CurriculumSchedule{{1.0, 2.0, 4.0}, 10, std::nullopt}, hooks);
  ASSERT_TRUE(r.seeds[0].ok) << r.seeds[0].status;
  ASSERT_EQ(starts.size(), 3u);
  ASSERT_EQ(finals.size(), 3u);
  EXPECT_EQ(starts[0], NetworkParams::glorot(3).flat());
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_TRUE((starts[k].array() == finals[k - 1].array()).all()) << "stage " << k;
  }
  const auto& stages = r.seeds[0].stages;
  ASSERT_EQ(stages.size(), 3u);
  EXPECT_EQ(stages[0].coefficient, 1.0);
  EXPECT_EQ(stages[2].coefficient, 4.0);
  EXPECT_LE(stages[0].iterations, 10);
  EXPECT_EQ(r.seeds[0].params->flat(), finals.back());
}

TEST(Curriculum, SingleStageMatchesRegular) {
  const TrainConfig cfg = tiny(PdeProblem::reaction(3.0));
  const TrainReport reg = train_regular(cfg);
  const TrainReport cur = train_curriculum(cfg, CurriculumSchedule{{3.0}, std::nullopt, std::nullopt});
  ASSERT_EQ(reg.seeds.size(), cur.seeds.size());
  for (std::size_t i = 0; i < reg.seeds.size(); ++i) {
    EXPECT_EQ(reg.seeds[i].error.relative, cur.seeds[i].error.relative);
    EXPECT_EQ(reg.seeds[i].loss.total, cur.seeds[i].loss.total);
    EXPECT_EQ(reg.seeds[i].lr, cur.seeds[i].lr);
    EXPECT_EQ(reg.seeds[i].params->flat(), cur.seeds[i].params->flat());
  }
  EXPECT_EQ(reg.regime, Regime::kRegular);
  EXPECT_EQ(cur.regime, Regime::kCurriculum);
}

TEST(Regular, ReportShapeAndAggregate) {
  const TrainConfig cfg = tiny(PdeProblem::convection(1.0));
  const TrainReport r = train_regular(cfg);
  ASSERT_EQ(r.seeds.size(), 2u);
  for (const SeedResult& s : r.seeds) {
    EXPECT_TRUE(s.ok) << s.status;
    EXPECT_GE(s.error.relative, 0.0);
    EXPECT_GE(s.error.absolute, 0.0);
    EXPECT_EQ(s.sweep.size(), 2u);
    EXPECT_EQ(s.prediction.values.rows(), 32);
    EXPECT_EQ(s.prediction.values.cols(), 11);
    EXPECT_GT(s.trace.size(), 0u);
    EXPECT_NEAR(s.loss.total, s.loss.ic_loss + s.loss.bc_loss + s.loss.residual_loss, 1e-15);
  }
  const Aggregate a = r.aggregate();
  const double e0 = r.seeds[0].error.relative;
  const double e1 = r.seeds[1].error.relative;
  EXPECT_EQ(a.succeeded, 2);
  EXPECT_DOUBLE_EQ(a.mean_relative, 0.5 * (e0 + e1));
  EXPECT_DOUBLE_EQ(a.min_relative, std::min(e0, e1));
  EXPECT_NEAR(a.var_relative, 0.25 * (e0 - e1) * (e0 - e1), 1e-15);
  EXPECT_FALSE(r.all_failed());

  const std::string csv = r.csv();
  EXPECT_EQ(csv.rfind(TrainReport::csv_header() + "\n", 0), 0u);
  EXPECT_EQ(count_lines(csv), 3);
  const auto js = r.summary();
  EXPECT_EQ(js["regime"], "regular");
  EXPECT_EQ(js["seeds"].size(), 2u);
  EXPECT_DOUBLE_EQ(js["aggregate"]["mean_relative_error"].get<double>(), a.mean_relative);
}

TEST(Regular, DeterministicAcrossRunsAndJobs) {
  TrainConfig cfg = tiny(PdeProblem::reaction_diffusion(2.0, 3.0));
  const std::string a = train_regular(cfg).csv();
  const std::string b = train_regular(cfg).csv();
  cfg.jobs = 2;
  const std::string c = train_regular(cfg).csv();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Seq2Seq, InterfaceTargetsComeFromPreviousSegment) {
  TrainConfig cfg = tiny(PdeProblem::reaction(4.0));
  cfg.seeds = {5};
  cfg.counts.n_f = 45;
  const TrainReport r = train_seq2seq(cfg, SegmentSchedule{0.25});
  const SeedResult& s = r.seeds[0];
  ASSERT_TRUE(s.ok) << s.status;
  ASSERT_EQ(s.stages.size(), 4u);
  const Architecture arch = default_architecture();
  for (std::size_t k = 0; k < 4; ++k) {
    const StageLog& st = s.stages[k];
    EXPECT_DOUBLE_EQ(st.t0, 0.25 * static_cast<double>(k));
    EXPECT_DOUBLE_EQ(st.t1, 0.25 * static_cast<double>(k + 1));
    EXPECT_EQ(st.ic_x, s.stages[0].ic_x);
    ASSERT_EQ(st.ic_x.size(), 20);
    for (Eigen::Index i = 0; i < st.ic_x.size(); ++i) {
      if (k == 0) {
        EXPECT_EQ(st.ic_target(i), cfg.problem.h(st.ic_x(i)));
      } else {
        const NetworkParams prev(arch, s.stages[k - 1].final_params);
        EXPECT_NEAR(st.ic_target(i), forward(prev, st.ic_x(i), 1.0), 1e-14);
      }
    }
  }
}

TEST(Seq2Seq, FreshInitPerSegmentUnlessWarmStart) {
  TrainConfig cfg = tiny(PdeProblem::convection(2.0));
  cfg.seeds = {2};
  std::vector<Vector> starts;
  TrainHooks hooks;
  hooks.on_stage_start = [&](std::uint64_t, std::size_t, const Vector& v) { starts.push_back(v); };
  const TrainReport fresh = train_seq2seq(cfg, SegmentSchedule{0.5}, hooks);
  ASSERT_EQ(starts.size(), 2u);
  EXPECT_EQ(starts[0], NetworkParams::glorot(2, default_architecture(), 0).flat());
  EXPECT_EQ(starts[1], NetworkParams::glorot(2, default_architecture(), 1).flat());

  starts.clear();
  SegmentSchedule warm{0.5};
  warm.warm_start = true;
  const TrainReport w = train_seq2seq(cfg, warm, hooks);
  ASSERT_EQ(starts.size(), 2u);
  EXPECT_EQ(starts[1], w.seeds[0].stages[0].final_params);
}

TEST(Seq2Seq, StitchedGridUsesOwningSegment) {
  TrainConfig cfg = tiny(PdeProblem::reaction(2.0));
  cfg.seeds = {1};
  const TrainReport r = train_seq2seq(cfg, SegmentSchedule{0.5});
  const SeedResult& s = r.seeds[0];
  ASSERT_TRUE(s.ok) << s.status;
  const Architecture arch = default_architecture();
  const auto& ts = s.prediction.ts;
  ASSERT_EQ(ts.size(), 11u);
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const std::size_t k = ts[j] <= 0.5 + 1e-12 ? 0 : 1;
    const StageLog& st = s.stages[k];
    const NetworkParams p(arch, st.final_params);
    const SolutionGrid g = predict_grid(p, {s.prediction.xs[3]}, {ts[j]}, TimeWindow{st.t0, st.t1});
    EXPECT_NEAR(s.prediction.values(3, static_cast<Eigen::Index>(j)), g.values(0, 0), 1e-14)
        << "t=" << ts[j];
  }
  EXPECT_EQ(r.regime, Regime::kSeq2Seq);
  EXPECT_EQ(s.iterations, s.stages[0].iterations + s.stages[1].iterations);
}

TEST(Seq2Seq, RejectsIndivisibleHorizon) {
  const TrainConfig cfg = tiny(PdeProblem::reaction(2.0));
  EXPECT_THROW(train_seq2seq(cfg, SegmentSchedule{0.3}), DomainError);
}
