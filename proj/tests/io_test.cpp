#include "rdalloc/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rdalloc/errors.hpp"
#include "test_support.hpp"

namespace rdalloc {
namespace {

TEST(FormatDouble, RoundTripsRandomValues) {
  testing::InstanceGenerator gen(83);
  for (int i = 0; i < 2000; ++i) {
    const double v = gen.log_uniform(1e-300, 1e300) * (gen.uniform(0, 1) < 0.5 ? -1 : 1);
    EXPECT_EQ(*io::parse_double(io::format_double(v)), v);
  }
}

TEST(ParseDouble, Strict) {
  EXPECT_EQ(io::parse_double(" 1.5 "), 1.5);
  EXPECT_EQ(io::parse_double("+2"), 2.0);
  EXPECT_FALSE(io::parse_double("1.5x"));
  EXPECT_FALSE(io::parse_double(""));
  EXPECT_THROW(io::parse_real_list("1,,2"), DomainError);
  EXPECT_EQ(io::parse_real_list("8, 1,1"), (std::vector<double>{8, 1, 1}));
}

TEST(SampleTable, ReadsScalarizedForm) {
  std::istringstream in("# comment\nR_1,R_2,D_t\n0,0,1.5\n10, 20 ,0.5\n\n");
  const auto t = io::read_sample_table(in, "mem");
  EXPECT_TRUE(t.scalarized());
  EXPECT_EQ(t.streams, 2u);
  const auto s = io::to_samples(t);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].rates, RateVector({10, 20}));
  EXPECT_EQ(s[1].total_distortion, 0.5);
}

TEST(SampleTable, ReadsRawForm) {
  std::istringstream in("R_1,A_1,A_2\n5,60,20\n");
  const auto t = io::read_sample_table(in, "mem");
  EXPECT_EQ(t.tasks, 2u);
  const auto perf = io::to_performance_table(t, std::vector<double>{80, 25});
  EXPECT_EQ(perf[0].tasks[1].task_id, 2u);
  EXPECT_EQ(perf[0].tasks[1].baseline, 25.0);
  EXPECT_EQ(perf[0].tasks[1].measured, 20.0);
  EXPECT_THROW(io::to_performance_table(t, std::vector<double>{80}), DomainError);
  EXPECT_THROW(io::to_samples(t), DomainError);
}

void expect_parse_error(const std::string& text, std::size_t line, std::size_t column) {
  std::istringstream in(text);
  try {
    io::read_sample_table(in, "mem");
    FAIL() << "expected ParseError for: " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

TEST(SampleTable, ErrorsNameLineAndColumn) {
  expect_parse_error("", 1, 1);
  expect_parse_error("R_1,R_2,D_t\n", 2, 1);
  expect_parse_error("R_1,R_3,D_t\n", 1, 5);
  expect_parse_error("R_1,R_2,D_t\n1,2,3\n1,x,3\n", 3, 3);
  expect_parse_error("R_1,R_2,D_t\n1,2\n", 2, 4);
  expect_parse_error("R_1,R_2,D_t\n-1,2,3\n", 2, 1);
  expect_parse_error("D_t\n", 1, 1);
  expect_parse_error("R_1,A_2\n", 1, 5);
}

TEST(SamplesCsv, WriteReadIdentity) {
  testing::InstanceGenerator gen(89);
  std::vector<RdSample> samples;
  for (int k = 0; k < 50; ++k) {
    samples.push_back({RateVector({gen.uniform(0, 3000), gen.uniform(0, 3000)}),
                       gen.uniform(-1, 3)});
  }
  std::stringstream buf;
  io::write_samples(buf, samples);
  const auto back = io::to_samples(io::read_sample_table(buf, "mem"));
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    EXPECT_EQ(back[k].rates, samples[k].rates);
    EXPECT_EQ(back[k].total_distortion, samples[k].total_distortion);
  }
}

TEST(Params, WriteReadIdentity) {
  const SurfaceParams p(0.8000000000000003, {72.45, 183.09, 1e-12}, {7.07e-4, 2.11e-2, 0.3});
  std::stringstream buf;
  io::write_params(buf, p, {100, 0.99, true, "2020-01-01T00:00:00Z"});
  EXPECT_EQ(io::read_params(buf, "mem"), p);
}

TEST(Params, Errors) {
  std::istringstream missing("streams = 1\ngamma = 0\nalpha_1 = 1\n");
  EXPECT_THROW(io::read_params(missing, "mem"), ParseError);
  std::istringstream unknown("streams = 1\ngamma = 0\nalpha_1 = 1\nbeta_1 = 1\nfoo = 2\n");
  EXPECT_THROW(io::read_params(unknown, "mem"), ParseError);
  std::istringstream invalid("streams = 1\ngamma = 0\nalpha_1 = -1\nbeta_1 = 1\n");
  EXPECT_THROW(io::read_params(invalid, "mem"), ParseError);
  std::istringstream bad_number("streams = 1\ngamma = zero\nalpha_1 = 1\nbeta_1 = 1\n");
  try {
    io::read_params(bad_number, "mem");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 9u);
  }
}

TEST(TaskModels, WriteReadIdentity) {
  const auto models = default_task_models();
  std::stringstream buf;
  io::write_task_models(buf, models);
  const auto back = io::read_task_models(buf, "mem");
  ASSERT_EQ(back.size(), models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    EXPECT_EQ(back[i].task_id, models[i].task_id);
    EXPECT_EQ(back[i].baseline, models[i].baseline);
    EXPECT_EQ(back[i].offset, models[i].offset);
    EXPECT_EQ(back[i].coeffs, models[i].coeffs);
    EXPECT_EQ(back[i].decays, models[i].decays);
  }
}

TEST(Performances, WriteReadIdentity) {
  const auto table =
      generate_task_performances(default_task_models(), default_sampling_plan(42, 0.01));
  std::stringstream csv, side;
  io::write_performances(csv, table);
  io::write_baselines(side, table);
  const auto back = io::to_performance_table(io::read_sample_table(csv, "mem"),
                                             io::read_baselines(side, "mem"));
  ASSERT_EQ(back.size(), table.size());
  for (std::size_t k = 0; k < table.size(); ++k) {
    EXPECT_EQ(back[k].rates, table[k].rates);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(back[k].tasks[i].measured, table[k].tasks[i].measured);
      EXPECT_EQ(back[k].tasks[i].baseline, table[k].tasks[i].baseline);
    }
  }
}

}  // namespace
}  // namespace rdalloc
