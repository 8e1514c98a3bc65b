#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "gradspin/hydro.hpp"
#include "gradspin/measures.hpp"
#include "stats.hpp"

using namespace gradspin;
using testing_util::summarize;
using testing_util::z_score;

namespace {

std::vector<double> draws(const InvariantSpec& spec, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return as_doubles(sample_invariant(spec, n, rng));
}

}  // namespace

TEST(Invariant, ValidateRejectsBadRho) {
  EXPECT_THROW(validate(InvariantSpec{{ModelKind::dKMP, 0.5}, 0.0}), std::invalid_argument);
  EXPECT_THROW(validate(InvariantSpec{{ModelKind::dKMP, 0.5}, INFINITY}), std::invalid_argument);
}

TEST(Invariant, MarginalMeans) {
  const auto g = draws({{ModelKind::gKMP, 0.5}, 2.0}, 1000000, 1);
  EXPECT_LT(z_score(summarize(g), 2.0), 4.0);

  const auto d = draws({{ModelKind::dKMP, 0.5}, 1.0}, 1000000, 2);
  std::vector<double> zero(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) zero[i] = d[i] == 0.0 ? 1.0 : 0.0;
  EXPECT_LT(z_score(summarize(zero), 0.5), 4.0);

  const auto h = draws({{ModelKind::Harm, 1.0}, 0.5}, 1000000, 3);
  EXPECT_LT(z_score(summarize(h), 1.0), 4.0);
  EXPECT_DOUBLE_EQ(marginal_mean({ModelKind::Harm, 1.0}, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(marginal_mean({ModelKind::dKMP, 0.5}, 3.0), 3.0);
}

TEST(Moments, ClosedForms) {
  const double rho = 1.7;
  const double s = 0.8;
  const auto g2 = moment({{ModelKind::gKMP, s}, rho}, 2);
  EXPECT_EQ(g2.kind, MomentKind::raw);
  EXPECT_NEAR(g2.value, rho * rho * 2 * s * (2 * s + 1), 1e-12);
  const auto d2 = moment({{ModelKind::dKMP, 0.5}, rho}, 2);
  EXPECT_EQ(d2.kind, MomentKind::factorial);
  EXPECT_NEAR(d2.value, 2 * rho * rho, 1e-12);
  EXPECT_NEAR(moment({{ModelKind::Harm, s}, rho}, 1).value, 2 * s * rho, 1e-12);
  EXPECT_THROW(moment({{ModelKind::Harm, s}, rho}, 0), std::invalid_argument);
}

TEST(Moments, SampledMomentsMatch) {
  const std::vector<InvariantSpec> grid{{{ModelKind::gKMP, 0.5}, 1.0},
                                        {{ModelKind::gKMP, 1.5}, 0.4},
                                        {{ModelKind::dKMP, 0.5}, 0.7},
                                        {{ModelKind::Harm, 1.0}, 0.5},
                                        {{ModelKind::Harm, 0.5}, 1.2}};
  std::uint64_t seed = 10;
  for (const auto& spec : grid) {
    const auto xs = draws(spec, 400000, seed++);
    for (int m = 1; m <= 4; ++m) {
      const auto target = moment(spec, m);
      std::vector<double> terms(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double v = 1.0;
        for (int j = 0; j < m; ++j) v *= target.kind == MomentKind::raw ? xs[i] : xs[i] - j;
        terms[i] = v;
      }
      EXPECT_LT(z_score(summarize(terms), target.value), 4.0)
          << to_string(spec.model.kind()) << " s=" << spec.model.spin() << " m=" << m;
    }
  }
}

TEST(Profile, PresetsAndParsing) {
  const auto c = Profile::parse("const:1.5");
  EXPECT_DOUBLE_EQ(c(0.3), 1.5);
  const auto s = Profile::parse("sine:2,1");
  EXPECT_NEAR(s(0.25), 3.0, 1e-15);
  EXPECT_NEAR(s(1.25), 3.0, 1e-12);
  EXPECT_NEAR(s.sup(), 3.0, 1e-15);
  EXPECT_NEAR(s.inf(), 1.0, 1e-15);
  const auto st = Profile::parse("step:1,3,0.5");
  EXPECT_EQ(st(0.2), 1.0);
  EXPECT_EQ(st(0.7), 3.0);
  EXPECT_EQ(st.sup(), 3.0);
  EXPECT_THROW(Profile::parse("sine:1,2"), std::invalid_argument);
  EXPECT_THROW(Profile::parse("step:1,2,1.5"), std::invalid_argument);
  EXPECT_THROW(Profile::parse("wave:1"), std::invalid_argument);
  EXPECT_THROW(Profile::parse("const"), std::invalid_argument);
  EXPECT_THROW(Profile::parse("const:-1"), std::invalid_argument);
  EXPECT_THROW(Profile::parse("table:/nonexistent/profile.csv"), std::runtime_error);
}

TEST(Profile, TableNearestPoint) {
  const auto path = std::filesystem::temp_directory_path() / "gradspin_profile_table.csv";
  {
    std::ofstream out(path);
    out << "u,rho\n0.0,1\n0.5,3\n0.8,2\n";
  }
  const auto p = Profile::parse("table:" + path.string());
  EXPECT_EQ(p(0.1), 1.0);
  EXPECT_EQ(p(0.4), 3.0);
  EXPECT_EQ(p(0.7), 2.0);
  EXPECT_EQ(p(0.95), 1.0);  // wraps to u = 0
  EXPECT_EQ(p.sup(), 3.0);
  std::filesystem::remove(path);
}

TEST(ProfileMeasure, ZeroAndConstantProfiles) {
  RngStream rng(20, 0);
  const auto zero = sample_profile_measure({ModelKind::Harm, 1.0}, Profile::constant(0.0), 32, rng);
  EXPECT_EQ(total_mass(zero), 0.0);

  // Constant profile c is the invariant measure with parameter local_parameter(c).
  const ModelSpec spec(ModelKind::gKMP, 1.0);
  RngStream a(21, 0);
  RngStream b(21, 0);
  const auto via_profile = sample_profile_measure(spec, Profile::constant(3.0), 64, a);
  const auto via_invariant = sample_invariant({spec, local_parameter(spec, 3.0)}, 64, b);
  EXPECT_EQ(as_doubles(via_profile), as_doubles(via_invariant));
}

TEST(ProfileMeasure, BlockAveragesFollowProfile) {
  const auto profile = Profile::sine(2.0, 1.0);
  constexpr std::size_t n = 256;
  constexpr std::size_t bins = 16;
  constexpr int replicas = 2000;
  for (const ModelSpec spec : {ModelSpec{ModelKind::dKMP, 0.5}, ModelSpec{ModelKind::gKMP, 1.0},
                               ModelSpec{ModelKind::Harm, 2.0}}) {
    std::vector<std::vector<double>> per_bin(bins);
    for (int r = 0; r < replicas; ++r) {
      RngStream rng(22, r);
      const auto b = binned_profile(sample_profile_measure(spec, profile, n, rng), bins);
      for (std::size_t i = 0; i < bins; ++i) per_bin[i].push_back(b[i]);
    }
    for (std::size_t i = 0; i < bins; ++i) {
      // Expected block mean: the average of rho0 over the block's sites.
      double expected = 0.0;
      for (std::size_t x = i * (n / bins); x < (i + 1) * (n / bins); ++x) expected += profile(double(x) / n);
      expected /= n / bins;
      EXPECT_LT(z_score(summarize(per_bin[i]), expected), 4.0) << i;
    }
  }
}

TEST(ProfileMeasure, AssociationImprovesWithN) {
  const auto profile = Profile::sine(2.0, 1.0);
  const ModelSpec spec(ModelKind::dKMP, 0.5);
  const auto g = TestFunction::cosine(1);
  // int cos(2 pi u) (2 + sin(2 pi u)) du = 0.
  std::vector<double> errors;
  for (std::size_t n : {64u, 256u, 1024u}) {
    double acc = 0.0;
    for (int r = 0; r < 200; ++r) {
      RngStream rng(23, r);
      acc += std::abs(pair(sample_profile_measure(spec, profile, n, rng), g));
    }
    errors.push_back(acc / 200);
  }
  EXPECT_GT(errors[0], errors[1]);
  EXPECT_GT(errors[1], errors[2]);
}

TEST(Domination, CouplingIsOrdered) {
  const std::vector<InitialMeasureSpec> specs{
      {{ModelKind::dKMP, 0.5}, Profile::constant(1.0), 2.0},
      {{ModelKind::dKMP, 0.5}, Profile::sine(2.0, 1.0), 4.0},
      {{ModelKind::gKMP, 0.7}, Profile::sine(2.0, 1.5), 3.0},
      {{ModelKind::Harm, 1.0}, Profile::step(0.5, 3.0, 0.4), 1.5},
      {{ModelKind::Harm, 0.5}, Profile::constant(0.0), 1.0}};
  for (const auto& spec : specs) {
    RngStream rng(30, 0);
    for (int i = 0; i < 4000; ++i) {
      const auto [eta, xi] = sample_dominated_pair(spec, 25, rng);
      const auto a = as_doubles(eta);
      const auto b = as_doubles(xi);
      for (std::size_t x = 0; x < a.size(); ++x) ASSERT_LE(a[x], b[x]);
    }
  }
}

TEST(Domination, EqualParametersGiveEqualConfigurations) {
  const ModelSpec spec(ModelKind::gKMP, 1.0);
  const InitialMeasureSpec im{spec, Profile::constant(2.0), local_parameter(spec, 2.0)};
  RngStream rng(31, 0);
  const auto [eta, xi] = sample_dominated_pair(im, 64, rng);
  EXPECT_EQ(as_doubles(eta), as_doubles(xi));
}

TEST(Domination, DetectsCrossing) {
  EXPECT_THROW(check_domination({{ModelKind::dKMP, 0.5}, Profile::sine(2.0, 1.0), 2.5}, 64),
               DominationError);
  EXPECT_THROW(check_domination({{ModelKind::gKMP, 1.0}, Profile::constant(4.0), 1.0}, 8),
               DominationError);
  EXPECT_NO_THROW(check_domination({{ModelKind::Harm, 2.0}, Profile::constant(4.0), 1.0}, 8));
  EXPECT_THROW(check_domination({{ModelKind::Harm, 2.0}, Profile::constant(4.0), 0.0}, 8),
               std::invalid_argument);
}
