#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gradspin/models.hpp"
#include "gradspin/rng.hpp"
#include "stats.hpp"

using namespace gradspin;

namespace {

double harm_rate_oracle(std::int64_t n, std::int64_t k, double s) {
  const double a = 2.0 * s;
  return testing_util::gamma_ratio(n + 1.0, n - k + a, n - k + 1.0, n + a) / static_cast<double>(k);
}

/// Random local values for a model: integers up to `hi` for particle models,
/// reals in [0, hi) for gKMP.
double draw_value(const ModelSpec& spec, RngStream& rng, int hi) {
  if (spec.is_particle_model()) return static_cast<double>(rng.uniform_index(hi + 1));
  return rng.uniform() * hi;
}

Configuration draw_config(const ModelSpec& spec, RngStream& rng, std::size_t n, int hi) {
  if (spec.is_particle_model()) {
    ParticleConfig p;
    for (std::size_t x = 0; x < n; ++x) p.values.push_back(static_cast<std::int64_t>(rng.uniform_index(hi + 1)));
    return p;
  }
  EnergyConfig e;
  for (std::size_t x = 0; x < n; ++x) e.values.push_back(rng.uniform() * hi);
  return e;
}

const std::vector<ModelSpec>& all_models() {
  static const std::vector<ModelSpec> specs{
      {ModelKind::gKMP, 0.25}, {ModelKind::gKMP, 0.5}, {ModelKind::gKMP, 2.0},
      {ModelKind::dKMP, 0.5},  {ModelKind::Harm, 0.5}, {ModelKind::Harm, 0.75},
      {ModelKind::Harm, 1.0},  {ModelKind::Harm, 3.0}};
  return specs;
}

}  // namespace

TEST(ModelSpec, ParseAndValidate) {
  EXPECT_EQ(parse_model_kind("gkmp"), ModelKind::gKMP);
  EXPECT_EQ(parse_model_kind("dKMP"), ModelKind::dKMP);
  EXPECT_EQ(parse_model_kind("HARM"), ModelKind::Harm);
  EXPECT_THROW(parse_model_kind("kmp"), std::invalid_argument);
  EXPECT_THROW(ModelSpec(ModelKind::Harm, -1.0), std::invalid_argument);
  EXPECT_THROW(ModelSpec(ModelKind::gKMP, 0.0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ModelSpec(ModelKind::dKMP, 3.0).spin(), 0.5);
  EXPECT_FALSE(ModelSpec(ModelKind::Harm, 0.3).warnings().empty());
  EXPECT_TRUE(ModelSpec(ModelKind::Harm, 0.5).warnings().empty());
}

TEST(Diffusion, Coefficients) {
  EXPECT_DOUBLE_EQ(diffusion_coefficient({ModelKind::gKMP, 0.3}), 0.5);
  EXPECT_DOUBLE_EQ(diffusion_coefficient({ModelKind::gKMP, 4.0}), 0.5);
  EXPECT_DOUBLE_EQ(diffusion_coefficient({ModelKind::dKMP, 0.5}), 0.5);
  EXPECT_DOUBLE_EQ(diffusion_coefficient({ModelKind::Harm, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(diffusion_coefficient({ModelKind::Harm, 2.0}), 0.25);
}

TEST(RedistributionWeight, UniformAtHalfAndSymmetric) {
  for (double u : {0.01, 0.3, 0.5, 0.99}) EXPECT_NEAR(redistribution_weight(0.5, u), 1.0, 1e-14);
  RngStream rng(2, 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform_open();
    const double s = 0.1 + 3.0 * rng.uniform();
    EXPECT_NEAR(redistribution_weight(s, u), redistribution_weight(s, 1.0 - u),
                1e-9 * redistribution_weight(s, u));
  }
  EXPECT_THROW(redistribution_weight(1.0, 0.0), std::domain_error);
  EXPECT_THROW(redistribution_weight(1.0, 1.0), std::domain_error);
}

TEST(RedistributionWeight, NormalizedAndMatchesOracle) {
  for (double s : {0.25, 1.0, 3.0}) {
    const auto q = integrate_01(Integrand01([s](double u, double v) { return redistribution_weight(s, u, v); }), 1e-11);
    EXPECT_NEAR(q.value, 1.0, 1e-10) << s;
    const double u = 0.3;
    const double oracle = testing_util::gamma_ratio(4 * s, 1.0, 2 * s, 2 * s) *
                          std::pow(u * (1 - u), 2 * s - 1);
    EXPECT_NEAR(redistribution_weight(s, u), oracle, 1e-12 * oracle);
  }
}

TEST(Exchanges, Gkmp) {
  EXPECT_EQ(apply_gkmp_exchange(3, 1, 0.5), std::make_pair(2.0, 2.0));
  EXPECT_EQ(apply_gkmp_exchange(1.5, 2.5, 1.0), std::make_pair(4.0, 0.0));
  RngStream rng(4, 0);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform() * 100;
    const double b = rng.uniform() * 100;
    const auto [x, y] = apply_gkmp_exchange(a, b, rng.uniform());
    ASSERT_GE(x, 0.0);
    ASSERT_GE(y, 0.0);
    ASSERT_NEAR(x + y, a + b, 4e-16 * (a + b));
  }
}

TEST(Exchanges, Dkmp) {
  EXPECT_EQ(apply_dkmp_exchange(2, 3, 0), (std::pair<std::int64_t, std::int64_t>{0, 5}));
  EXPECT_EQ(apply_dkmp_exchange(2, 3, 5), (std::pair<std::int64_t, std::int64_t>{5, 0}));
  EXPECT_THROW(apply_dkmp_exchange(2, 3, 6), std::out_of_range);
  EXPECT_THROW(apply_dkmp_exchange(2, 3, -1), std::out_of_range);
}

TEST(HarmRates, ClosedFormCases) {
  for (int n = 1; n <= 30; ++n) {
    for (int k = 1; k <= n; ++k) EXPECT_NEAR(harm_rate(n, k, 0.5), 1.0 / k, 1e-13);
  }
  for (double s : {0.3, 0.5, 1.0, 2.7}) EXPECT_NEAR(harm_rate(1, 1, s), 1.0 / (2 * s), 1e-13);
  EXPECT_EQ(harm_rate(3, 4, 1.0), 0.0);
  EXPECT_EQ(harm_rate(3, 0, 1.0), 0.0);
  EXPECT_EQ(harm_total_rate(0, 1.0), 0.0);
  EXPECT_NEAR(harm_total_rate(4, 0.5), 1.0 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4, 1e-13);
}

TEST(HarmRates, MatchLgammaOracle) {
  for (double s : {0.3, 0.5, 0.75, 1.0, 2.0, 5.0}) {
    for (int n = 1; n <= 200; n += 7) {
      for (int k = 1; k <= n; k += 3) {
        const double oracle = harm_rate_oracle(n, k, s);
        EXPECT_NEAR(harm_rate(n, k, s), oracle, 1e-11 * oracle) << n << " " << k << " " << s;
      }
    }
  }
}

TEST(HarmRates, FirstMomentIdentityAndMonotoneTotal) {
  for (double s : {0.25, 0.5, 0.85, 1.0, 2.0, 3.0}) {
    double previous = 0.0;
    for (int n = 1; n <= 200; ++n) {
      double weighted = 0.0;
      for (int k = 1; k <= n; ++k) weighted += k * harm_rate(n, k, s);
      EXPECT_NEAR(weighted, n / (2 * s), 1e-10 * std::max(1.0, n / (2 * s)));
      const double total = harm_total_rate(n, s);
      EXPECT_GE(total, previous - 1e-12) << n << " " << s;
      previous = total;
    }
  }
}

TEST(HarmRateTable, ConsistentWithDirectRates) {
  HarmRateTable table(0.75);
  for (int n : {5, 1, 40, 3, 0}) {
    EXPECT_NEAR(table.total(n), harm_total_rate(n, 0.75), 1e-12);
    double cumulative = 0.0;
    for (int j = 1; j <= n; ++j) {
      cumulative += harm_rate(n, j, 0.75);
      EXPECT_NEAR(table.cumulative(n, j), cumulative, 1e-12);
    }
  }
  // select returns the smallest k whose cumulative rate exceeds the target.
  for (int i = 0; i < 100; ++i) {
    const double target = table.total(40) * i / 100.0;
    const auto k = table.select(40, target);
    EXPECT_GT(table.cumulative(40, k), target);
    EXPECT_LE(table.cumulative(40, k - 1), target);
  }
}

TEST(GeneratorEta, Examples) {
  const ModelSpec dkmp(ModelKind::dKMP, 0.5);
  // Isolated bond (2, 5): the left site's kernel mean is 7/2, a gain of 3/2.
  const double left_gain =
      bond_generator(dkmp, 2.0, 5.0, [](double a, double) { return a; });
  EXPECT_NEAR(left_gain, 1.5, 1e-14);
  const Configuration harm_config{ParticleConfig{{0, 3, 0, 0}}};
  const ModelSpec harm(ModelKind::Harm, 0.5);
  EXPECT_NEAR(generator_eta(harm, harm_config, 1), -6.0, 1e-14);
  EXPECT_NEAR(generator_eta_kernel(harm, harm_config, 1), -6.0, 1e-12);
  const Configuration flat{EnergyConfig{{1.5, 1.5, 1.5}}};
  EXPECT_NEAR(generator_eta_kernel({ModelKind::gKMP, 1.0}, flat, 0), 0.0, 1e-12);
}

TEST(GeneratorEta, KernelMatchesClosedFormOnRandomConfigs) {
  RngStream rng(21, 0);
  for (const auto& spec : all_models()) {
    const double tol = spec.is_particle_model() ? 1e-9 : 1e-7;
    for (int trial = 0; trial < 25; ++trial) {
      const Configuration c = draw_config(spec, rng, 6, 50);
      for (std::size_t x = 0; x < 6; ++x) {
        EXPECT_NEAR(generator_eta_kernel(spec, c, x), generator_eta(spec, c, x), tol);
      }
    }
  }
}

TEST(GeneratorProduct, Examples) {
  EXPECT_NEAR(generator_product({ModelKind::gKMP, 0.5}, 1.0, 1.0), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(generator_product({ModelKind::dKMP, 0.5}, 2.0, 0.0), 1.0 / 3.0, 1e-15);
  for (const auto& spec : all_models()) EXPECT_EQ(generator_product(spec, 0.0, 0.0), 0.0);
  EXPECT_NEAR(beta_second_moment_gap(0.5), 1.0 / 6.0, 1e-15);
}

TEST(GeneratorProduct, DkmpMatchesEnumerationOracle) {
  const ModelSpec spec(ModelKind::dKMP, 0.5);
  for (int a = 0; a <= 60; ++a) {
    for (int b = 0; a + b <= 60; ++b) {
      // E[r (S - r)] over r uniform on {0..S}, computed directly.
      const int total = a + b;
      double acc = 0.0;
      for (int r = 0; r <= total; ++r) acc += static_cast<double>(r) * (total - r);
      const double oracle = acc / (total + 1) - static_cast<double>(a) * b;
      EXPECT_NEAR(generator_product(spec, a, b), oracle, 1e-8);
    }
  }
}

TEST(GeneratorProduct, HarmMatchesLgammaOracle) {
  for (double s : {0.5, 1.0, 1.5, 4.0}) {
    const ModelSpec spec(ModelKind::Harm, s);
    for (int a = 0; a <= 30; ++a) {
      for (int b = 0; a + b <= 30; ++b) {
        double oracle = 0.0;
        for (int k = 1; k <= a; ++k) oracle += harm_rate_oracle(a, k, s) * ((a - k) * (b + k) - a * b);
        for (int k = 1; k <= b; ++k) oracle += harm_rate_oracle(b, k, s) * ((a + k) * (b - k) - a * b);
        EXPECT_NEAR(generator_product(spec, a, b), oracle, 1e-8) << a << " " << b << " " << s;
      }
    }
  }
}

TEST(GeneratorProduct, GkmpMatchesKernel) {
  RngStream rng(22, 0);
  for (double s : {0.1, 0.5, 1.0, 3.0}) {
    const ModelSpec spec(ModelKind::gKMP, s);
    for (int i = 0; i < 40; ++i) {
      const double a = rng.uniform() * 50;
      const double b = rng.uniform() * 50;
      EXPECT_NEAR(generator_product_kernel(spec, a, b), generator_product(spec, a, b), 1e-8);
    }
  }
}

TEST(Current, Examples) {
  const Configuration c{ParticleConfig{{4, 2, 3}}};
  EXPECT_DOUBLE_EQ(instantaneous_current({ModelKind::Harm, 1.0}, c, 0), -1.0);
  RngStream rng(23, 0);
  for (const auto& spec : all_models()) {
    const Configuration r = draw_config(spec, rng, 12, 20);
    double sum = 0.0;
    for (std::size_t x = 0; x < 12; ++x) sum += instantaneous_current(spec, r, x);
    EXPECT_NEAR(sum, 0.0, 1e-10);
  }
}

TEST(BondFluctuation, KeyBoundOnRandomPairs) {
  RngStream rng(24, 0);
  for (const auto& spec : all_models()) {
    const double d = diffusion_coefficient(spec);
    for (int i = 0; i < 2000; ++i) {
      const double a = draw_value(spec, rng, 100);
      const double b = draw_value(spec, rng, 100);
      const double f = bond_fluctuation(spec, a, b);
      EXPECT_NEAR(f, d * (a - b) * (a - b) - generator_product(spec, a, b), 1e-9 * (1 + a * a + b * b));
      EXPECT_LE(f, d * (a * a + b * b) * (1 + 1e-12));
      EXPECT_GE(f, -1e-9);
    }
  }
}

TEST(ParticleArguments, NonIntegerRejected) {
  EXPECT_THROW(generator_product_kernel({ModelKind::dKMP, 0.5}, 1.5, 2.0), std::invalid_argument);
}
