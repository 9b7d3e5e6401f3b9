#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "nof1/errors.hpp"
#include "nof1/estimation.hpp"
#include "nof1/kernels.hpp"
#include "nof1/model_assembly.hpp"
#include "nof1/reference.hpp"

using namespace nof1;
using doctest::Approx;

namespace {

const ResidualSpec kIndep{4.0, CorrelationStructure::independent, 0.0};
const ResidualSpec kExch{4.0, CorrelationStructure::exchangeable, 0.5};
const ResidualSpec kAr1{4.0, CorrelationStructure::ar1, 0.4};
const RandomEffectsSpec kReferenceRe{4.0, 1.0, 1.0};

BalancedDesign alternating2(int J, int L = 1) { return make_design({SchemeKind::alternating}, 2, J, L); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

ResidualSpec random_residual(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> var(0.5, 6.0), rho(0.0, 0.8), signed_rho(-0.6, 0.8);
  std::uniform_int_distribution<int> pick(0, 2);
  const auto s = static_cast<CorrelationStructure>(pick(rng));
  return {var(rng), s, s == CorrelationStructure::ar1 ? signed_rho(rng) : rho(rng)};
}

RandomEffectsSpec random_effects(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> v(0.0, 5.0), u(-1.0, 1.0);
  RandomEffectsSpec re{v(rng), v(rng), 0.0};
  re.cov_intercept_slope = u(rng) * std::sqrt(re.var_intercept * re.var_slope);
  return re;
}

std::vector<Sequence> random_sequences(std::mt19937_64& rng, int K, int count) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Sequence> out;
  for (int i = 0; i < count; ++i) {
    std::vector<std::uint8_t> a(static_cast<std::size_t>(K));
    for (auto& x : a) x = coin(rng);
    out.emplace_back(std::move(a));
  }
  return out;
}

}  // namespace

TEST_CASE("population SE examples") {
  CHECK(se_population(alternating2(8), kFixedCommon, {}, kIndep) == Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(se_population(alternating2(8), kFixedCommon, {}, kExch) == Approx(0.5).epsilon(1e-12));
  CHECK(se_population(alternating2(8), kFixedCommon, {}, kAr1) == Approx(std::sqrt(4.8 / 16)).epsilon(1e-12));
  const RandomEffectsSpec no_slope{4.0, 0.0, 0.0};
  CHECK(se_population(alternating2(8), kFixedRandom, no_slope, kAr1) ==
        se_population(alternating2(8), kFixedCommon, no_slope, kAr1));
}

TEST_CASE("closed-form crossover oracle") {
  for (int trial = 0; trial < 60; ++trial) {
    const int K = 2 + trial % 5;
    const int L = 1 + trial % 4;
    const int J = 1 + trial % 3;
    auto seqs = enumerate_sequences({SchemeKind::restricted}, K);
    std::vector<std::vector<int>> plain;
    for (const auto& s : seqs) plain.emplace_back(s.assignments().begin(), s.assignments().end());
    const BalancedDesign d{SchemeKind::restricted, seqs, J, K, L};
    const double sigma2 = 1.0 + trial * 0.1;
    const double rho = (trial % 7) / 10.0;
    const double got_indep =
        se_population(d, kFixedCommon, {}, {sigma2, CorrelationStructure::independent, 0.0});
    const double got_exch = se_population(d, kFixedCommon, {}, {sigma2, CorrelationStructure::exchangeable, rho});
    CHECK(rel(got_indep * got_indep, oracle::fixed_common_variance(plain, J, L, sigma2, 0.0)) < 1e-10);
    CHECK(rel(got_exch * got_exch, oracle::fixed_common_variance(plain, J, L, sigma2, rho)) < 1e-10);
  }
}

TEST_CASE("power function") {
  const PowerRequirement req;
  CHECK(power(1.0 / 2.801585, req) == Approx(0.8).epsilon(1e-3));
  CHECK(power(1e6, req) == Approx(0.05).epsilon(1e-6));
  CHECK(power(1e-6, req) == Approx(1.0));
  PowerRequirement one_tail = req;
  one_tail.include_lower_tail = false;
  CHECK(power(0.4, req) - power(0.4, one_tail) > 0.0);
  CHECK(power(0.4, req) - power(0.4, one_tail) < 1e-5);
  double previous = 1.0;
  for (double se = 0.15; se < 3.0; se += 0.05) {
    const double p = power(se, req);
    CHECK(p < previous);
    previous = p;
  }
  PowerRequirement bigger = req;
  bigger.delta_min = 1.5;
  CHECK(power(0.5, bigger) > power(0.5, req));
  bigger.delta_min = -1.5;
  CHECK(power(0.5, bigger) > power(0.5, req));
  CHECK(critical_standard_error(req) == Approx(1.0 / oracle::kZSum).epsilon(1e-6));
  CHECK(power(critical_standard_error(req), req) == Approx(0.8).epsilon(1e-9));
  CHECK_THROWS_AS(power(0.0, req), ParameterError);
  CHECK_THROWS_AS((power(1.0, PowerRequirement{0.6, 0.5, 1.0, true})), ParameterError);
  CHECK_THROWS_AS((power(1.0, PowerRequirement{0.05, 0.2, 0.0, true})), ParameterError);
}

TEST_CASE("naive SE") {
  CHECK(*se_naive(Sequence{1, 0}, 1, kIndep) == Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK(*se_naive(Sequence{1, 0, 1, 0}, 1, kIndep) == Approx(2.0).epsilon(1e-12));
  CHECK(!se_naive(Sequence{1, 1}, 1, kIndep));
  CHECK(!se_naive(Sequence{0, 0, 0}, 3, kAr1));
  CHECK(*se_naive(Sequence{1, 0, 0, 1}, 3, kAr1) ==
        Approx(*reference::se_naive(Sequence{1, 0, 0, 1}, 3, kAr1)).epsilon(1e-10));
}

TEST_CASE("precision forms match dense inverse") {
  for (auto resid : {kIndep, kExch, kAr1, ResidualSpec{2.0, CorrelationStructure::ar1, -0.7}})
    for (int L : {1, 2, 5}) {
      const Sequence seq{1, 0, 0, 1, 1};
      const auto sigma = build_residual_covariance(resid, 5 * L);
      const Eigen::MatrixXd p = sigma.inverse();
      const Eigen::VectorXd a = treatment_column(seq, L);
      const Eigen::VectorXd one = Eigen::VectorXd::Ones(a.size());
      const auto q = kernels::precision_forms(seq, L, resid);
      CHECK(q.ones_ones == Approx(one.dot(p * one)).epsilon(1e-10));
      CHECK(q.ones_trt == Approx(one.dot(p * a)).epsilon(1e-10));
      CHECK(q.trt_trt == Approx(a.dot(p * a)).epsilon(1e-10));
    }
  const auto q1 = kernels::precision_forms(Sequence{1}, 1, kAr1);
  CHECK(q1.ones_ones == Approx(0.25));
}

TEST_CASE("profiled kernel equals full-matrix reference") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int K = 2 + trial % 4;
    const auto seqs = random_sequences(rng, K, 2 + trial % 3);
    std::vector<int> counts;
    for (std::size_t i = 0; i < seqs.size(); ++i) counts.push_back(1 + static_cast<int>((trial + i) % 3));
    const int L = 1 + trial % 3;
    const auto resid = random_residual(rng);
    const auto re = random_effects(rng);
    for (auto form : kAllModelForms) {
      CAPTURE(trial);
      CAPTURE(form.name());
      double fast = 0.0, slow = 0.0;
      bool fast_ok = true, slow_ok = true;
      try {
        fast = PopulationInformation::build(seqs, counts, L, form, re, resid).var_treatment();
      } catch (const InestimableError&) {
        fast_ok = false;
      }
      try {
        slow = reference::var_population(seqs, counts, L, form, re, resid);
      } catch (const InestimableError&) {
        slow_ok = false;
      }
      REQUIRE(fast_ok == slow_ok);
      if (!fast_ok) continue;
      CHECK(rel(fast, slow) < 1e-10);
      if (!form.random_slopes()) continue;
      const auto info = PopulationInformation::build(seqs, counts, L, form, re, resid);
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        const double f = shrunken_terms(info, i, re).total();
        const double s = reference::var_shrunken(seqs, counts, L, i, counts[i] - 1, form, re, resid);
        CHECK(std::abs(f - s) <= 1e-10 * std::max(1.0, std::abs(s)));
      }
    }
  }
}

TEST_CASE("inestimable designs") {
  const std::vector<Sequence> only_ref{{0, 0, 0, 0}};
  const std::vector<int> one{1};
  for (auto form : kAllModelForms) {
    CHECK_THROWS_AS(PopulationInformation::build(only_ref, one, 2, form, kReferenceRe, kAr1), InestimableError);
    CHECK_THROWS_AS(reference::var_population(only_ref, one, 2, form, kReferenceRe, kAr1), InestimableError);
  }
  // Fixed intercepts absorb between-sequence contrasts, random intercepts do not.
  const std::vector<Sequence> split{{0, 0}, {1, 1}};
  const std::vector<int> two{2, 2};
  CHECK_THROWS_AS(PopulationInformation::build(split, two, 1, kFixedCommon, kReferenceRe, kAr1), InestimableError);
  CHECK_NOTHROW(PopulationInformation::build(split, two, 1, kRandomCommon, kReferenceRe, kAr1));
  CHECK_NOTHROW(PopulationInformation::build(split, two, 1, kRandomRandom, kReferenceRe, kAr1));
  try {
    PopulationInformation::build(only_ref, one, 1, kFixedCommon, kReferenceRe, kAr1);
  } catch (const InestimableError& e) {
    CHECK(e.coordinate() == "delta");
  }
}

TEST_CASE("single-treatment participants still contribute") {
  const std::vector<Sequence> mixed{{1, 0}, {1, 1}};
  const std::vector<Sequence> alone{{1, 0}};
  const std::vector<int> c2{3, 3}, c1{3};
  const double with = PopulationInformation::build(mixed, c2, 2, kRandomRandom, kReferenceRe, kAr1).var_treatment();
  const double without = PopulationInformation::build(alone, c1, 2, kRandomRandom, kReferenceRe, kAr1).var_treatment();
  CHECK(with <= without);
}

TEST_CASE("shrunken variance") {
  const auto design = make_design({SchemeKind::pairwise}, 4, 8, 6);
  const double v = var_shrunken(design, 0, 0, kFixedRandom, kReferenceRe, kAr1);
  CHECK(v >= 0.0);
  CHECK(std::sqrt(v) < 1.0);
  for (int j = 1; j < design.J; ++j) CHECK(var_shrunken(design, 0, j, kFixedRandom, kReferenceRe, kAr1) == v);
  CHECK_THROWS_AS(var_shrunken(design, 0, 0, kFixedCommon, kReferenceRe, kAr1), UnsupportedModelError);
  CHECK_THROWS_AS(var_shrunken(design, 9, 0, kFixedRandom, kReferenceRe, kAr1), ParameterError);

  const RandomEffectsSpec zero{0, 0, 0};
  const double pop = std::pow(se_population(design, kRandomRandom, zero, kAr1), 2);
  CHECK(var_shrunken(design, 1, 0, kRandomRandom, zero, kAr1) == Approx(pop).epsilon(1e-12));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto resid = random_residual(rng);
    const auto re = random_effects(rng);
    const auto d = make_design({SchemeKind::pairwise}, 2 + 2 * (trial % 3), 1 + trial % 4, 1 + trial % 5);
    for (auto form : {kFixedRandom, kRandomRandom}) {
      const std::vector<int> counts(d.sequences.size(), d.J);
      const auto info = PopulationInformation::build(d.sequences, counts, d.L, form, re, resid);
      for (std::size_t i = 0; i < d.sequences.size(); ++i) {
        const auto t = shrunken_terms(info, i, re);
        CHECK(t.total() >= -1e-12);
        CHECK(t.total() <= re.var_slope + t.population + std::abs(t.cross) + 1e-12);
      }
    }
  }
}

TEST_CASE("adding a participant never increases the SE") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> count(0, 3);
  int checked = 0;
  while (checked < 100) {
    const int K = 2 + checked % 5;
    const auto seqs = random_sequences(rng, K, 3);
    std::vector<int> counts{count(rng) + 1, count(rng), count(rng)};
    const auto resid = random_residual(rng);
    const auto re = random_effects(rng);
    const ModelForm form = kAllModelForms[checked % 4];
    double before = 0.0;
    try {
      before = se_population(seqs, counts, 1 + checked % 3, form, re, resid);
    } catch (const InestimableError&) {
      continue;
    }
    ++counts[static_cast<std::size_t>(checked % 3)];
    const double after = se_population(seqs, counts, 1 + checked % 3, form, re, resid);
    CHECK(after <= before * (1.0 + 1e-12));
    ++checked;
  }
}

TEST_CASE("evaluate design") {
  ModelSetup setup;
  const auto design = make_design({SchemeKind::pairwise}, 4, 8, 6);
  const auto ev = evaluate_design(design, setup, true);
  CHECK(ev.power >= 0.8);
  CHECK(ev.meets(setup.requirement));
  REQUIRE(ev.naive_se);
  CHECK(ev.naive_se->size() == 4);
  REQUIRE(ev.naive);
  CHECK(ev.naive->min <= ev.naive->mean);
  CHECK(ev.naive->mean <= ev.naive->max);
  REQUIRE(ev.shrunken_fixed);
  REQUIRE(ev.shrunken_random);
  CHECK(ev.shrunken_fixed->band.max < 1.0);
  CHECK(ev.shrunken_random->band.max <= ev.shrunken_fixed->band.min + 1e-12);
  CHECK(ev.naive->min >= ev.shrunken_fixed->band.max);

  const auto brief = evaluate_design(design, setup, false);
  CHECK(brief.se_population == ev.se_population);
  CHECK(!brief.naive_se);
  CHECK(!brief.shrunken_fixed);
}

TEST_CASE("band") {
  const std::vector<double> v{3, 1, 2};
  const auto b = Band::of(v);
  CHECK(b.min == 1);
  CHECK(b.mean == 2);
  CHECK(b.max == 3);
  CHECK_THROWS_AS((Band::of(std::vector<double>{})), ParameterError);
}
