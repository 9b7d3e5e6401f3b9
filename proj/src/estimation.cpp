#include "nof1/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "nof1/errors.hpp"
#include "nof1/kernels.hpp"

namespace nof1 {

namespace {

// Ratio below which the profiled treatment information counts as zero.
constexpr double kIdentifiedRatio = 1e-10;

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double upper_quantile(double alpha) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

}  // namespace

Band Band::of(std::span<const double> values) {
  if (values.empty()) throw ParameterError("values", "cannot summarise an empty set");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  return Band{*lo, sum / static_cast<double>(values.size()), *hi};
}

void BalancedDesign::validate() const {
  if (sequences.empty()) throw ParameterError("design.sequences", "a design needs at least one sequence");
  if (J < 1) throw ParameterError("design.J", "participants per sequence must be at least 1");
  if (K < 1) throw ParameterError("design.K", "periods per sequence must be at least 1");
  if (L < 1) throw ParameterError("design.L", "measurements per period must be at least 1");
  for (const auto& s : sequences)
    if (s.periods() != static_cast<std::size_t>(K))
      throw ParameterError("design.sequences", "sequence " + s.to_string() + " does not have K = " +
                                                   std::to_string(K) + " periods");
}

BalancedDesign make_design(const RandomizationScheme& scheme, int K, int J, int L) {
  BalancedDesign d{scheme.kind, enumerate_sequences(scheme, K), J, K, L};
  d.validate();
  return d;
}

PopulationInformation::PopulationInformation(std::vector<Eigen::Matrix2d> sequence_information,
                                             std::vector<int> participants_per_sequence, ModelForm form)
    : info_(std::move(sequence_information)), counts_(std::move(participants_per_sequence)), form_(form) {
  if (info_.size() != counts_.size())
    throw ParameterError("participants", "one participant count per sequence is required");
  for (int c : counts_)
    if (c < 0) throw ParameterError("participants", "participant counts must be nonnegative");

  if (form_.fixed_intercepts()) {
    double profiled = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < info_.size(); ++i) {
      const auto& g = info_[i];
      profiled += counts_[i] * (g(1, 1) - g(0, 1) * g(0, 1) / g(0, 0));
      raw += counts_[i] * g(1, 1);
    }
    if (!(raw > 0.0) || !(profiled > kIdentifiedRatio * raw))
      throw InestimableError("delta", "treatment effect is not estimable: no participant contributes "
                                      "within-participant contrast between the two treatments");
    profiled_total_ = profiled;
    var_treatment_ = 1.0 / profiled;
    return;
  }

  Eigen::Matrix2d total = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < info_.size(); ++i) total += counts_[i] * info_[i];
  const double schur = total(0, 0) > 0.0 ? total(1, 1) - total(0, 1) * total(0, 1) / total(0, 0) : 0.0;
  if (!(total(1, 1) > 0.0) || !(schur > kIdentifiedRatio * total(1, 1)))
    throw InestimableError("delta", "treatment effect is not estimable: summed information is singular "
                                    "in the treatment coordinate");
  const Eigen::LLT<Eigen::Matrix2d> llt(total);
  if (llt.info() != Eigen::Success)
    throw InestimableError("delta", "summed information is not positive definite");
  inverse_ = llt.solve(Eigen::Matrix2d::Identity());
  const double residual = (total * inverse_ - Eigen::Matrix2d::Identity()).norm();
  if (!(residual <= 1e-8))
    throw InestimableError("delta", "information solve residual " + std::to_string(residual) + " too large");
  var_treatment_ = inverse_(1, 1);
}

PopulationInformation PopulationInformation::build(std::span<const Sequence> sequences,
                                                   std::span<const int> participants_per_sequence,
                                                   int measurements_per_period, ModelForm form,
                                                   const RandomEffectsSpec& re, const ResidualSpec& resid) {
  resid.validate();
  re.validate();
  auto info = kernels::sequence_information(sequences, measurements_per_period, resid,
                                            kernels::embedded_random_effects(re, form));
  return PopulationInformation(std::move(info),
                               std::vector<int>(participants_per_sequence.begin(), participants_per_sequence.end()),
                               form);
}

Eigen::Matrix2d PopulationInformation::inverse_block(std::size_t i) const {
  if (!form_.fixed_intercepts()) return inverse_;
  // Block inverse of [[diag(A), B], [B', c]] restricted to (m_p, delta).
  const auto& g = info_.at(i);
  const double r = g(0, 1) / g(0, 0);
  const double s = profiled_total_;
  Eigen::Matrix2d v;
  v << 1.0 / g(0, 0) + r * r / s, -r / s, -r / s, 1.0 / s;
  return v;
}

double se_population(std::span<const Sequence> sequences, std::span<const int> participants_per_sequence,
                     int measurements_per_period, ModelForm form, const RandomEffectsSpec& re,
                     const ResidualSpec& resid) {
  const auto info = PopulationInformation::build(sequences, participants_per_sequence, measurements_per_period,
                                                 form, re, resid);
  return std::sqrt(info.var_treatment());
}

double se_population(const BalancedDesign& design, ModelForm form, const RandomEffectsSpec& re,
                     const ResidualSpec& resid) {
  design.validate();
  const std::vector<int> counts(design.sequences.size(), design.J);
  return se_population(design.sequences, counts, design.L, form, re, resid);
}

double power(double se, const PowerRequirement& req) {
  req.validate();
  if (!(se > 0.0)) throw ParameterError("se", "standard error must be positive");
  const double z = upper_quantile(req.alpha);
  const double ratio = req.delta_min / se;
  const double upper = standard_normal_cdf(-z + std::abs(ratio));
  if (!req.include_lower_tail) return upper;
  return standard_normal_cdf(-z - std::abs(ratio)) + upper;
}

double critical_standard_error(const PowerRequirement& req) {
  req.validate();
  const double target = 1.0 - req.beta;
  const double z = upper_quantile(req.alpha);
  const auto achieved = [&](double ratio) {
    const double upper = standard_normal_cdf(-z + ratio);
    return req.include_lower_tail ? standard_normal_cdf(-z - ratio) + upper : upper;
  };
  // achieved() is increasing in ratio; at z_a + z_b it already meets the target.
  double lo = 0.0, hi = z + upper_quantile(2.0 * req.beta) + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (achieved(mid) >= target ? hi : lo) = mid;
  }
  return std::abs(req.delta_min) / hi;
}

std::optional<double> se_naive(const Sequence& seq, int measurements_per_period, const ResidualSpec& resid) {
  resid.validate();
  if (!seq.has_both_treatments()) return std::nullopt;
  const auto q = kernels::precision_forms(seq, measurements_per_period, resid).matrix();
  const double det = q.determinant();
  if (!(det > 0.0)) return std::nullopt;
  return std::sqrt(q(0, 0) / det);
}

ShrunkenTerms shrunken_terms(const PopulationInformation& info, std::size_t target, const RandomEffectsSpec& re) {
  const ModelForm form = info.form();
  if (!form.random_slopes())
    throw UnsupportedModelError("model.slopes", "shrunken estimates require random slopes");

  const Eigen::Matrix2d& g = info.sequence_information(target);
  const Eigen::Matrix2d v = info.inverse_block(target);

  Eigen::MatrixXd e, d, cb;
  if (form.fixed_intercepts()) {
    e = Eigen::Vector2d(0.0, 1.0);
    d = Eigen::MatrixXd::Constant(1, 1, re.var_slope);
    cb = Eigen::MatrixXd::Ones(1, 1);
  } else {
    e = Eigen::Matrix2d::Identity();
    d.resize(2, 2);
    d << re.var_intercept, re.cov_intercept_slope, re.cov_intercept_slope, re.var_slope;
    cb.resize(1, 2);
    cb << 0.0, 1.0;
  }
  const Eigen::MatrixXd h = g * e;                    // X' Sigma^{-1} Z
  const Eigen::MatrixXd f = e.transpose() * g * e;    // Z' Sigma^{-1} Z

  ShrunkenTerms t;
  t.population = v(1, 1);
  t.cross = -2.0 * (v.row(1) * h * d * cb.transpose())(0, 0);
  t.prediction = (cb * (d - d * f * d + d * h.transpose() * v * h * d) * cb.transpose())(0, 0);
  return t;
}

double var_shrunken(const BalancedDesign& design, std::size_t target_sequence, int target_participant,
                    ModelForm form, const RandomEffectsSpec& re, const ResidualSpec& resid) {
  design.validate();
  if (!form.random_slopes())
    throw UnsupportedModelError("model.slopes", "shrunken estimates require random slopes");
  if (target_sequence >= design.sequences.size())
    throw ParameterError("target.sequence", "target sequence index out of range");
  if (target_participant < 0 || target_participant >= design.J)
    throw ParameterError("target.participant", "target participant index out of range");
  const std::vector<int> counts(design.sequences.size(), design.J);
  const auto info = PopulationInformation::build(design.sequences, counts, design.L, form, re, resid);
  return shrunken_terms(info, target_sequence, re).total();
}

namespace {

std::optional<IndividualSe> shrunken_series(const BalancedDesign& design, ModelForm form,
                                            const RandomEffectsSpec& re, const ResidualSpec& resid) {
  const std::vector<int> counts(design.sequences.size(), design.J);
  try {
    const auto info = PopulationInformation::build(design.sequences, counts, design.L, form, re, resid);
    IndividualSe out;
    out.per_sequence.reserve(design.sequences.size());
    for (std::size_t i = 0; i < design.sequences.size(); ++i)
      out.per_sequence.push_back(std::sqrt(std::max(0.0, shrunken_terms(info, i, re).total())));
    out.band = Band::of(out.per_sequence);
    return out;
  } catch (const InestimableError&) {
    return std::nullopt;
  }
}

}  // namespace

DesignEvaluation evaluate_design(const BalancedDesign& design, const ModelSetup& setup, bool include_individual) {
  design.validate();
  setup.validate();

  DesignEvaluation ev;
  ev.se_population = se_population(design, setup.model, setup.random_effects, setup.residual);
  ev.power = power(ev.se_population, setup.requirement);
  if (!include_individual) return ev;

  std::vector<std::optional<double>> naive;
  std::vector<double> estimable;
  naive.reserve(design.sequences.size());
  for (const auto& s : design.sequences) {
    naive.push_back(se_naive(s, design.L, setup.residual));
    if (naive.back()) estimable.push_back(*naive.back());
  }
  ev.naive_se = std::move(naive);
  if (!estimable.empty()) ev.naive = Band::of(estimable);

  ev.shrunken_fixed = shrunken_series(design, kFixedRandom, setup.random_effects, setup.residual);
  ev.shrunken_random = shrunken_series(design, kRandomRandom, setup.random_effects, setup.residual);
  return ev;
}

}  // namespace nof1
