#pragma once

#include <cstdint>
#include <vector>

#include "nof1/sequences.hpp"
#include "nof1/types.hpp"

namespace nof1 {

// I sequences of K periods, J participants on each, L measurements per period.
struct BalancedDesign {
  SchemeKind scheme = SchemeKind::pairwise;
  std::vector<Sequence> sequences;
  int J = 1;
  int K = 1;
  int L = 1;

  int I() const noexcept { return static_cast<int>(sequences.size()); }
  std::int64_t participants() const noexcept { return std::int64_t{I()} * J; }
  std::int64_t measurements_per_participant() const noexcept { return std::int64_t{K} * L; }
  std::int64_t total_measurements() const noexcept { return participants() * measurements_per_participant(); }

  // Throws ParameterError on an empty sequence list, ragged K or J, L < 1.
  void validate() const;
};

BalancedDesign make_design(const RandomizationScheme& scheme, int K, int J, int L);

}  // namespace nof1
