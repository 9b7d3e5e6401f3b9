#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nof1/types.hpp"

namespace nof1 {

enum class SchemeKind { alternating, pairwise, restricted, unrestricted, manual };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme_kind(std::string_view text);

struct RandomizationScheme {
  SchemeKind kind = SchemeKind::pairwise;
  std::vector<Sequence> manual_sequences;

  // Rejects empty lists, ragged lengths and duplicates.
  static RandomizationScheme manual(std::vector<Sequence> sequences);

  bool is_manual() const noexcept { return kind == SchemeKind::manual; }
  // Alternating, pairwise and restricted designs only use even K in the search.
  bool requires_even_periods() const noexcept {
    return kind == SchemeKind::alternating || kind == SchemeKind::pairwise ||
           kind == SchemeKind::restricted;
  }
};

// Hard ceiling on any single enumeration.
inline constexpr std::uint64_t kMaxEnumeratedSequences = std::uint64_t{1} << 22;

// Number of sequences with K periods. Saturates at UINT64_MAX for absurd K.
std::uint64_t count_sequences(const RandomizationScheme& scheme, int periods);

// Exhaustive, duplicate-free, lexicographically ordered list.
std::vector<Sequence> enumerate_sequences(const RandomizationScheme& scheme, int periods);

// One sequence per line, comma-separated 0/1 tokens; blank lines are skipped.
std::vector<Sequence> parse_sequence_file(std::string_view text);

}  // namespace nof1
