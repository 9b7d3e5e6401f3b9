#include "nof1/sequences.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <set>
#include <string>

#include "nof1/errors.hpp"

namespace nof1 {

namespace {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at each step.
    if (r > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(n - k + i))
      return std::numeric_limits<std::uint64_t>::max();
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::uint64_t pow2(int e) {
  if (e >= 64) return std::numeric_limits<std::uint64_t>::max();
  return std::uint64_t{1} << e;
}

// Bit (K-1-k) of mask is period k, so increasing masks are lexicographic.
Sequence from_mask(std::uint64_t mask, int periods) {
  std::vector<std::uint8_t> a(static_cast<std::size_t>(periods));
  for (int k = 0; k < periods; ++k) a[static_cast<std::size_t>(k)] = (mask >> (periods - 1 - k)) & 1u;
  return Sequence(std::move(a));
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::alternating: return "alternating";
    case SchemeKind::pairwise: return "pairwise";
    case SchemeKind::restricted: return "restricted";
    case SchemeKind::unrestricted: return "unrestricted";
    case SchemeKind::manual: return "manual";
  }
  return "?";
}

SchemeKind parse_scheme_kind(std::string_view text) {
  for (auto k : {SchemeKind::alternating, SchemeKind::pairwise, SchemeKind::restricted,
                 SchemeKind::unrestricted, SchemeKind::manual})
    if (text == to_string(k)) return k;
  throw ParameterError("scheme", "unknown scheme '" + std::string(text) +
                                     "' (alternating|pairwise|restricted|unrestricted|manual)");
}

RandomizationScheme RandomizationScheme::manual(std::vector<Sequence> sequences) {
  if (sequences.empty()) throw ParameterError("sequences", "manual scheme needs at least one sequence");
  const auto K = sequences.front().periods();
  std::set<Sequence> seen;
  for (const auto& s : sequences) {
    if (s.periods() == 0) throw ParameterError("sequences", "sequences must be nonempty");
    if (s.periods() != K) throw ParameterError("sequences", "all sequences must have the same number of periods");
    if (!seen.insert(s).second)
      throw ParameterError("sequences", "duplicate sequence " + s.to_string());
  }
  return RandomizationScheme{SchemeKind::manual, std::move(sequences)};
}

std::uint64_t count_sequences(const RandomizationScheme& scheme, int periods) {
  if (periods < 1) throw ParameterError("K", "period count must be at least 1");
  const bool even = periods % 2 == 0;
  switch (scheme.kind) {
    case SchemeKind::alternating: return 2;
    case SchemeKind::pairwise: return even ? pow2(periods / 2) : pow2((periods + 1) / 2);
    case SchemeKind::restricted: {
      if (even) return binomial(periods, periods / 2);
      const auto half = binomial(periods, (periods - 1) / 2);
      return half > std::numeric_limits<std::uint64_t>::max() / 2 ? std::numeric_limits<std::uint64_t>::max()
                                                                   : 2 * half;
    }
    case SchemeKind::unrestricted: return pow2(periods);
    case SchemeKind::manual:
      if (scheme.manual_sequences.empty() ||
          scheme.manual_sequences.front().periods() != static_cast<std::size_t>(periods))
        throw ParameterError("K", "manual sequences do not have " + std::to_string(periods) + " periods");
      return scheme.manual_sequences.size();
  }
  return 0;
}

std::vector<Sequence> enumerate_sequences(const RandomizationScheme& scheme, int periods) {
  const auto count = count_sequences(scheme, periods);
  if (count > kMaxEnumeratedSequences)
    throw TooLargeError("K", std::to_string(count) + " sequences exceed the enumeration limit; "
                                                     "upload the sequences of interest instead");

  std::vector<Sequence> out;
  out.reserve(static_cast<std::size_t>(count));
  const int K = periods;

  switch (scheme.kind) {
    case SchemeKind::alternating: {
      std::vector<std::uint8_t> a(static_cast<std::size_t>(K));
      for (int first = 0; first <= 1; ++first) {
        for (int k = 0; k < K; ++k) a[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>((first + k) % 2);
        out.emplace_back(a);
      }
      break;
    }
    case SchemeKind::pairwise: {
      // Block bit 1 -> (1,0), 0 -> (0,1); odd K appends a free last period.
      const int blocks = K / 2;
      const int free_tail = K % 2;
      const std::uint64_t n_masks = pow2(blocks + free_tail);
      for (std::uint64_t m = 0; m < n_masks; ++m) {
        std::vector<std::uint8_t> a;
        a.reserve(static_cast<std::size_t>(K));
        for (int b = 0; b < blocks; ++b) {
          const bool bit = (m >> (blocks + free_tail - 1 - b)) & 1u;
          a.push_back(bit ? 1 : 0);
          a.push_back(bit ? 0 : 1);
        }
        if (free_tail) a.push_back(static_cast<std::uint8_t>(m & 1u));
        out.emplace_back(std::move(a));
      }
      break;
    }
    case SchemeKind::restricted: {
      const bool even = K % 2 == 0;
      for (std::uint64_t m = 0; m < pow2(K); ++m) {
        const int ones = std::popcount(m);
        if (even ? ones == K / 2 : (ones == K / 2 || ones == K / 2 + 1)) out.push_back(from_mask(m, K));
      }
      break;
    }
    case SchemeKind::unrestricted:
      for (std::uint64_t m = 0; m < pow2(K); ++m) out.push_back(from_mask(m, K));
      break;
    case SchemeKind::manual:
      out = scheme.manual_sequences;
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Sequence> parse_sequence_file(std::string_view text) {
  std::vector<Sequence> out;
  std::set<Sequence> seen;
  std::size_t width = 0;
  std::size_t line_no = 0;

  for (std::size_t start = 0; start <= text.size();) {
    ++line_no;
    const auto eol = text.find('\n', start);
    const std::string_view line =
        trim(text.substr(start, eol == std::string_view::npos ? std::string_view::npos : eol - start));
    start = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    if (line.empty()) continue;

    std::vector<std::uint8_t> a;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const auto token = trim(rest.substr(0, comma));
      if (token == "0" || token == "1")
        a.push_back(token == "1" ? 1 : 0);
      else
        throw ParseError(line_no, "token '" + std::string(token) + "' is not 0 or 1");
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (width == 0) width = a.size();
    if (a.size() != width)
      throw ParseError(line_no, "sequence has " + std::to_string(a.size()) + " periods, expected " +
                                    std::to_string(width));
    Sequence s(std::move(a));
    if (!seen.insert(s).second) throw ParseError(line_no, "duplicate sequence " + s.to_string());
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ParameterError("sequences", "file contains no sequences");
  return out;
}

}  // namespace nof1
