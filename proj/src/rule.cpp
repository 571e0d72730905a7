#include "sorf/rule.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace sorf {

RuleSegment full_segment(std::span<const std::int32_t> s) {
  RuleSegment seg;
  seg.lo.assign(s.size(), 0);
  seg.hi.resize(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) seg.hi[j] = s[j] - 1;
  return seg;
}

bool segment_valid(const RuleSegment& seg, std::span<const std::int32_t> s) {
  if (seg.lo.size() != s.size() || seg.hi.size() != s.size()) return false;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (seg.lo[j] < 0 || seg.lo[j] > seg.hi[j] || seg.hi[j] > s[j] - 1) return false;
  }
  return true;
}

bool is_full_segment(const RuleSegment& seg, std::span<const std::int32_t> s) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (seg.lo[j] != 0 || seg.hi[j] != s[j] - 1) return false;
  }
  return true;
}

int constrained_feature_count(const RuleSegment& seg, std::span<const std::int32_t> s) {
  int count = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (seg.lo[j] != 0 || seg.hi[j] != s[j] - 1) ++count;
  }
  return count;
}

bool evaluate(const RuleSegment& seg, std::span<const std::int32_t> xbar) {
  if (xbar.size() != seg.lo.size()) {
    throw std::invalid_argument("evaluate: sample dimension mismatch");
  }
  for (std::size_t j = 0; j < xbar.size(); ++j) {
    if (xbar[j] < seg.lo[j] || xbar[j] > seg.hi[j]) return false;
  }
  return true;
}

BigUint count_all_segments(std::span<const std::int32_t> s) {
  BigUint total(1);
  for (std::int32_t sj : s) {
    if (sj < 1) throw std::invalid_argument("count_all_segments: alphabet size < 1");
    total *= static_cast<std::uint64_t>(sj) * (sj + 1) / 2;
  }
  return total;
}

BigUint count_all_rules(std::span<const std::int32_t> s) {
  BigUint total = count_all_segments(s);
  total -= BigUint(1);
  return total;
}

BigUint volume(const RuleSegment& seg) {
  BigUint v(1);
  for (int j = 0; j < seg.dim(); ++j) {
    v *= static_cast<std::uint64_t>(seg.hi[j] - seg.lo[j] + 1);
  }
  return v;
}

double jaccard(const RuleSegment& a, const RuleSegment& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("jaccard: dimension mismatch");
  BigUint inter(1);
  bool disjoint = false;
  for (int j = 0; j < a.dim(); ++j) {
    std::int64_t side = std::min(a.hi[j], b.hi[j]) - std::max(a.lo[j], b.lo[j]) + 1;
    if (side <= 0) {
      disjoint = true;
      break;
    }
    inter *= static_cast<std::uint64_t>(side);
  }
  if (disjoint) return 0.0;
  BigUint uni = volume(a) + volume(b) - inter;
  return inter.to_double() / uni.to_double();
}

double similarity(const RuleSet& r1, const RuleSet& r2) {
  if (r1.empty()) throw std::invalid_argument("similarity: first rule set is empty");
  if (r2.empty()) return 0.0;
  double total = 0.0;
  for (const auto& a : r1) {
    double best = 0.0;
    for (const auto& b : r2) best = std::max(best, jaccard(a, b));
    total += best;
  }
  return total / static_cast<double>(r1.size());
}

std::string format_segment(const RuleSegment& seg, std::span<const std::int32_t> s) {
  std::string out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (seg.lo[j] == 0 && seg.hi[j] == s[j] - 1) continue;
    if (!out.empty()) out += " & ";
    out += std::to_string(j);
    out += ':';
    out += std::to_string(seg.lo[j]);
    out += "..";
    out += std::to_string(seg.hi[j]);
  }
  return out.empty() ? "*" : out;
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("parse_segment: bad " + std::string(what) + " '" +
                                std::string(text) + "'");
  }
  return value;
}

std::string_view strip(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
  return v;
}

}  // namespace

RuleSegment parse_segment(const std::string& text, std::span<const std::int32_t> s) {
  RuleSegment seg = full_segment(s);
  std::string_view rest = strip(text);
  if (rest == "*") return seg;
  while (!rest.empty()) {
    std::size_t amp = rest.find('&');
    std::string_view clause = strip(rest.substr(0, amp));
    rest = (amp == std::string_view::npos) ? std::string_view{} : strip(rest.substr(amp + 1));
    std::size_t colon = clause.find(':');
    std::size_t dots = clause.find("..");
    if (colon == std::string_view::npos || dots == std::string_view::npos || dots < colon) {
      throw std::invalid_argument("parse_segment: bad clause '" + std::string(clause) + "'");
    }
    int j = parse_int(strip(clause.substr(0, colon)), "feature index");
    int lo = parse_int(strip(clause.substr(colon + 1, dots - colon - 1)), "lower level");
    int hi = parse_int(strip(clause.substr(dots + 2)), "upper level");
    if (j < 0 || j >= static_cast<int>(s.size())) {
      throw std::invalid_argument("parse_segment: feature index out of range");
    }
    seg.lo[j] = lo;
    seg.hi[j] = hi;
  }
  if (!segment_valid(seg, s)) throw std::invalid_argument("parse_segment: invalid segment");
  return seg;
}

bool tree_order_less(const RuleSegment& a, const RuleSegment& b,
                     std::span<const std::int32_t> s) {
  // Rank of the next op after the shared prefix: decrements before increments
  // within a feature, features ascending, exhausted stream first.
  auto next_rank = [&s](const RuleSegment& seg, int j, bool decs_left, bool incs_left) {
    if (decs_left) return 2 * j;
    if (incs_left) return 2 * j + 1;
    for (std::size_t f = static_cast<std::size_t>(j) + 1; f < s.size(); ++f) {
      if (seg.hi[f] < s[f] - 1) return 2 * static_cast<int>(f);
      if (seg.lo[f] > 0) return 2 * static_cast<int>(f) + 1;
    }
    return -1;  // stream exhausted: ancestor, comes first
  };
  for (std::size_t j = 0; j < s.size(); ++j) {
    int da = s[j] - 1 - a.hi[j], ia = a.lo[j];
    int db = s[j] - 1 - b.hi[j], ib = b.lo[j];
    if (da == db && ia == ib) continue;
    int fj = static_cast<int>(j);
    if (da != db) {
      int m = std::min(da, db);
      int ra = next_rank(a, fj, da > m, ia > 0);
      int rb = next_rank(b, fj, db > m, ib > 0);
      return ra < rb;
    }
    int m = std::min(ia, ib);
    int ra = next_rank(a, fj, false, ia > m);
    int rb = next_rank(b, fj, false, ib > m);
    return ra < rb;
  }
  return false;  // equal
}

}  // namespace sorf
