#include "sparseadv/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace sparseadv {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kLaS:
      return "las";
    case Strategy::kLoF:
      return "lof";
    case Strategy::kHiF:
      return "hif";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "las") return Strategy::kLaS;
  if (name == "lof") return Strategy::kLoF;
  if (name == "hif") return Strategy::kHiF;
  throw RangeError("unknown strategy '" + name + "' (expected las|lof|hif)");
}

namespace {

std::vector<int> top_k_by_magnitude(
    const Eigen::Ref<const Eigen::VectorXd>& coeffs, int k) {
  std::vector<int> order(static_cast<std::size_t>(coeffs.size()));
  std::iota(order.begin(), order.end(), 0);
  // Larger magnitude first; equal magnitudes resolve to the lower index so
  // masks are reproducible across runs.
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](int a, int b) {
                      const double ma = std::abs(coeffs[a]);
                      const double mb = std::abs(coeffs[b]);
                      if (ma != mb) return ma > mb;
                      return a < b;
                    });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

SelectionMask select(const SparseVector& s, Strategy strategy, int k) {
  const int n = static_cast<int>(s.plane());
  if (k < 1 || k > n) {
    throw RangeError("k = " + std::to_string(k) +
                     " outside [1, " + std::to_string(n) + "]");
  }
  SelectionMask mask;
  mask.strategy = strategy;
  mask.k = k;
  mask.indices.resize(static_cast<std::size_t>(s.channels));
  for (int c = 0; c < s.channels; ++c) {
    auto& idx = mask.indices[static_cast<std::size_t>(c)];
    switch (strategy) {
      case Strategy::kLaS:
        idx = top_k_by_magnitude(s.channel(c), k);
        break;
      case Strategy::kLoF:
        idx.resize(static_cast<std::size_t>(k));
        std::iota(idx.begin(), idx.end(), 0);
        break;
      case Strategy::kHiF:
        idx.resize(static_cast<std::size_t>(k));
        std::iota(idx.begin(), idx.end(), n - k);
        break;
    }
  }
  return mask;
}

SparseVector keep_only(const SparseVector& s, const SelectionMask& mask) {
  if (mask.indices.size() != static_cast<std::size_t>(s.channels)) {
    throw ShapeError("mask channel count does not match sparse vector");
  }
  SparseVector out(s.channels, s.height, s.width);
  for (int c = 0; c < s.channels; ++c) {
    auto src = s.channel(c);
    auto dst = out.channel(c);
    for (int i : mask.indices[static_cast<std::size_t>(c)]) {
      if (i < 0 || i >= src.size()) throw RangeError("mask index out of range");
      dst[i] = src[i];
    }
  }
  return out;
}

SparseVector normalize_topk(const SparseVector& s, int k) {
  SparseVector kept = keep_only(s, select(s, Strategy::kLaS, k));
  const double norm = kept.coeffs.norm();
  if (norm == 0.0) {
    throw DegenerateInputError("top-" + std::to_string(k) +
                               " coefficients are all zero");
  }
  kept.coeffs /= norm;
  return kept;
}

std::int64_t count_non_intersecting(const SelectionMask& a,
                                    const SelectionMask& b) {
  if (a.k != b.k) throw RangeError("masks have different k");
  if (a.indices.size() != b.indices.size()) {
    throw ShapeError("masks have different channel counts");
  }
  std::int64_t count = 0;
  for (std::size_t c = 0; c < a.indices.size(); ++c) {
    const std::unordered_set<int> in_b(b.indices[c].begin(),
                                       b.indices[c].end());
    for (int i : a.indices[c]) {
      if (in_b.find(i) == in_b.end()) ++count;
    }
  }
  return count;
}

}  // namespace sparseadv
