#ifndef SPARSEADV_SELECTION_HPP
#define SPARSEADV_SELECTION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sparseadv/dct.hpp"

namespace sparseadv {

// LaS: k largest coefficients by absolute value (ties to the lower index).
// LoF: the k lowest-frequency coefficients, i.e. indices 0..k-1.
// HiF: the k highest-frequency coefficients, i.e. indices N-k..N-1.
enum class Strategy { kLaS, kLoF, kHiF };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// A k-subset of coefficient indices per channel, ascending within a channel.
struct SelectionMask {
  Strategy strategy = Strategy::kLaS;
  int k = 0;
  std::vector<std::vector<int>> indices;
};

// Deterministic mask per strategy. Throws RangeError unless 1 <= k <= N.
SelectionMask select(const SparseVector& s, Strategy strategy, int k);

// Zeroes every coefficient outside the mask.
SparseVector keep_only(const SparseVector& s, const SelectionMask& mask);

// Keeps only the k largest coefficients per channel, then scales the whole
// vector to unit Euclidean norm. Throws DegenerateInputError when every
// retained coefficient is zero.
SparseVector normalize_topk(const SparseVector& s, int k);

// |a \ b| summed over channels. Both masks must share the same k.
std::int64_t count_non_intersecting(const SelectionMask& a,
                                    const SelectionMask& b);

}  // namespace sparseadv

#endif  // SPARSEADV_SELECTION_HPP
