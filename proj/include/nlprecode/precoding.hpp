#pragma once

#include "nlprecode/types.hpp"

namespace nlprecode {

// Linear precoder W (M x K) with its total input-power budget
// Tr(W W^H) <= p_t. Precoders built by normalize_power meet the budget with
// equality; the distortion-aware optimizer instead meets the post-amplifier
// power constraint and may exceed the input budget slightly.
struct PrecodingMatrix {
  CMat w;
  double p_t = 0.0;
};

inline double input_power(const CMat& w) { return w.squaredNorm(); }

}  // namespace nlprecode
