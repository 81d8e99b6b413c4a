#include "nlprecode/types.hpp"

namespace nlprecode {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_dimensions: return "invalid-dimensions";
    case Errc::angle_out_of_range: return "angle-out-of-range";
    case Errc::io_error: return "io-error";
    case Errc::bad_magic: return "bad-magic";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::unknown_ibo: return "unknown-ibo";
    case Errc::ill_conditioned_basis: return "ill-conditioned-basis";
    case Errc::zero_matrix: return "zero-matrix";
    case Errc::zero_channel: return "zero-channel";
    case Errc::singular_channel: return "singular-channel";
    case Errc::zero_gain_saturated_antenna: return "zero-gain-saturated-antenna";
    case Errc::no_bracket: return "no-bracket";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::version_mismatch: return "version-mismatch";
    case Errc::negative_snidr: return "negative-snidr";
    case Errc::insufficient_samples: return "insufficient-samples";
    case Errc::divergence: return "divergence";
    case Errc::config_error: return "config-error";
  }
  return "unknown-error";
}

}  // namespace nlprecode
