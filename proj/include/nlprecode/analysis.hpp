#pragma once

#include <cstdint>
#include <string>

#include "nlprecode/gnn.hpp"
#include "nlprecode/pa.hpp"
#include "nlprecode/parallel.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::analysis {

// How the distortion part of the radiation pattern is defined: the
// nonlinear-only polynomial term sum_{n>=1} beta_{2n+1} x|x|^{2n}, or the
// Bussgang residual e = phi(x) - Gx. They differ by the linear-gain
// attribution (G - beta_1 I)x.
enum class DistortionTerm { nonlinear_term, bussgang_residual };

struct RadiationPattern {
  Vec theta_deg;
  Vec p_lin;     // linear units
  Vec p_dist;
  Vec p_sdr_db;  // capped at +300 dB so CSV stays finite for linear PAs
};

inline constexpr double kSdrCapDb = 300.0;

// Steering a_m(theta) = exp(-j m 2 pi (d/lambda) cos theta); pattern value
// a^T C a^*. Analytic covariances for polynomial PAs; Monte-Carlo for any PA.
RadiationPattern radiation_pattern(const CMat& w, const pa::PolynomialPa& pa,
                                   const Vec& theta_deg, double spacing_over_wavelength,
                                   DistortionTerm term = DistortionTerm::nonlinear_term,
                                   par::Exec exec = par::Exec::openmp);

RadiationPattern radiation_pattern_mc(const CMat& w, const pa::PaModel& pa,
                                      const Vec& theta_deg, double spacing_over_wavelength,
                                      DistortionTerm term, std::int64_t n_mc,
                                      std::uint64_t seed, par::Exec exec = par::Exec::openmp);

// Class-B consumed power: p_cons = (sqrt(p_sat)/eta_max) sum_m sqrt(p_out_m).
double pa_consumed_power(const Vec& p_out, double p_sat, double eta_max = 0.785);

struct FlopCount {
  double mults = 0.0;
  double adds = 0.0;
  double flops = 0.0;
  double serial_flops = 0.0;
};

// Closed-form operation counts. d, L apply to "gnn"; P, I apply to "dab".
FlopCount gnn_flops(int M, int K, int d, int L);
FlopCount zf_flops(int M, int K);
FlopCount dab_flops(int M, int K, int P, int I);
FlopCount flops(const std::string& precoder, int M, int K, int d = 128, int L = 8, int P = 50,
                int I = 1000);

// Instrumented forward pass: runs the real network and tallies multiplies
// and additions at each arithmetic site. The accounting mirrors the
// complexity model: weight matmuls and the three-term combination everywhere,
// message aggregation for the input and hidden layers; the output layer's
// aggregation additions are tallied separately in final_msg_adds (the model
// does not charge them). Means' 1/|N| scalings and activations are not
// counted.
struct CountedForward {
  std::int64_t mults = 0;
  std::int64_t adds = 0;
  std::int64_t final_msg_adds = 0;
};

CountedForward count_gnn_forward(const gnn::GnnArch& arch, const gnn::GnnParams& params,
                                 const CMat& h);

struct DspSizing {
  double coherence_s = 0.0;
  double ops_per_s = 0.0;
};

// T_c = 1/(2 f_m), f_m = (v/c) f_c with c = 3e8 m/s; required accelerator
// rate = flops_per_pass / (duty_fraction * T_c).
DspSizing dsp_sizing(double carrier_hz, double velocity_mps, double flops_per_pass,
                     double duty_fraction = 0.10);

}  // namespace nlprecode::analysis
