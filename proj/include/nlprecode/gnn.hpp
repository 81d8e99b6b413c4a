#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlprecode/autodiff.hpp"
#include "nlprecode/pa.hpp"
#include "nlprecode/parallel.hpp"
#include "nlprecode/precoding.hpp"
#include "nlprecode/types.hpp"

namespace nlprecode::gnn {

// Edge message-passing network: one hidden state per (antenna, user) edge.
// `layers` counts weight applications: in_features -> hidden -> ... -> out.
struct GnnArch {
  int layers = 8;
  int hidden = 128;
  int in_features = 2;  // 3 with the SNR input feature
  int out_features = 2;
  double leaky_slope = 0.01;
  bool include_self = true;  // edge (m,k) participates in both of its means

  std::vector<int> dims() const;   // feature widths, length layers+1
  std::int64_t param_count() const;
};

struct GnnParams {
  struct Layer {
    Mat w_edge, w_m, w_k;  // each d_out x d_in
  };
  std::vector<Layer> layers;
};

GnnParams init_params(const GnnArch& arch, std::uint64_t seed);
void check_shapes(const GnnArch& arch, const GnnParams& params);

// Normalized-SNR input feature. Default dB scaling: snr_db / snr_max_db,
// clamped to [-1, 1]; the literal linear ratio scaling sits behind the flag.
struct SnrFeatureSpec {
  double snr_max_db = 30.0;
  bool linear_scale = false;

  double value(double snr_db) const;
};

struct ForwardRec {
  ad::Cx w_norm;                               // normalized precoder nodes
  std::vector<std::array<int, 3>> weight_ids;  // (w_edge, w_m, w_k) node ids per layer
};

// Records the forward pass on the tape. Weight leaves need gradients iff
// `train`. The SNR feature must be present exactly when in_features == 3.
ForwardRec forward_node(ad::Tape& t, const GnnArch& arch, const GnnParams& params,
                        const CMat& h, double p_t, std::optional<double> snr_feature,
                        bool train);

// Batched variant: all channels share (M, K) and are laid out as column
// blocks of one feature matrix, so the weight multiplications run as wide
// GEMMs and each weight matrix appears as a single leaf.
struct BatchForwardRec {
  std::vector<ad::Cx> w_norm;  // per sample
  std::vector<std::array<int, 3>> weight_ids;
};

BatchForwardRec forward_node_batch(ad::Tape& t, const GnnArch& arch, const GnnParams& params,
                                   const std::vector<const CMat*>& hs, double p_t,
                                   const std::vector<double>& snr_feature, bool train);

// Convenience inference path (scratch tape).
PrecodingMatrix forward(const GnnArch& arch, const GnnParams& params, const CMat& h,
                        double p_t, std::optional<double> snr_feature = std::nullopt);

// Mean negative sum rate over a batch; the self-supervised training loss.
double batch_loss(const GnnArch& arch, const GnnParams& params,
                  const std::vector<const CMat*>& hs, const pa::PolynomialPa& pa, double p_t,
                  const std::vector<double>& sigma2, const std::vector<double>& snr_feature,
                  par::Exec exec = par::Exec::openmp);

struct TrainConfig {
  int batch_size = 64;
  double lr = 5e-3;
  double plateau_factor = 0.5;
  int plateau_patience = 3;
  int epochs = 50;
  int early_stop_patience = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  // Fixed operating point...
  double snr_db = 20.0;
  // ...or a training grid snr_min..snr_max step snr_step when snr_range is
  // set (requires arch.in_features == 3).
  bool snr_range = false;
  double snr_min_db = -30.0;
  double snr_max_db = 30.0;
  double snr_step_db = 5.0;
  SnrFeatureSpec snr_feature;
  // Optional curriculum for hard fixed-SNR points: the first warmup_epochs
  // train at warmup_snr_db before switching to snr_db. Validation always
  // runs at the target operating point.
  int warmup_epochs = 0;
  double warmup_snr_db = 20.0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double best_val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  GnnParams params;  // best validation loss
  std::vector<EpochStats> history;
  int best_epoch = -1;
  bool diverged = false;
};

// Self-supervised training: minimizes -mean R_sum(forward(H)) with Adam.
// Deterministic given cfg.seed for any thread count: per-example gradients
// are accumulated into a fixed number of groups and reduced in group order.
TrainResult train(const GnnArch& arch, const TrainConfig& cfg,
                  const std::vector<CMat>& train_set, const std::vector<CMat>& val_set,
                  const pa::PolynomialPa& pa, double p_t,
                  par::Exec exec = par::Exec::openmp);

// Checkpoint: JSON header (arch, train config, seed, dataset fingerprint)
// plus base64 little-endian f64 blobs per weight matrix.
void save_params(const std::string& path, const GnnArch& arch, const GnnParams& params,
                 const TrainConfig& cfg, std::uint64_t dataset_fingerprint);

struct Checkpoint {
  GnnArch arch;
  GnnParams params;
  TrainConfig train;
  std::uint64_t dataset_fingerprint = 0;
};

Checkpoint load_params(const std::string& path);

// FNV-1a over the dataset header fields; recorded in checkpoints.
std::uint64_t dataset_fingerprint(int M, int K, std::uint64_t n, std::uint64_t seed,
                                  std::uint8_t dist_tag);

}  // namespace nlprecode::gnn
