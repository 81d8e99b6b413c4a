#include "nlprecode/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "nlprecode/rate_graph.hpp"
#include "nlprecode/rng.hpp"

namespace nlprecode::gnn {

using nlohmann::json;

std::vector<int> GnnArch::dims() const {
  require(layers >= 2, Errc::invalid_dimensions, "need at least two layers");
  std::vector<int> d(static_cast<std::size_t>(layers) + 1, hidden);
  d.front() = in_features;
  d.back() = out_features;
  return d;
}

std::int64_t GnnArch::param_count() const {
  const auto d = dims();
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 1 < d.size(); ++l)
    n += 3ll * d[l + 1] * d[l];
  return n;
}

double SnrFeatureSpec::value(double snr_db) const {
  if (linear_scale)
    return std::pow(10.0, snr_db / 10.0) / std::pow(10.0, snr_max_db / 10.0);
  return std::clamp(snr_db / snr_max_db, -1.0, 1.0);
}

GnnParams init_params(const GnnArch& arch, std::uint64_t seed) {
  const auto d = arch.dims();
  GnnParams p;
  p.layers.resize(static_cast<std::size_t>(arch.layers));
  for (int l = 0; l < arch.layers; ++l) {
    const int rows = d[static_cast<std::size_t>(l) + 1];
    const int cols = d[static_cast<std::size_t>(l)];
    const double bound = std::sqrt(6.0 / (rows + cols));
    auto& layer = p.layers[static_cast<std::size_t>(l)];
    Mat* mats[3] = {&layer.w_edge, &layer.w_m, &layer.w_k};
    for (int j = 0; j < 3; ++j) {
      rng::SplitMix64 gen(
          rng::derive_seed(seed, static_cast<std::uint64_t>(l) * 3 + static_cast<std::uint64_t>(j)));
      Mat& m = *mats[j];
      m.resize(rows, cols);
      for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = bound * (2.0 * gen.next_unit() - 1.0);
    }
  }
  return p;
}

void check_shapes(const GnnArch& arch, const GnnParams& params) {
  const auto d = arch.dims();
  require(params.layers.size() == static_cast<std::size_t>(arch.layers), Errc::shape_mismatch,
          "layer count differs from architecture");
  for (int l = 0; l < arch.layers; ++l) {
    const auto& layer = params.layers[static_cast<std::size_t>(l)];
    for (const Mat* m : {&layer.w_edge, &layer.w_m, &layer.w_k})
      require(m->rows() == d[static_cast<std::size_t>(l) + 1] &&
                  m->cols() == d[static_cast<std::size_t>(l)],
              Errc::shape_mismatch, "weight shape differs from architecture");
  }
}

namespace {

// Column e = m*K + k. The mean over edges sharing antenna m (or user k) is a
// right-multiplication by a constant MK x MK matrix.
Mat pool_matrix(int M, int K, bool over_users, bool include_self) {
  const int E = M * K;
  Mat p = Mat::Zero(E, E);
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) {
      const int e = m * K + k;
      if (over_users) {
        const int count = include_self ? K : K - 1;
        if (count == 0) continue;
        for (int k2 = 0; k2 < K; ++k2) {
          if (!include_self && k2 == k) continue;
          p(m * K + k2, e) = 1.0 / count;
        }
      } else {
        const int count = include_self ? M : M - 1;
        if (count == 0) continue;
        for (int m2 = 0; m2 < M; ++m2) {
          if (!include_self && m2 == m) continue;
          p(m2 * K + k, e) = 1.0 / count;
        }
      }
    }
  return p;
}

// Message-passing layers on a column-blocked batch; returns the final
// feature node (out_features x B*M*K).
int network_core(ad::Tape& t, const GnnArch& arch, const GnnParams& params,
                 const std::vector<const CMat*>& hs, const std::vector<double>& snr_feature,
                 bool train, std::vector<std::array<int, 3>>* weight_ids) {
  check_shapes(arch, params);
  const int B = static_cast<int>(hs.size());
  require(B > 0, Errc::invalid_dimensions, "empty batch");
  require(arch.in_features == 2 || snr_feature.size() == hs.size(), Errc::shape_mismatch,
          "SNR feature must be supplied per sample when in_features == 3");
  const int M = static_cast<int>(hs[0]->rows());
  const int K = static_cast<int>(hs[0]->cols());
  const int E = M * K;

  Mat z0(arch.in_features, static_cast<Eigen::Index>(B) * E);
  for (int b = 0; b < B; ++b) {
    const CMat& h = *hs[static_cast<std::size_t>(b)];
    require(h.rows() == M && h.cols() == K, Errc::dimension_mismatch,
            "batch channels must share dimensions");
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) {
        const int e = b * E + m * K + k;
        z0(0, e) = h(m, k).real();
        z0(1, e) = h(m, k).imag();
        if (arch.in_features == 3) z0(2, e) = snr_feature[static_cast<std::size_t>(b)];
      }
  }

  const int pm = t.leaf(pool_matrix(M, K, /*over_users=*/true, arch.include_self));
  const int pk = t.leaf(pool_matrix(M, K, /*over_users=*/false, arch.include_self));

  int z = t.leaf(z0);
  for (int l = 0; l < arch.layers; ++l) {
    const auto& layer = params.layers[static_cast<std::size_t>(l)];
    const int we = t.leaf(layer.w_edge, train);
    const int wm = t.leaf(layer.w_m, train);
    const int wk = t.leaf(layer.w_k, train);
    if (weight_ids) weight_ids->push_back({we, wm, wk});

    const int zm = t.matmul_blocks(z, pm);
    const int zk = t.matmul_blocks(z, pk);
    const int u = t.add3(t.matmul(we, z), t.matmul(wm, zm), t.matmul(wk, zk));
    z = (l + 1 < arch.layers) ? t.leaky_relu(u, arch.leaky_slope) : u;
  }
  return z;
}

}  // namespace

BatchForwardRec forward_node_batch(ad::Tape& t, const GnnArch& arch, const GnnParams& params,
                                   const std::vector<const CMat*>& hs, double p_t,
                                   const std::vector<double>& snr_feature, bool train) {
  const int B = static_cast<int>(hs.size());
  require(B > 0, Errc::invalid_dimensions, "empty batch");
  const int M = static_cast<int>(hs[0]->rows());
  const int K = static_cast<int>(hs[0]->cols());
  const int E = M * K;

  BatchForwardRec rec;
  const int z = network_core(t, arch, params, hs, snr_feature, train, &rec.weight_ids);
  rec.w_norm.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const ad::Cx w_raw = {t.take_row_reshape(z, 0, M, K, b * E),
                          t.take_row_reshape(z, 1, M, K, b * E)};
    rec.w_norm.push_back(rate_graph::normalize_power_node(t, w_raw, p_t));
  }
  return rec;
}

ForwardRec forward_node(ad::Tape& t, const GnnArch& arch, const GnnParams& params,
                        const CMat& h, double p_t, std::optional<double> snr_feature,
                        bool train) {
  require((arch.in_features == 3) == snr_feature.has_value(), Errc::shape_mismatch,
          "SNR feature must be supplied exactly when in_features == 3");
  std::vector<double> snrf;
  if (snr_feature) snrf.push_back(*snr_feature);
  const std::vector<const CMat*> hs{&h};
  BatchForwardRec batch = forward_node_batch(t, arch, params, hs, p_t, snrf, train);
  ForwardRec rec;
  rec.w_norm = batch.w_norm[0];
  rec.weight_ids = std::move(batch.weight_ids);
  return rec;
}

PrecodingMatrix forward(const GnnArch& arch, const GnnParams& params, const CMat& h,
                        double p_t, std::optional<double> snr_feature) {
  ad::Tape t;
  const ForwardRec rec = forward_node(t, arch, params, h, p_t, snr_feature, /*train=*/false);
  return PrecodingMatrix{ad::cx_val(t, rec.w_norm), p_t};
}

namespace {

constexpr int kReduceGroups = 16;  // fixed: reduction order independent of threads

struct GradAccum {
  std::vector<GnnParams::Layer> g;
  double loss_sum = 0.0;
  std::int64_t count = 0;

  void init(const GnnArch& arch) {
    const auto d = arch.dims();
    g.resize(static_cast<std::size_t>(arch.layers));
    for (int l = 0; l < arch.layers; ++l) {
      const int rows = d[static_cast<std::size_t>(l) + 1];
      const int cols = d[static_cast<std::size_t>(l)];
      g[static_cast<std::size_t>(l)].w_edge = Mat::Zero(rows, cols);
      g[static_cast<std::size_t>(l)].w_m = Mat::Zero(rows, cols);
      g[static_cast<std::size_t>(l)].w_k = Mat::Zero(rows, cols);
    }
  }
};

// Summed loss (and gradient) of a slice of examples on one batched tape:
// sum_i -R_sum(forward(h_i)). The raw network output blocks feed the blocked
// rate graph, which performs the per-sample power normalization itself.
double group_loss_grad(const GnnArch& arch, const GnnParams& params,
                       const std::vector<const CMat*>& hs, const pa::PolynomialPa& pa,
                       double p_t, const double* sigma2, const double* snrf, GradAccum* acc) {
  const int B = static_cast<int>(hs.size());
  const int M = static_cast<int>(hs[0]->rows());
  const int K = static_cast<int>(hs[0]->cols());

  ad::Tape t;
  std::vector<double> feat;
  if (arch.in_features == 3) feat.assign(snrf, snrf + hs.size());
  std::vector<std::array<int, 3>> weight_ids;
  const int z = network_core(t, arch, params, hs, feat, acc != nullptr, &weight_ids);
  const ad::Cx w_blocks = {t.take_row_blocks(z, 0, M, K, B), t.take_row_blocks(z, 1, M, K, B)};
  const int loss = t.neg(rate_graph::sum_rate_node_blocks(t, w_blocks, hs, pa, sigma2, p_t));
  const double value = t.val(loss)(0, 0);
  if (acc) {
    t.backward(loss);
    for (int l = 0; l < arch.layers; ++l) {
      auto& gl = acc->g[static_cast<std::size_t>(l)];
      const auto& ids = weight_ids[static_cast<std::size_t>(l)];
      gl.w_edge += t.grad_of(ids[0]);
      gl.w_m += t.grad_of(ids[1]);
      gl.w_k += t.grad_of(ids[2]);
    }
  }
  return value;
}

}  // namespace

double batch_loss(const GnnArch& arch, const GnnParams& params,
                  const std::vector<const CMat*>& hs, const pa::PolynomialPa& pa, double p_t,
                  const std::vector<double>& sigma2, const std::vector<double>& snr_feature,
                  par::Exec exec) {
  const std::int64_t n = static_cast<std::int64_t>(hs.size());
  require(n > 0, Errc::invalid_dimensions, "empty batch");
  require(sigma2.size() == hs.size(), Errc::dimension_mismatch, "sigma2 per example");

  std::vector<double> partial(kReduceGroups, 0.0);
  par::parallel_for(exec, kReduceGroups, [&](std::int64_t g) {
    const std::int64_t lo = g * n / kReduceGroups;
    const std::int64_t hi = (g + 1) * n / kReduceGroups;
    if (lo >= hi) return;
    const std::vector<const CMat*> slice(hs.begin() + lo, hs.begin() + hi);
    partial[static_cast<std::size_t>(g)] =
        group_loss_grad(arch, params, slice, pa, p_t, sigma2.data() + lo,
                        arch.in_features == 3 ? snr_feature.data() + lo : nullptr, nullptr);
  });
  double total = 0.0;
  for (double s : partial) total += s;
  return total / static_cast<double>(n);
}

namespace {

struct Adam {
  std::vector<GnnParams::Layer> m, v;
  std::int64_t step = 0;

  void init(const GnnArch& arch) {
    GradAccum a;
    a.init(arch);
    m = a.g;
    v = a.g;
  }

  void update(GnnParams& params, const std::vector<GnnParams::Layer>& grad,
              const TrainConfig& cfg, double lr) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      Mat* pw[3] = {&params.layers[l].w_edge, &params.layers[l].w_m, &params.layers[l].w_k};
      const Mat* pg[3] = {&grad[l].w_edge, &grad[l].w_m, &grad[l].w_k};
      Mat* pm[3] = {&m[l].w_edge, &m[l].w_m, &m[l].w_k};
      Mat* pv[3] = {&v[l].w_edge, &v[l].w_m, &v[l].w_k};
      for (int j = 0; j < 3; ++j) {
        *pm[j] = cfg.adam_beta1 * *pm[j] + (1.0 - cfg.adam_beta1) * *pg[j];
        *pv[j] = cfg.adam_beta2 * *pv[j] + (1.0 - cfg.adam_beta2) * pg[j]->cwiseAbs2();
        pw[j]->array() -= lr * (pm[j]->array() / bc1) /
                          ((pv[j]->array() / bc2).sqrt() + cfg.adam_eps);
      }
    }
  }
};

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng::SplitMix64 gen(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

TrainResult train(const GnnArch& arch, const TrainConfig& cfg,
                  const std::vector<CMat>& train_set, const std::vector<CMat>& val_set,
                  const pa::PolynomialPa& pa, double p_t, par::Exec exec) {
  require(!train_set.empty() && static_cast<int>(train_set.size()) >= cfg.batch_size,
          Errc::invalid_dimensions, "dataset smaller than one batch");
  require(!cfg.snr_range || arch.in_features == 3, Errc::shape_mismatch,
          "SNR-range training needs the SNR input feature");

  TrainResult out;
  out.params = init_params(arch, cfg.seed);
  if (cfg.epochs == 0) return out;

  // SNR grid for range training; a single fixed point otherwise.
  std::vector<double> snr_grid;
  if (cfg.snr_range) {
    for (double s = cfg.snr_min_db; s <= cfg.snr_max_db + 1e-9; s += cfg.snr_step_db)
      snr_grid.push_back(s);
  } else {
    snr_grid.push_back(cfg.snr_db);
  }
  auto sigma2_of = [&](double snr_db) { return p_t / std::pow(10.0, snr_db / 10.0); };

  // Validation operating points: fixed round-robin over the grid.
  std::vector<const CMat*> val_ptr;
  std::vector<double> val_sigma2, val_snrf;
  for (std::size_t i = 0; i < val_set.size(); ++i) {
    const double snr = snr_grid[i % snr_grid.size()];
    val_ptr.push_back(&val_set[i]);
    val_sigma2.push_back(sigma2_of(snr));
    val_snrf.push_back(cfg.snr_feature.value(snr));
  }

  GnnParams params = out.params;
  GnnParams best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  Adam adam;
  adam.init(arch);
  double lr = cfg.lr;
  int plateau = 0;
  int stagnant = 0;

  std::vector<GradAccum> groups(kReduceGroups);
  for (auto& g : groups) g.init(arch);

  const std::size_t n_train = train_set.size();
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>(n_train) / cfg.batch_size;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(n_train, rng::derive_seed(cfg.seed, 0x5u + epoch));
    rng::SplitMix64 snr_gen(rng::derive_seed(cfg.seed, 0x900du + epoch));

    double epoch_loss = 0.0;
    for (std::int64_t step = 0; step < steps_per_epoch; ++step) {
      // Assign per-example operating points before the parallel section.
      std::vector<const CMat*> hs(static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> sig(static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> snrf(static_cast<std::size_t>(cfg.batch_size));
      const bool warming = !cfg.snr_range && epoch < cfg.warmup_epochs;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const std::size_t idx = order[static_cast<std::size_t>(step) * cfg.batch_size + b];
        const double snr = cfg.snr_range ? snr_grid[snr_gen.next_u64() % snr_grid.size()]
                                         : (warming ? cfg.warmup_snr_db : snr_grid[0]);
        hs[static_cast<std::size_t>(b)] = &train_set[idx];
        sig[static_cast<std::size_t>(b)] = sigma2_of(snr);
        snrf[static_cast<std::size_t>(b)] = cfg.snr_feature.value(snr);
      }

      par::parallel_for(exec, kReduceGroups, [&](std::int64_t g) {
        GradAccum& acc = groups[static_cast<std::size_t>(g)];
        for (auto& layer : acc.g) {
          layer.w_edge.setZero();
          layer.w_m.setZero();
          layer.w_k.setZero();
        }
        acc.loss_sum = 0.0;
        const std::int64_t lo = g * cfg.batch_size / kReduceGroups;
        const std::int64_t hi = (g + 1) * cfg.batch_size / kReduceGroups;
        if (lo >= hi) return;
        const std::vector<const CMat*> slice(hs.begin() + lo, hs.begin() + hi);
        acc.loss_sum = group_loss_grad(arch, params, slice, pa, p_t, sig.data() + lo,
                                       arch.in_features == 3 ? snrf.data() + lo : nullptr, &acc);
      });

      // Reduce in group order, then average.
      std::vector<GnnParams::Layer> grad = groups[0].g;
      double loss_sum = groups[0].loss_sum;
      for (int g = 1; g < kReduceGroups; ++g) {
        for (std::size_t l = 0; l < grad.size(); ++l) {
          grad[l].w_edge += groups[static_cast<std::size_t>(g)].g[l].w_edge;
          grad[l].w_m += groups[static_cast<std::size_t>(g)].g[l].w_m;
          grad[l].w_k += groups[static_cast<std::size_t>(g)].g[l].w_k;
        }
        loss_sum += groups[static_cast<std::size_t>(g)].loss_sum;
      }
      const double inv_b = 1.0 / cfg.batch_size;
      for (auto& layer : grad) {
        layer.w_edge *= inv_b;
        layer.w_m *= inv_b;
        layer.w_k *= inv_b;
      }
      epoch_loss += loss_sum * inv_b;

      adam.update(params, grad, cfg, lr);
    }
    epoch_loss /= static_cast<double>(steps_per_epoch);

    const double val_loss =
        val_set.empty() ? epoch_loss
                        : batch_loss(arch, params, val_ptr, pa, p_t, val_sigma2, val_snrf, exec);

    if (!std::isfinite(epoch_loss) || !std::isfinite(val_loss)) {
      out.diverged = true;
      break;
    }

    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      best_params = params;
      best_epoch = epoch;
      plateau = 0;
      stagnant = 0;
    } else {
      ++plateau;
      ++stagnant;
      if (plateau >= cfg.plateau_patience) {
        lr *= cfg.plateau_factor;
        plateau = 0;
      }
    }

    out.history.push_back({epoch, epoch_loss, val_loss, best_val, lr});
    if (stagnant >= cfg.early_stop_patience) break;
  }

  out.params = best_epoch >= 0 ? best_params : params;
  out.best_epoch = best_epoch;
  return out;
}

namespace {

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const std::uint8_t* data, std::size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (std::size_t i = 0; i < n; i += 3) {
    std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
    if (i + 1 < n) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<std::uint8_t> b64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<std::uint8_t> out;
  std::uint32_t buf = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=') break;
    const int v = val(c);
    if (v < 0) fail(Errc::io_error, "invalid base64 payload");
    buf = (buf << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((buf >> bits) & 0xff));
    }
  }
  return out;
}

json mat_to_json(const Mat& m) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t u;
    const double d = m(i);  // column-major traversal
    std::memcpy(&u, &d, 8);
    for (int b = 0; b < 8; ++b)
      bytes[static_cast<std::size_t>(i) * 8 + static_cast<std::size_t>(b)] =
          static_cast<std::uint8_t>(u >> (8 * b));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", b64_encode(bytes.data(), bytes.size())}};
}

Mat mat_from_json(const json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto bytes = b64_decode(j.at("data").get<std::string>());
  require(bytes.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8,
          Errc::shape_mismatch, "weight blob size differs from declared shape");
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b)
      u |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i) * 8 +
                                            static_cast<std::size_t>(b)])
           << (8 * b);
    double d;
    std::memcpy(&d, &u, 8);
    m(i) = d;
  }
  return m;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_params(const std::string& path, const GnnArch& arch, const GnnParams& params,
                 const TrainConfig& cfg, std::uint64_t fingerprint) {
  check_shapes(arch, params);
  json j;
  j["format_version"] = kCheckpointVersion;
  j["arch"] = {{"layers", arch.layers},       {"hidden", arch.hidden},
               {"in_features", arch.in_features}, {"out_features", arch.out_features},
               {"leaky_slope", arch.leaky_slope}, {"include_self", arch.include_self}};
  j["train"] = {{"batch_size", cfg.batch_size},
                {"lr", cfg.lr},
                {"plateau_factor", cfg.plateau_factor},
                {"plateau_patience", cfg.plateau_patience},
                {"epochs", cfg.epochs},
                {"early_stop_patience", cfg.early_stop_patience},
                {"seed", cfg.seed},
                {"snr_db", cfg.snr_db},
                {"snr_range", cfg.snr_range},
                {"snr_min_db", cfg.snr_min_db},
                {"snr_max_db", cfg.snr_max_db},
                {"snr_step_db", cfg.snr_step_db},
                {"snr_feature_max_db", cfg.snr_feature.snr_max_db},
                {"snr_feature_linear", cfg.snr_feature.linear_scale}};
  j["dataset_fingerprint"] = fingerprint;
  json layers = json::array();
  for (const auto& l : params.layers)
    layers.push_back({{"w_edge", mat_to_json(l.w_edge)},
                      {"w_m", mat_to_json(l.w_m)},
                      {"w_k", mat_to_json(l.w_k)}});
  j["weights"] = std::move(layers);

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
  if (!f) fail(Errc::io_error, "write failed for " + path);
}

Checkpoint load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(Errc::io_error, std::string("checkpoint parse error: ") + e.what());
  }
  if (j.value("format_version", -1) != kCheckpointVersion)
    fail(Errc::version_mismatch, "unsupported checkpoint version");

  Checkpoint c;
  const json& a = j.at("arch");
  c.arch.layers = a.at("layers").get<int>();
  c.arch.hidden = a.at("hidden").get<int>();
  c.arch.in_features = a.at("in_features").get<int>();
  c.arch.out_features = a.at("out_features").get<int>();
  c.arch.leaky_slope = a.at("leaky_slope").get<double>();
  c.arch.include_self = a.at("include_self").get<bool>();

  const json& tr = j.at("train");
  c.train.batch_size = tr.at("batch_size").get<int>();
  c.train.lr = tr.at("lr").get<double>();
  c.train.plateau_factor = tr.at("plateau_factor").get<double>();
  c.train.plateau_patience = tr.at("plateau_patience").get<int>();
  c.train.epochs = tr.at("epochs").get<int>();
  c.train.early_stop_patience = tr.at("early_stop_patience").get<int>();
  c.train.seed = tr.at("seed").get<std::uint64_t>();
  c.train.snr_db = tr.at("snr_db").get<double>();
  c.train.snr_range = tr.at("snr_range").get<bool>();
  c.train.snr_min_db = tr.at("snr_min_db").get<double>();
  c.train.snr_max_db = tr.at("snr_max_db").get<double>();
  c.train.snr_step_db = tr.at("snr_step_db").get<double>();
  c.train.snr_feature.snr_max_db = tr.at("snr_feature_max_db").get<double>();
  c.train.snr_feature.linear_scale = tr.at("snr_feature_linear").get<bool>();

  c.dataset_fingerprint = j.at("dataset_fingerprint").get<std::uint64_t>();

  for (const json& l : j.at("weights")) {
    GnnParams::Layer layer;
    layer.w_edge = mat_from_json(l.at("w_edge"));
    layer.w_m = mat_from_json(l.at("w_m"));
    layer.w_k = mat_from_json(l.at("w_k"));
    c.params.layers.push_back(std::move(layer));
  }
  check_shapes(c.arch, c.params);
  return c;
}

std::uint64_t dataset_fingerprint(int M, int K, std::uint64_t n, std::uint64_t seed,
                                  std::uint8_t dist_tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  mix(static_cast<std::uint64_t>(M));
  mix(static_cast<std::uint64_t>(K));
  mix(n);
  mix(seed);
  mix(dist_tag);
  return h;
}

}  // namespace nlprecode::gnn
