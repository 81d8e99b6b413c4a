// nlprecode: experiment harness for distortion-aware massive-MIMO precoding.
// Subcommands generate channel datasets, fit amplifier models, train and
// evaluate the edge-GNN precoder, and emit plot-ready CSV/JSON artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nlprecode/analysis.hpp"
#include "nlprecode/bussgang.hpp"
#include "nlprecode/channel.hpp"
#include "nlprecode/dab.hpp"
#include "nlprecode/gnn.hpp"
#include "nlprecode/pa.hpp"
#include "nlprecode/precoders.hpp"
#include "nlprecode/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nlprecode;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

[[noreturn]] void config_fail(const std::string& what) {
  throw Error(Errc::config_error, what);
}

// ---------------------------------------------------------------------------
// Configuration

struct PaConfig {
  std::string kind = "appendix11";  // linear | poly3 | appendix11 | fit | rapp | softlimiter
  int order_index = 5;
  std::int64_t n_fit = 100000;
  bool grid_fit = false;
  bool fix_beta1 = false;
};

struct ExperimentConfig {
  int M = 16;
  int K = 2;
  double p_t = -1.0;  // default M
  double p_in = 1.0;
  double ibo_db = -3.0;
  double snr_db = 20.0;
  std::uint64_t seed = 1;
  PaConfig pa;
  gnn::GnnArch arch;
  gnn::TrainConfig train;
  std::string train_channels, val_channels, test_channels;
  std::string checkpoint;
  json raw;

  double budget() const { return p_t > 0 ? p_t : static_cast<double>(M); }
  double sigma2(double snr) const { return budget() / std::pow(10.0, snr / 10.0); }
};

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(where + "/" + key + ": wrong type");
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.raw = j;
  read_field(j, "M", c.M, "");
  read_field(j, "K", c.K, "");
  read_field(j, "p_t", c.p_t, "");
  read_field(j, "p_in", c.p_in, "");
  read_field(j, "ibo_db", c.ibo_db, "");
  read_field(j, "snr_db", c.snr_db, "");
  read_field(j, "seed", c.seed, "");
  if (c.M < 1 || c.K < 1 || c.K > c.M) config_fail("/M,/K: need M >= K >= 1");

  if (j.contains("pa")) {
    const json& p = j.at("pa");
    read_field(p, "kind", c.pa.kind, "/pa");
    read_field(p, "order_index", c.pa.order_index, "/pa");
    read_field(p, "n_fit", c.pa.n_fit, "/pa");
    read_field(p, "grid_fit", c.pa.grid_fit, "/pa");
    read_field(p, "fix_beta1", c.pa.fix_beta1, "/pa");
  }
  if (j.contains("arch")) {
    const json& a = j.at("arch");
    read_field(a, "layers", c.arch.layers, "/arch");
    read_field(a, "hidden", c.arch.hidden, "/arch");
    read_field(a, "in_features", c.arch.in_features, "/arch");
    read_field(a, "leaky_slope", c.arch.leaky_slope, "/arch");
    read_field(a, "include_self", c.arch.include_self, "/arch");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    read_field(t, "batch_size", c.train.batch_size, "/train");
    read_field(t, "lr", c.train.lr, "/train");
    read_field(t, "epochs", c.train.epochs, "/train");
    read_field(t, "plateau_factor", c.train.plateau_factor, "/train");
    read_field(t, "plateau_patience", c.train.plateau_patience, "/train");
    read_field(t, "early_stop_patience", c.train.early_stop_patience, "/train");
    read_field(t, "snr_range", c.train.snr_range, "/train");
    read_field(t, "snr_min_db", c.train.snr_min_db, "/train");
    read_field(t, "snr_max_db", c.train.snr_max_db, "/train");
    read_field(t, "snr_step_db", c.train.snr_step_db, "/train");
    read_field(t, "snr_feature_linear", c.train.snr_feature.linear_scale, "/train");
    read_field(t, "warmup_epochs", c.train.warmup_epochs, "/train");
    read_field(t, "warmup_snr_db", c.train.warmup_snr_db, "/train");
    if (c.train.batch_size < 1 || c.train.lr <= 0 || c.train.epochs < 0)
      config_fail("/train: sizes and rates must be positive");
  }
  if (j.contains("channels")) {
    const json& ch = j.at("channels");
    read_field(ch, "train", c.train_channels, "/channels");
    read_field(ch, "val", c.val_channels, "/channels");
    read_field(ch, "test", c.test_channels, "/channels");
  }
  read_field(j, "checkpoint", c.checkpoint, "");
  c.train.seed = c.seed;
  c.train.snr_db = c.snr_db;
  if (c.train.snr_range) c.arch.in_features = 3;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return parse_config(json::object());
  std::ifstream f(path);
  if (!f) config_fail("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return parse_config(json::parse(text));
  } catch (const json::parse_error& e) {
    // byte offset -> line:column for a precise message
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    config_fail(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

pa::PaModel make_pa(const ExperimentConfig& c) {
  const pa::IboSpec spec{c.ibo_db, c.p_in};
  if (c.pa.kind == "linear") return pa::PolynomialPa{{cplx(1.0, 0.0)}};
  if (c.pa.kind == "poly3")
    return pa::PolynomialPa{{cplx(1.0, 0.0), cplx(-0.07781605, -0.0401193)}};
  if (c.pa.kind == "appendix11") return pa::appendix_coeffs(c.ibo_db);
  if (c.pa.kind == "rapp") {
    pa::RappPa r;
    r.p_sat = pa::psat_from_ibo(spec);
    return r;
  }
  if (c.pa.kind == "softlimiter") return pa::SoftLimiterPa{pa::psat_from_ibo(spec)};
  if (c.pa.kind == "fit") {
    pa::RappPa r;
    r.p_sat = pa::psat_from_ibo(spec);
    return pa::fit_polynomial(r, spec, c.pa.order_index, c.pa.n_fit, c.seed,
                              c.pa.grid_fit ? pa::FitMethod::amplitude_grid
                                            : pa::FitMethod::gaussian,
                              c.pa.fix_beta1)
        .pa;
  }
  config_fail("/pa/kind: unknown kind '" + c.pa.kind + "'");
}

pa::PolynomialPa require_polynomial(const pa::PaModel& m, const std::string& what) {
  if (const auto* p = std::get_if<pa::PolynomialPa>(&m)) return *p;
  config_fail(what + " needs a polynomial PA model");
}

// ---------------------------------------------------------------------------
// Run manifest

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

fs::path prepare_out_dir(const std::string& out, const std::string& command,
                         const ExperimentConfig& c) {
  fs::path dir(out.empty() ? "out" : out);
  fs::create_directories(dir);
  json manifest;
  manifest["tool"] = "nlprecode";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["config"] = c.raw.is_null() ? json::object() : c.raw;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(c.raw.dump() + command)));
  manifest["config_hash"] = std::string(hex);
  manifest["seeds"] = {{"seed", c.seed}};
  manifest["threads"] = par::max_threads();
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2) << "\n";
  return dir;
}

std::ofstream open_csv(const fs::path& p, const std::string& header) {
  std::ofstream f(p);
  if (!f) fail(Errc::io_error, "cannot open " + p.string());
  f << header << "\n";
  return f;
}

// ---------------------------------------------------------------------------
// Shared evaluation helpers

std::vector<CMat> load_set(const std::string& path, const ExperimentConfig& c,
                           const char* what) {
  if (path.empty()) config_fail(std::string("/channels/") + what + ": missing dataset path");
  const auto set = channel::load_channels(path);
  if (set.M != c.M || set.K != c.K)
    config_fail(std::string("dataset ") + path + " is " + std::to_string(set.M) + "x" +
                std::to_string(set.K) + ", config wants " + std::to_string(c.M) + "x" +
                std::to_string(c.K));
  return set.samples;
}

struct GnnModel {
  gnn::GnnArch arch;
  gnn::GnnParams params;
  gnn::TrainConfig train;
};

GnnModel load_model(const ExperimentConfig& c) {
  if (c.checkpoint.empty()) config_fail("/checkpoint: a trained checkpoint path is required");
  auto ck = gnn::load_params(c.checkpoint);
  return {ck.arch, std::move(ck.params), ck.train};
}

json metrics_to_json(const bussgang::LinkMetrics& m) {
  json users = json::array();
  for (Eigen::Index k = 0; k < m.snidr.size(); ++k)
    users.push_back({{"snidr", m.snidr(k)},
                     {"desired", m.desired(k)},
                     {"interference", m.interference.size() ? m.interference(k) : 0.0},
                     {"distortion", m.distortion(k)}});
  return json{{"sum_rate", m.sum_rate}, {"noise", m.noise}, {"users", users}};
}

struct EvalOptions {
  std::int64_t n_mc = 0;  // 0 = analytic (polynomial PA only)
  dab::DabConfig dab;
  bussgang::LinkMetrics* first_metrics = nullptr;  // per-user breakdown, channel 0
  std::vector<dab::TracePoint>* dab_trace = nullptr;
};

// Mean sum rate of a named precoder over a channel set.
double mean_rate(const std::string& name, const std::vector<CMat>& hs,
                 const ExperimentConfig& c, const pa::PaModel& pa_model, double sigma2,
                 const GnnModel* model, const EvalOptions& opt) {
  const double p_t = c.budget();
  const auto* poly = std::get_if<pa::PolynomialPa>(&pa_model);
  const bool analytic = poly != nullptr && opt.n_mc <= 0;
  if (name == "gnn" && model == nullptr) config_fail("gnn evaluation needs a checkpoint");

  std::vector<double> rates(hs.size());
  par::parallel_for(par::Exec::openmp, static_cast<std::int64_t>(hs.size()), [&](std::int64_t i) {
    const CMat& h = hs[static_cast<std::size_t>(i)];
    CMat w;
    if (name == "zf") {
      w = precoders::zf(h, p_t).w;
    } else if (name == "mrt") {
      w = precoders::mrt(h, p_t).w;
    } else if (name == "z3ro") {
      w = precoders::z3ro(h, p_t, 1).w;
    } else if (name == "gnn") {
      std::optional<double> feat;
      if (model->arch.in_features == 3)
        feat = model->train.snr_feature.value(10.0 * std::log10(p_t / sigma2));
      w = gnn::forward(model->arch, model->params, h, p_t, feat).w;
    } else if (name == "dab") {
      auto res = dab::dab_precode(h, require_polynomial(pa_model, "dab"), {sigma2}, p_t,
                                  opt.dab, par::Exec::serial);
      if (i == 0 && opt.dab_trace) *opt.dab_trace = std::move(res.trace);
      w = res.w.w;
    } else {
      config_fail("unknown precoder '" + name + "'");
    }
    const auto metrics =
        analytic ? bussgang::snidr_analytic(h, w, *poly, {sigma2})
                 : bussgang::snidr_mc(h, w, pa_model, {sigma2}, opt.n_mc,
                                      rng::derive_seed(c.seed, static_cast<std::uint64_t>(i)),
                                      par::Exec::serial);
    if (i == 0 && opt.first_metrics) *opt.first_metrics = metrics;
    rates[static_cast<std::size_t>(i)] = metrics.sum_rate;
  });
  double sum = 0.0;
  for (double r : rates) sum += r;
  return sum / static_cast<double>(hs.size());
}

double mean_rate(const std::string& name, const std::vector<CMat>& hs,
                 const ExperimentConfig& c, const pa::PaModel& pa_model, double sigma2,
                 const GnnModel* model, std::int64_t n_mc = 0) {
  EvalOptions opt;
  opt.n_mc = n_mc;
  opt.dab.seed = c.seed;
  opt.dab.restarts = 8;
  opt.dab.iterations = 200;
  return mean_rate(name, hs, c, pa_model, sigma2, model, opt);
}

double parse_number(const std::string& s, const std::string& spec) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) config_fail("sweep '" + spec + "': bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    config_fail("sweep '" + spec + "': bad number '" + s + "'");
  }
}

std::vector<double> parse_sweep(const std::string& spec) {
  // "lo..hi:step" or a comma list
  std::vector<double> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const auto colon = spec.find(':', dots);
    if (colon == std::string::npos) config_fail("sweep '" + spec + "': expected lo..hi:step");
    const double lo = parse_number(spec.substr(0, dots), spec);
    const double hi = parse_number(spec.substr(dots + 2, colon - dots - 2), spec);
    const double step = parse_number(spec.substr(colon + 1), spec);
    if (step <= 0) config_fail("sweep step must be positive");
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::size_t pos = 0;
  while (pos < spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    out.push_back(parse_number(spec.substr(pos, comma - pos), spec));
    pos = comma + 1;
  }
  if (out.empty()) config_fail("empty sweep spec");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    out.push_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_channels(const ExperimentConfig& c, const std::string& out_dir, std::int64_t n,
                     const std::string& dist, const std::vector<double>& angles,
                     const std::string& out_file) {
  const auto dir = prepare_out_dir(out_dir, "gen-channels", c);
  const fs::path path = out_file.empty() ? dir / "channels.mmc" : fs::path(out_file);
  channel::ChannelSet set;
  if (dist == "rayleigh") {
    set = channel::gen_rayleigh(c.M, c.K, n, c.seed);
  } else if (dist == "los") {
    // angles fixed from the flag, or drawn per sample from the integer grid
    // {0..180} degrees
    set.M = c.M;
    set.K = c.K;
    set.seed = c.seed;
    set.dist = channel::Dist::los;
    rng::SplitMix64 gen(c.seed);
    for (std::int64_t i = 0; i < n; ++i) {
      channel::LosGeometry geom;
      if (!angles.empty()) {
        geom.user_angles_deg = angles;
      } else {
        for (int k = 0; k < c.K; ++k)
          geom.user_angles_deg.push_back(static_cast<double>(gen.next_u64() % 181));
      }
      set.samples.push_back(channel::gen_los(c.M, geom));
    }
  } else {
    config_fail("--dist must be rayleigh or los");
  }
  channel::save_channels(set, path.string());
  std::printf("wrote %lld %dx%d %s channels to %s\n", static_cast<long long>(n), c.M, c.K,
              dist.c_str(), path.string().c_str());
  return 0;
}

int cmd_pa_fit(const ExperimentConfig& c, const std::string& out_dir) {
  const auto dir = prepare_out_dir(out_dir, "pa-fit", c);
  const pa::IboSpec spec{c.ibo_db, c.p_in};
  pa::RappPa rapp;
  rapp.p_sat = pa::psat_from_ibo(spec);
  const auto fit = pa::fit_polynomial(rapp, spec, c.pa.order_index, c.pa.n_fit, c.seed,
                                      c.pa.grid_fit ? pa::FitMethod::amplitude_grid
                                                    : pa::FitMethod::gaussian,
                                      c.pa.fix_beta1);
  json out;
  out["kind"] = "poly";
  out["ibo_db"] = c.ibo_db;
  out["p_in"] = c.p_in;
  out["order_index"] = c.pa.order_index;
  out["condition"] = fit.condition;
  out["residual_rms"] = fit.residual_rms;
  json coeffs = json::array();
  for (const cplx& b : fit.pa.coeffs) coeffs.push_back({{"re", b.real()}, {"im", b.imag()}});
  out["coeffs"] = coeffs;
  std::ofstream f(dir / "pa_fit.json");
  f << out.dump(2) << "\n";
  std::printf("fit order %d at %.1f dB: residual rms %.3e, condition %.3e\n", c.pa.order_index,
              c.ibo_db, fit.residual_rms, fit.condition);
  return 0;
}

int cmd_pa_dump_table(const std::string& out_dir, const ExperimentConfig& c) {
  const auto dir = prepare_out_dir(out_dir, "pa-dump-table", c);
  auto f = open_csv(dir / "pa_table.csv", "ibo_db,coeff,re,im");
  for (double ibo : pa::appendix_ibo_grid()) {
    const auto row = pa::appendix_coeffs(ibo);
    for (std::size_t i = 0; i < row.coeffs.size(); ++i) {
      char line[160];
      std::snprintf(line, sizeof line, "%.1f,beta%zu,%.10g,%.10g", ibo, 2 * i + 1,
                    row.coeffs[i].real(), row.coeffs[i].imag());
      f << line << "\n";
    }
  }
  std::printf("wrote %s\n", (dir / "pa_table.csv").string().c_str());
  return 0;
}

int cmd_train(ExperimentConfig c, const std::string& out_dir) {
  const auto dir = prepare_out_dir(out_dir, "train", c);
  const auto pa_model = make_pa(c);
  const auto poly = require_polynomial(pa_model, "training");
  const auto train_set = load_set(c.train_channels, c, "train");
  std::vector<CMat> val_set;
  if (!c.val_channels.empty()) val_set = load_set(c.val_channels, c, "val");

  const auto res =
      gnn::train(c.arch, c.train, train_set, val_set, poly, c.budget(), par::Exec::openmp);
  if (res.diverged)
    std::fprintf(stderr, "warning: training diverged; keeping the best checkpoint\n");

  const auto src = channel::load_channels(c.train_channels);
  const auto fp = gnn::dataset_fingerprint(src.M, src.K, src.samples.size(), src.seed,
                                           static_cast<std::uint8_t>(src.dist));
  gnn::save_params((dir / "checkpoint.json").string(), c.arch, res.params, c.train, fp);

  auto hist = open_csv(dir / "history.csv", "epoch,train_loss,val_loss,best_val_loss,lr");
  for (const auto& e : res.history) {
    char line[160];
    std::snprintf(line, sizeof line, "%d,%.8f,%.8f,%.8f,%.3e", e.epoch, e.train_loss,
                  e.val_loss, e.best_val_loss, e.lr);
    hist << line << "\n";
  }
  std::printf("trained %zu epochs (best %d); checkpoint at %s\n", res.history.size(),
              res.best_epoch, (dir / "checkpoint.json").string().c_str());
  return 0;
}

int cmd_eval(const ExperimentConfig& c, const std::string& out_dir,
             const std::string& precoders_list, const std::string& snr_sweep,
             const EvalOptions& base_opt) {
  const auto dir = prepare_out_dir(out_dir, "eval", c);
  const auto pa_model = make_pa(c);
  const auto test_set = load_set(c.test_channels, c, "test");
  const auto names = split_list(precoders_list);
  const auto snrs = parse_sweep(snr_sweep);

  std::optional<GnnModel> model;
  for (const auto& n : names)
    if (n == "gnn" && !model) model = load_model(c);

  auto csv = open_csv(dir / "eval.csv", "snr_db,precoder,sum_rate");
  json metrics = json::array();
  std::vector<dab::TracePoint> dab_trace;
  for (double snr : snrs) {
    for (const auto& name : names) {
      EvalOptions opt = base_opt;
      opt.dab.seed = c.seed;
      bussgang::LinkMetrics first;
      opt.first_metrics = &first;
      if (name == "dab" && dab_trace.empty()) opt.dab_trace = &dab_trace;
      const double r = mean_rate(name, test_set, c, pa_model, c.sigma2(snr),
                                 model ? &*model : nullptr, opt);
      char line[128];
      std::snprintf(line, sizeof line, "%.2f,%s,%.6f", snr, name.c_str(), r);
      csv << line << "\n";
      json entry = metrics_to_json(first);
      entry["snr_db"] = snr;
      entry["precoder"] = name;
      entry["channel_index"] = 0;
      metrics.push_back(std::move(entry));
      std::printf("snr %+6.2f dB  %-5s %.4f bits\n", snr, name.c_str(), r);
    }
  }
  std::ofstream mj(dir / "metrics.json");
  mj << metrics.dump(2) << "\n";
  if (!dab_trace.empty()) {
    auto tr = open_csv(dir / "dab_trace.csv", "restart,iteration,objective");
    for (const auto& pt : dab_trace) {
      char line[96];
      std::snprintf(line, sizeof line, "%d,%d,%.8f", pt.restart, pt.iteration, pt.objective);
      tr << line << "\n";
    }
  }
  return 0;
}

int cmd_sweep_ibo(ExperimentConfig c, const std::string& out_dir,
                  const std::string& precoders_list, const std::string& ibo_list,
                  bool retrain) {
  const auto dir = prepare_out_dir(out_dir, "sweep-ibo", c);
  const auto test_set = load_set(c.test_channels, c, "test");
  const auto names = split_list(precoders_list);
  const auto ibos = ibo_list.empty() ? pa::appendix_ibo_grid() : parse_sweep(ibo_list);

  std::optional<GnnModel> model;
  std::vector<CMat> train_set, val_set;
  for (const auto& n : names) {
    if (n != "gnn") continue;
    if (retrain) {
      train_set = load_set(c.train_channels, c, "train");
      if (!c.val_channels.empty()) val_set = load_set(c.val_channels, c, "val");
    } else {
      model = load_model(c);
    }
  }

  auto csv = open_csv(dir / "sweep_ibo.csv", "ibo_db,precoder,sum_rate");
  for (double ibo : ibos) {
    ExperimentConfig ci = c;
    ci.ibo_db = ibo;
    const auto pa_model = make_pa(ci);
    GnnModel per_point;
    if (retrain && !train_set.empty()) {
      const auto poly = require_polynomial(pa_model, "training");
      auto res = gnn::train(ci.arch, ci.train, train_set, val_set, poly, ci.budget());
      per_point = {ci.arch, std::move(res.params), ci.train};
    }
    for (const auto& name : names) {
      const GnnModel* m =
          name == "gnn" ? (retrain ? &per_point : &*model) : nullptr;
      const double r = mean_rate(name, test_set, ci, pa_model, ci.sigma2(c.snr_db), m, 0);
      char line[128];
      std::snprintf(line, sizeof line, "%.2f,%s,%.6f", ibo, name.c_str(), r);
      csv << line << "\n";
      std::printf("ibo %+5.1f dB  %-5s %.4f bits\n", ibo, name.c_str(), r);
    }
  }
  return 0;
}

int cmd_radiation(const ExperimentConfig& c, const std::string& out_dir,
                  const std::string& precoder, const std::vector<double>& angles,
                  double grid_step) {
  const auto dir = prepare_out_dir(out_dir, "radiation", c);
  channel::LosGeometry geom;
  geom.user_angles_deg = angles;
  const CMat h = channel::gen_los(c.M, geom);
  const double p_t = c.budget();

  CMat w;
  std::optional<GnnModel> model;
  if (precoder == "mrt") {
    w = precoders::mrt(h, p_t).w;
  } else if (precoder == "zf") {
    w = precoders::zf(h, p_t).w;
  } else if (precoder == "z3ro") {
    w = precoders::z3ro(h, p_t, 1).w;
  } else if (precoder == "gnn") {
    model = load_model(c);
    std::optional<double> feat;
    if (model->arch.in_features == 3) feat = model->train.snr_feature.value(c.snr_db);
    w = gnn::forward(model->arch, model->params, h, p_t, feat).w;
  } else {
    config_fail("unknown precoder '" + precoder + "'");
  }

  const int n = static_cast<int>(std::floor(180.0 / grid_step)) + 1;
  Vec grid(n);
  for (int i = 0; i < n; ++i) grid(i) = i * grid_step;
  const auto poly = require_polynomial(make_pa(c), "radiation analysis");
  const auto pat = analysis::radiation_pattern(w, poly, grid, 0.5);

  auto csv = open_csv(dir / ("pattern_" + precoder + ".csv"),
                      "theta_deg,p_lin_db,p_dist_db,p_sdr_db");
  for (int i = 0; i < n; ++i) {
    const double lin_db = pat.p_lin(i) > 0 ? 10.0 * std::log10(pat.p_lin(i)) : -300.0;
    const double dist_db = pat.p_dist(i) > 0 ? 10.0 * std::log10(pat.p_dist(i)) : -300.0;
    char line[160];
    std::snprintf(line, sizeof line, "%.3f,%.6f,%.6f,%.6f", pat.theta_deg(i), lin_db, dist_db,
                  pat.p_sdr_db(i));
    csv << line << "\n";
  }
  std::printf("wrote pattern for %s over %d angles\n", precoder.c_str(), n);
  return 0;
}

int cmd_power(const ExperimentConfig& c, const std::string& out_dir,
              const std::string& precoders_list, const std::string& ibo_list) {
  const auto dir = prepare_out_dir(out_dir, "power", c);
  const auto test_set = load_set(c.test_channels, c, "test");
  const auto names = split_list(precoders_list);
  const auto ibos = ibo_list.empty() ? pa::appendix_ibo_grid() : parse_sweep(ibo_list);
  const double p_t = c.budget();

  std::optional<GnnModel> model;
  for (const auto& n : names)
    if (n == "gnn" && !model) model = load_model(c);

  auto pcons_csv = open_csv(dir / "pcons_vs_ibo.csv", "ibo_db,precoder,p_cons");
  auto rate_csv = open_csv(dir / "rate_vs_pcons.csv", "precoder,ibo_db,sum_rate,p_cons");
  for (double ibo : ibos) {
    ExperimentConfig ci = c;
    ci.ibo_db = ibo;
    const auto poly = require_polynomial(make_pa(ci), "power analysis");
    const double p_sat = pa::psat_from_ibo({ibo, c.p_in});
    const double sigma2 = ci.sigma2(c.snr_db);
    for (const auto& name : names) {
      double rate_sum = 0.0, pcons_sum = 0.0;
      for (std::size_t i = 0; i < test_set.size(); ++i) {
        const CMat& h = test_set[i];
        CMat w;
        if (name == "zf") {
          w = precoders::zf(h, p_t).w;
        } else if (name == "mrt") {
          w = precoders::mrt(h, p_t).w;
        } else if (name == "gnn") {
          std::optional<double> feat;
          if (model->arch.in_features == 3) feat = model->train.snr_feature.value(c.snr_db);
          w = gnn::forward(model->arch, model->params, h, p_t, feat).w;
        } else {
          config_fail("power sweep supports zf, mrt, gnn");
        }
        rate_sum += bussgang::snidr_analytic(h, w, poly, {sigma2}).sum_rate;
        pcons_sum +=
            analysis::pa_consumed_power(bussgang::output_power_analytic(w, poly), p_sat);
      }
      const double rate = rate_sum / test_set.size();
      const double pcons = pcons_sum / test_set.size();
      char line[160];
      std::snprintf(line, sizeof line, "%.2f,%s,%.6f", ibo, name.c_str(), pcons);
      pcons_csv << line << "\n";
      std::snprintf(line, sizeof line, "%s,%.2f,%.6f,%.6f", name.c_str(), ibo, rate, pcons);
      rate_csv << line << "\n";
      std::printf("ibo %+5.1f  %-4s rate %.4f bits  p_cons %.4f\n", ibo, name.c_str(), rate,
                  pcons);
    }
  }
  return 0;
}

int cmd_complexity(const ExperimentConfig& c, const std::string& out_dir, int d, int L, int P,
                   int I) {
  const auto dir = prepare_out_dir(out_dir, "complexity", c);
  json out;
  for (const char* name : {"gnn", "zf", "dab"}) {
    const auto f = analysis::flops(name, c.M, c.K, d, L, P, I);
    out[name] = {{"mults", f.mults},
                 {"adds", f.adds},
                 {"flops", f.flops},
                 {"serial_flops", f.serial_flops}};
  }
  out["dab_over_gnn"] = out["dab"]["flops"].get<double>() / out["gnn"]["flops"].get<double>();
  const auto sz = analysis::dsp_sizing(5e9, 10.0, out["gnn"]["flops"].get<double>(), 0.10);
  out["dsp_sizing"] = {{"coherence_s", sz.coherence_s}, {"ops_per_s", sz.ops_per_s}};
  std::ofstream f(dir / "complexity.json");
  f << out.dump(2) << "\n";
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_validate_rapp(const ExperimentConfig& c, const std::string& out_dir,
                      const std::string& precoders_list, std::int64_t n_mc) {
  const auto dir = prepare_out_dir(out_dir, "validate-rapp", c);
  const auto test_set = load_set(c.test_channels, c, "test");
  const auto names = split_list(precoders_list);

  const pa::IboSpec spec{c.ibo_db, c.p_in};
  pa::RappPa rapp;
  rapp.p_sat = pa::psat_from_ibo(spec);
  const pa::PaModel rapp_model = rapp;
  const auto poly_model = make_pa(c);

  std::optional<GnnModel> model;
  for (const auto& n : names)
    if (n == "gnn" && !model) model = load_model(c);

  auto csv = open_csv(dir / "validate_rapp.csv", "precoder,pa_model,sum_rate");
  for (const auto& name : names) {
    const double r_poly = mean_rate(name, test_set, c, poly_model, c.sigma2(c.snr_db),
                                    model ? &*model : nullptr, n_mc);
    const double r_rapp = mean_rate(name, test_set, c, rapp_model, c.sigma2(c.snr_db),
                                    model ? &*model : nullptr, n_mc);
    char line[160];
    std::snprintf(line, sizeof line, "%s,poly,%.6f", name.c_str(), r_poly);
    csv << line << "\n";
    std::snprintf(line, sizeof line, "%s,rapp,%.6f", name.c_str(), r_rapp);
    csv << line << "\n";
    std::printf("%-5s poly %.4f bits | rapp %.4f bits | ratio %.4f\n", name.c_str(), r_poly,
                r_rapp, r_rapp / r_poly);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distortion-aware massive-MIMO precoding laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config JSON");
  app.add_option("--out", out_dir, "output directory (default ./out)");
  app.add_option("--threads", threads, "cap worker threads (overrides NLPRECODE_THREADS)");

  auto* gen = app.add_subcommand("gen-channels", "generate a channel dataset");
  gen->fallthrough();
  std::int64_t gen_n = 1000;
  std::string gen_dist = "rayleigh", gen_out_file;
  std::vector<double> gen_angles;
  int opt_m = 0, opt_k = 0;
  long long opt_seed = -1;
  gen->add_option("--n", gen_n, "number of realizations");
  gen->add_option("--dist", gen_dist, "rayleigh | los");
  gen->add_option("--angles", gen_angles, "fixed user angles in degrees (los)");
  gen->add_option("--file", gen_out_file, "output dataset path");
  gen->add_option("--M", opt_m, "antennas (overrides config)");
  gen->add_option("--K", opt_k, "users (overrides config)");
  gen->add_option("--seed", opt_seed, "seed (overrides config)");

  auto* pa_cmd = app.add_subcommand("pa", "amplifier model tools");
  pa_cmd->fallthrough();
  pa_cmd->require_subcommand(1);
  auto* pa_fit = pa_cmd->add_subcommand("fit", "fit the polynomial model to the Rapp model");
  pa_fit->fallthrough();
  double fit_ibo = -3.0;
  int fit_order = 5;
  std::int64_t fit_n = 100000;
  bool fit_grid = false, fit_fix_b1 = false;
  pa_fit->add_option("--ibo", fit_ibo, "operating back-off in dB");
  pa_fit->add_option("--order-index", fit_order, "N: polynomial order 2N+1");
  pa_fit->add_option("--n-fit", fit_n, "fit sample count");
  pa_fit->add_flag("--grid-fit", fit_grid, "uniform amplitude design instead of Gaussian");
  pa_fit->add_flag("--fix-b1", fit_fix_b1, "pin beta_1 = 1");
  auto* pa_dump = pa_cmd->add_subcommand("dump-table", "dump the bundled 11th-order table");
  pa_dump->fallthrough();

  auto* train_cmd = app.add_subcommand("train", "train the edge-GNN precoder");
  train_cmd->fallthrough();

  auto* eval_cmd = app.add_subcommand("eval", "precoder x SNR rate sweep");
  eval_cmd->fallthrough();
  std::string eval_precoders = "zf,mrt";
  std::string eval_snr = "-10..30:5";
  std::int64_t eval_nmc = 0;
  int dab_restarts = 8, dab_iters = 200;
  std::string dab_step = "backtracking";
  bool dab_fd = false;
  eval_cmd->add_option("--precoders", eval_precoders, "comma list: zf,mrt,z3ro,gnn,dab");
  eval_cmd->add_option("--snr-db", eval_snr, "sweep lo..hi:step or comma list");
  eval_cmd->add_option("--n-mc", eval_nmc, "Monte-Carlo symbols (0 = analytic)");
  eval_cmd->add_option("--restarts", dab_restarts, "dab: gradient-ascent restarts");
  eval_cmd->add_option("--iters", dab_iters, "dab: iterations per restart");
  eval_cmd->add_option("--step", dab_step, "dab: backtracking | decaying | fixed");
  eval_cmd->add_flag("--fd", dab_fd, "dab: finite-difference gradients");

  auto* sweep_cmd = app.add_subcommand("sweep-ibo", "rate vs back-off sweep");
  sweep_cmd->fallthrough();
  std::string sweep_precoders = "zf,gnn";
  std::string sweep_ibos;
  bool sweep_retrain = false;
  sweep_cmd->add_option("--precoders", sweep_precoders, "comma list");
  sweep_cmd->add_option("--ibos", sweep_ibos, "list or lo..hi:step (default: table grid)");
  sweep_cmd->add_flag("--retrain", sweep_retrain, "retrain the network at each point");

  auto* rad_cmd = app.add_subcommand("radiation", "array patterns for a LOS scenario");
  rad_cmd->fallthrough();
  std::string rad_precoder = "mrt";
  std::vector<double> rad_angles{150.0};
  double rad_step = 1.0;
  rad_cmd->add_option("--precoder", rad_precoder, "zf | mrt | z3ro | gnn");
  rad_cmd->add_option("--angles", rad_angles, "user angles in degrees");
  rad_cmd->add_option("--grid", rad_step, "pattern grid step in degrees");

  auto* power_cmd = app.add_subcommand("power", "consumed amplifier power sweeps");
  power_cmd->fallthrough();
  std::string power_precoders = "zf,gnn";
  std::string power_ibos;
  power_cmd->add_option("--precoders", power_precoders, "comma list: zf,mrt,gnn");
  power_cmd->add_option("--ibos", power_ibos, "list or lo..hi:step (default: table grid)");

  auto* cx_cmd = app.add_subcommand("complexity", "operation-count report");
  cx_cmd->fallthrough();
  int cx_d = 128, cx_l = 8, cx_p = 50, cx_i = 1000;
  int cx_m = 0, cx_k = 0;
  cx_cmd->add_option("--M", cx_m, "antennas (overrides config)");
  cx_cmd->add_option("--K", cx_k, "users (overrides config)");
  cx_cmd->add_option("--d", cx_d, "hidden width");
  cx_cmd->add_option("--L", cx_l, "layers");
  cx_cmd->add_option("--P", cx_p, "optimizer restarts");
  cx_cmd->add_option("--I", cx_i, "optimizer iterations");

  auto* rapp_cmd = app.add_subcommand("validate-rapp", "evaluate under the Rapp model");
  rapp_cmd->fallthrough();
  std::string rapp_precoders = "zf,gnn";
  std::int64_t rapp_nmc = 200000;
  rapp_cmd->add_option("--precoders", rapp_precoders, "comma list");
  rapp_cmd->add_option("--n-mc", rapp_nmc, "Monte-Carlo symbols per channel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (threads > 0) par::set_max_threads(threads);
    ExperimentConfig cfg = load_config(config_path);
    if (opt_m > 0) cfg.M = opt_m;
    if (opt_k > 0) cfg.K = opt_k;
    if (opt_seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt_seed);
    if (cx_m > 0) cfg.M = cx_m;
    if (cx_k > 0) cfg.K = cx_k;

    if (gen->parsed())
      return cmd_gen_channels(cfg, out_dir, gen_n, gen_dist, gen_angles, gen_out_file);
    if (pa_cmd->parsed()) {
      if (pa_fit->parsed()) {
        cfg.ibo_db = fit_ibo;
        cfg.pa.order_index = fit_order;
        cfg.pa.n_fit = fit_n;
        cfg.pa.grid_fit = fit_grid;
        cfg.pa.fix_beta1 = fit_fix_b1;
        return cmd_pa_fit(cfg, out_dir);
      }
      if (pa_dump->parsed()) return cmd_pa_dump_table(out_dir, cfg);
    }
    if (train_cmd->parsed()) return cmd_train(cfg, out_dir);
    if (eval_cmd->parsed()) {
      EvalOptions opt;
      opt.n_mc = eval_nmc;
      opt.dab.restarts = dab_restarts;
      opt.dab.iterations = dab_iters;
      opt.dab.gradient =
          dab_fd ? dab::GradientMode::finite_difference : dab::GradientMode::reverse_mode;
      if (dab_step == "backtracking")
        opt.dab.step = dab::StepRule::backtracking;
      else if (dab_step == "decaying")
        opt.dab.step = dab::StepRule::decaying;
      else if (dab_step == "fixed")
        opt.dab.step = dab::StepRule::fixed;
      else
        config_fail("--step must be backtracking, decaying or fixed");
      return cmd_eval(cfg, out_dir, eval_precoders, eval_snr, opt);
    }
    if (sweep_cmd->parsed())
      return cmd_sweep_ibo(cfg, out_dir, sweep_precoders, sweep_ibos, sweep_retrain);
    if (rad_cmd->parsed())
      return cmd_radiation(cfg, out_dir, rad_precoder, rad_angles, rad_step);
    if (power_cmd->parsed()) return cmd_power(cfg, out_dir, power_precoders, power_ibos);
    if (cx_cmd->parsed()) return cmd_complexity(cfg, out_dir, cx_d, cx_l, cx_p, cx_i);
    if (rapp_cmd->parsed()) return cmd_validate_rapp(cfg, out_dir, rapp_precoders, rapp_nmc);
    std::fprintf(stderr, "no subcommand\n");
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == Errc::config_error || e.code() == Errc::io_error ? kExitConfig
                                                                        : kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
}
