#include "onebit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "onebit/crb.hpp"
#include "onebit/rng.hpp"

namespace onebit {

namespace {

// sub-stream tags under the per-trial seed
constexpr std::uint64_t kChannelStream = 1;
constexpr std::uint64_t kTrainingStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

}  // namespace

TrialInstance make_trial_instance(const ExperimentConfig& config, const SweepPoint& point,
                                  std::size_t trial_index, bool observe) {
  TrialInstance t;
  const std::uint64_t seed = derive_seed(config.base_seed, trial_index);
  t.seed = seed;
  auto& m = t.model;
  m.dims = {config.n_t, config.n_r, point.n_p};
  m.dims.validate();
  m.channel = config.channel_family == ChannelFamily::gaussian
                  ? sample_gaussian_channel(m.dims, config.gaussian,
                                            derive_seed(seed, kChannelStream))
                  : sample_mmwave_channel(m.dims, config.mmwave,
                                          derive_seed(seed, kChannelStream));
  m.training = TrainingBlock::qpsk(config.n_t, point.n_p, derive_seed(seed, kTrainingStream));
  m.cfo_rad = wrap_angle(point.cfo_rad);
  m.noise_var_per_dim =
      calibrate_noise(m.channel, apply_cfo(m.training, m.cfo_rad), point.snr_db);
  if (observe) {
    t.observation = simulate_observation(m, derive_seed(seed, kNoiseStream));
    t.y = realify_matrix(t.observation);
  }
  return t;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class Fn>
void guarded(TrialRecord& rec, const char* stage, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    const std::string msg = std::string(stage) + ": " + e.what();
    rec.status = rec.status == "ok" ? msg : rec.status + "; " + msg;
  }
}

double mean_finite(const std::vector<TrialRecord>& trials, double TrialRecord::*field) {
  double sum = 0.0;
  int count = 0;
  for (const auto& t : trials) {
    const double v = t.*field;
    if (std::isfinite(v)) {
      sum += v;
      ++count;
    }
  }
  return count > 0 ? sum / count : kNaN;
}

double to_db(double linear) {
  if (!std::isfinite(linear)) return kNaN;
  return 10.0 * std::log10(linear);
}

template <class Job>
void run_jobs(std::size_t count, int threads, Job&& job, const ProgressFn& progress) {
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      job(i);
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(d, count);
      }
    }
  };
  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  n = std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (n == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
}

}  // namespace

const char* to_string(Baseline b) {
  switch (b) {
    case Baseline::unknown_cfo: return "unknown-cfo";
    case Baseline::known_cfo: return "known-cfo";
    case Baseline::no_compensation: return "no-compensation";
    case Baseline::detection_only: return "detection-only";
  }
  return "?";
}

Baseline baseline_from_string(const std::string& s) {
  for (Baseline b : {Baseline::unknown_cfo, Baseline::known_cfo, Baseline::no_compensation,
                     Baseline::detection_only}) {
    if (s == to_string(b)) return b;
  }
  throw InvalidParameter("unknown baseline '" + s + "'");
}

const char* to_string(ChannelFamily f) {
  return f == ChannelFamily::gaussian ? "gaussian" : "mmwave";
}

ChannelFamily channel_family_from_string(const std::string& s) {
  if (s == "gaussian") return ChannelFamily::gaussian;
  if (s == "mmwave") return ChannelFamily::mmwave;
  throw InvalidParameter("unknown channel family '" + s + "'");
}

void ExperimentConfig::validate() const {
  SystemDims{n_t, n_r, 1}.validate();
  gaussian.validate();
  if (channel_family == ChannelFamily::mmwave) mmwave.validate();
  if (snr_db_list.empty() || np_list.empty() || cfo_list.empty()) {
    throw InvalidParameter("snr_db_list, np_list and cfo_list must be nonempty");
  }
  for (Index np : np_list) {
    if (np <= 0) throw InvalidDimension("np_list entries must be positive");
  }
  if (n_trials < 1) throw InvalidParameter("n_trials must be >= 1");
  if (objective_grid_size < 3) throw InvalidParameter("objective_grid_size must be >= 3");
  cfo_search.validate();
  gamp.validate();
}

std::vector<double> ExperimentConfig::cfo_values_rad() const {
  std::vector<double> out;
  out.reserve(cfo_list.size());
  for (double v : cfo_list) out.push_back(cfo_as_fraction ? kTwoPi * v : v);
  return out;
}

bool ExperimentConfig::runs(Baseline b) const {
  return std::find(baselines.begin(), baselines.end(), b) != baselines.end();
}

double calibrate_noise(const MatrixXd& d_matrix, const VectorXd& h, double snr_db) {
  const double energy = (d_matrix * h).squaredNorm();
  if (!(energy > 0.0)) throw DegenerateInstance("cannot calibrate SNR: D h is zero");
  return energy / (static_cast<double>(d_matrix.rows()) * std::pow(10.0, snr_db / 10.0));
}

double calibrate_noise(const MatrixXcd& channel, const MatrixXcd& b, double snr_db) {
  const double energy = (channel * b).squaredNorm();
  if (!(energy > 0.0)) throw DegenerateInstance("cannot calibrate SNR: D h is zero");
  const double rows = 2.0 * static_cast<double>(channel.rows() * b.cols());
  return energy / (rows * std::pow(10.0, snr_db / 10.0));
}

double nmse(const MatrixXcd& truth, const MatrixXcd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw InvalidDimension("nmse: shapes differ");
  }
  return (truth - estimate).squaredNorm() / truth.squaredNorm();
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<SweepPoint> points;
  for (double cfo : config.cfo_values_rad()) {
    for (double snr : config.snr_db_list) {
      for (Index np : config.np_list) points.push_back({np, snr, cfo});
    }
  }
  return points;
}

TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point,
                      std::size_t trial_index) {
  TrialRecord rec;
  rec.trial_index = trial_index;
  rec.seed = derive_seed(config.base_seed, trial_index);
  rec.np = point.n_p;
  rec.snr_db = point.snr_db;
  rec.cfo_true = wrap_angle(point.cfo_rad);

  TrialInstance inst;
  try {
    inst = make_trial_instance(config, point, trial_index);
  } catch (const std::exception& e) {
    rec.status = std::string("setup: ") + e.what();
    return rec;
  }
  const auto& model = inst.model;
  rec.sigma_w_sq = model.noise_var_per_dim;

  auto error_sq = [&](double estimate) {
    const double d = config.wrap_cfo_error ? wrapped_difference(estimate, rec.cfo_true)
                                           : estimate - rec.cfo_true;
    return d * d;
  };

  const bool need_stage1 =
      config.runs(Baseline::unknown_cfo) || config.runs(Baseline::detection_only);
  bool have_stage1 = false;
  if (need_stage1) {
    guarded(rec, "cfo", [&] {
      const auto start = std::chrono::steady_clock::now();
      const CfoEstimate est = estimate_cfo(inst.y, model.training, config.cfo_search,
                                           {config.gaussian.sigma_h_sq, rec.sigma_w_sq});
      rec.t_cfo_s = seconds_since(start);
      rec.cfo_hat = est.omega_final;
      rec.refine_iterations = est.iterations_used;
      rec.cfo_sq_err = error_sq(est.omega_final);
      if (config.runs(Baseline::detection_only)) {
        rec.cfo_hat_detection = est.omega_refined;
        rec.cfo_sq_err_detection = error_sq(est.omega_refined);
      }
      have_stage1 = true;
    });
  }

  const MatrixXcd truth = config.channel_family == ChannelFamily::gaussian
                              ? model.channel
                              : to_beamspace(model.channel).c_matrix;
  auto stage2 = [&](double omega) {
    const ChannelSolution sol = estimate_channel(model.training, inst.y, omega, rec.sigma_w_sq,
                                                 config.channel_family, config.gamp);
    rec.gamp_iterations += sol.estimate.iterations_used;
    return nmse(truth, config.channel_family == ChannelFamily::gaussian ? sol.h_hat : sol.c_hat);
  };

  if (config.runs(Baseline::unknown_cfo) && have_stage1) {
    guarded(rec, "channel(unknown-cfo)", [&] {
      rec.omega_unknown_cfo = rec.cfo_hat;
      const auto start = std::chrono::steady_clock::now();
      rec.nmse_unknown_cfo = stage2(rec.omega_unknown_cfo);
      rec.t_chan_s = seconds_since(start);
    });
  }
  if (config.runs(Baseline::known_cfo)) {
    guarded(rec, "channel(known-cfo)", [&] {
      rec.omega_known_cfo = rec.cfo_true;
      rec.nmse_known_cfo = stage2(rec.omega_known_cfo);
    });
  }
  if (config.runs(Baseline::no_compensation)) {
    guarded(rec, "channel(no-compensation)", [&] {
      rec.omega_no_comp = 0.0;
      rec.nmse_no_comp = stage2(rec.omega_no_comp);
    });
  }
  if (config.compute_crb) {
    guarded(rec, "crb", [&] {
      rec.crb = crb_cfo_structured(model.training, model.cfo_rad, realify_matrix(model.channel),
                                   rec.sigma_w_sq, config.n_r)
                    .value;
    });
  }
  return rec;
}

AggregateRow aggregate(const SweepPoint& point, const std::vector<TrialRecord>& trials) {
  AggregateRow row;
  row.point = point;
  row.n_trials = static_cast<int>(trials.size());
  for (const auto& t : trials) {
    if (t.status != "ok") ++row.n_failed;
  }
  row.mse_cfo_db = to_db(mean_finite(trials, &TrialRecord::cfo_sq_err));
  row.mse_cfo_detection_only_db = to_db(mean_finite(trials, &TrialRecord::cfo_sq_err_detection));
  row.crb_db = to_db(mean_finite(trials, &TrialRecord::crb));
  row.nmse_unknown_cfo_db = to_db(mean_finite(trials, &TrialRecord::nmse_unknown_cfo));
  row.nmse_known_cfo_db = to_db(mean_finite(trials, &TrialRecord::nmse_known_cfo));
  row.nmse_no_comp_db = to_db(mean_finite(trials, &TrialRecord::nmse_no_comp));
  row.t_cfo_s = mean_finite(trials, &TrialRecord::t_cfo_s);
  row.t_chan_s = mean_finite(trials, &TrialRecord::t_chan_s);
  return row;
}

SweepResult run_sweep(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto points = sweep_points(config);
  const auto per_point = static_cast<std::size_t>(config.n_trials);
  SweepResult result;
  result.trials.resize(points.size() * per_point);
  run_jobs(
      result.trials.size(), config.threads,
      [&](std::size_t job) {
        result.trials[job] = run_trial(config, points[job / per_point], job % per_point);
      },
      progress);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto first = result.trials.begin() + static_cast<std::ptrdiff_t>(p * per_point);
    const std::vector<TrialRecord> slice(first, first + static_cast<std::ptrdiff_t>(per_point));
    result.rows.push_back(aggregate(points[p], slice));
  }
  return result;
}

SweepResult run_crb_sweep(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto points = sweep_points(config);
  const auto per_point = static_cast<std::size_t>(config.n_trials);
  SweepResult result;
  result.trials.resize(points.size() * per_point);
  run_jobs(
      result.trials.size(), config.threads,
      [&](std::size_t job) {
        const SweepPoint& point = points[job / per_point];
        TrialRecord& rec = result.trials[job];
        rec.trial_index = job % per_point;
        rec.seed = derive_seed(config.base_seed, rec.trial_index);
        rec.np = point.n_p;
        rec.snr_db = point.snr_db;
        rec.cfo_true = wrap_angle(point.cfo_rad);
        guarded(rec, "crb", [&] {
          const auto inst = make_trial_instance(config, point, rec.trial_index, false);
          rec.sigma_w_sq = inst.model.noise_var_per_dim;
          rec.crb = crb_cfo_structured(inst.model.training, inst.model.cfo_rad,
                                       realify_matrix(inst.model.channel), rec.sigma_w_sq,
                                       config.n_r)
                        .value;
        });
      },
      progress);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto first = result.trials.begin() + static_cast<std::ptrdiff_t>(p * per_point);
    const std::vector<TrialRecord> slice(first, first + static_cast<std::ptrdiff_t>(per_point));
    result.rows.push_back(aggregate(points[p], slice));
  }
  return result;
}

void measure_main_lobe(ObjectiveCurve& curve) {
  const auto n = static_cast<std::ptrdiff_t>(curve.value.size());
  if (n < 3) throw InvalidDimension("objective curve needs at least 3 samples");
  const auto& v = curve.value;
  auto at = [&](std::ptrdiff_t k) { return v[static_cast<std::size_t>(((k % n) + n) % n)]; };
  std::ptrdiff_t peak = 0;
  for (std::ptrdiff_t k = 1; k < n; ++k) {
    if (v[static_cast<std::size_t>(k)] > v[static_cast<std::size_t>(peak)]) peak = k;
  }
  const double step = kTwoPi / static_cast<double>(n);
  curve.peak_omega = static_cast<double>(peak) * step;

  // walk downhill to the flanking minima
  std::ptrdiff_t right = 0;
  while (right < n / 2 && at(peak + right + 1) < at(peak + right)) ++right;
  std::ptrdiff_t left = 0;
  while (left < n / 2 && at(peak - left - 1) < at(peak - left)) ++left;
  curve.lobe_width = static_cast<double>(left + right) * step;

  const double half = 0.5 * at(peak);
  auto crossing = [&](int dir) {
    for (std::ptrdiff_t k = 1; k <= n / 2; ++k) {
      const double inner = at(peak + dir * (k - 1));
      const double outer = at(peak + dir * k);
      if (outer < half) return static_cast<double>(k - 1) + (inner - half) / (inner - outer);
    }
    return static_cast<double>(n / 2);
  };
  curve.half_max_width = (crossing(+1) + crossing(-1)) * step;
}

ObjectiveCurve compute_objective_curve(const ExperimentConfig& config, Index n_p, double snr_db,
                                       Index grid_size, std::size_t trial_index) {
  config.validate();
  if (grid_size < 3) throw InvalidParameter("grid_size must be >= 3");
  const SweepPoint point{n_p, snr_db, config.cfo_values_rad().front()};
  const auto inst = make_trial_instance(config, point, trial_index);
  const CfoObjective obj(
      inst.y, inst.model.training,
      config.cfo_search.qpsk_fast_path
          ? std::nullopt
          : std::optional<ModelVariances>(
                ModelVariances{config.gaussian.sigma_h_sq, inst.model.noise_var_per_dim}));

  ObjectiveCurve curve;
  curve.n_p = n_p;
  curve.snr_db = snr_db;
  curve.cfo_true = inst.model.cfo_rad;
  curve.omega.resize(static_cast<std::size_t>(grid_size));
  curve.value.resize(static_cast<std::size_t>(grid_size));
  for (Index k = 0; k < grid_size; ++k) {
    const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(grid_size);
    curve.omega[static_cast<std::size_t>(k)] = w;
    curve.value[static_cast<std::size_t>(k)] = obj.value(w);
  }
  measure_main_lobe(curve);
  return curve;
}

}  // namespace onebit
