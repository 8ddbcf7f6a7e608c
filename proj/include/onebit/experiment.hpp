#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "onebit/cfo.hpp"
#include "onebit/channel.hpp"
#include "onebit/gamp.hpp"

namespace onebit {

enum class Baseline { unknown_cfo, known_cfo, no_compensation, detection_only };

const char* to_string(Baseline b);
Baseline baseline_from_string(const std::string& s);
const char* to_string(ChannelFamily f);
ChannelFamily channel_family_from_string(const std::string& s);

/// Everything a sweep depends on. The sweep output is a pure function of this struct
/// (`threads` and the output paths excepted).
struct ExperimentConfig {
  Index n_t = 16;
  Index n_r = 16;
  ChannelFamily channel_family = ChannelFamily::gaussian;
  GaussianChannelParams gaussian;
  MmWaveChannelParams mmwave;
  std::vector<double> snr_db_list{0.0, 5.0, 10.0};
  std::vector<Index> np_list{64, 128, 256, 512};
  std::vector<double> cfo_list{0.0415};
  bool cfo_as_fraction = true;  ///< cfo_list entries are fractions of 2 pi
  int n_trials = 100;
  std::uint64_t base_seed = 1;
  CfoSearchConfig cfo_search;
  GampConfig gamp;
  std::vector<Baseline> baselines{Baseline::unknown_cfo, Baseline::known_cfo,
                                  Baseline::no_compensation, Baseline::detection_only};
  bool compute_crb = true;
  bool wrap_cfo_error = true;
  Index objective_grid_size = 1 << 16;
  std::string output = "sweep.csv";
  std::string runtime_output;  ///< empty: "<output>.runtime.csv"
  std::string trials_output;   ///< empty: no per-trial file
  std::string svg_plot;        ///< empty: no plot
  int threads = 0;             ///< 0: hardware concurrency

  void validate() const;
  std::vector<double> cfo_values_rad() const;
  bool runs(Baseline b) const;
};

struct SweepPoint {
  Index n_p = 0;
  double snr_db = 0.0;
  double cfo_rad = 0.0;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One Monte Carlo trial. Metrics of baselines that were not run stay NaN.
struct TrialRecord {
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  Index np = 0;
  double snr_db = 0.0;
  double cfo_true = 0.0;
  double sigma_w_sq = kNaN;
  double cfo_hat = kNaN;            ///< detection + refinement
  double cfo_hat_detection = kNaN;  ///< detection only
  double cfo_sq_err = kNaN;
  double cfo_sq_err_detection = kNaN;
  double omega_unknown_cfo = kNaN;  ///< CFO handed to stage 2, per baseline
  double omega_known_cfo = kNaN;
  double omega_no_comp = kNaN;
  double nmse_unknown_cfo = kNaN;
  double nmse_known_cfo = kNaN;
  double nmse_no_comp = kNaN;
  double crb = kNaN;
  double t_cfo_s = 0.0;
  double t_chan_s = 0.0;
  int refine_iterations = 0;
  int gamp_iterations = 0;
  std::string status = "ok";
};

/// Per-(np, snr, cfo) averages. dB values are 10 log10 of the trial-averaged linear metric.
struct AggregateRow {
  SweepPoint point;
  double mse_cfo_db = kNaN;
  double mse_cfo_detection_only_db = kNaN;
  double crb_db = kNaN;
  double nmse_unknown_cfo_db = kNaN;
  double nmse_known_cfo_db = kNaN;
  double nmse_no_comp_db = kNaN;
  double t_cfo_s = kNaN;
  double t_chan_s = kNaN;
  int n_trials = 0;
  int n_failed = 0;
};

struct SweepResult {
  std::vector<AggregateRow> rows;
  std::vector<TrialRecord> trials;  ///< grouped by point, trial-index order within a point
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// sigma_w^2 = ||D h||^2 / (rows(D) 10^{snr/10}), rows(D) = 2 n_r n_p.
double calibrate_noise(const MatrixXd& d_matrix, const VectorXd& h, double snr_db);
/// Same value from the complex model: ||D h||^2 = ||H B||_F^2.
double calibrate_noise(const MatrixXcd& channel, const MatrixXcd& b, double snr_db);

/// ||H - H_hat||_F^2 / ||H||_F^2.
double nmse(const MatrixXcd& truth, const MatrixXcd& estimate);

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

/// Generated state of one trial: channel, pilots, calibrated noise and the sign observation.
/// Channel, pilots and noise come from separate sub-streams of the trial seed, so every grid
/// point sees the same draws for a given trial index.
struct TrialInstance {
  std::uint64_t seed = 0;
  ComplexModelInstance model;
  MatrixXcd observation;  ///< Y, empty unless observed
  VectorXd y;             ///< stacked real sign vector
};

TrialInstance make_trial_instance(const ExperimentConfig& config, const SweepPoint& point,
                                  std::size_t trial_index, bool observe = true);

TrialRecord run_trial(const ExperimentConfig& config, const SweepPoint& point,
                      std::size_t trial_index);

/// Failed or skipped metrics (NaN) are left out of the averages.
AggregateRow aggregate(const SweepPoint& point, const std::vector<TrialRecord>& trials);

/// Runs every (point, trial) job on a bounded worker pool; results are folded in fixed
/// order so the output does not depend on scheduling.
SweepResult run_sweep(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Bound-only sweep: averages the CFO CRB over the same channel draws as run_sweep.
SweepResult run_crb_sweep(const ExperimentConfig& config, const ProgressFn& progress = {});

struct ObjectiveCurve {
  Index n_p = 0;
  double snr_db = 0.0;
  double cfo_true = 0.0;
  std::vector<double> omega;
  std::vector<double> value;
  double peak_omega = 0.0;
  double lobe_width = 0.0;      ///< distance between the minima flanking the global maximum
  double half_max_width = 0.0;  ///< distance between the half-maximum crossings
};

/// S(w) of one trial on a uniform grid of `grid_size` points over [0, 2 pi).
ObjectiveCurve compute_objective_curve(const ExperimentConfig& config, Index n_p, double snr_db,
                                       Index grid_size, std::size_t trial_index = 0);

/// Lobe measurements of a sampled periodic curve; fills peak_omega and both widths.
void measure_main_lobe(ObjectiveCurve& curve);

// report writers
std::string software_version();
std::string config_hash(const ExperimentConfig& config);
void write_sweep_csv(std::ostream& os, const ExperimentConfig& config,
                     const std::vector<AggregateRow>& rows, const std::string& kind = "sweep");
void write_runtime_csv(std::ostream& os, const ExperimentConfig& config,
                       const std::vector<AggregateRow>& rows);
void write_trials_csv(std::ostream& os, const ExperimentConfig& config,
                      const std::vector<TrialRecord>& trials);
void write_objective_curve_csv(std::ostream& os, const ExperimentConfig& config,
                               const ObjectiveCurve& curve);
/// Line plot of one metric column against n_p (one line per SNR) or against the CFO.
void write_svg_plot(std::ostream& os, const std::vector<AggregateRow>& rows,
                    const std::string& metric, bool x_is_cfo);

/// Writes the CSV (and runtime sidecar, trials file, SVG when configured) to disk.
void save_sweep(const ExperimentConfig& config, const SweepResult& result,
                const std::string& kind = "sweep");

}  // namespace onebit
