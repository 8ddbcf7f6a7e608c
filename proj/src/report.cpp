#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "onebit/config.hpp"
#include "onebit/experiment.hpp"

#ifndef ONEBIT_VERSION
#define ONEBIT_VERSION "dev"
#endif

namespace onebit {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_header(std::ostream& os, const ExperimentConfig& config, const std::string& kind) {
  os << "# tool: onebit_sim " << software_version() << '\n'
     << "# kind: " << kind << '\n'
     << "# config_hash: " << config_hash(config) << '\n'
     << "# base_seed: " << config.base_seed << '\n'
     << "# channel_family: " << to_string(config.channel_family) << '\n'
     << "# n_t: " << config.n_t << ", n_r: " << config.n_r << '\n'
     << "# n_trials: " << config.n_trials << '\n'
     << "# cfo_true in rad; dB columns are 10*log10 of the trial mean of the linear metric\n";
}

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  return out;
}

double metric_of(const AggregateRow& r, const std::string& metric) {
  if (metric == "mse_cfo_db") return r.mse_cfo_db;
  if (metric == "mse_cfo_detection_only_db") return r.mse_cfo_detection_only_db;
  if (metric == "crb_db") return r.crb_db;
  if (metric == "nmse_unknown_cfo_db") return r.nmse_unknown_cfo_db;
  if (metric == "nmse_known_cfo_db") return r.nmse_known_cfo_db;
  if (metric == "nmse_no_comp_db") return r.nmse_no_comp_db;
  throw InvalidParameter("unknown plot metric '" + metric + "'");
}

}  // namespace

std::string software_version() { return ONEBIT_VERSION; }

std::string config_hash(const ExperimentConfig& config) {
  auto j = to_json(config);
  for (const char* k : {"threads", "output", "runtime_output", "trials_output", "svg_plot"}) {
    j.erase(k);
  }
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_sweep_csv(std::ostream& os, const ExperimentConfig& config,
                     const std::vector<AggregateRow>& rows, const std::string& kind) {
  write_header(os, config, kind);
  os << "np,snr_db,cfo_true,mse_cfo_db,mse_cfo_detection_only_db,crb_db,nmse_unknown_cfo_db,"
        "nmse_known_cfo_db,nmse_no_comp_db,n_trials\n";
  for (const auto& r : rows) {
    os << r.point.n_p << ',' << num(r.point.snr_db) << ',' << num(r.point.cfo_rad) << ','
       << num(r.mse_cfo_db) << ',' << num(r.mse_cfo_detection_only_db) << ',' << num(r.crb_db)
       << ',' << num(r.nmse_unknown_cfo_db) << ',' << num(r.nmse_known_cfo_db) << ','
       << num(r.nmse_no_comp_db) << ',' << r.n_trials << '\n';
  }
}

void write_runtime_csv(std::ostream& os, const ExperimentConfig& config,
                       const std::vector<AggregateRow>& rows) {
  write_header(os, config, "runtime");
  os << "# wall-clock seconds per trial, averaged over trials\n";
  os << "np,snr_db,cfo_true,t_cfo_s,t_chan_s,t_total_s,n_trials\n";
  for (const auto& r : rows) {
    os << r.point.n_p << ',' << num(r.point.snr_db) << ',' << num(r.point.cfo_rad) << ','
       << num(r.t_cfo_s) << ',' << num(r.t_chan_s) << ',' << num(r.t_cfo_s + r.t_chan_s) << ','
       << r.n_trials << '\n';
  }
}

void write_trials_csv(std::ostream& os, const ExperimentConfig& config,
                      const std::vector<TrialRecord>& trials) {
  write_header(os, config, "trials");
  os << "np,snr_db,cfo_true,trial,seed,sigma_w_sq,cfo_hat,cfo_hat_detection,cfo_sq_err,"
        "cfo_sq_err_detection,omega_unknown_cfo,omega_known_cfo,omega_no_comp,"
        "nmse_unknown_cfo,nmse_known_cfo,nmse_no_comp,crb,refine_iterations,gamp_iterations,"
        "status\n";
  for (const auto& t : trials) {
    std::string status = t.status;
    for (char& ch : status) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << t.np << ',' << num(t.snr_db) << ',' << num(t.cfo_true) << ',' << t.trial_index << ','
       << t.seed << ',' << num(t.sigma_w_sq) << ',' << num(t.cfo_hat) << ','
       << num(t.cfo_hat_detection) << ',' << num(t.cfo_sq_err) << ','
       << num(t.cfo_sq_err_detection) << ',' << num(t.omega_unknown_cfo) << ','
       << num(t.omega_known_cfo) << ',' << num(t.omega_no_comp) << ','
       << num(t.nmse_unknown_cfo) << ',' << num(t.nmse_known_cfo) << ','
       << num(t.nmse_no_comp) << ',' << num(t.crb) << ',' << t.refine_iterations << ','
       << t.gamp_iterations << ',' << status << '\n';
  }
}

void write_objective_curve_csv(std::ostream& os, const ExperimentConfig& config,
                               const ObjectiveCurve& curve) {
  write_header(os, config, "objective-curve");
  os << "# np: " << curve.n_p << ", snr_db: " << num(curve.snr_db)
     << ", cfo_true: " << num(curve.cfo_true) << '\n'
     << "# peak_omega: " << num(curve.peak_omega) << '\n'
     << "# lobe_width: " << num(curve.lobe_width) << '\n'
     << "# half_max_width: " << num(curve.half_max_width) << '\n'
     << "omega,objective\n";
  for (std::size_t k = 0; k < curve.omega.size(); ++k) {
    os << num(curve.omega[k]) << ',' << num(curve.value[k]) << '\n';
  }
}

void write_svg_plot(std::ostream& os, const std::vector<AggregateRow>& rows,
                    const std::string& metric, bool x_is_cfo) {
  // one series per SNR (x = n_p) or per (n_p, SNR) pair (x = CFO)
  std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> series;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& r : rows) {
    const double y = metric_of(r, metric);
    if (!std::isfinite(y)) continue;
    const double x = x_is_cfo ? r.point.cfo_rad : std::log2(static_cast<double>(r.point.n_p));
    const auto key = x_is_cfo ? std::make_pair(static_cast<double>(r.point.n_p), r.point.snr_db)
                              : std::make_pair(0.0, r.point.snr_db);
    series[key].emplace_back(x, y);
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const double w = 640, h = 420, m = 60;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (w - 2 * m); };
  auto py = [&](double y) { return h - m - (y - ymin) / (ymax - ymin) * (h - 2 * m); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b"};

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m
     << "\" stroke=\"black\"/>\n<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m
     << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">"
     << (x_is_cfo ? "CFO (rad)" : "log2 Np") << "</text>\n"
     << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
     << ")\" text-anchor=\"middle\">" << metric << "</text>\n"
     << "<text x=\"" << m - 5 << "\" y=\"" << py(ymax) << "\" text-anchor=\"end\">" << num(ymax)
     << "</text>\n<text x=\"" << m - 5 << "\" y=\"" << py(ymin) << "\" text-anchor=\"end\">"
     << num(ymin) << "</text>\n";
  std::size_t idx = 0;
  for (const auto& [key, pts] : series) {
    const char* color = colors[idx % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const auto& [x, y] : pts) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    std::string label = "SNR " + num(key.second) + " dB";
    if (x_is_cfo) label = "Np " + num(key.first) + ", " + label;
    os << "<text x=\"" << w - m + 5 << "\" y=\"" << m + 15 * static_cast<double>(idx)
       << "\" fill=\"" << color << "\" font-size=\"11\">" << label << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
}

void save_sweep(const ExperimentConfig& config, const SweepResult& result,
                const std::string& kind) {
  {
    auto out = open_output(config.output);
    write_sweep_csv(out, config, result.rows, kind);
  }
  if (kind != "crb") {
    auto out = open_output(config.runtime_output.empty() ? config.output + ".runtime.csv"
                                                         : config.runtime_output);
    write_runtime_csv(out, config, result.rows);
  }
  if (!config.trials_output.empty()) {
    auto out = open_output(config.trials_output);
    write_trials_csv(out, config, result.trials);
  }
  if (!config.svg_plot.empty()) {
    auto out = open_output(config.svg_plot);
    const bool cfo_axis = kind == "cfo-sweep";
    const std::string metric = kind == "crb"         ? "crb_db"
                               : cfo_axis            ? "mse_cfo_db"
                               : config.runs(Baseline::unknown_cfo) ? "nmse_unknown_cfo_db"
                                                                    : "mse_cfo_db";
    write_svg_plot(out, result.rows, metric, cfo_axis);
  }
}

}  // namespace onebit
