#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "onebit/config.hpp"
#include "onebit/crb.hpp"
#include "onebit/experiment.hpp"

using namespace onebit;
using nlohmann::json;

namespace {

const std::set<std::string> kListKeys = {"snr_db_list", "np_list", "cfo_list", "baselines",
                                         "rays_per_cluster"};

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);
  }
}

// Value of a --key flag: JSON if it parses, comma-separated list for list keys.
json parse_flag(const std::string& key, const std::string& text) {
  if (kListKeys.count(key) && (text.empty() || text.front() != '[')) {
    json arr = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) arr.push_back(parse_scalar(item));
    }
    if (key == "rays_per_cluster" && arr.size() == 1) return arr.front();
    return arr;
  }
  return parse_scalar(text);
}

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      app->add_option_function<std::string>(
             "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
             "override config key " + key)
          ->group("Config keys");
    }
  }

  ExperimentConfig resolve(const json& defaults = json::object()) const {
    json j = defaults;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      json file;
      in >> file;
      for (const auto& [k, v] : file.items()) j[k] = v;
    }
    for (const auto& [k, v] : overrides) j[k] = parse_flag(k, v);
    return config_from_json(j);
  }
};

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    const std::size_t pct = 100 * done / total;
    if (pct / 5 != last / 5 || done == total) {
      std::fprintf(stderr, "\r%zu/%zu trials (%zu%%)", done, total, pct);
      if (done == total) std::fprintf(stderr, "\n");
      last = pct;
    }
  };
}

void print_rows(const std::vector<AggregateRow>& rows) {
  std::printf("%6s %7s %9s %10s %10s %9s %9s %9s %9s %7s\n", "np", "snr_db", "cfo", "mse_cfo",
              "mse_det", "crb", "nmse_unk", "nmse_kn", "nmse_nc", "failed");
  for (const auto& r : rows) {
    std::printf("%6lld %7.2f %9.5f %10.3f %10.3f %9.3f %9.3f %9.3f %9.3f %7d\n",
                static_cast<long long>(r.point.n_p), r.point.snr_db, r.point.cfo_rad,
                r.mse_cfo_db, r.mse_cfo_detection_only_db, r.crb_db, r.nmse_unknown_cfo_db,
                r.nmse_known_cfo_db, r.nmse_no_comp_db, r.n_failed);
  }
}

json cfo_sweep_defaults() {
  json cfo = json::array();
  for (int k = 0; k < 12; ++k) cfo.push_back(0.0415 + k * 0.0805);
  return {{"cfo_list", cfo},
          {"np_list", {256}},
          {"snr_db_list", {10.0}},
          {"baselines", {"unknown-cfo", "detection-only"}},
          {"output", "cfo_sweep.csv"}};
}

int run_simulate(const ExperimentConfig& config, Index np, double snr, std::size_t trial,
                 const std::string& trace_path, const std::string& channel_path) {
  const SweepPoint point{np, snr, config.cfo_values_rad().front()};
  const auto inst = make_trial_instance(config, point, trial);
  const TrialRecord rec = run_trial(config, point, trial);
  std::printf("family %s  n_t %lld  n_r %lld  n_p %lld  snr %.2f dB  seed %llu\n",
              to_string(config.channel_family), static_cast<long long>(config.n_t),
              static_cast<long long>(config.n_r), static_cast<long long>(np), snr,
              static_cast<unsigned long long>(rec.seed));
  std::printf("sigma_w^2          %.6g\n", rec.sigma_w_sq);
  std::printf("cfo true           %.9f rad\n", rec.cfo_true);
  std::printf("cfo detection      %.9f rad  (sq err %.3e)\n", rec.cfo_hat_detection,
              rec.cfo_sq_err_detection);
  std::printf("cfo refined        %.9f rad  (sq err %.3e, %d iters)\n", rec.cfo_hat,
              rec.cfo_sq_err, rec.refine_iterations);
  std::printf("crb                %.3e\n", rec.crb);
  std::printf("nmse unknown-cfo   %.3f dB\n", 10 * std::log10(rec.nmse_unknown_cfo));
  std::printf("nmse known-cfo     %.3f dB\n", 10 * std::log10(rec.nmse_known_cfo));
  std::printf("nmse no-comp       %.3f dB\n", 10 * std::log10(rec.nmse_no_comp));
  std::printf("time cfo %.3f s  channel %.3f s\n", rec.t_cfo_s, rec.t_chan_s);
  std::printf("status             %s\n", rec.status.c_str());

  if (!trace_path.empty() && std::isfinite(rec.cfo_hat)) {
    GampConfig gc = config.gamp;
    gc.record_trace = true;
    const auto sol = estimate_channel(inst.model.training, inst.y, rec.cfo_hat,
                                      inst.model.noise_var_per_dim, config.channel_family, gc);
    std::ofstream out(trace_path);
    write_trace_csv(out, sol.estimate.trace);
    std::printf("gamp trace         %s (%zu rows)\n", trace_path.c_str(),
                sol.estimate.trace.size());
  }
  if (!channel_path.empty()) {
    std::ofstream out(channel_path);
    write_channel_csv(out, inst.model.channel);
    std::printf("channel            %s\n", channel_path.c_str());
  }
  return rec.status == "ok" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-bit MIMO CFO and channel estimation simulator"};
  app.set_version_flag("--version", software_version());
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no progress output");

  auto* sim = app.add_subcommand("simulate", "run one trial and print every stage");
  ConfigFlags sim_flags;
  sim_flags.attach(sim);
  Index sim_np = 256;
  double sim_snr = 10.0;
  std::size_t sim_trial = 0;
  std::string trace_path, channel_path;
  sim->add_option("--np", sim_np, "training length");
  sim->add_option("--snr_db", sim_snr, "SNR in dB");
  sim->add_option("--trial", sim_trial, "trial index");
  sim->add_option("--gamp_trace", trace_path, "write the per-iteration GAMP trace CSV");
  sim->add_option("--export_channel", channel_path, "write the true channel as CSV");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over np x SNR x CFO");
  ConfigFlags sweep_flags;
  sweep_flags.attach(sweep);

  auto* cfo_sweep = app.add_subcommand("cfo-sweep", "CFO estimation error against the CFO value");
  ConfigFlags cfo_flags;
  cfo_flags.attach(cfo_sweep);

  auto* curve = app.add_subcommand("objective-curve", "sample S(w) of one trial over [0, 2pi)");
  ConfigFlags curve_flags;
  curve_flags.attach(curve);
  Index curve_np = 512;
  double curve_snr = 10.0;
  Index grid_size = 0;
  std::size_t curve_trial = 0;
  curve->add_option("--np", curve_np, "training length");
  curve->add_option("--snr_db", curve_snr, "SNR in dB");
  curve->add_option("--grid_size", grid_size, "grid points (default objective_grid_size)");
  curve->add_option("--trial", curve_trial, "trial index");

  auto* crb = app.add_subcommand("crb", "CFO Cramer-Rao bound averaged over channel draws");
  ConfigFlags crb_flags;
  crb_flags.attach(crb);

  auto* show = app.add_subcommand("print-config", "print the resolved config as JSON");
  ConfigFlags show_flags;
  show_flags.attach(show);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto config = sim_flags.resolve();
      config.validate();
      return run_simulate(config, sim_np, sim_snr, sim_trial, trace_path, channel_path);
    }
    if (*sweep) {
      const auto config = sweep_flags.resolve();
      const auto result = run_sweep(config, progress_printer(quiet));
      save_sweep(config, result, "sweep");
      print_rows(result.rows);
      return 0;
    }
    if (*cfo_sweep) {
      const auto config = cfo_flags.resolve(cfo_sweep_defaults());
      const auto result = run_sweep(config, progress_printer(quiet));
      save_sweep(config, result, "cfo-sweep");
      print_rows(result.rows);
      return 0;
    }
    if (*curve) {
      const auto config = curve_flags.resolve({{"output", "objective_curve.csv"}});
      const auto c = compute_objective_curve(
          config, curve_np, curve_snr, grid_size > 0 ? grid_size : config.objective_grid_size,
          curve_trial);
      std::ofstream out(config.output);
      if (!out) throw InvalidParameter("cannot write '" + config.output + "'");
      write_objective_curve_csv(out, config, c);
      std::printf("peak %.6f rad  lobe width %.6f rad  half-max width %.6f rad\n", c.peak_omega,
                  c.lobe_width, c.half_max_width);
      return 0;
    }
    if (*crb) {
      const auto config = crb_flags.resolve({{"output", "crb.csv"}});
      const auto result = run_crb_sweep(config, progress_printer(quiet));
      save_sweep(config, result, "crb");
      print_rows(result.rows);
      return 0;
    }
    if (*show) {
      std::cout << to_json(show_flags.resolve()).dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
