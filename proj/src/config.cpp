#include "onebit/config.hpp"

#include <fstream>
#include <functional>

namespace onebit {

namespace {

using nlohmann::json;

struct Field {
  const char* key;
  std::function<json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

template <class T, class Member>
Field plain(const char* key, Member member) {
  return {key, [member](const ExperimentConfig& c) { return json(member(c)); },
          [member](ExperimentConfig& c, const json& v) { member(c) = v.get<T>(); }};
}

#define ONEBIT_FIELD(T, key, expr) \
  plain<T>(key, [](auto& c) -> auto& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ONEBIT_FIELD(Index, "n_t", c.n_t),
      ONEBIT_FIELD(Index, "n_r", c.n_r),
      {"channel_family", [](const ExperimentConfig& c) { return json(to_string(c.channel_family)); },
       [](ExperimentConfig& c, const json& v) {
         c.channel_family = channel_family_from_string(v.get<std::string>());
       }},
      ONEBIT_FIELD(double, "sigma_h_sq", c.gaussian.sigma_h_sq),
      {"n_clusters", [](const ExperimentConfig& c) { return json(c.mmwave.n_clusters); },
       [](ExperimentConfig& c, const json& v) {
         c.mmwave.n_clusters = v.get<Index>();
         if (c.mmwave.n_clusters > 0 && !c.mmwave.rays_per_cluster.empty()) {
           c.mmwave.rays_per_cluster.resize(static_cast<std::size_t>(c.mmwave.n_clusters),
                                            c.mmwave.rays_per_cluster.back());
         }
       }},
      {"rays_per_cluster",
       [](const ExperimentConfig& c) { return json(c.mmwave.rays_per_cluster); },
       [](ExperimentConfig& c, const json& v) {
         if (v.is_number_integer()) {
           c.mmwave.rays_per_cluster.assign(
               static_cast<std::size_t>(std::max<Index>(c.mmwave.n_clusters, 0)), v.get<Index>());
         } else {
           c.mmwave.rays_per_cluster = v.get<std::vector<Index>>();
         }
       }},
      ONEBIT_FIELD(double, "angle_spread_deg", c.mmwave.angle_spread_deg),
      ONEBIT_FIELD(double, "antenna_spacing_ratio", c.mmwave.antenna_spacing_ratio),
      ONEBIT_FIELD(std::vector<double>, "snr_db_list", c.snr_db_list),
      ONEBIT_FIELD(std::vector<Index>, "np_list", c.np_list),
      ONEBIT_FIELD(std::vector<double>, "cfo_list", c.cfo_list),
      {"cfo_units",
       [](const ExperimentConfig& c) { return json(c.cfo_as_fraction ? "fraction" : "rad"); },
       [](ExperimentConfig& c, const json& v) {
         const auto s = v.get<std::string>();
         if (s != "fraction" && s != "rad") {
           throw InvalidParameter("cfo_units must be 'fraction' or 'rad'");
         }
         c.cfo_as_fraction = s == "fraction";
       }},
      ONEBIT_FIELD(int, "n_trials", c.n_trials),
      ONEBIT_FIELD(std::uint64_t, "base_seed", c.base_seed),
      ONEBIT_FIELD(Index, "n1", c.cfo_search.n1),
      ONEBIT_FIELD(Index, "n2", c.cfo_search.n2),
      ONEBIT_FIELD(int, "refine_max_iters", c.cfo_search.refine_max_iters),
      ONEBIT_FIELD(double, "refine_grad_tol", c.cfo_search.refine_grad_tol),
      ONEBIT_FIELD(double, "refine_initial_step", c.cfo_search.initial_step),
      ONEBIT_FIELD(double, "refine_shrink", c.cfo_search.shrink),
      ONEBIT_FIELD(double, "refine_sufficient_increase", c.cfo_search.sufficient_increase),
      ONEBIT_FIELD(bool, "qpsk_fast_path", c.cfo_search.qpsk_fast_path),
      ONEBIT_FIELD(int, "gamp_max_iters", c.gamp.max_iters),
      ONEBIT_FIELD(double, "gamp_damping", c.gamp.damping),
      ONEBIT_FIELD(double, "gamp_tol", c.gamp.tol),
      ONEBIT_FIELD(double, "gamp_variance_floor", c.gamp.variance_floor),
      ONEBIT_FIELD(double, "gamp_divergence_factor", c.gamp.divergence_factor),
      ONEBIT_FIELD(bool, "em_enabled", c.gamp.em_enabled),
      ONEBIT_FIELD(int, "em_max_iters", c.gamp.em_max_iters),
      ONEBIT_FIELD(double, "em_tol", c.gamp.em_tol),
      {"baselines",
       [](const ExperimentConfig& c) {
         json out = json::array();
         for (Baseline b : c.baselines) out.push_back(to_string(b));
         return out;
       },
       [](ExperimentConfig& c, const json& v) {
         c.baselines.clear();
         for (const auto& s : v.get<std::vector<std::string>>()) {
           c.baselines.push_back(baseline_from_string(s));
         }
       }},
      ONEBIT_FIELD(bool, "compute_crb", c.compute_crb),
      ONEBIT_FIELD(bool, "wrap_cfo_error", c.wrap_cfo_error),
      ONEBIT_FIELD(Index, "objective_grid_size", c.objective_grid_size),
      ONEBIT_FIELD(std::string, "output", c.output),
      ONEBIT_FIELD(std::string, "runtime_output", c.runtime_output),
      ONEBIT_FIELD(std::string, "trials_output", c.trials_output),
      ONEBIT_FIELD(std::string, "svg_plot", c.svg_plot),
      ONEBIT_FIELD(int, "threads", c.threads),
  };
  return table;
}

#undef ONEBIT_FIELD

}  // namespace

nlohmann::json to_json(const ExperimentConfig& config) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.get(config);
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
  ExperimentConfig config;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : fields()) known = known || key == f.key;
    if (!known) throw InvalidParameter("unknown config key '" + key + "'");
  }
  // apply in table order so n_clusters is seen before rays_per_cluster
  for (const auto& f : fields()) {
    if (!j.contains(f.key)) continue;
    try {
      f.set(config, j.at(f.key));
    } catch (const json::exception& e) {
      throw InvalidParameter(std::string("config key '") + f.key + "': " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidParameter("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace onebit
