#include "perim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "perim/errors.hpp"
#include "perim/rng.hpp"

namespace perim {

using nlohmann::json;

const char* to_string(NoiseMode m) {
  switch (m) {
  case NoiseMode::none: return "none";
  case NoiseMode::moderate: return "moderate";
  case NoiseMode::strong: return "strong";
  case NoiseMode::penetration: return "penetration";
  }
  return "?";
}

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "none") return NoiseMode::none;
  if (s == "moderate") return NoiseMode::moderate;
  if (s == "strong") return NoiseMode::strong;
  if (s == "penetration") return NoiseMode::penetration;
  throw config_error("unknown noise mode: " + s);
}

NoiseModel NoiseModel::preset(NoiseMode mode) {
  NoiseModel n;
  n.mode = mode;
  switch (mode) {
  case NoiseMode::none: break;
  case NoiseMode::moderate:
    n.measurement_std = 0.05;
    n.demand_forecast_std = 0.10;
    n.mfd_fluctuation = 0.10;
    break;
  case NoiseMode::strong:
    n.measurement_std = 0.15;
    n.demand_forecast_std = 0.30;
    n.mfd_fluctuation = 0.20;
    break;
  case NoiseMode::penetration:
    n.measurement_std = 0.0; // per quantity, from the penetration rate
    n.demand_forecast_std = 0.10;
    n.mfd_fluctuation = 0.10;
    break;
  }
  return n;
}

const char* to_string(ControllerKind k) {
  switch (k) {
  case ControllerKind::mpc: return "mpc";
  case ControllerKind::stochastic: return "stochastic";
  case ControllerKind::pid: return "pid";
  case ControllerKind::bangbang: return "bangbang";
  case ControllerKind::fixed: return "fixed";
  }
  return "?";
}

ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "mpc") return ControllerKind::mpc;
  if (s == "stochastic") return ControllerKind::stochastic;
  if (s == "pid") return ControllerKind::pid;
  if (s == "bangbang") return ControllerKind::bangbang;
  if (s == "fixed") return ControllerKind::fixed;
  throw config_error("unknown controller type: " + s);
}

namespace {
double trapezoid(double t, double base, double peak, const DemandProfile& p) {
  if (t < p.ramp_up_start) return base;
  if (t < p.ramp_up_end)
    return base + (peak - base) * (t - p.ramp_up_start) / (p.ramp_up_end - p.ramp_up_start);
  if (t < p.plateau_end) return peak;
  if (t < p.ramp_down_end)
    return peak + (base - peak) * (t - p.plateau_end) / (p.ramp_down_end - p.plateau_end);
  return base;
}
} // namespace

double DemandProfile::entering_at(double t) const { return trapezoid(t, base, peak, *this); }
double DemandProfile::internal_at(double t) const { return trapezoid(t, d11_base, d11_peak, *this); }

void Scenario::validate() const {
  if (duration < 1) throw config_error("scenario duration must be at least one cycle");
  if (!(cycle_hr > 0.0)) throw config_error("cycle length must be positive");
  mfd.validate();
  if (n_intersections < 1) throw config_error("need at least one intersection");
  if (!(penetration > 0.0) || penetration > 1.0)
    throw config_error("penetration must lie in (0, 1]");
  if (!(n0_split >= 0.0) || n0_split > 1.0) throw config_error("n0_split must lie in [0, 1]");
  if (!(demand.ramp_up_start <= demand.ramp_up_end && demand.ramp_up_end <= demand.plateau_end &&
        demand.plateau_end <= demand.ramp_down_end))
    throw config_error("demand breakpoints must be nondecreasing");
  if (controller.horizon < 1) throw config_error("controller horizon must be positive");
  if (plateau_start < 0 || plateau_end > duration || plateau_start > plateau_end)
    throw config_error("plateau window must lie inside the run");
}

std::vector<IntersectionSpec> Scenario::build_intersections() const {
  std::vector<IntersectionSpec> out;
  out.reserve(n_intersections);
  Rng factor_rng(split_seed(seed, 0xfac7));
  for (int i = 0; i < n_intersections; ++i) {
    IntersectionSpec inter = default_intersection(i + 1, inflow_saturation, other_saturation);
    inter.demand_factor = factor_rng.uniform(0.7, 1.3);
    out.push_back(std::move(inter));
  }
  for (const auto& ov : overrides) {
    for (auto& inter : out) {
      if (inter.id != ov.id) continue;
      if (ov.demand_factor >= 0.0) inter.demand_factor = ov.demand_factor;
      if (ov.g_max >= 0.0) inter.g_max = ov.g_max;
      if (ov.g_min_per_phase >= 0.0) inter.g_min_per_phase = ov.g_min_per_phase;
    }
  }
  for (const auto& inter : out) inter.validate();
  return out;
}

Scenario::DemandSlice Scenario::demand_at(double t,
                                          const std::vector<IntersectionSpec>& intersections) const {
  const double tc = std::min(t, static_cast<double>(duration - 1));
  DemandSlice slice;
  slice.d11 = demand.internal_at(tc);
  slice.d12 = slice.d11; // outbound internal demand mirrors the inbound one
  const double entering = demand.entering_at(tc);

  double weight_sum = 0.0;
  for (const auto& inter : intersections) weight_sum += inter.demand_factor;

  slice.arrivals.resize(intersections.size());
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    const auto& inter = intersections[i];
    slice.arrivals[i].assign(inter.streams.size(), 0.0);
    int n_in = 0;
    for (const auto& s : inter.streams)
      if (s.cls == StreamClass::inflow) ++n_in;
    const double inflow_share =
        weight_sum > 0.0 ? entering * inter.demand_factor / weight_sum : 0.0;
    for (std::size_t m = 0; m < inter.streams.size(); ++m) {
      switch (inter.streams[m].cls) {
      case StreamClass::inflow:
        slice.arrivals[i][m] = n_in > 0 ? inflow_share / n_in : 0.0;
        break;
      case StreamClass::side:
        slice.arrivals[i][m] = demand.side_base * inter.demand_factor;
        break;
      case StreamClass::outflow:
        break;
      }
    }
  }
  return slice;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

} // namespace

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("scenario JSON parse error: ") + e.what());
  }
  try {
    Scenario sc;
    if (j.contains("mfd")) {
      const auto& m = j.at("mfd");
      sc.mfd.v = get_or(m, "v", sc.mfd.v);
      sc.mfd.w = get_or(m, "w", sc.mfd.w);
      sc.mfd.n_cr = get_or(m, "n_cr", sc.mfd.n_cr);
    }
    if (j.contains("network")) {
      const auto& n = j.at("network");
      sc.n_intersections = get_or(n, "n_intersections", sc.n_intersections);
      sc.cycle_hr = get_or(n, "C_hr", sc.cycle_hr);
      sc.duration = get_or(n, "duration_cycles", sc.duration);
      sc.n0_total = get_or(n, "n0_total", sc.n0_total);
      sc.n0_split = get_or(n, "n0_split", sc.n0_split);
      sc.inflow_saturation = get_or(n, "inflow_saturation", sc.inflow_saturation);
      sc.other_saturation = get_or(n, "other_saturation", sc.other_saturation);
      sc.plateau_start = get_or(n, "plateau_start", sc.plateau_start);
      sc.plateau_end = get_or(n, "plateau_end", sc.plateau_end);
    }
    if (j.contains("demand")) {
      const auto& d = j.at("demand");
      sc.demand.base = get_or(d, "base", sc.demand.base);
      sc.demand.peak = get_or(d, "peak", sc.demand.peak);
      if (d.contains("ramp_up")) {
        const auto& r = d.at("ramp_up");
        if (!r.is_array() || r.size() != 2)
          throw config_error("demand.ramp_up must be [start, end]");
        sc.demand.ramp_up_start = r[0].get<double>();
        sc.demand.ramp_up_end = r[1].get<double>();
      }
      sc.demand.plateau_end = get_or(d, "plateau_end", sc.demand.plateau_end);
      sc.demand.ramp_down_end = get_or(d, "ramp_down", sc.demand.ramp_down_end);
      sc.demand.side_base = get_or(d, "side_base", sc.demand.side_base);
      sc.demand.d11_base = get_or(d, "d11_base", sc.demand.d11_base);
      sc.demand.d11_peak = get_or(d, "d11_peak", sc.demand.d11_peak);
    }
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      if (n.contains("mode")) sc.noise = NoiseModel::preset(noise_mode_from_string(n.at("mode")));
      sc.noise.measurement_std = get_or(n, "measurement_std", sc.noise.measurement_std);
      sc.noise.demand_forecast_std = get_or(n, "demand_forecast_std", sc.noise.demand_forecast_std);
      sc.noise.mfd_fluctuation = get_or(n, "mfd_fluctuation", sc.noise.mfd_fluctuation);
    }
    sc.penetration = get_or(j, "penetration", sc.penetration);
    if (j.contains("controller")) {
      const auto& c = j.at("controller");
      if (c.contains("type")) sc.controller.kind = controller_kind_from_string(c.at("type"));
      if (c.contains("params")) {
        const auto& p = c.at("params");
        sc.controller.horizon = get_or(p, "horizon", sc.controller.horizon);
        sc.controller.sample_size = get_or(p, "sample_size", sc.controller.sample_size);
        sc.controller.pid_kp = get_or(p, "kp", sc.controller.pid_kp);
        sc.controller.pid_ki = get_or(p, "ki", sc.controller.pid_ki);
        sc.controller.pid_kd = get_or(p, "kd", sc.controller.pid_kd);
        sc.controller.bang_band = get_or(p, "band", sc.controller.bang_band);
        sc.controller.fixed_green = get_or(p, "green", sc.controller.fixed_green);
      }
    }
    sc.seed = get_or(j, "seed", static_cast<std::uint64_t>(sc.seed));
    if (j.contains("intersections")) {
      for (const auto& item : j.at("intersections")) {
        IntersectionOverride ov;
        ov.id = item.at("id").get<int>();
        ov.demand_factor = get_or(item, "demand_factor", ov.demand_factor);
        ov.g_max = get_or(item, "g_max", ov.g_max);
        ov.g_min_per_phase = get_or(item, "g_min", ov.g_min_per_phase);
        sc.overrides.push_back(ov);
      }
    }
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw config_error(std::string("scenario JSON structure error: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["mfd"] = {{"v", sc.mfd.v}, {"w", sc.mfd.w}, {"n_cr", sc.mfd.n_cr}};
  j["network"] = {{"n_intersections", sc.n_intersections},
                  {"C_hr", sc.cycle_hr},
                  {"duration_cycles", sc.duration},
                  {"n0_total", sc.n0_total},
                  {"n0_split", sc.n0_split},
                  {"inflow_saturation", sc.inflow_saturation},
                  {"other_saturation", sc.other_saturation},
                  {"plateau_start", sc.plateau_start},
                  {"plateau_end", sc.plateau_end}};
  j["demand"] = {{"base", sc.demand.base},
                 {"peak", sc.demand.peak},
                 {"ramp_up", {sc.demand.ramp_up_start, sc.demand.ramp_up_end}},
                 {"plateau_end", sc.demand.plateau_end},
                 {"ramp_down", sc.demand.ramp_down_end},
                 {"side_base", sc.demand.side_base},
                 {"d11_base", sc.demand.d11_base},
                 {"d11_peak", sc.demand.d11_peak}};
  j["noise"] = {{"mode", to_string(sc.noise.mode)},
                {"measurement_std", sc.noise.measurement_std},
                {"demand_forecast_std", sc.noise.demand_forecast_std},
                {"mfd_fluctuation", sc.noise.mfd_fluctuation}};
  j["penetration"] = sc.penetration;
  j["controller"] = {{"type", to_string(sc.controller.kind)},
                     {"params",
                      {{"horizon", sc.controller.horizon},
                       {"sample_size", sc.controller.sample_size},
                       {"kp", sc.controller.pid_kp},
                       {"ki", sc.controller.pid_ki},
                       {"kd", sc.controller.pid_kd},
                       {"band", sc.controller.bang_band},
                       {"green", sc.controller.fixed_green}}}};
  j["seed"] = sc.seed;
  if (!sc.overrides.empty()) {
    json arr = json::array();
    for (const auto& ov : sc.overrides) {
      json item = {{"id", ov.id}};
      if (ov.demand_factor >= 0.0) item["demand_factor"] = ov.demand_factor;
      if (ov.g_max >= 0.0) item["g_max"] = ov.g_max;
      if (ov.g_min_per_phase >= 0.0) item["g_min"] = ov.g_min_per_phase;
      arr.push_back(item);
    }
    j["intersections"] = arr;
  }
  return j.dump(2);
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write scenario file: " + path);
  out << scenario_to_json(sc) << "\n";
}

} // namespace perim
