#include "perim/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "perim/errors.hpp"

namespace perim {

double noisy_measurement(double true_value, double rel_std, Rng& rng) {
  if (rel_std <= 0.0) return std::max(0.0, true_value);
  return std::max(0.0, true_value * (1.0 + rel_std * rng.gaussian()));
}

double penetration_sigma(double p, double n) {
  if (p >= 1.0) return 0.0;
  if (!(p > 0.0)) throw config_error("penetration must be positive");
  if (n < 0.0) throw config_error("penetration_sigma: negative count");
  return std::sqrt((1.0 - p) / (std::max(n, 1.0) * p));
}

namespace {

// Substream tags for the independent noise channels.
enum : std::uint64_t { kMeasure = 0x11, kForecast = 0x22, kProduction = 0x33 };

} // namespace

RunLog simulate(const Scenario& scenario, Controller& controller) {
  scenario.validate();
  RunLog log;
  log.intersections = scenario.build_intersections();
  const auto& inters = log.intersections;
  const int nI = static_cast<int>(inters.size());
  const double C = scenario.cycle_hr;
  const int horizon = controller.forecast_horizon();

  Rng measure_rng(split_seed(scenario.seed, kMeasure));
  Rng forecast_rng(split_seed(scenario.seed, kForecast));
  Rng production_rng(split_seed(scenario.seed, kProduction));

  NetworkState state{scenario.n0_total * scenario.n0_split,
                     scenario.n0_total * (1.0 - scenario.n0_split)};
  QueueState queues = QueueState::zeros(inters);

  const bool penetration_mode = scenario.noise.mode == NoiseMode::penetration;

  log.cycles.reserve(scenario.duration);
  for (int k = 0; k < scenario.duration; ++k) {
    const auto slice = scenario.demand_at(k, inters);

    // --- measurement channel -------------------------------------------------
    ControllerView view;
    view.cycle = k;
    view.horizon = horizon;
    view.demand_std_frac = scenario.noise.demand_forecast_std;
    auto sigma_of = [&](double true_value) {
      return penetration_mode ? penetration_sigma(scenario.penetration, true_value)
                              : scenario.noise.measurement_std;
    };
    view.n11_std_frac = sigma_of(state.n11);
    view.n12_std_frac = sigma_of(state.n12);
    view.n11_meas = noisy_measurement(state.n11, view.n11_std_frac, measure_rng);
    view.n12_meas = noisy_measurement(state.n12, view.n12_std_frac, measure_rng);
    view.queues_meas.resize(nI);
    view.queue_std_frac.resize(nI);
    for (int i = 0; i < nI; ++i) {
      const auto& streams = inters[i].streams;
      view.queues_meas[i].assign(streams.size(), 0.0);
      view.queue_std_frac[i].assign(streams.size(), 0.0);
      for (std::size_t m = 0; m < streams.size(); ++m) {
        if (streams[m].cls == StreamClass::outflow) continue;
        const double sigma = sigma_of(queues.x[i][m]);
        view.queue_std_frac[i][m] = sigma;
        view.queues_meas[i][m] = noisy_measurement(queues.x[i][m], sigma, measure_rng);
      }
    }

    // --- forecast channel -----------------------------------------------------
    if (horizon > 0) {
      view.d11_forecast.resize(horizon);
      view.d12_forecast.resize(horizon);
      view.arrival_forecast.resize(nI);
      for (int i = 0; i < nI; ++i) {
        view.arrival_forecast[i].resize(inters[i].streams.size());
        for (auto& series : view.arrival_forecast[i]) series.assign(horizon, 0.0);
      }
      const double fstd = scenario.noise.demand_forecast_std;
      for (int l = 0; l < horizon; ++l) {
        const auto future = scenario.demand_at(k + l, inters);
        view.d11_forecast[l] = noisy_measurement(future.d11, fstd, forecast_rng);
        view.d12_forecast[l] = noisy_measurement(future.d12, fstd, forecast_rng);
        for (int i = 0; i < nI; ++i)
          for (std::size_t m = 0; m < inters[i].streams.size(); ++m) {
            if (inters[i].streams[m].cls == StreamClass::outflow) continue;
            view.arrival_forecast[i][m][l] =
                noisy_measurement(future.arrivals[i][m], fstd, forecast_rng);
          }
      }
    }

    // --- control decision -----------------------------------------------------
    CycleRecord rec;
    rec.n11_true = state.n11;
    rec.n12_true = state.n12;
    rec.n11_meas = view.n11_meas;
    rec.n12_meas = view.n12_meas;
    rec.d11 = slice.d11;
    rec.d12 = slice.d12;
    rec.queues = queues.x;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rec.greens = controller.decide(view);
    } catch (const std::exception& e) {
      log.abort_reason = e.what();
      log.cycles.push_back(std::move(rec));
      return log;
    }
    rec.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!rec.greens.satisfies_bounds(inters, 1e-7))
      throw solve_error("controller returned a plan violating the green bounds");

    // --- plant step -----------------------------------------------------------
    const double fluct = scenario.noise.mfd_fluctuation;
    rec.outflow_scale = fluct > 0.0 ? production_rng.uniform(1.0 - fluct, 1.0 + fluct) : 1.0;
    const auto [o11, o12] = split_outflow(scenario.mfd, state);

    rec.departures.assign(nI, {});
    for (int i = 0; i < nI; ++i) {
      const auto& inter = inters[i];
      rec.departures[i].assign(inter.streams.size(), 0.0);
      for (std::size_t m = 0; m < inter.streams.size(); ++m) {
        const auto& stream = inter.streams[m];
        const double cap = stream_capacity(inter, stream.id, rec.greens.g[i]);
        double demand_rate = 0.0;
        if (stream.cls == StreamClass::outflow) {
          demand_rate = inter.alpha_for(static_cast<int>(m)) / nI * rec.outflow_scale * o12;
        } else {
          demand_rate = queues.x[i][m] / C + slice.arrivals[i][m];
        }
        rec.departures[i][m] = departure_flow(demand_rate, cap);
      }
    }
    const auto [beta21, beta12] = aggregate_transfers(inters, rec.departures);
    rec.beta21 = beta21;
    rec.beta12 = beta12;

    state = network_step(state, slice.d11, slice.d12, beta21, beta12, o11, C, rec.outflow_scale);
    for (int i = 0; i < nI; ++i)
      for (std::size_t m = 0; m < inters[i].streams.size(); ++m) {
        if (inters[i].streams[m].cls == StreamClass::outflow) continue;
        queues.x[i][m] = queue_step(queues.x[i][m], slice.arrivals[i][m], rec.departures[i][m], C);
      }

    log.cycles.push_back(std::move(rec));
  }
  log.complete = true;
  return log;
}

RunLog run_scenario(const Scenario& scenario) {
  const auto intersections = scenario.build_intersections();
  auto controller = make_controller(scenario, intersections);
  return simulate(scenario, *controller);
}

} // namespace perim
