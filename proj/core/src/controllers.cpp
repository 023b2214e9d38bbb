#include <algorithm>
#include <utility>

#include "perim/baselines.hpp"
#include "perim/errors.hpp"
#include "perim/mpc.hpp"
#include "perim/simulate.hpp"
#include "perim/stochastic.hpp"

namespace perim {

namespace {

MpcInput input_from_view(const ControllerView& view) {
  MpcInput in;
  in.n11_hat = view.n11_meas;
  in.n12_hat = view.n12_meas;
  in.x_hat = view.queues_meas;
  in.d11 = view.d11_forecast;
  in.d12 = view.d12_forecast;
  in.arrivals = view.arrival_forecast;
  return in;
}

class MpcController final : public Controller {
public:
  explicit MpcController(MpcConfig config) : config_(std::move(config)) { config_.validate(); }
  const char* name() const override { return "mpc"; }
  int forecast_horizon() const override { return config_.horizon; }
  GreenPlan decide(const ControllerView& view) override {
    return solve_mpc(config_, input_from_view(view)).first_cycle_plan;
  }

private:
  MpcConfig config_;
};

class StochasticMpcController final : public Controller {
public:
  StochasticMpcController(StochasticConfig config, std::uint64_t run_seed)
      : config_(std::move(config)), run_seed_(run_seed) {
    config_.validate();
  }
  const char* name() const override { return "stochastic"; }
  int forecast_horizon() const override { return config_.mpc.horizon; }
  GreenPlan decide(const ControllerView& view) override {
    SampleDistributions dist;
    dist.nominal = input_from_view(view);
    dist.n11_std_frac = view.n11_std_frac;
    dist.n12_std_frac = view.n12_std_frac;
    dist.queue_std_frac = view.queue_std_frac;
    dist.demand_std_frac = view.demand_std_frac;
    StochasticConfig cycle_config = config_;
    cycle_config.seed = split_seed(run_seed_, 0x5a0000u + static_cast<std::uint64_t>(view.cycle));
    return solve_stochastic(cycle_config, dist).first_cycle_plan;
  }

private:
  StochasticConfig config_;
  std::uint64_t run_seed_;
};

class PidController final : public Controller {
public:
  PidController(PidConfig config, std::vector<IntersectionSpec> intersections, TriangularMfd mfd,
                double cycle_hr)
      : config_(config), intersections_(std::move(intersections)), mfd_(mfd),
        cycle_hr_(cycle_hr) {}
  const char* name() const override { return "pid"; }
  int forecast_horizon() const override { return 0; }
  GreenPlan decide(const ControllerView& view) override {
    const double u =
        pid_total_inflow(state_, config_, view.n11_meas + view.n12_meas, cycle_hr_);
    return distribute(u, view, intersections_, mfd_);
  }

  static GreenPlan distribute(double total_inflow, const ControllerView& view,
                              const std::vector<IntersectionSpec>& intersections,
                              const TriangularMfd& mfd) {
    const auto [o11, o12] =
        split_outflow(mfd, NetworkState{view.n11_meas, view.n12_meas});
    (void)o11;
    std::vector<double> outflow_demand(intersections.size(),
                                       o12 / static_cast<double>(intersections.size()));
    QueueState measured;
    measured.x = view.queues_meas;
    return allocate_greens(total_inflow, outflow_demand, measured, intersections);
  }

private:
  PidConfig config_;
  PidState state_;
  std::vector<IntersectionSpec> intersections_;
  TriangularMfd mfd_;
  double cycle_hr_;
};

class BangBangController final : public Controller {
public:
  BangBangController(BangBangConfig config, std::vector<IntersectionSpec> intersections,
                     TriangularMfd mfd)
      : config_(config), intersections_(std::move(intersections)), mfd_(mfd) {}
  const char* name() const override { return "bangbang"; }
  int forecast_horizon() const override { return 0; }
  GreenPlan decide(const ControllerView& view) override {
    const double u = bang_bang_total_inflow(state_, config_, view.n11_meas + view.n12_meas);
    return PidController::distribute(u, view, intersections_, mfd_);
  }

private:
  BangBangConfig config_;
  BangBangState state_;
  std::vector<IntersectionSpec> intersections_;
  TriangularMfd mfd_;
};

class FixedTimeController final : public Controller {
public:
  FixedTimeController(std::vector<IntersectionSpec> intersections, double green)
      : intersections_(std::move(intersections)) {
    plan_.g.reserve(intersections_.size());
    for (const auto& inter : intersections_) {
      const double g = green > 0.0 ? green
                                   : inter.g_max / static_cast<double>(inter.phases.size());
      std::vector<double> greens(inter.phases.size(), g);
      project_greens(inter, greens);
      plan_.g.push_back(std::move(greens));
    }
  }
  const char* name() const override { return "fixed"; }
  int forecast_horizon() const override { return 0; }
  GreenPlan decide(const ControllerView&) override { return plan_; }

private:
  std::vector<IntersectionSpec> intersections_;
  GreenPlan plan_;
};

} // namespace

std::unique_ptr<Controller> make_controller(const Scenario& scenario,
                                            const std::vector<IntersectionSpec>& intersections) {
  MpcConfig mpc;
  mpc.horizon = scenario.controller.horizon;
  mpc.mfd = scenario.mfd;
  mpc.intersections = intersections;
  mpc.cycle_hr = scenario.cycle_hr;

  switch (scenario.controller.kind) {
  case ControllerKind::mpc:
    return std::make_unique<MpcController>(std::move(mpc));
  case ControllerKind::stochastic: {
    StochasticConfig sc;
    sc.mpc = std::move(mpc);
    sc.sample_size = scenario.controller.sample_size;
    return std::make_unique<StochasticMpcController>(std::move(sc), scenario.seed);
  }
  case ControllerKind::pid: {
    PidConfig pc;
    pc.kp = scenario.controller.pid_kp;
    pc.ki = scenario.controller.pid_ki;
    pc.kd = scenario.controller.pid_kd;
    pc.setpoint = scenario.mfd.n_cr;
    pc.min_inflow = min_inflow_capacity(intersections);
    // commanding more than the network can ever complete only starves the
    // side streams, so the ceiling is the peak production flow
    pc.max_inflow =
        std::min(max_inflow_capacity(intersections), scenario.mfd.peak_outflow());
    return std::make_unique<PidController>(pc, intersections, scenario.mfd, scenario.cycle_hr);
  }
  case ControllerKind::bangbang: {
    BangBangConfig bc;
    bc.threshold = scenario.mfd.n_cr;
    bc.band = scenario.controller.bang_band;
    bc.min_inflow = min_inflow_capacity(intersections);
    bc.max_inflow =
        std::min(max_inflow_capacity(intersections), scenario.mfd.peak_outflow());
    return std::make_unique<BangBangController>(bc, intersections, scenario.mfd);
  }
  case ControllerKind::fixed:
    return std::make_unique<FixedTimeController>(intersections, scenario.controller.fixed_green);
  }
  throw config_error("unknown controller kind");
}

} // namespace perim
