#include "perim/mpc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "perim/errors.hpp"
#include "perim/lp/simplex.hpp"

namespace perim {

using lp::LinExpr;
using lp::PiecewiseModel;
using lp::Relation;

void MpcConfig::validate() const {
  if (horizon < 1) throw config_error("MPC horizon must be at least one cycle");
  if (!(cycle_hr > 0.0)) throw config_error("cycle length must be positive");
  if (!(network_weight > 0.0) || !(intersection_weight > 0.0))
    throw config_error("objective weights must be positive");
  mfd.validate();
  if (intersections.empty()) throw config_error("MPC needs at least one intersection");
  for (const auto& inter : intersections) inter.validate();
}

namespace {

std::string tag(const char* base, int l, int i = -1, int s = -1) {
  std::string t(base);
  t += "[" + std::to_string(l);
  if (i >= 0) t += "," + std::to_string(i);
  if (s >= 0) t += "," + std::to_string(s);
  t += "]";
  return t;
}

void check_dimensions(const MpcConfig& config, const MpcInput& input) {
  const std::size_t nI = config.intersections.size();
  const std::size_t L = static_cast<std::size_t>(config.horizon);
  if (input.d11.size() < L || input.d12.size() < L)
    throw config_error("demand forecast shorter than the horizon");
  if (input.x_hat.size() != nI || input.arrivals.size() != nI)
    throw config_error("per-intersection inputs do not match the configuration");
  for (std::size_t i = 0; i < nI; ++i) {
    const std::size_t nM = config.intersections[i].streams.size();
    if (input.x_hat[i].size() != nM || input.arrivals[i].size() != nM)
      throw config_error("per-stream inputs do not match intersection " +
                         std::to_string(config.intersections[i].id));
    for (std::size_t m = 0; m < nM; ++m) {
      if (config.intersections[i].streams[m].cls == StreamClass::outflow) continue;
      if (input.arrivals[i][m].size() < L)
        throw config_error("arrival forecast shorter than the horizon");
    }
  }
}

} // namespace

MpcBlockMap append_mpc_block(PiecewiseModel& model, const MpcConfig& config,
                             const MpcInput& input, std::span<const int> shared_first_greens,
                             double objective_scale) {
  config.validate();
  check_dimensions(config, input);

  const int L = config.horizon;
  const int nI = static_cast<int>(config.intersections.size());
  const double C = config.cycle_hr;
  const auto& mfd = config.mfd;
  const LinearizedOutflow gamma =
      linearization_coefficients(mfd, input.n11_hat, input.n12_hat);

  MpcBlockMap map;
  map.L = L;
  map.var_base = model.num_vars();
  map.plain_base = model.num_plain_rows();
  map.queue_streams.resize(nI);
  map.out_streams.resize(nI);
  int n_phases = 0;
  for (int i = 0; i < nI; ++i) {
    const auto& inter = config.intersections[i];
    n_phases = std::max(n_phases, static_cast<int>(inter.phases.size()));
    for (int m = 0; m < static_cast<int>(inter.streams.size()); ++m) {
      if (inter.streams[m].cls == StreamClass::outflow) map.out_streams[i].push_back(m);
      else map.queue_streams[i].push_back(m);
    }
  }
  int nQ = 0, nO = 0;
  for (int i = 0; i < nI; ++i) {
    nQ += static_cast<int>(map.queue_streams[i].size());
    nO += static_cast<int>(map.out_streams[i].size());
  }

  // Per (intersection, phase): service rate for the inflow streams, and the
  // phase list serving each stream.
  std::vector<std::vector<double>> inflow_rate(nI);
  std::vector<std::vector<std::vector<int>>> serving(nI);
  for (int i = 0; i < nI; ++i) {
    const auto& inter = config.intersections[i];
    const int nP = static_cast<int>(inter.phases.size());
    inflow_rate[i].assign(nP, 0.0);
    serving[i].resize(inter.streams.size());
    for (int m = 0; m < static_cast<int>(inter.streams.size()); ++m)
      for (int p = 0; p < nP; ++p)
        if (inter.phase_serves(p, inter.streams[m].id)) {
          serving[i][m].push_back(p);
          if (inter.streams[m].cls == StreamClass::inflow)
            inflow_rate[i][p] += inter.streams[m].saturation_flow;
        }
  }

  map.green.assign(static_cast<std::size_t>(L) * nI * n_phases, -1);
  map.n11.assign(L, -1);
  map.n12.assign(L, -1);
  map.x.assign(static_cast<std::size_t>(L) * nQ, -1);
  map.mu_out.assign(static_cast<std::size_t>(L) * nO, -1);
  map.o11.assign(L, -1);

  auto make_greens = [&](int l) {
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      const int nP = static_cast<int>(inter.phases.size());
      const double spare = inter.g_max - (nP - 1) * inter.g_min_per_phase;
      LinExpr sum;
      for (int p = 0; p < nP; ++p) {
        const int v =
            model.add_decision(tag("g", l, inter.id, inter.phases[p].id),
                               inter.g_min_per_phase, spare);
        map.green[(static_cast<std::size_t>(l) * nI + i) * n_phases + p] = v;
        sum.add(v, 1.0);
      }
      model.add_constraint(sum, Relation::le, inter.g_max, tag("gsum", l, inter.id));
    }
  };

  if (shared_first_greens.empty()) {
    make_greens(0);
  } else {
    if (shared_first_greens.size() != static_cast<std::size_t>(nI) * n_phases)
      throw config_error("shared first-cycle green ids do not match the configuration");
    for (std::size_t k = 0; k < shared_first_greens.size(); ++k)
      map.green[k] = shared_first_greens[k];
  }

  // Queue-stream flat index base per intersection.
  std::vector<int> qbase(nI, 0), obase(nI, 0);
  for (int i = 1; i < nI; ++i) {
    qbase[i] = qbase[i - 1] + static_cast<int>(map.queue_streams[i - 1].size());
    obase[i] = obase[i - 1] + static_cast<int>(map.out_streams[i - 1].size());
  }

  // State trackers: var id (or -1) plus constant part for l = 0.
  int n11_var = -1, n12_var = -1;
  double n11_const = input.n11_hat, n12_const = input.n12_hat;
  std::vector<int> x_var(nQ, -1);
  std::vector<double> x_const(nQ, 0.0);
  for (int i = 0; i < nI; ++i)
    for (std::size_t q = 0; q < map.queue_streams[i].size(); ++q)
      x_const[qbase[i] + q] = input.x_hat[i][map.queue_streams[i][q]];

  auto n11_expr = [&](double scale) {
    LinExpr e;
    if (n11_var >= 0) e.add(n11_var, scale);
    else e.constant += scale * n11_const;
    return e;
  };
  auto n12_expr = [&](double scale) {
    LinExpr e;
    if (n12_var >= 0) e.add(n12_var, scale);
    else e.constant += scale * n12_const;
    return e;
  };

  for (int l = 0; l < L; ++l) {
    if (l > 0) make_greens(l);

    // Outflow-stream departures: min of the two linearized demand branches
    // and the signal capacity, per stream.
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      for (std::size_t o = 0; o < map.out_streams[i].size(); ++o) {
        const int m = map.out_streams[i][o];
        const double share = inter.alpha_for(m) / static_cast<double>(nI);
        LinExpr demand_free = n12_expr(share * mfd.v);
        LinExpr demand_cong = n11_expr(share * gamma.gamma21);
        demand_cong.add(n12_expr(share * gamma.gamma22));
        demand_cong.constant += share * gamma.gamma20;
        LinExpr cap;
        for (int p : serving[i][m]) {
          const int gv = map.green[(static_cast<std::size_t>(l) * nI + i) * n_phases + p];
          cap.add(gv, inter.streams[m].saturation_flow);
        }
        const int v = model.add_min(tag("mu_out", l, inter.id, inter.streams[m].id),
                                    {demand_free, demand_cong, cap});
        map.mu_out[static_cast<std::size_t>(l) * nO + obase[i] + o] = v;
      }
    }

    // Network completion flow for the internal stream.
    LinExpr o11_term; // contribution of -C*o11 to the n11 update
    {
      LinExpr free_branch = n11_expr(mfd.v);
      LinExpr cong_branch = n11_expr(gamma.gamma11);
      cong_branch.add(n12_expr(gamma.gamma12));
      cong_branch.constant += gamma.gamma10;
      if (free_branch.is_constant() && cong_branch.is_constant()) {
        o11_term.constant = -C * std::min(free_branch.constant, cong_branch.constant);
      } else {
        const int v = model.add_min(tag("o11", l), {free_branch, cong_branch});
        map.o11[l] = v;
        o11_term.add(v, -C);
      }
    }

    // Accumulation bound for the center: inflow-stream departures sit at
    // their capacity in the prediction model.
    {
      LinExpr next = n11_expr(1.0);
      next.constant += input.d11[l] * C;
      for (int i = 0; i < nI; ++i) {
        const auto& inter = config.intersections[i];
        for (int p = 0; p < static_cast<int>(inter.phases.size()); ++p) {
          if (inflow_rate[i][p] == 0.0) continue;
          const int gv = map.green[(static_cast<std::size_t>(l) * nI + i) * n_phases + p];
          next.add(gv, C * inflow_rate[i][p]);
        }
      }
      next.add(o11_term);
      n11_var = model.add_defined(tag("n11", l + 1), next);
      map.n11[l] = n11_var;
    }
    {
      LinExpr next = n12_expr(1.0);
      next.constant += input.d12[l] * C;
      for (int k = 0; k < nO; ++k)
        next.add(map.mu_out[static_cast<std::size_t>(l) * nO + k], -C);
      n12_var = model.add_defined(tag("n12", l + 1), next);
      map.n12[l] = n12_var;
    }

    // Queue clamps for inflow and side streams. Inflow departures equal the
    // capacity, so both stream kinds share the max{0, x + (q - cap)C} form.
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      for (std::size_t q = 0; q < map.queue_streams[i].size(); ++q) {
        const int m = map.queue_streams[i][q];
        const int flat = qbase[i] + static_cast<int>(q);
        LinExpr chain;
        if (x_var[flat] >= 0) chain.add(x_var[flat], 1.0);
        else chain.constant += x_const[flat];
        chain.constant += input.arrivals[i][m][l] * C;
        for (int p : serving[i][m]) {
          const int gv = map.green[(static_cast<std::size_t>(l) * nI + i) * n_phases + p];
          chain.add(gv, -C * inter.streams[m].saturation_flow);
        }
        const int v = model.add_max(tag("x", l + 1, inter.id, inter.streams[m].id),
                                    {LinExpr(0.0), chain});
        x_var[flat] = v;
        map.x[static_cast<std::size_t>(l) * nQ + flat] = v;
      }
    }

    // Travel-cost terms of cycle l+1.
    LinExpr cost;
    cost.add(n11_var, config.network_weight);
    cost.add(n12_var, config.network_weight);
    for (int k = 0; k < nQ; ++k) cost.add(x_var[k], config.intersection_weight);
    model.add_objective(cost, objective_scale * C);
  }
  map.var_count = model.num_vars() - map.var_base;
  map.plain_count = model.num_plain_rows() - map.plain_base;
  return map;
}

MpcModel build_mpc(const MpcConfig& config, const MpcInput& input) {
  MpcModel out;
  out.map = append_mpc_block(out.model, config, input, {}, 1.0);
  return out;
}

void project_greens(const IntersectionSpec& inter, std::vector<double>& greens) {
  const double gmin = inter.g_min_per_phase;
  double above = 0.0;
  for (double& g : greens) {
    g = std::max(g, gmin);
    above += g - gmin;
  }
  const double budget = inter.g_max - gmin * static_cast<double>(greens.size());
  if (above > budget && above > 0.0) {
    const double scale = budget / above;
    for (double& g : greens) g = gmin + (g - gmin) * scale;
  }
}

MpcOutput solve_mpc(const MpcConfig& config, const MpcInput& input, const GreenPlan* fixed_first,
                    const std::vector<GreenPlan>* schedule_hint) {
  const int nI = static_cast<int>(config.intersections.size());
  const int L = config.horizon;
  int n_phases = 0;
  for (const auto& inter : config.intersections)
    n_phases = std::max(n_phases, static_cast<int>(inter.phases.size()));

  MpcModel built;
  if (fixed_first) {
    // Pin the first-cycle plan by fixing the decision bounds.
    std::vector<int> g0;
    g0.reserve(static_cast<std::size_t>(nI) * n_phases);
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      for (int p = 0; p < n_phases; ++p) {
        const double g = p < static_cast<int>(inter.phases.size()) ? fixed_first->g.at(i).at(p)
                                                                   : inter.g_min_per_phase;
        g0.push_back(built.model.add_decision(tag("g", 0, inter.id, p + 1), g, g));
      }
    }
    built.map = append_mpc_block(built.model, config, input, g0, 1.0);
  } else {
    built = build_mpc(config, input);
  }

  auto ref = built.model.reformulate_mapped();
  std::vector<double> start_point;
  if (schedule_hint && !schedule_hint->empty()) {
    start_point.assign(built.model.num_vars(), 0.0);
    for (int l = 0; l < L; ++l) {
      const auto& plan = (*schedule_hint)[std::min<std::size_t>(l, schedule_hint->size() - 1)];
      for (int i = 0; i < nI; ++i)
        for (int p = 0; p < static_cast<int>(config.intersections[i].phases.size()); ++p) {
          const int v = built.map.green_var(l, i, p, nI, n_phases);
          if (v >= 0) start_point[v] = plan.g.at(i).at(p);
        }
    }
  }
  lp::Basis basis = built.model.crash_basis(ref, start_point);
  lp::SimplexOptions opt;
  lp::Solution sol = lp::solve_lp(ref.lp, basis, opt);
  if (sol.status == lp::SolveStatus::failed) {
    // retry cold with conservative settings before giving up
    lp::SimplexOptions retry = opt;
    retry.refactor_interval = 40;
    sol = lp::solve_lp(ref.lp, retry);
  }
  if (sol.status != lp::SolveStatus::optimal)
    throw solve_error(std::string("MPC solve ") + lp::to_string(sol.status) +
                      (sol.note.empty() ? "" : ": " + sol.note));

  MpcOutput out;
  out.iterations = sol.iterations;
  out.objective = sol.objective;
  out.tightness_gap = built.model.max_tightness_gap(sol.x);
  out.definition_residual = built.model.max_definition_residual(sol.x);
  assert(out.tightness_gap <= 1e-4);
  assert(out.definition_residual <= 1e-6);

  out.green_schedule.resize(L);
  for (int l = 0; l < L; ++l) {
    out.green_schedule[l].g.resize(nI);
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      auto& greens = out.green_schedule[l].g[i];
      greens.resize(inter.phases.size());
      for (int p = 0; p < static_cast<int>(inter.phases.size()); ++p)
        greens[p] = sol.x[built.map.green_var(l, i, p, nI, n_phases)];
    }
  }
  out.first_cycle_plan = out.green_schedule[0];
  for (int i = 0; i < nI; ++i)
    project_greens(config.intersections[i], out.first_cycle_plan.g[i]);

  out.n11_pred.resize(L + 1);
  out.n12_pred.resize(L + 1);
  out.n11_pred[0] = input.n11_hat;
  out.n12_pred[0] = input.n12_hat;
  for (int l = 1; l <= L; ++l) {
    out.n11_pred[l] = sol.x[built.map.n11[l - 1]];
    out.n12_pred[l] = sol.x[built.map.n12[l - 1]];
  }
  out.queue_pred.assign(L + 1, QueueState::zeros(config.intersections));
  for (int i = 0; i < nI; ++i)
    for (std::size_t m = 0; m < config.intersections[i].streams.size(); ++m)
      out.queue_pred[0].x[i][m] =
          config.intersections[i].streams[m].cls == StreamClass::outflow
              ? 0.0
              : input.x_hat[i][m];
  int nQ = 0;
  for (int i = 0; i < nI; ++i) nQ += static_cast<int>(built.map.queue_streams[i].size());
  for (int l = 1; l <= L; ++l) {
    int flat = 0;
    for (int i = 0; i < nI; ++i)
      for (int m : built.map.queue_streams[i])
        out.queue_pred[l].x[i][m] = sol.x[built.map.x[static_cast<std::size_t>(l - 1) * nQ + flat++]];
  }
  return out;
}

} // namespace perim
