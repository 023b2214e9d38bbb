#include "perim/stochastic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "perim/errors.hpp"
#include "perim/rng.hpp"

namespace perim {

SampleDistributions SampleDistributions::exact(MpcInput nominal) {
  SampleDistributions d;
  d.queue_std_frac.resize(nominal.x_hat.size());
  for (std::size_t i = 0; i < nominal.x_hat.size(); ++i)
    d.queue_std_frac[i].assign(nominal.x_hat[i].size(), 0.0);
  d.nominal = std::move(nominal);
  return d;
}

void StochasticConfig::validate() const {
  mpc.validate();
  if (sample_size < 1 || sample_size > 50)
    throw config_error("stochastic sample size must lie in [1, 50]");
}

SampleSet draw_samples(const SampleDistributions& dist, int size, std::uint64_t seed) {
  if (size < 1) throw config_error("sample size must be at least 1");
  if (dist.queue_std_frac.size() != dist.nominal.x_hat.size())
    throw config_error("queue std fractions do not match the nominal input");

  Rng rng(split_seed(seed, 0x5d353));
  auto draw = [&rng](double mean, double rel_std) {
    if (rel_std <= 0.0) return std::max(0.0, mean);
    return std::max(0.0, mean * (1.0 + rel_std * rng.gaussian()));
  };

  SampleSet set;
  set.samples.reserve(size);
  for (int r = 0; r < size; ++r) {
    MpcInput s = dist.nominal;
    s.n11_hat = draw(dist.nominal.n11_hat, dist.n11_std_frac);
    s.n12_hat = draw(dist.nominal.n12_hat, dist.n12_std_frac);
    for (std::size_t i = 0; i < s.x_hat.size(); ++i)
      for (std::size_t m = 0; m < s.x_hat[i].size(); ++m)
        s.x_hat[i][m] = draw(dist.nominal.x_hat[i][m], dist.queue_std_frac[i][m]);
    for (auto& v : s.d11) v = draw(v, dist.demand_std_frac);
    for (auto& v : s.d12) v = draw(v, dist.demand_std_frac);
    for (auto& per_stream : s.arrivals)
      for (auto& series : per_stream)
        for (auto& v : series) v = draw(v, dist.demand_std_frac);
    set.samples.push_back(std::move(s));
  }
  return set;
}

TwoStageModel build_two_stage(const StochasticConfig& config, const SampleSet& samples) {
  config.validate();
  if (samples.size() < 1) throw config_error("empty sample set");

  TwoStageModel out;
  const auto& intersections = config.mpc.intersections;
  const int nI = static_cast<int>(intersections.size());
  int n_phases = 0;
  for (const auto& inter : intersections)
    n_phases = std::max(n_phases, static_cast<int>(inter.phases.size()));

  // First-stage greens with their own bound rows, shared by every sample.
  out.shared_first_greens.reserve(static_cast<std::size_t>(nI) * n_phases);
  for (int i = 0; i < nI; ++i) {
    const auto& inter = intersections[i];
    const int nP = static_cast<int>(inter.phases.size());
    const double spare = inter.g_max - (nP - 1) * inter.g_min_per_phase;
    lp::LinExpr sum;
    for (int p = 0; p < n_phases; ++p) {
      const bool real = p < nP;
      const std::string name = "g0[" + std::to_string(inter.id) + "," + std::to_string(p + 1) + "]";
      const int v = real ? out.model.add_decision(name, inter.g_min_per_phase, spare)
                         : out.model.add_decision(name, 0.0, 0.0);
      out.shared_first_greens.push_back(v);
      if (real) sum.add(v, 1.0);
    }
    out.model.add_constraint(sum, lp::Relation::le, inter.g_max,
                             "gsum0[" + std::to_string(inter.id) + "]");
  }

  const double scale = 1.0 / static_cast<double>(samples.size());
  out.blocks.reserve(samples.size());
  for (const MpcInput& sample : samples.samples)
    out.blocks.push_back(
        append_mpc_block(out.model, config.mpc, sample, out.shared_first_greens, scale));
  return out;
}

MpcOutput solve_stochastic(const StochasticConfig& config, const SampleDistributions& dist) {
  const SampleSet samples = draw_samples(dist, config.sample_size, config.seed);
  TwoStageModel built = build_two_stage(config, samples);
  const auto ref = built.model.reformulate_mapped();

  // Start the combined solve from the conditional optima: commit the nominal
  // deterministic first cycle, re-solve every sample block against it, and
  // stitch the per-block optimal bases together. Block-wise the start is
  // then optimal with matching bases, so the combined simplex only has to
  // negotiate the shared first-stage greens.
  const auto& intersections = config.mpc.intersections;
  const int nI = static_cast<int>(intersections.size());
  int n_ph = 0;
  for (const auto& inter : intersections)
    n_ph = std::max(n_ph, static_cast<int>(inter.phases.size()));

  const MpcOutput nominal = solve_mpc(config.mpc, dist.nominal);

  const int n_comb = built.model.num_vars();
  const int m_comb = ref.lp.num_rows();
  lp::Basis stitched;
  stitched.status.assign(n_comb + m_comb, lp::VarStatus::at_lower);
  stitched.value.assign(n_comb + m_comb, 0.0);
  for (int i = 0; i < nI; ++i)
    for (int p = 0; p < static_cast<int>(intersections[i].phases.size()); ++p) {
      const int v = built.shared_first_greens[static_cast<std::size_t>(i) * n_ph + p];
      stitched.status[v] = lp::VarStatus::at_value;
      stitched.value[v] = nominal.first_cycle_plan.g[i][p];
    }
  // shared first-stage bound rows keep their logicals
  for (int k = 0; k < nI; ++k)
    stitched.status[n_comb + ref.first_plain_row + k] = lp::VarStatus::basic;

  int np_base = 0;
  int plain_base = nI; // combined plain rows: shared bounds first, then blocks
  for (int r = 0; r < samples.size(); ++r) {
    // standalone copy of this block with the first stage pinned
    lp::PiecewiseModel block_model;
    std::vector<int> pinned;
    pinned.reserve(static_cast<std::size_t>(nI) * n_ph);
    for (int i = 0; i < nI; ++i)
      for (int p = 0; p < n_ph; ++p) {
        const double g = p < static_cast<int>(intersections[i].phases.size())
                             ? nominal.first_cycle_plan.g[i][p]
                             : 0.0;
        pinned.push_back(block_model.add_decision("g0pin", g, g));
      }
    const MpcBlockMap bmap =
        append_mpc_block(block_model, config.mpc, samples.samples[r], pinned, 1.0);
    const auto block_ref = block_model.reformulate_mapped();

    std::vector<double> hint(block_model.num_vars(), 0.0);
    for (int l = 1; l < bmap.L; ++l)
      for (int i = 0; i < nI; ++i)
        for (int p = 0; p < static_cast<int>(intersections[i].phases.size()); ++p) {
          const int v = bmap.green_var(l, i, p, nI, n_ph);
          if (v >= 0) hint[v] = nominal.green_schedule[l].g[i][p];
        }
    lp::Basis block_basis = block_model.crash_basis(block_ref, hint);
    const lp::Solution block_sol = lp::solve_lp(block_ref.lp, block_basis);
    if (block_sol.status != lp::SolveStatus::optimal)
      throw solve_error(std::string("stochastic block solve ") +
                        lp::to_string(block_sol.status));

    // map the block basis into the combined one (identical construction
    // sequence, so variables and rows correspond range-to-range)
    const int n_s = block_model.num_vars();
    const int np_s = block_ref.first_plain_row;
    const int comb_var_base = built.blocks[r].var_base;
    for (int v = bmap.var_base; v < n_s; ++v) {
      const int cv = comb_var_base + (v - bmap.var_base);
      stitched.status[cv] = block_basis.status[v];
      stitched.value[cv] = v < static_cast<int>(block_basis.value.size())
                               ? block_basis.value[v]
                               : 0.0;
    }
    for (int row = 0; row < block_ref.lp.num_rows(); ++row) {
      const int comb_row =
          row < np_s ? np_base + row : ref.first_plain_row + plain_base + (row - np_s);
      stitched.status[n_comb + comb_row] = block_basis.status[n_s + row];
    }
    np_base += np_s;
    plain_base += block_ref.lp.num_rows() - np_s;
  }

  lp::SimplexOptions opt;
  opt.refactor_interval = 120;
  opt.coupling_columns = built.shared_first_greens;
  lp::Solution sol = lp::solve_lp(ref.lp, stitched, opt);
  if (sol.status != lp::SolveStatus::optimal) {
    // stitched start failed; retry from the evaluation crash
    lp::Basis fallback = built.model.crash_basis(ref);
    sol = lp::solve_lp(ref.lp, fallback, opt);
  }
  if (sol.status != lp::SolveStatus::optimal)
    throw solve_error(std::string("stochastic MPC solve ") + lp::to_string(sol.status) +
                      (sol.note.empty() ? "" : ": " + sol.note));

  const int L = config.mpc.horizon;
  const int n_phases = n_ph;

  MpcOutput out;
  out.iterations = sol.iterations;
  out.objective = sol.objective;
  out.tightness_gap = built.model.max_tightness_gap(sol.x);
  out.definition_residual = built.model.max_definition_residual(sol.x);

  out.first_cycle_plan.g.resize(nI);
  for (int i = 0; i < nI; ++i) {
    const auto& inter = intersections[i];
    auto& greens = out.first_cycle_plan.g[i];
    greens.resize(inter.phases.size());
    for (int p = 0; p < static_cast<int>(inter.phases.size()); ++p)
      greens[p] = sol.x[built.shared_first_greens[static_cast<std::size_t>(i) * n_phases + p]];
    project_greens(inter, greens);
  }

  // Across-sample mean of the predicted trajectories.
  const double w = 1.0 / static_cast<double>(samples.size());
  out.n11_pred.assign(L + 1, 0.0);
  out.n12_pred.assign(L + 1, 0.0);
  out.queue_pred.assign(L + 1, QueueState::zeros(intersections));
  for (int r = 0; r < samples.size(); ++r) {
    const auto& block = built.blocks[r];
    const auto& sample = samples.samples[r];
    out.n11_pred[0] += w * sample.n11_hat;
    out.n12_pred[0] += w * sample.n12_hat;
    int nQ = 0;
    for (int i = 0; i < nI; ++i) nQ += static_cast<int>(block.queue_streams[i].size());
    for (int l = 1; l <= L; ++l) {
      out.n11_pred[l] += w * sol.x[block.n11[l - 1]];
      out.n12_pred[l] += w * sol.x[block.n12[l - 1]];
      int flat = 0;
      for (int i = 0; i < nI; ++i)
        for (int m : block.queue_streams[i])
          out.queue_pred[l].x[i][m] +=
              w * sol.x[block.x[static_cast<std::size_t>(l - 1) * nQ + flat++]];
    }
    for (int i = 0; i < nI; ++i)
      for (std::size_t m = 0; m < intersections[i].streams.size(); ++m)
        if (intersections[i].streams[m].cls != StreamClass::outflow)
          out.queue_pred[0].x[i][m] += w * sample.x_hat[i][m];
  }
  return out;
}

} // namespace perim
