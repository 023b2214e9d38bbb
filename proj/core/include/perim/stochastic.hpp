#pragma once

#include <cstdint>
#include <vector>

#include "perim/lp/simplex.hpp"
#include "perim/mpc.hpp"

namespace perim {

/// Distribution parameters for scenario sampling: the nominal input carries
/// the means, the fractions the relative standard deviations. Queue
/// measurement error varies per stream (it depends on the queue size under
/// partial observation), so it is specified per (intersection, stream).
struct SampleDistributions {
  MpcInput nominal;
  double n11_std_frac = 0.0;
  double n12_std_frac = 0.0;
  std::vector<std::vector<double>> queue_std_frac;
  double demand_std_frac = 0.0;

  /// Degenerate distributions: every sample equals the nominal input.
  static SampleDistributions exact(MpcInput nominal);
};

struct SampleSet {
  std::vector<MpcInput> samples;
  int size() const { return static_cast<int>(samples.size()); }
};

struct StochasticConfig {
  MpcConfig mpc;
  int sample_size = 20;
  std::uint64_t seed = 0;

  void validate() const; ///< sample_size must stay within [1, 50]
};

/// Seeded, reproducible draws; every sampled quantity is truncated at zero.
/// Identical (distributions, size, seed) give an identical SampleSet.
SampleSet draw_samples(const SampleDistributions& dist, int size, std::uint64_t seed);

struct TwoStageModel {
  lp::PiecewiseModel model;
  std::vector<int> shared_first_greens;
  std::vector<MpcBlockMap> blocks;
};

/// One combined program: shared first-cycle greens under the physical green
/// bounds, per-sample recourse greens and dynamics for the remaining cycles,
/// and the sample-average cost as objective.
TwoStageModel build_two_stage(const StochasticConfig& config, const SampleSet& samples);

/// Draws samples, builds the combined program, and solves it as one LP,
/// started from an evaluation crash at the nominal deterministic plan.
/// The returned trajectory is the across-sample mean prediction.
MpcOutput solve_stochastic(const StochasticConfig& config, const SampleDistributions& dist);

} // namespace perim
