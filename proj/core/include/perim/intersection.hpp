#pragma once

#include <string>
#include <vector>

namespace perim {

enum class StreamClass { inflow, outflow, side };

/// A movement direction at a perimeter intersection.
struct StreamSpec {
  int id = 0; ///< 1-based, unique within the intersection
  StreamClass cls = StreamClass::side;
  double saturation_flow = 1800.0; ///< veh/hr
};

/// A signal interval serving a fixed set of streams.
struct PhaseSpec {
  int id = 0; ///< 1-based, unique within the intersection
  std::vector<int> served_streams;
};

/// Geometry and signal limits of one perimeter intersection.
///
/// Default layout (streams 1..8, phases 1..4): streams 2 and 7 feed the
/// center region, 4 and 8 leave it, the rest run along the boundary.
/// Phase 1 serves {1,3,5,6}; phase 2 {2,7}; phase 3 {2,7,4,8}; phase 4 {4,8}.
struct IntersectionSpec {
  int id = 0;
  std::vector<StreamSpec> streams;
  std::vector<PhaseSpec> phases;
  double g_max = 0.9;
  double g_min_per_phase = 0.1;
  /// Outflow split fraction per outflow stream, same order as the outflow
  /// streams appear in `streams`. Must sum to 1.
  std::vector<double> alpha;
  /// Multiplicative demand heterogeneity for this intersection.
  double demand_factor = 1.0;

  int stream_index(int stream_id) const; ///< throws on unknown id
  int phase_index(int phase_id) const;   ///< throws on unknown id
  bool phase_serves(int phase_idx, int stream_id) const;
  double alpha_for(int stream_idx) const; ///< 0 for non-outflow streams
  void validate() const;
};

/// The default 8-stream / 4-phase perimeter intersection. Inflow approaches
/// get a lower saturation flow so that minimum greens do not already pass
/// the whole peak demand (gating must have authority over the inflow).
IntersectionSpec default_intersection(int id, double inflow_saturation = 900.0,
                                      double other_saturation = 1800.0);

/// Queue lengths [veh], indexed [intersection][stream position]. Entries for
/// outflow streams stay zero (the model keeps no queue for them).
struct QueueState {
  std::vector<std::vector<double>> x;

  static QueueState zeros(const std::vector<IntersectionSpec>& intersections);
  double total() const;
  double total_at(int intersection_idx) const;
};

/// Green-time ratios per (intersection, phase), dimensionless.
struct GreenPlan {
  std::vector<std::vector<double>> g;

  static GreenPlan uniform(const std::vector<IntersectionSpec>& intersections, double value);
  /// Every phase at its minimum green.
  static GreenPlan minimum(const std::vector<IntersectionSpec>& intersections);
  /// Checks g >= g_min per phase and sum <= g_max per intersection.
  bool satisfies_bounds(const std::vector<IntersectionSpec>& intersections,
                        double tol = 1e-9) const;
};

/// Capacity of one stream under a green plan: sum of saturation_flow * g over
/// the phases serving it [veh/hr]. Throws on unknown stream id.
double stream_capacity(const IntersectionSpec& intersection, int stream_id,
                       const std::vector<double>& greens);

/// Departure flow: min(demand_rate, capacity) [veh/hr].
double departure_flow(double demand_rate, double capacity);

/// Queue conservation with clamping: max{0, x + (q - mu) * C} [veh].
double queue_step(double x, double q, double mu, double cycle_hr);

/// Sums departures into the two controlled transfer flows:
/// beta21 over inflow streams, beta12 over outflow streams [veh/hr].
std::pair<double, double>
aggregate_transfers(const std::vector<IntersectionSpec>& intersections,
                    const std::vector<std::vector<double>>& departures);

} // namespace perim
