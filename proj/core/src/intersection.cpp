#include "perim/intersection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perim/errors.hpp"

namespace perim {

int IntersectionSpec::stream_index(int stream_id) const {
  for (std::size_t i = 0; i < streams.size(); ++i)
    if (streams[i].id == stream_id) return static_cast<int>(i);
  throw config_error("unknown stream id " + std::to_string(stream_id) + " at intersection " +
                     std::to_string(id));
}

int IntersectionSpec::phase_index(int phase_id) const {
  for (std::size_t i = 0; i < phases.size(); ++i)
    if (phases[i].id == phase_id) return static_cast<int>(i);
  throw config_error("unknown phase id " + std::to_string(phase_id) + " at intersection " +
                     std::to_string(id));
}

bool IntersectionSpec::phase_serves(int phase_idx, int stream_id) const {
  const auto& served = phases.at(phase_idx).served_streams;
  return std::find(served.begin(), served.end(), stream_id) != served.end();
}

double IntersectionSpec::alpha_for(int stream_idx) const {
  int outflow_pos = 0;
  for (int i = 0; i < static_cast<int>(streams.size()); ++i) {
    if (streams[i].cls != StreamClass::outflow) continue;
    if (i == stream_idx) return alpha.at(outflow_pos);
    ++outflow_pos;
  }
  return 0.0;
}

void IntersectionSpec::validate() const {
  if (streams.empty() || phases.empty())
    throw config_error("intersection " + std::to_string(id) + " needs streams and phases");
  for (const auto& s : streams)
    if (!(s.saturation_flow > 0.0))
      throw config_error("stream saturation flow must be positive");
  std::size_t n_out = 0;
  for (const auto& s : streams)
    if (s.cls == StreamClass::outflow) ++n_out;
  if (alpha.size() != n_out)
    throw config_error("alpha must have one entry per outflow stream");
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (n_out > 0 && std::abs(alpha_sum - 1.0) > 1e-9)
    throw config_error("outflow split fractions must sum to 1");
  if (g_min_per_phase * static_cast<double>(phases.size()) > g_max + 1e-12 || g_max > 1.0 + 1e-12)
    throw config_error("green bounds violate g_min*|phases| <= g_max <= 1");
  for (const auto& p : phases)
    for (int sid : p.served_streams)
      (void)stream_index(sid);
}

IntersectionSpec default_intersection(int id, double inflow_saturation, double other_saturation) {
  IntersectionSpec spec;
  spec.id = id;
  auto cls_of = [](int sid) {
    if (sid == 2 || sid == 7) return StreamClass::inflow;
    if (sid == 4 || sid == 8) return StreamClass::outflow;
    return StreamClass::side;
  };
  for (int sid = 1; sid <= 8; ++sid) {
    StreamSpec s;
    s.id = sid;
    s.cls = cls_of(sid);
    s.saturation_flow = (s.cls == StreamClass::inflow) ? inflow_saturation : other_saturation;
    spec.streams.push_back(s);
  }
  spec.phases = {
      {1, {1, 3, 5, 6}},
      {2, {2, 7}},
      {3, {2, 7, 4, 8}},
      {4, {4, 8}},
  };
  spec.alpha = {0.5, 0.5};
  return spec;
}

QueueState QueueState::zeros(const std::vector<IntersectionSpec>& intersections) {
  QueueState q;
  q.x.reserve(intersections.size());
  for (const auto& inter : intersections)
    q.x.emplace_back(inter.streams.size(), 0.0);
  return q;
}

double QueueState::total() const {
  double sum = 0.0;
  for (const auto& per_stream : x)
    for (double v : per_stream) sum += v;
  return sum;
}

double QueueState::total_at(int intersection_idx) const {
  const auto& per_stream = x.at(intersection_idx);
  return std::accumulate(per_stream.begin(), per_stream.end(), 0.0);
}

GreenPlan GreenPlan::uniform(const std::vector<IntersectionSpec>& intersections, double value) {
  GreenPlan plan;
  plan.g.reserve(intersections.size());
  for (const auto& inter : intersections)
    plan.g.emplace_back(inter.phases.size(), value);
  return plan;
}

GreenPlan GreenPlan::minimum(const std::vector<IntersectionSpec>& intersections) {
  GreenPlan plan;
  plan.g.reserve(intersections.size());
  for (const auto& inter : intersections)
    plan.g.emplace_back(inter.phases.size(), inter.g_min_per_phase);
  return plan;
}

bool GreenPlan::satisfies_bounds(const std::vector<IntersectionSpec>& intersections,
                                 double tol) const {
  if (g.size() != intersections.size()) return false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& inter = intersections[i];
    if (g[i].size() != inter.phases.size()) return false;
    double sum = 0.0;
    for (double gp : g[i]) {
      if (gp < inter.g_min_per_phase - tol) return false;
      sum += gp;
    }
    if (sum > inter.g_max + tol) return false;
  }
  return true;
}

double stream_capacity(const IntersectionSpec& intersection, int stream_id,
                       const std::vector<double>& greens) {
  const int sidx = intersection.stream_index(stream_id);
  const double sat = intersection.streams[sidx].saturation_flow;
  double cap = 0.0;
  for (std::size_t p = 0; p < intersection.phases.size(); ++p)
    if (intersection.phase_serves(static_cast<int>(p), stream_id)) cap += sat * greens.at(p);
  return cap;
}

double departure_flow(double demand_rate, double capacity) {
  return std::min(demand_rate, capacity);
}

double queue_step(double x, double q, double mu, double cycle_hr) {
  return std::max(0.0, x + (q - mu) * cycle_hr);
}

std::pair<double, double>
aggregate_transfers(const std::vector<IntersectionSpec>& intersections,
                    const std::vector<std::vector<double>>& departures) {
  double beta21 = 0.0;
  double beta12 = 0.0;
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    const auto& streams = intersections[i].streams;
    for (std::size_t m = 0; m < streams.size(); ++m) {
      if (streams[m].cls == StreamClass::inflow) beta21 += departures.at(i).at(m);
      else if (streams[m].cls == StreamClass::outflow) beta12 += departures.at(i).at(m);
    }
  }
  return {beta21, beta12};
}

} // namespace perim
