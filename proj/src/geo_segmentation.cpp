// SPDX-License-Identifier: Apache-2.0
#include "roadfriction/geo_segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"
#include "roadfriction/error.hpp"
#include "roadfriction/random.hpp"

namespace roadfriction {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 to_unit(const GeoPoint& p) {
  const double c = std::cos(p.lat);
  return {c * std::cos(p.lon), c * std::sin(p.lon), std::sin(p.lat)};
}

GeoPoint from_unit(const Vec3& v) {
  const double z = std::clamp(v[2], -1.0, 1.0);
  return {std::asin(z), std::atan2(v[1], v[0])};
}

void require_finite(const GeoPoint& p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
    throw Error(ErrorKind::kInvalidInput, "non-finite coordinate");
  }
}

// Squared chord between two points at great-circle distance d on radius r.
double chord_sq(double d, double r) {
  const double c = 2.0 * r * std::sin(d / (2.0 * r));
  return c * c;
}

std::size_t count_distinct(std::span<const GeoPoint> points) {
  std::set<std::pair<double, double>> distinct;
  for (const GeoPoint& p : points) distinct.emplace(p.lat, p.lon);
  return distinct.size();
}

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;
};

Assignment assign_nearest(std::span<const GeoPoint> points, std::span<const GeoPoint> centroids,
                          double radius) {
  Assignment out;
  out.labels.resize(points.size());
  out.distances.resize(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = haversine_distance(points[p], centroids[c], radius);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    out.labels[p] = best_c;
    out.distances[p] = best;
  }
  return out;
}

double chordal_cost(std::span<const double> distances, double radius) {
  double total = 0.0;
  for (double d : distances) total += chord_sq(d, radius);
  return total;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
void reseed_empty(std::span<const GeoPoint> points, std::vector<GeoPoint>& centroids,
                  Assignment& assignment) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t l : assignment.labels) ++sizes[l];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (sizes[assignment.labels[p]] < 2) continue;
      if (assignment.distances[p] > far_d) {
        far_d = assignment.distances[p];
        far = p;
      }
    }
    if (far == points.size()) break;
    --sizes[assignment.labels[far]];
    assignment.labels[far] = c;
    assignment.distances[far] = 0.0;
    centroids[c] = points[far];
    sizes[c] = 1;
  }
}

void update_centroids(std::span<const GeoPoint> points, std::span<const std::size_t> labels,
                      std::vector<GeoPoint>& centroids) {
  std::vector<Vec3> sums(centroids.size(), Vec3{0.0, 0.0, 0.0});
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Vec3 u = to_unit(points[p]);
    Vec3& s = sums[labels[p]];
    s[0] += u[0];
    s[1] += u[1];
    s[2] += u[2];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const Vec3& s = sums[c];
    const double norm = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    // Members spread symmetrically over the sphere have no mean direction;
    // keep the previous centroid.
    if (norm < 1e-12) continue;
    centroids[c] = from_unit({s[0] / norm, s[1] / norm, s[2] / norm});
  }
}

// Renumbers clusters by their lowest member index.
void canonicalize_labels(SegmentAssignment& a) {
  std::vector<std::size_t> remap(a.k, a.k);
  std::size_t next = 0;
  for (std::size_t l : a.labels) {
    if (remap[l] == a.k) remap[l] = next++;
  }
  for (std::size_t c = 0; c < a.k; ++c) {
    if (remap[c] == a.k) remap[c] = next++;
  }
  std::vector<GeoPoint> centroids(a.k);
  for (std::size_t c = 0; c < a.k; ++c) centroids[remap[c]] = a.centroids[c];
  a.centroids = std::move(centroids);
  for (std::size_t& l : a.labels) l = remap[l];
}

}  // namespace

GeoPoint geo_from_degrees(double lat_deg, double lon_deg) noexcept {
  return {lat_deg * M_PI / 180.0, lon_deg * M_PI / 180.0};
}

double rad_to_deg(double rad) noexcept { return rad * 180.0 / M_PI; }

double haversine_distance(const GeoPoint& a, const GeoPoint& b, double radius_m) {
  require_finite(a);
  require_finite(b);
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
    throw Error(ErrorKind::kInvalidInput, "radius must be positive");
  }
  const double s_lat = std::sin((b.lat - a.lat) / 2.0);
  const double s_lon = std::sin((b.lon - a.lon) / 2.0);
  double h = s_lat * s_lat + std::cos(a.lat) * std::cos(b.lat) * s_lon * s_lon;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * radius_m * std::asin(std::sqrt(h));
}

void SegmentationConfig::validate() const {
  if (!(mixture_threshold >= 0.0 && mixture_threshold < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "mixture_threshold must lie in [0, 1)");
  }
  if (k_initial < 1 || k_step < 1) {
    throw Error(ErrorKind::kInvalidInput, "k_initial and k_step must be >= 1");
  }
  if (max_iterations < 1) throw Error(ErrorKind::kInvalidInput, "max_iterations must be >= 1");
  if (!(earth_radius_m > 0.0)) throw Error(ErrorKind::kInvalidInput, "radius must be positive");
}

double SegmentAssignment::max_mixture_rate() const {
  double m = 0.0;
  for (double r : mixture_rates) m = std::max(m, r);
  return m;
}

std::vector<std::size_t> SegmentAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t l : labels) ++sizes[l];
  return sizes;
}

SegmentAssignment kmeans_haversine(std::span<const GeoPoint> points, std::size_t k,
                                   int max_iterations, std::uint64_t seed, double radius_m) {
  if (points.empty()) throw Error(ErrorKind::kInvalidInput, "no points to cluster");
  if (k == 0) throw Error(ErrorKind::kInvalidInput, "k must be >= 1");
  for (const GeoPoint& p : points) require_finite(p);
  const std::size_t distinct = count_distinct(points);
  if (k > distinct) {
    throw Error(ErrorKind::kInfeasibleK, "k = " + std::to_string(k) + " exceeds " +
                                             std::to_string(distinct) + " distinct points");
  }

  // Farthest-point seeding.
  Rng rng(seed);
  std::vector<GeoPoint> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.uniform_index(points.size())]);
  std::vector<double> min_d(points.size(), std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    std::size_t pick = 0;
    double pick_d = -1.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      min_d[p] = std::min(min_d[p], haversine_distance(points[p], centroids.back(), radius_m));
      if (min_d[p] > pick_d) {
        pick_d = min_d[p];
        pick = p;
      }
    }
    centroids.push_back(points[pick]);
  }

  SegmentAssignment out;
  out.k = k;
  std::vector<std::size_t> labels;
  Assignment current;
  for (int iter = 0; iter < max_iterations; ++iter) {
    current = assign_nearest(points, centroids, radius_m);
    reseed_empty(points, centroids, current);
    out.cost_history.push_back(chordal_cost(current.distances, radius_m));
    out.iterations = iter + 1;
    if (current.labels == labels) {
      out.converged = true;
      break;
    }
    labels = current.labels;
    update_centroids(points, labels, centroids);
  }
  if (!out.converged) {
    // Leave labels consistent with the final centroids.
    current = assign_nearest(points, centroids, radius_m);
    reseed_empty(points, centroids, current);
    labels = current.labels;
  }
  out.centroids = std::move(centroids);
  out.labels = std::move(labels);
  out.haversine_cost = std::accumulate(current.distances.begin(), current.distances.end(), 0.0);
  canonicalize_labels(out);
  return out;
}

Status modal_status(std::span<const Status> statuses) {
  std::array<std::size_t, kStatusCount> counts{};
  for (Status s : statuses) ++counts[static_cast<std::size_t>(s)];
  std::size_t best = 0;
  for (std::size_t s = 1; s < kStatusCount; ++s) {
    if (counts[s] > counts[best]) best = s;
  }
  return static_cast<Status>(best);
}

double mixture_rate(std::span<const std::size_t> labels, std::span<const Status> statuses,
                    std::size_t cluster) {
  if (labels.size() != statuses.size()) {
    throw Error(ErrorKind::kDimension, "labels and statuses differ in length");
  }
  std::array<std::size_t, kStatusCount> counts{};
  std::size_t size = 0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (labels[p] != cluster) continue;
    ++counts[static_cast<std::size_t>(statuses[p])];
    ++size;
  }
  if (size == 0) {
    throw Error(ErrorKind::kEmptyCluster, "cluster " + std::to_string(cluster) + " is empty");
  }
  const std::size_t modal = *std::max_element(counts.begin(), counts.end());
  return 1.0 - static_cast<double>(modal) / static_cast<double>(size);
}

std::vector<double> mixture_rates(std::span<const std::size_t> labels,
                                  std::span<const Status> statuses, std::size_t k) {
  std::vector<double> rates(k);
  for (std::size_t c = 0; c < k; ++c) rates[c] = mixture_rate(labels, statuses, c);
  return rates;
}

SegmentAssignment select_k(std::span<const GeoPoint> points, std::span<const Status> statuses,
                           const SegmentationConfig& config) {
  config.validate();
  if (points.empty()) throw Error(ErrorKind::kInvalidInput, "no points to segment");
  if (points.size() != statuses.size()) {
    throw Error(ErrorKind::kDimension, "points and statuses differ in length");
  }
  const std::size_t distinct = count_distinct(points);
  const std::size_t k_max = config.k_max == 0 ? distinct : std::min(config.k_max, distinct);
  if (config.k_initial > k_max) {
    throw Error(ErrorKind::kInfeasibleK, "k_initial exceeds the number of distinct points");
  }

  std::size_t best_k = 0;
  double best_rate = std::numeric_limits<double>::infinity();
  for (std::size_t k = config.k_initial; k <= k_max; k += config.k_step) {
    SegmentAssignment a =
        kmeans_haversine(points, k, config.max_iterations, config.seed, config.earth_radius_m);
    a.mixture_rates = mixture_rates(a.labels, statuses, a.k);
    const double worst = a.max_mixture_rate();
    if (worst < config.mixture_threshold) return a;
    if (worst < best_rate) {
      best_rate = worst;
      best_k = k;
    }
  }
  throw ThresholdUnreachableError(best_k, best_rate);
}

std::size_t RoutePoints::point_of(const SensorRecord& record) const {
  auto it = index.find({record.lat_deg, record.lon_deg});
  if (it == index.end()) throw Error(ErrorKind::kInvalidInput, "record is not on the route");
  return it->second;
}

RoutePoints collect_route_points(std::span<const SensorRecord> records) {
  // First visit per coordinate, independent of input order.
  std::map<std::pair<double, double>, Timestamp> first_seen;
  std::map<std::pair<double, double>, std::array<std::size_t, kStatusCount>> status_counts;
  for (const SensorRecord& r : records) {
    const std::pair<double, double> key{r.lat_deg, r.lon_deg};
    auto [it, inserted] = first_seen.emplace(key, r.timestamp);
    if (!inserted && r.timestamp < it->second) it->second = r.timestamp;
    ++status_counts[key][static_cast<std::size_t>(r.status)];
  }
  std::vector<std::pair<Timestamp, std::pair<double, double>>> order;
  order.reserve(first_seen.size());
  for (const auto& [key, ts] : first_seen) order.emplace_back(ts, key);
  std::sort(order.begin(), order.end());

  RoutePoints route;
  for (const auto& [ts, key] : order) {
    route.index.emplace(key, route.points.size());
    route.lat_deg.push_back(key.first);
    route.lon_deg.push_back(key.second);
    route.points.push_back(geo_from_degrees(key.first, key.second));
    const auto& counts = status_counts[key];
    std::size_t best = 0;
    for (std::size_t s = 1; s < kStatusCount; ++s) {
      if (counts[s] > counts[best]) best = s;
    }
    route.statuses.push_back(static_cast<Status>(best));
  }
  return route;
}

std::size_t SegmentModel::missing_days() const {
  return static_cast<std::size_t>(
      std::count_if(days.begin(), days.end(), [](const DailyFeatures& d) { return d.missing; }));
}

std::vector<SegmentModel> aggregate_daily(std::span<const SensorRecord> records,
                                          const RoutePoints& route,
                                          const SegmentAssignment& assignment, double radius_m) {
  using std::chrono::floor;
  using std::chrono::sys_days;
  if (assignment.labels.size() != route.size()) {
    throw Error(ErrorKind::kDimension, "assignment does not match the route points");
  }
  if (records.empty()) throw Error(ErrorKind::kEmptySegment, "no records to aggregate");

  sys_days first = floor<std::chrono::days>(records.front().timestamp);
  sys_days last = first;
  for (const SensorRecord& r : records) {
    const sys_days d = floor<std::chrono::days>(r.timestamp);
    first = std::min(first, d);
    last = std::max(last, d);
  }
  const auto n_days = static_cast<std::size_t>((last - first).count()) + 1;
  const std::size_t k = assignment.k;

  // Bucket record indices per (segment, day), then sum each bucket in a
  // canonical record order so the means do not depend on input order.
  std::vector<std::vector<std::size_t>> buckets(k * n_days);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t seg = assignment.labels[route.point_of(records[i])];
    const auto day = static_cast<std::size_t>(
        (floor<std::chrono::days>(records[i].timestamp) - first).count());
    buckets[seg * n_days + day].push_back(i);
  }
  auto record_less = [&](std::size_t a, std::size_t b) {
    const SensorRecord& x = records[a];
    const SensorRecord& y = records[b];
    return std::tie(x.timestamp, x.lat_deg, x.lon_deg, x.friction, x.water_mm, x.surface_temp_c,
                    x.air_temp_c, x.status) < std::tie(y.timestamp, y.lat_deg, y.lon_deg,
                                                       y.friction, y.water_mm, y.surface_temp_c,
                                                       y.air_temp_c, y.status);
  };

  std::vector<SegmentModel> segments(k);
  for (std::size_t seg = 0; seg < k; ++seg) {
    SegmentModel& m = segments[seg];
    m.id = seg;
    m.first_day = first;
    for (std::size_t p = 0; p < route.size(); ++p) {
      if (assignment.labels[p] == seg) m.members.push_back(p);
    }
    std::vector<Status> member_statuses;
    for (std::size_t p : m.members) member_statuses.push_back(route.statuses[p]);
    if (!member_statuses.empty()) {
      m.dominant_status = modal_status(member_statuses);
      m.mixture_rate = mixture_rate(assignment.labels, route.statuses, seg);
    }
    for (std::size_t a = 0; a < m.members.size(); ++a) {
      for (std::size_t b = a + 1; b < m.members.size(); ++b) {
        m.span_m = std::max(m.span_m, haversine_distance(route.points[m.members[a]],
                                                         route.points[m.members[b]], radius_m));
      }
    }

    m.days.resize(n_days);
    std::size_t total = 0;
    for (std::size_t day = 0; day < n_days; ++day) {
      auto& bucket = buckets[seg * n_days + day];
      if (bucket.empty()) continue;
      std::sort(bucket.begin(), bucket.end(), record_less);
      DailyFeatures& f = m.days[day];
      f.missing = false;
      f.n_records = bucket.size();
      std::vector<Status> day_statuses;
      day_statuses.reserve(bucket.size());
      for (std::size_t i : bucket) {
        f.friction += records[i].friction;
        f.water_mm += records[i].water_mm;
        f.surface_temp_c += records[i].surface_temp_c;
        f.air_temp_c += records[i].air_temp_c;
        day_statuses.push_back(records[i].status);
      }
      const auto n = static_cast<double>(bucket.size());
      f.friction /= n;
      f.water_mm /= n;
      f.surface_temp_c /= n;
      f.air_temp_c /= n;
      f.status = modal_status(day_statuses);
      total += bucket.size();
    }
    if (total == 0) {
      throw Error(ErrorKind::kEmptySegment, "segment " + std::to_string(seg) + " has no records");
    }
  }
  return segments;
}

std::string format_assignment_csv(const RoutePoints& route, const SegmentAssignment& assignment) {
  std::string out = "point_id,lat_deg,lon_deg,segment_id,status\n";
  char buf[128];
  for (std::size_t p = 0; p < route.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%zu,", p, route.lat_deg[p], route.lon_deg[p],
                  assignment.labels[p]);
    out += buf;
    out += to_string(route.statuses[p]);
    out += '\n';
  }
  return out;
}

std::string format_segmentation_summary(const RoutePoints& route,
                                        const SegmentAssignment& assignment, double radius_m) {
  nlohmann::ordered_json j;
  j["k"] = assignment.k;
  j["mixture_rates"] = assignment.mixture_rates;
  j["per_segment_counts"] = assignment.cluster_sizes();
  std::vector<double> spans(assignment.k, 0.0);
  for (std::size_t a = 0; a < route.size(); ++a) {
    for (std::size_t b = a + 1; b < route.size(); ++b) {
      if (assignment.labels[a] != assignment.labels[b]) continue;
      double& s = spans[assignment.labels[a]];
      s = std::max(s, haversine_distance(route.points[a], route.points[b], radius_m));
    }
  }
  j["per_segment_span_m"] = spans;
  j["max_mixture_rate"] = assignment.max_mixture_rate();
  j["iterations"] = assignment.iterations;
  j["converged"] = assignment.converged;
  return j.dump(2) + "\n";
}

}  // namespace roadfriction
