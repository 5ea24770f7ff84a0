// SPDX-License-Identifier: Apache-2.0
//
// Route segmentation: haversine K-means over observation points, with K chosen
// so that every cluster is dominated by a single road surface status.
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roadfriction/ingest.hpp"

namespace roadfriction {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Geographic position in radians.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

GeoPoint geo_from_degrees(double lat_deg, double lon_deg) noexcept;
double rad_to_deg(double rad) noexcept;

/// Great-circle distance in meters on a sphere of radius `radius_m`.
/// Throws Error(kInvalidInput) on non-finite coordinates or radius <= 0.
double haversine_distance(const GeoPoint& a, const GeoPoint& b, double radius_m = kEarthRadiusM);

struct SegmentationConfig {
  std::size_t k_initial = 2;
  std::size_t k_step = 1;
  /// Upper end of the K ladder; 0 means "number of distinct points".
  std::size_t k_max = 0;
  double mixture_threshold = 0.15;
  int max_iterations = 100;
  double earth_radius_m = kEarthRadiusM;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SegmentAssignment {
  std::size_t k = 0;
  std::vector<GeoPoint> centroids;
  /// Cluster index per input point. Clusters are numbered in order of their
  /// lowest member index, which is route order for route-ordered input.
  std::vector<std::size_t> labels;
  /// Filled by select_k (empty straight out of kmeans_haversine).
  std::vector<double> mixture_rates;
  int iterations = 0;
  bool converged = false;
  /// Squared chord length objective (m^2) after every assignment step. The
  /// unit-vector centroid update minimises exactly this quantity, so the
  /// sequence is non-increasing.
  std::vector<double> cost_history;
  /// Sum of haversine distances from each point to its centroid (m).
  double haversine_cost = 0.0;

  double max_mixture_rate() const;
  std::vector<std::size_t> cluster_sizes() const;
};

/// Lloyd iterations with haversine assignment and a renormalised 3-D mean as
/// the centroid update. Seeding is greedy farthest-point from a seeded first
/// pick; a cluster that empties is re-seeded with the point farthest from its
/// own centroid.
SegmentAssignment kmeans_haversine(std::span<const GeoPoint> points, std::size_t k,
                                   int max_iterations, std::uint64_t seed,
                                   double radius_m = kEarthRadiusM);

/// 1 - (modal status count / cluster size); modal ties go to the lowest code.
double mixture_rate(std::span<const std::size_t> labels, std::span<const Status> statuses,
                    std::size_t cluster);
std::vector<double> mixture_rates(std::span<const std::size_t> labels,
                                  std::span<const Status> statuses, std::size_t k);

/// Modal status with ties broken toward the lowest status code.
Status modal_status(std::span<const Status> statuses);

/// Scans K = k_initial, k_initial + k_step, ... up to k_max and returns the
/// first assignment whose largest mixture rate is below the threshold.
/// Throws ThresholdUnreachableError carrying the best K seen otherwise.
SegmentAssignment select_k(std::span<const GeoPoint> points, std::span<const Status> statuses,
                           const SegmentationConfig& config);

/// Distinct observation points of a trace, ordered by first visit.
struct RoutePoints {
  std::vector<GeoPoint> points;
  std::vector<double> lat_deg;
  std::vector<double> lon_deg;
  /// Modal status over every record at the point.
  std::vector<Status> statuses;
  std::map<std::pair<double, double>, std::size_t> index;

  std::size_t size() const noexcept { return points.size(); }
  /// Throws Error(kInvalidInput) for coordinates not on the route.
  std::size_t point_of(const SensorRecord& record) const;
};

RoutePoints collect_route_points(std::span<const SensorRecord> records);

struct DailyFeatures {
  bool missing = true;
  std::size_t n_records = 0;
  double friction = 0.0;
  double water_mm = 0.0;
  double surface_temp_c = 0.0;
  double air_temp_c = 0.0;
  Status status = Status::kDry;
};

struct SegmentModel {
  std::size_t id = 0;
  std::vector<std::size_t> members;
  Status dominant_status = Status::kDry;
  double mixture_rate = 0.0;
  /// Largest pairwise haversine distance between members (m).
  double span_m = 0.0;
  std::chrono::sys_days first_day{};
  std::vector<DailyFeatures> days;

  std::size_t missing_days() const;
};

/// Groups records by (segment, UTC calendar day) and averages every numeric
/// feature. Every segment covers the same day range, from the first to the
/// last day present in `records`; days without records are flagged missing.
/// Throws Error(kEmptySegment) if a segment has no records at all.
std::vector<SegmentModel> aggregate_daily(std::span<const SensorRecord> records,
                                          const RoutePoints& route,
                                          const SegmentAssignment& assignment,
                                          double radius_m = kEarthRadiusM);

/// `point_id,lat_deg,lon_deg,segment_id,status`
std::string format_assignment_csv(const RoutePoints& route, const SegmentAssignment& assignment);
/// `{k, mixture_rates, per_segment_counts, ...}`
std::string format_segmentation_summary(const RoutePoints& route,
                                        const SegmentAssignment& assignment,
                                        double radius_m = kEarthRadiusM);

}  // namespace roadfriction
