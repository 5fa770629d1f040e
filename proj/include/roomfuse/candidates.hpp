#pragma once

#include <utility>
#include <vector>

#include "roomfuse/clustering.hpp"
#include "roomfuse/geometry.hpp"
#include "roomfuse/measurements.hpp"

namespace roomfuse {

/// Axis-aligned box, in meters, bounding the region where measurements exist.
/// Candidate segments are only generated inside it: evidence can only support
/// surfaces where evidence was observed.
struct SceneBounds {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    bool valid() const {
        return min.x() < max.x() && min.y() < max.y() && min.z() < max.z();
    }
    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 extent() const { return max - min; }
    bool contains(const Vec3& p, double eps = 0.0) const {
        return p.x() >= min.x() - eps && p.x() <= max.x() + eps &&
               p.y() >= min.y() - eps && p.y() <= max.y() + eps &&
               p.z() >= min.z() - eps && p.z() <= max.z() + eps;
    }
};

/// One convex piece of a room plane, produced by cutting the plane's in-bounds
/// polygon with every other room plane and the floor/ceiling band. Starts with
/// zero energy; voting fills in energy, inlier and voter counts and the
/// accepted flag.
struct CandidateSegment {
    int cluster_id = 0;
    PlanarPolygon polygon;
    double energy = 0.0;
    int inliers = 0;
    int voters_total = 0;
    bool accepted = false;
};

/// Tight axis-aligned box around every measurement patch vertex, inflated by
/// `margin` on each side. Throws NoMeasurements on an empty input.
SceneBounds scene_bounds(const std::vector<GlobalMeasurement>& measurements,
                         double margin = 0.5);

/// Convex polygon where a plane passes through the box, in the plane's
/// canonical frame. Throws DegenerateBounds for an empty box and
/// EmptyArrangement when the plane misses it.
PlanarPolygon clip_plane_to_bounds(const Plane& plane, const SceneBounds& bounds);

/// Cut each wall plane into candidate segments. Per plane: clip the infinite
/// plane against `bounds` and against the slab between floor and ceiling, then
/// split the resulting convex polygon by the intersection line of every other
/// wall plane. Walls within 2 degrees of parallel do not cut each other (their
/// intersection line is numerically meaningless at room scale). Cells of a
/// plane are ordered by centroid; cluster_id is the plane's index in
/// `room_planes`.
///
/// Throws DegenerateBounds for an empty box and EmptyArrangement when a plane
/// has no area inside the clipped region.
std::vector<CandidateSegment> generate_candidates(const std::vector<Plane>& room_planes,
                                                  const Plane& floor, const Plane& ceiling,
                                                  const SceneBounds& bounds);

/// Derive the floor and ceiling from the dominant (heaviest) horizontal
/// cluster: an upward normal makes it the floor with a ceiling `gap` above, a
/// downward normal makes it the ceiling with a floor `gap` below. The
/// companion plane is parallel, offset along the dominant normal, and both
/// returned planes are canonical.
///
/// Throws NoHorizontalCluster for an empty cluster list and AmbiguousNormal
/// when |normal . up| < 0.5.
std::pair<Plane, Plane> infer_floor_ceiling(const std::vector<PlaneCluster>& fc_clusters,
                                            double gap = 2.0,
                                            const Vec3& up = Vec3::UnitZ());

/// Same rule, but the dominant cluster's normal is first re-oriented toward
/// the side where the majority of `camera_centers` lie. The canonical plane
/// form cannot tell a floor seen from above from a ceiling seen from below
/// when the surface passes near the world origin; the cameras can, since
/// they stood in the air the surface faces. An empty list keeps the
/// canonical orientation.
std::pair<Plane, Plane> infer_floor_ceiling(const std::vector<PlaneCluster>& fc_clusters,
                                            const std::vector<Vec3>& camera_centers,
                                            double gap = 2.0, const Vec3& up = Vec3::UnitZ());

} // namespace roomfuse
