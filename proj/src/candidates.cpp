#include "roomfuse/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace roomfuse {

namespace {

// Walls closer to parallel than this do not cut each other.
constexpr double kMinCutAngleDeg = 2.0;
// Arrangement cells below this area are dropped as clipping slivers.
constexpr double kMinCellArea = 1e-9;

// Restrict a polygon in `frame` coordinates to the world half-space
// {x : n.x + c >= 0}. When the half-space boundary is parallel to the frame's
// plane the constraint is constant: the polygon survives unchanged or dies.
std::vector<Vec2> clip_world_half_space(std::vector<Vec2> poly, const Frame& frame,
                                        const Vec3& n, double c) {
    const Vec2 n2(n.dot(frame.u), n.dot(frame.v));
    const double c2 = n.dot(frame.origin) + c;
    if (n2.norm() < 1e-12) {
        if (c2 < 0.0) return {};
        return poly;
    }
    return clip_half_plane(poly, n2, c2);
}

bool negligible(const std::vector<Vec2>& poly) {
    return poly.size() < 3 || polygon_signed_area(poly) < kMinCellArea;
}

// Area-weighted centroid of a CCW ring (not negligible by the above).
Vec2 cell_centroid(const std::vector<Vec2>& poly) {
    double area2 = 0.0;
    Vec2 acc = Vec2::Zero();
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        const double cross = a.x() * b.y() - a.y() * b.x();
        area2 += cross;
        acc += cross * (a + b);
    }
    return acc / (3.0 * area2);
}

} // namespace

SceneBounds scene_bounds(const std::vector<GlobalMeasurement>& measurements, double margin) {
    if (measurements.empty()) throw NoMeasurements();

    SceneBounds b;
    b.min = Vec3::Constant(std::numeric_limits<double>::infinity());
    b.max = -b.min;
    for (const GlobalMeasurement& m : measurements) {
        for (const Vec3& v : m.patch_world.lifted()) {
            b.min = b.min.cwiseMin(v);
            b.max = b.max.cwiseMax(v);
        }
    }
    b.min.array() -= margin;
    b.max.array() += margin;
    return b;
}

PlanarPolygon clip_plane_to_bounds(const Plane& plane, const SceneBounds& bounds) {
    if (!bounds.valid()) throw DegenerateBounds();

    const Frame frame = make_frame(plane);
    // Seed polygon: a square on the plane guaranteed to cover the box.
    const Vec2 c2 = frame.to_local(plane.project(bounds.center()));
    const double r = bounds.extent().norm() + 1.0;
    std::vector<Vec2> poly = {c2 + Vec2(-r, -r), c2 + Vec2(r, -r),
                              c2 + Vec2(r, r), c2 + Vec2(-r, r)};

    for (int axis = 0; axis < 3; ++axis) {
        poly = clip_world_half_space(std::move(poly), frame, Vec3::Unit(axis),
                                     -bounds.min[axis]);
        poly = clip_world_half_space(std::move(poly), frame, -Vec3::Unit(axis),
                                     bounds.max[axis]);
    }
    if (negligible(poly)) throw EmptyArrangement("plane does not intersect the scene bounds");
    return PlanarPolygon(plane, frame, std::move(poly));
}

std::vector<CandidateSegment> generate_candidates(const std::vector<Plane>& room_planes,
                                                  const Plane& floor, const Plane& ceiling,
                                                  const SceneBounds& bounds) {
    if (!bounds.valid()) throw DegenerateBounds();
    if (room_planes.empty())
        throw InvariantViolation("generate_candidates: no room planes");
    if ((floor.coeffs() - ceiling.coeffs()).norm() < 1e-9)
        throw InvariantViolation("generate_candidates: floor and ceiling coincide");

    // Reference point between floor and ceiling; the kept side of each slab
    // plane is the side this point lies on.
    const Vec3 mid = 0.5 * (floor.project(bounds.center()) + ceiling.project(bounds.center()));
    const double floor_sign = floor.signed_distance(mid) >= 0.0 ? 1.0 : -1.0;
    const double ceiling_sign = ceiling.signed_distance(mid) >= 0.0 ? 1.0 : -1.0;

    const double min_cut_cross = std::sin(kMinCutAngleDeg * M_PI / 180.0);

    std::vector<CandidateSegment> out;
    for (std::size_t i = 0; i < room_planes.size(); ++i) {
        const Plane& plane = room_planes[i];
        const Frame frame = make_frame(plane);

        std::vector<Vec2> base;
        try {
            base = clip_plane_to_bounds(plane, bounds).vertices();
        } catch (const EmptyArrangement&) {
            throw EmptyArrangement("room plane " + std::to_string(i) +
                                   " does not intersect the scene bounds");
        }

        base = clip_world_half_space(std::move(base), frame, floor_sign * floor.normal(),
                                     floor_sign * floor.offset());
        base = clip_world_half_space(std::move(base), frame, ceiling_sign * ceiling.normal(),
                                     ceiling_sign * ceiling.offset());
        if (negligible(base))
            throw EmptyArrangement("room plane " + std::to_string(i) +
                                   " has no area between floor and ceiling");

        std::vector<std::vector<Vec2>> cells = {std::move(base)};
        for (std::size_t j = 0; j < room_planes.size(); ++j) {
            if (j == i) continue;
            const Plane& other = room_planes[j];
            if (plane.normal().cross(other.normal()).norm() < min_cut_cross) continue;

            const Line3 line = intersect_planes(plane, other);
            const Vec2 p2 = frame.to_local(line.point);
            const Vec2 d2 = Vec2(line.direction.dot(frame.u), line.direction.dot(frame.v)).normalized();
            const Vec2 n2(-d2.y(), d2.x());
            const double c = -n2.dot(p2);

            std::vector<std::vector<Vec2>> next;
            for (const std::vector<Vec2>& cell : cells) {
                std::vector<Vec2> lo = clip_half_plane(cell, n2, c);
                std::vector<Vec2> hi = clip_half_plane(cell, -n2, -c);
                if (!negligible(lo)) next.push_back(std::move(lo));
                if (!negligible(hi)) next.push_back(std::move(hi));
            }
            cells = std::move(next);
        }

        // Cut order is fixed by the input, but cell discovery order is not a
        // meaningful key; order cells spatially instead.
        std::sort(cells.begin(), cells.end(),
                  [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
                      const Vec2 ca = cell_centroid(a);
                      const Vec2 cb = cell_centroid(b);
                      if (ca.x() != cb.x()) return ca.x() < cb.x();
                      return ca.y() < cb.y();
                  });

        for (std::vector<Vec2>& cell : cells)
            out.push_back(CandidateSegment{static_cast<int>(i),
                                           PlanarPolygon(plane, frame, std::move(cell))});
    }
    return out;
}

std::pair<Plane, Plane> infer_floor_ceiling(const std::vector<PlaneCluster>& fc_clusters,
                                            double gap, const Vec3& up) {
    return infer_floor_ceiling(fc_clusters, {}, gap, up);
}

std::pair<Plane, Plane> infer_floor_ceiling(const std::vector<PlaneCluster>& fc_clusters,
                                            const std::vector<Vec3>& camera_centers,
                                            double gap, const Vec3& up) {
    if (gap <= 0.0) throw ConfigError("floor-ceiling gap must be positive");
    if (up.norm() < tol().degenerate) throw ConfigError("up axis must be nonzero");
    if (fc_clusters.empty()) throw NoHorizontalCluster();

    const auto dominant = std::max_element(
        fc_clusters.begin(), fc_clusters.end(),
        [](const PlaneCluster& a, const PlaneCluster& b) { return a.weight < b.weight; });

    // The canonical form (d >= 0) says nothing about which side of the
    // surface is air, and for a floor near the world origin the sign it
    // settles on is decided by noise. The cameras do know: they stood in the
    // room, on the side the surface faces. Re-orient toward their majority
    // side; without camera evidence the canonical orientation stands.
    Vec3 n = dominant->plane.normal();
    double d = dominant->plane.offset();
    int side = 0;
    for (const Vec3& c : camera_centers) {
        const double s = n.dot(c) + d;
        side += s > 0.0 ? 1 : (s < 0.0 ? -1 : 0);
    }
    if (side < 0) {
        n = -n;
        d = -d;
    }

    const double vertical = n.dot(up.normalized());
    if (std::abs(vertical) < 0.5) throw AmbiguousNormal();

    // The companion plane is parallel, `gap` away along the oriented normal,
    // facing back: coefficients (-n, gap - d) before canonicalization.
    const Plane companion = canonicalize(Vec4(-n.x(), -n.y(), -n.z(), gap - d));

    if (vertical > 0.0)
        return {dominant->plane, companion}; // dominant faces up: it is the floor
    return {companion, dominant->plane};
}

} // namespace roomfuse
