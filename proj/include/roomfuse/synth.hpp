#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roomfuse/geometry.hpp"
#include "roomfuse/layout.hpp"
#include "roomfuse/measurements.hpp"

namespace roomfuse {

/// An extruded-footprint room: a simple counter-clockwise polygon in the
/// world XY plane swept from floor_z up to floor_z + height.
struct RoomSpec {
    std::vector<Vec2> footprint; // meters, CCW
    double floor_z = 0.0;
    double height = 2.5;

    /// Drops repeated vertices, merges collinear adjacent edges (they would
    /// create duplicate wall planes), then enforces: at least 3 vertices,
    /// counter-clockwise winding, a simple (non-self-intersecting) ring,
    /// area > 1 m², and height in (1.5, 5). Throws InvalidFootprint.
    void validate();
};

/// Measurement corruption model. All sigmas may be zero (perfect detector).
struct NoiseSpec {
    double sigma_normal_deg = 0.0; // plane normal tilt, half-normal magnitude
    double sigma_d_m = 0.0;        // plane offset, gaussian
    double sigma_bbox_px = 0.0;    // bbox corner jitter, gaussian
    double p_dropout = 0.0;        // chance of losing a visible measurement
    double p_spurious = 0.0;       // chance of one junk detection per frame
    bool heavy_tail = false;       // mix in 3x outliers at 10% for robustness runs

    void validate() const; // throws ConfigError
};

enum class TrajectoryMode { Orbit, RandomWalk };

const char* to_string(TrajectoryMode m);
TrajectoryMode trajectory_mode_from_string(const std::string& s); // throws std::invalid_argument

struct TrajectorySpec {
    TrajectoryMode mode = TrajectoryMode::Orbit;
    int frames = 100;
    std::uint64_t seed = 1;
    double eye_height = 1.2; // above floor_z

    void validate() const; // throws ConfigError
};

/// One true wall: its plane (normal pointing into the room) and the actual
/// edge-by-height rectangle it occupies.
struct WallTruth {
    Plane plane;
    PlanarPolygon extent;
};

struct RoomSurfaces {
    std::vector<WallTruth> walls;
    Plane floor;   // normal +z at floor_z
    Plane ceiling; // normal -z at floor_z + height
};

/// One plane per footprint edge plus the two horizontal planes.
/// The spec must already be validated. Throws InvalidFootprint otherwise.
RoomSurfaces room_planes(const RoomSpec& spec);

/// What the generator knows and the reconstruction is judged against.
/// Surface indices are 0..walls-1, then floor, then ceiling.
struct GroundTruth {
    RoomSurfaces surfaces;
    std::map<int, std::vector<int>> visibility; // frame id -> visible surface indices

    int floor_index() const { return static_cast<int>(surfaces.walls.size()); }
    int ceiling_index() const { return static_cast<int>(surfaces.walls.size()) + 1; }
};

struct SynthResult {
    SequenceBundle bundle;
    GroundTruth truth;
};

/// Walk a camera through the room and detect every visible surface: the true
/// extent polygon is clipped against the view frustum, projected to a pixel
/// bounding box, and paired with the exact camera-frame plane; then noise,
/// dropout, and spurious detections are applied per NoiseSpec. Frame ids
/// start at 1. Deterministic in traj.seed, independent of evaluation order.
/// Throws CameraOutsideRoom when the trajectory cannot stay strictly inside.
SynthResult generate_sequence(const RoomSpec& room, const TrajectorySpec& traj,
                              const Intrinsics& K, const NoiseSpec& noise);

/// The layout a perfect reconstruction would produce: true wall rectangles,
/// the two horizontal planes, and the room's bounding box.
RoomLayout ground_truth_layout(const RoomSpec& spec);

/// Pair up predicted and true walls (nearest normal angle, offset difference
/// as tie-break, each wall used once) and report per-pair errors plus the
/// leftovers on both sides. Matching is per distinct plane: a wall that was
/// reconstructed as several coplanar segments counts once, represented by
/// its first polygon's index, and never inflates unmatched_predicted.
struct WallMatch {
    int predicted = 0; // index into predicted.walls (first polygon on the plane)
    int truth = 0;
    double normal_err_deg = 0.0;
    double offset_err_m = 0.0;
};

struct LayoutComparison {
    std::vector<WallMatch> matches;
    int unmatched_predicted = 0;
    int unmatched_truth = 0;
    double max_normal_err_deg = 0.0;
    double max_offset_err_m = 0.0;
};

LayoutComparison compare_layouts(const RoomLayout& predicted, const RoomLayout& truth);

/// Strict interior test against the footprint polygon (boundary is outside).
bool inside_footprint(const std::vector<Vec2>& footprint, const Vec2& p);

} // namespace roomfuse
