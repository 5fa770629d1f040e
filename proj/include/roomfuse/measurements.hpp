#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "roomfuse/geometry.hpp"

namespace roomfuse {

enum class PlaneClass { Wall, FloorCeiling };

const char* to_string(PlaneClass c);
PlaneClass plane_class_from_string(const std::string& s); // throws std::invalid_argument

/// A single-frame plane detection: class, confidence, image-space bounding
/// box, and the plane equation in the camera frame.
struct Measurement {
    int frame_id = 0;
    PlaneClass klass = PlaneClass::Wall;
    double score = 1.0;
    BBox bbox;
    Plane plane_cam;
};

/// A measurement expressed in world coordinates: the transformed plane plus
/// the patch its bounding box subtends on that plane.
struct GlobalMeasurement {
    Measurement source;
    Plane plane_world;
    PlanarPolygon patch_world;
};

/// Everything one sequence provides: camera intrinsics, per-frame poses
/// (camera to world), and the raw detections.
struct SequenceBundle {
    Intrinsics intrinsics;
    std::map<int, Pose> poses;
    std::vector<Measurement> measurements;
};

/// Why individual measurements were dropped while lifting to world space.
struct LiftReport {
    int lifted = 0;
    int dropped_ray_parallel = 0;
    int dropped_behind_camera = 0;
    int dropped_degenerate_patch = 0;

    int dropped() const {
        return dropped_ray_parallel + dropped_behind_camera + dropped_degenerate_patch;
    }
};

/// Parse a detection file (one JSON object per line) and a trajectory file
/// (`frame tx ty tz qx qy qz qw`, camera to world). Every record either loads
/// fully validated or raises with its line number.
SequenceBundle load_sequence(const std::filesystem::path& measurement_path,
                             const std::filesystem::path& pose_path,
                             const Intrinsics& intrinsics);

/// Inverse of load_sequence; numeric fields round-trip bit-exactly.
void save_sequence(const SequenceBundle& bundle,
                   const std::filesystem::path& measurement_path,
                   const std::filesystem::path& pose_path);

std::vector<Measurement> load_measurements(const std::filesystem::path& path,
                                           const Intrinsics& intrinsics);
void save_measurements(const std::vector<Measurement>& measurements,
                       const std::filesystem::path& path);
std::map<int, Pose> load_poses(const std::filesystem::path& path);
void save_poses(const std::map<int, Pose>& poses, const std::filesystem::path& path);

/// Transform every measurement into world space. Measurements whose bounding
/// box fails back-projection (ray along the plane, plane behind the camera,
/// sliver patch) are dropped and tallied in the report. Output is ordered by
/// frame id, then input order.
std::vector<GlobalMeasurement> lift_to_world(const SequenceBundle& bundle,
                                             LiftReport* report = nullptr);

/// Drop measurements seen too edge-on: keep one iff the angle between its
/// camera-frame normal and the optical axis is at most 90 - min_angle_deg
/// degrees (the surface is at least min_angle_deg away from perpendicular to
/// the image plane).
std::vector<GlobalMeasurement> filter_grazing(const std::vector<GlobalMeasurement>& measurements,
                                              double min_angle_deg = 30.0);

} // namespace roomfuse
