#pragma once

#include <filesystem>
#include <vector>

#include "roomfuse/candidates.hpp"
#include "roomfuse/measurements.hpp"

namespace roomfuse {

/// The fused room: accepted wall segments plus the inferred floor and ceiling
/// planes, bounded by the measurement-derived box.
struct RoomLayout {
    std::vector<PlanarPolygon> walls;
    Plane floor;
    Plane ceiling;
    SceneBounds bounds;

    std::size_t wall_count() const { return walls.size(); }
    double total_wall_area() const;
};

/// Per-pixel plane-instance segmentation of one camera frame. Label 0 is
/// background/clutter; label k > 0 is detection k-1. `depth` carries the
/// z-buffer for rendered images (labeled pixel iff finite depth > 0) and is
/// empty for label maps read back from disk.
struct LabelImage {
    int width = 0;
    int height = 0;
    std::vector<int> labels;   // row-major, width * height
    std::vector<double> depth; // same layout when present

    int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    double depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
};

/// Keep the accepted candidates as the room's walls. Throws EmptyLayout when
/// none are accepted, and InvariantViolation when a wall vertex escapes the
/// floor-ceiling slab by more than the shared on-plane tolerance.
RoomLayout assemble(const std::vector<CandidateSegment>& candidates, const Plane& floor,
                    const Plane& ceiling, const SceneBounds& bounds);

/// Write the layout as Wavefront OBJ: one fan-triangulated face per wall,
/// plus the floor and ceiling clipped to the bounds. Vertices are printed
/// with 9 significant digits.
void export_mesh(const RoomLayout& layout, const std::filesystem::path& path);

/// Reproject one frame's detections into the image: every pixel whose center
/// falls in a detection's box is back-projected onto that detection's
/// camera-frame plane, and the smallest positive depth wins the pixel (ties
/// within 1e-9 go to the lowest detection index). Pixels whose ray misses a
/// plane or hits it behind the camera are skipped for that detection.
LabelImage render_layout2d(const std::vector<Measurement>& frame_measurements,
                           const Intrinsics& K);

/// ASCII PGM (P2) with the raw label values.
void save_pgm(const LabelImage& image, const std::filesystem::path& path);
LabelImage load_pgm(const std::filesystem::path& path);

/// ASCII PPM (P3) visualization: background black, labels cycle a fixed
/// 12-color palette.
void save_ppm(const LabelImage& image, const std::filesystem::path& path);

} // namespace roomfuse
