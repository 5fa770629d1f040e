#pragma once

#include <stdexcept>
#include <string>

namespace roomfuse {

// Numeric tolerances shared across the library. Tests may tighten or relax
// them through the mutable accessor; production code reads the defaults.
struct Tolerances {
    double unit = 1e-9;        // unit-length / orthonormality checks
    double on_plane = 1e-6;    // point-on-plane residual for polygon vertices
    double degenerate = 1e-12; // below this a vector or offset counts as zero
};

inline Tolerances& tol() {
    static Tolerances t;
    return t;
}

// Error hierarchy. Every throwing operation uses one of these so callers can
// map failures to exit codes (config, io/parse, structured pipeline failure).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : Error {
    using Error::Error;
};
struct DegeneratePlane : GeometryError {
    explicit DegeneratePlane(const std::string& what_ = "degenerate plane: normal part is (near) zero")
        : GeometryError(what_) {}
};
struct RayParallel : GeometryError {
    explicit RayParallel(const std::string& what_ = "ray is parallel to the plane")
        : GeometryError(what_) {}
};
struct BehindCamera : GeometryError {
    explicit BehindCamera(const std::string& what_ = "back-projected point lies behind the camera")
        : GeometryError(what_) {}
};
struct ParallelPlanes : GeometryError {
    explicit ParallelPlanes(const std::string& what_ = "planes are (near) parallel, no intersection line")
        : GeometryError(what_) {}
};
struct DegeneratePatch : GeometryError {
    explicit DegeneratePatch(const std::string& what_ = "patch area is (near) zero")
        : GeometryError(what_) {}
};
struct NearPerpendicular : GeometryError {
    explicit NearPerpendicular(const std::string& what_ = "planes are too far from parallel to project between")
        : GeometryError(what_) {}
};

struct ParseError : Error {
    ParseError(int line, const std::string& reason)
        : Error("parse error at line " + std::to_string(line) + ": " + reason), line(line) {}
    int line;
};
struct IoError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct InvariantViolation : Error {
    using Error::Error;
};
struct LengthMismatch : InvariantViolation {
    explicit LengthMismatch(const std::string& what_ = "paired inputs differ in length")
        : InvariantViolation(what_) {}
};
struct EmptyBatch : InvariantViolation {
    explicit EmptyBatch(const std::string& what_ = "metric input batch is empty")
        : InvariantViolation(what_) {}
};
struct EmptyInput : InvariantViolation {
    explicit EmptyInput(const std::string& what_ = "metric input is empty")
        : InvariantViolation(what_) {}
};
struct DimensionMismatch : InvariantViolation {
    explicit DimensionMismatch(const std::string& what_ = "images differ in size")
        : InvariantViolation(what_) {}
};
struct MissingPose : Error {
    explicit MissingPose(int frame_id)
        : Error("no pose for frame " + std::to_string(frame_id)), frame_id(frame_id) {}
    int frame_id;
};
struct UnknownFrame : ConfigError {
    explicit UnknownFrame(int frame_id)
        : ConfigError("frame " + std::to_string(frame_id) + " is not in the trajectory"),
          frame_id(frame_id) {}
    int frame_id;
};

// Structured pipeline failures (reported, mapped to exit code 4 by the CLI).
struct PipelineFailure : Error {
    PipelineFailure(std::string code_, const std::string& what_)
        : Error(what_), code(std::move(code_)) {}
    std::string code;
};
struct TooFewSamples : PipelineFailure {
    TooFewSamples() : PipelineFailure("TooFewSamples", "need at least 2 features to fit a mixture") {}
};
struct NoPlanesSelected : PipelineFailure {
    NoPlanesSelected() : PipelineFailure("NoPlanesSelected", "no mixture component passed the weight threshold") {}
};
struct NoHorizontalCluster : PipelineFailure {
    NoHorizontalCluster() : PipelineFailure("NoHorizontalCluster", "no floor/ceiling cluster available") {}
};
struct AmbiguousNormal : PipelineFailure {
    AmbiguousNormal() : PipelineFailure("AmbiguousNormal", "dominant floor/ceiling cluster is not horizontal") {}
};
struct EmptyLayout : PipelineFailure {
    EmptyLayout() : PipelineFailure("EmptyLayout", "no candidate segment was accepted") {}
};
struct NoMeasurements : PipelineFailure {
    NoMeasurements() : PipelineFailure("NoMeasurements", "measurement set is empty") {}
};
struct DegenerateBounds : PipelineFailure {
    DegenerateBounds() : PipelineFailure("DegenerateBounds", "scene bounds are empty along at least one axis") {}
};
struct EmptyArrangement : PipelineFailure {
    explicit EmptyArrangement(const std::string& what_ = "a room plane does not intersect the scene bounds")
        : PipelineFailure("EmptyArrangement", what_) {}
};
struct InvalidFootprint : ConfigError {
    using ConfigError::ConfigError;
};
struct CameraOutsideRoom : ConfigError {
    using ConfigError::ConfigError;
};

inline constexpr const char* kVersion = "0.1.0";

} // namespace roomfuse
