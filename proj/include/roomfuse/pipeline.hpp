// End-to-end reconstruction: lift measurements to world space, filter grazing
// views, cluster walls and floor/ceiling separately, derive the horizontal
// band, cut wall planes into candidate segments, vote, and assemble the final
// layout. One config drives every stage and one report records what happened,
// so a run can be audited (and reproduced) from its output alone.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roomfuse/candidates.hpp"
#include "roomfuse/clustering.hpp"
#include "roomfuse/layout.hpp"
#include "roomfuse/measurements.hpp"
#include "roomfuse/voting.hpp"

namespace roomfuse {

struct PipelineConfig {
    double min_angle_deg = 30.0; // grazing filter threshold, degrees
    double w_min = 0.05;         // min mixture weight for a plane to count
    int k_max_walls = 20;        // mixture capacity for wall clusters
    int k_max_fc = 4;            // mixture capacity for floor/ceiling clusters
    int n_voters = 100;          // top-n cluster members that vote per candidate
    VotingParams voting;
    double gap_m = 2.0;    // floor-to-ceiling distance when only one is seen
    double margin_m = 0.5; // scene bounds inflation, meters
    std::uint64_t seed = 1;
    double s_n = 1.0; // normal scale in the clustering feature [s_n*n, d]

    // When the horizontal-cluster rule fails (nothing looked like a floor or
    // a ceiling) and both values are set, the band is taken from here instead
    // of failing the run. Set both or neither.
    std::optional<double> fallback_floor_z;
    std::optional<double> fallback_height;

    void validate() const; // throws ConfigError
};

/// Measurement counts per stage. Each filtering stage can only shrink the
/// set, so loaded >= lifted >= filtered, selected <= wall_clusters and
/// accepted <= candidates.
struct StageCounts {
    int loaded = 0;        // measurements in the input bundle
    int lifted = 0;        // survived the camera-to-world lift
    int dropped = 0;       // lost at the lift (grazing rays, behind camera)
    int filtered = 0;      // survived the grazing-angle filter
    int wall_planes = 0;   // wall measurements entering the mixture
    int fc_planes = 0;     // floor/ceiling measurements entering the mixture
    int wall_clusters = 0; // mixture components fitted for walls
    int selected = 0;      // wall clusters above w_min
    int candidates = 0;    // segments generated from the selected planes
    int accepted = 0;      // segments that survived voting
};

/// Outcome of voting one candidate segment, flattened for the report.
struct CandidateRecord {
    int cluster_id = 0;
    double area_m2 = 0.0;
    double energy = 0.0;
    int inliers = 0;
    int voters_total = 0;
    bool accepted = false;
};

/// Machine-readable account of a reconstruction run. Always produced, even
/// when the run ends in a structured failure; `failure` is empty on success
/// and carries the failure code (NoPlanesSelected, EmptyLayout, ...)
/// otherwise. elapsed_seconds is for logging only and is deliberately left
/// out of the serialized form: two runs of the same input must produce
/// byte-identical report files.
struct RunReport {
    StageCounts counts;
    std::vector<double> wall_cluster_weights; // every fitted component
    std::vector<double> fc_cluster_weights;
    std::vector<CandidateRecord> votes;
    PipelineConfig config; // echo of the resolved config
    std::string failure;
    std::string failure_detail;
    bool band_from_fallback = false; // floor/ceiling came from the config, not the data
    double elapsed_seconds = 0.0;

    bool ok() const { return failure.empty(); }
};

struct ReconstructionResult {
    std::optional<RoomLayout> layout; // empty on structured failure
    std::vector<CandidateSegment> segments; // post-vote, empty if not reached
    RunReport report;
};

/// Run the full pipeline on an in-memory bundle. Structured failures
/// (PipelineFailure subclasses) do not propagate: they are recorded in the
/// report and leave `layout` empty. Config and input errors still throw.
/// Identical (bundle, config) pairs produce bit-identical results.
ReconstructionResult reconstruct(const SequenceBundle& bundle, const PipelineConfig& config);

/// Report as a JSON document with a fixed key order, terminated by a newline.
std::string report_json(const RunReport& report);

void save_report(const RunReport& report, const std::filesystem::path& path);

} // namespace roomfuse
