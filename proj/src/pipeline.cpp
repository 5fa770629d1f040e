#include "roomfuse/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

namespace roomfuse {

namespace {

bool finite(double v) { return std::isfinite(v); }

nlohmann::ordered_json config_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["min_angle_deg"] = c.min_angle_deg;
    j["w_min"] = c.w_min;
    j["k_max_walls"] = c.k_max_walls;
    j["k_max_fc"] = c.k_max_fc;
    j["n_voters"] = c.n_voters;
    j["voting"] = {
        {"t_vc", c.voting.t_vc},   {"t_cv", c.voting.t_cv},
        {"a", c.voting.a},         {"e_min", c.voting.e_min},
        {"v_min", c.voting.v_min}, {"ratio_mode", to_string(c.voting.ratio_mode)},
    };
    j["gap_m"] = c.gap_m;
    j["margin_m"] = c.margin_m;
    j["seed"] = c.seed;
    j["s_n"] = c.s_n;
    j["fallback_floor_z"] = nullptr;
    j["fallback_height"] = nullptr;
    if (c.fallback_floor_z) j["fallback_floor_z"] = *c.fallback_floor_z;
    if (c.fallback_height) j["fallback_height"] = *c.fallback_height;
    return j;
}

} // namespace

void PipelineConfig::validate() const {
    if (!finite(min_angle_deg) || min_angle_deg <= 0.0 || min_angle_deg >= 90.0)
        throw ConfigError("min_angle_deg must lie in (0, 90)");
    if (!finite(w_min) || w_min < 0.0 || w_min >= 1.0)
        throw ConfigError("w_min must lie in [0, 1)");
    if (k_max_walls < 1) throw ConfigError("k_max_walls must be at least 1");
    if (k_max_fc < 1) throw ConfigError("k_max_fc must be at least 1");
    if (n_voters < 1) throw ConfigError("n_voters must be at least 1");
    voting.validate();
    if (!finite(gap_m) || gap_m <= 0.0) throw ConfigError("gap_m must be positive");
    if (!finite(margin_m) || margin_m < 0.0) throw ConfigError("margin_m must not be negative");
    if (!finite(s_n) || s_n <= 0.0) throw ConfigError("s_n must be positive");
    if (fallback_floor_z.has_value() != fallback_height.has_value())
        throw ConfigError("fallback_floor_z and fallback_height must be set together");
    if (fallback_floor_z && !finite(*fallback_floor_z))
        throw ConfigError("fallback_floor_z must be finite");
    if (fallback_height && (!finite(*fallback_height) || *fallback_height <= 0.0))
        throw ConfigError("fallback_height must be positive");
}

ReconstructionResult reconstruct(const SequenceBundle& bundle, const PipelineConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    ReconstructionResult result;
    RunReport& report = result.report;
    report.config = config;

    try {
        report.counts.loaded = static_cast<int>(bundle.measurements.size());

        LiftReport lift;
        const std::vector<GlobalMeasurement> lifted = lift_to_world(bundle, &lift);
        report.counts.lifted = static_cast<int>(lifted.size());
        report.counts.dropped = lift.dropped();

        const std::vector<GlobalMeasurement> kept = filter_grazing(lifted, config.min_angle_deg);
        report.counts.filtered = static_cast<int>(kept.size());

        const auto [walls, fc] = split_by_class(kept);
        report.counts.wall_planes = static_cast<int>(walls.size());
        report.counts.fc_planes = static_cast<int>(fc.size());
        if (walls.empty()) throw NoPlanesSelected();

        MixtureConfig mix;
        mix.s_n = config.s_n;
        const MixtureModel wall_model =
            fit_mixture(make_features(walls, config.s_n), config.k_max_walls, config.seed, mix);
        report.counts.wall_clusters = static_cast<int>(wall_model.clusters.size());
        for (const PlaneCluster& cluster : wall_model.clusters)
            report.wall_cluster_weights.push_back(cluster.weight);

        const std::vector<PlaneCluster> selected = select_room_planes(wall_model, config.w_min);
        report.counts.selected = static_cast<int>(selected.size());

        // The horizontal band. Any structured failure here (no horizontal
        // measurements at all, nothing above w_min, dominant cluster not
        // horizontal) is recoverable when the config pins the band itself.
        Plane floor;
        Plane ceiling;
        try {
            if (fc.empty()) throw NoHorizontalCluster();
            const MixtureModel fc_model =
                fit_mixture(make_features(fc, config.s_n), config.k_max_fc, config.seed + 1, mix);
            for (const PlaneCluster& cluster : fc_model.clusters)
                report.fc_cluster_weights.push_back(cluster.weight);
            // Camera positions disambiguate floor from ceiling when the
            // dominant horizontal surface passes near the world origin.
            std::vector<Vec3> cameras;
            cameras.reserve(bundle.poses.size());
            for (const auto& [frame, pose] : bundle.poses) cameras.push_back(pose.translation());
            std::tie(floor, ceiling) = infer_floor_ceiling(
                select_room_planes(fc_model, config.w_min), cameras, config.gap_m);
        } catch (const PipelineFailure&) {
            if (!config.fallback_floor_z || !config.fallback_height) throw;
            const double z0 = *config.fallback_floor_z;
            floor = Plane(Vec3::UnitZ(), -z0);
            ceiling = Plane(-Vec3::UnitZ(), z0 + *config.fallback_height);
            report.band_from_fallback = true;
        }

        const SceneBounds bounds = scene_bounds(kept, config.margin_m);
        std::vector<Plane> wall_planes;
        wall_planes.reserve(selected.size());
        for (const PlaneCluster& cluster : selected) wall_planes.push_back(cluster.plane);

        std::vector<CandidateSegment> candidates =
            generate_candidates(wall_planes, floor, ceiling, bounds);
        report.counts.candidates = static_cast<int>(candidates.size());

        result.segments =
            vote_all(std::move(candidates), selected, walls, config.voting, config.n_voters);
        for (const CandidateSegment& segment : result.segments) {
            report.votes.push_back({segment.cluster_id, segment.polygon.area(), segment.energy,
                                    segment.inliers, segment.voters_total, segment.accepted});
            if (segment.accepted) ++report.counts.accepted;
        }

        result.layout = assemble(result.segments, floor, ceiling, bounds);
    } catch (const PipelineFailure& failure) {
        report.failure = failure.code;
        report.failure_detail = failure.what();
        result.layout.reset();
    }

    report.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

std::string report_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["seed"] = report.config.seed;
    j["failure"] = report.failure;
    j["failure_detail"] = report.failure_detail;
    j["band_from_fallback"] = report.band_from_fallback;

    nlohmann::ordered_json counts;
    counts["loaded"] = report.counts.loaded;
    counts["lifted"] = report.counts.lifted;
    counts["dropped"] = report.counts.dropped;
    counts["filtered"] = report.counts.filtered;
    counts["wall_planes"] = report.counts.wall_planes;
    counts["fc_planes"] = report.counts.fc_planes;
    counts["wall_clusters"] = report.counts.wall_clusters;
    counts["selected"] = report.counts.selected;
    counts["candidates"] = report.counts.candidates;
    counts["accepted"] = report.counts.accepted;
    j["counts"] = std::move(counts);

    j["wall_cluster_weights"] = report.wall_cluster_weights;
    j["fc_cluster_weights"] = report.fc_cluster_weights;

    nlohmann::ordered_json votes = nlohmann::ordered_json::array();
    for (const CandidateRecord& v : report.votes) {
        votes.push_back({
            {"cluster", v.cluster_id},
            {"area_m2", v.area_m2},
            {"energy", v.energy},
            {"inliers", v.inliers},
            {"voters_total", v.voters_total},
            {"accepted", v.accepted},
        });
    }
    j["votes"] = std::move(votes);
    j["config"] = config_json(report.config);
    return j.dump(2) + "\n";
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << report_json(report);
    if (!out) throw IoError("failed while writing " + path.string());
}

} // namespace roomfuse
