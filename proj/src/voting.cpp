#include "roomfuse/voting.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace roomfuse {

const char* to_string(RatioMode m) {
    return m == RatioMode::DividePaperLiteral ? "divide_paper_literal" : "multiply_corrected";
}

RatioMode ratio_mode_from_string(const std::string& s) {
    if (s == "divide_paper_literal") return RatioMode::DividePaperLiteral;
    if (s == "multiply_corrected") return RatioMode::MultiplyCorrected;
    throw std::invalid_argument("unknown ratio mode: " + s);
}

void VotingParams::validate() const {
    if (!(t_vc > 0.0 && t_vc <= 1.0)) throw ConfigError("t_vc must be in (0, 1]");
    if (!(t_cv > 0.0 && t_cv <= 1.0)) throw ConfigError("t_cv must be in (0, 1]");
    if (!(a >= 0.0)) throw ConfigError("energy exponent a must be >= 0");
    if (!(e_min >= 0.0)) throw ConfigError("e_min must be >= 0");
    if (v_min < 0) throw ConfigError("v_min must be >= 0");
}

std::pair<double, double> overlap_fractions(const PlanarPolygon& voter,
                                            const PlanarPolygon& candidate) {
    const PlanarPolygon projected = project_patch(voter, candidate);
    const double shared = polygon_intersection_area(projected, candidate);
    return {shared / projected.area(), shared / candidate.area()};
}

VoteResult vote_candidate(const CandidateSegment& candidate,
                          const std::vector<PlanarPolygon>& voters,
                          const VotingParams& params) {
    params.validate();

    VoteResult r;
    r.voters_total = static_cast<int>(voters.size());
    if (voters.empty()) return r;

    double eta = 0.0;
    for (const PlanarPolygon& voter : voters) {
        double i_vc = 0.0, i_cv = 0.0;
        try {
            std::tie(i_vc, i_cv) = overlap_fractions(voter, candidate.polygon);
        } catch (const NearPerpendicular&) {
            continue; // heard but can never support
        }
        if (i_vc > params.t_vc && i_cv > params.t_cv) {
            ++r.inliers;
            eta += 1.0 - i_vc;
        }
    }

    r.r_c = static_cast<double>(r.inliers) / static_cast<double>(r.voters_total);
    // No inliers means no support: rejected with zero energy in either mode.
    // This also sidesteps 0^(-a) in the literal mode, and it is what lets a
    // zero e_min still reject the empty cells a wall plane grows beyond the
    // room's corners (their heard-but-unsupporting voters never inlie).
    if (r.inliers == 0) return r;
    if (params.ratio_mode == RatioMode::DividePaperLiteral) {
        r.energy = eta / std::pow(r.r_c, params.a);
    } else {
        r.energy = eta * std::pow(r.r_c, params.a);
    }
    r.accepted = r.energy >= params.e_min && r.voters_total >= params.v_min;
    return r;
}

std::vector<CandidateSegment> vote_all(std::vector<CandidateSegment> candidates,
                                       const std::vector<PlaneCluster>& clusters,
                                       const std::vector<GlobalMeasurement>& measurements,
                                       const VotingParams& params, int n_voters) {
    params.validate();
    if (n_voters < 0) throw ConfigError("n_voters must be >= 0");

    // Voter sets are per cluster, not per candidate; build each once.
    std::vector<std::vector<PlanarPolygon>> voters_by_cluster;
    voters_by_cluster.reserve(clusters.size());
    for (const PlaneCluster& cluster : clusters) {
        std::vector<PlanarPolygon> patches;
        for (int idx : rank_voters(cluster, measurements, n_voters))
            patches.push_back(measurements[static_cast<std::size_t>(idx)].patch_world);
        voters_by_cluster.push_back(std::move(patches));
    }

    for (CandidateSegment& c : candidates) {
        if (c.cluster_id < 0 || c.cluster_id >= static_cast<int>(clusters.size()))
            throw InvariantViolation("vote_all: candidate cluster_id " +
                                     std::to_string(c.cluster_id) + " out of range");
        const VoteResult r =
            vote_candidate(c, voters_by_cluster[static_cast<std::size_t>(c.cluster_id)], params);
        c.energy = r.energy;
        c.inliers = r.inliers;
        c.voters_total = r.voters_total;
        c.accepted = r.accepted;
    }
    return candidates;
}

} // namespace roomfuse
