#pragma once

#include <string>
#include <utility>
#include <vector>

#include "roomfuse/candidates.hpp"
#include "roomfuse/clustering.hpp"

namespace roomfuse {

enum class RatioMode {
    // Divide the energy by r_c^a, exactly as worded in the source scheme.
    // Dividing by a ratio < 1 inflates the energy of weakly supported
    // segments, so this mode is kept for fidelity and comparison only.
    DividePaperLiteral,
    // Multiply by r_c^a so low inlier ratios damp the energy instead.
    MultiplyCorrected,
};

const char* to_string(RatioMode m);
RatioMode ratio_mode_from_string(const std::string& s); // throws std::invalid_argument

struct VotingParams {
    double t_vc = 0.7;  // min fraction of the voter's area overlapping the candidate
    double t_cv = 0.2;  // min fraction of the candidate's area overlapped
    double a = 2.0;     // ratio exponent
    double e_min = 5.0; // acceptance energy threshold
    int v_min = 10;     // minimum voters for acceptance
    RatioMode ratio_mode = RatioMode::MultiplyCorrected;

    void validate() const;
};

struct VoteResult {
    double energy = 0.0;
    int inliers = 0;
    int voters_total = 0;
    double r_c = 0.0; // inliers / voters_total, 0 when no voters
    bool accepted = false;
};

/// Overlap fractions between a voter patch and a candidate: the voter is
/// projected onto the candidate's plane, A is the intersection area, and the
/// result is (A / projected-voter area, A / candidate area). Propagates
/// NearPerpendicular from the projection.
std::pair<double, double> overlap_fractions(const PlanarPolygon& voter,
                                            const PlanarPolygon& candidate);

/// Vote one candidate. A voter is an inlier when its overlap fractions
/// strictly exceed both thresholds; each inlier adds (1 - i_vc) to the raw
/// energy, which the inlier ratio then scales per params.ratio_mode. Voters
/// whose projection fails (NearPerpendicular) count toward the total but are
/// never inliers. Accepted when the final energy reaches e_min and at least
/// v_min voters were heard; no voters, or no inliers among them, means a
/// rejected zero-energy result in either ratio mode.
VoteResult vote_candidate(const CandidateSegment& candidate,
                          const std::vector<PlanarPolygon>& voters,
                          const VotingParams& params);

/// Vote every candidate with the top-n most likely measurements of its own
/// cluster and write the result back onto the segments. clusters must be the
/// list whose indices produced the candidates' cluster_id.
std::vector<CandidateSegment> vote_all(std::vector<CandidateSegment> candidates,
                                       const std::vector<PlaneCluster>& clusters,
                                       const std::vector<GlobalMeasurement>& measurements,
                                       const VotingParams& params, int n_voters = 100);

} // namespace roomfuse
