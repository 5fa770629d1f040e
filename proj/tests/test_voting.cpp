#include "roomfuse/voting.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "test_support.hpp"

using namespace roomfuse;

namespace {

const Plane kWallX = canonicalize(Vec4(1, 0, 0, 0)); // x = 0
const Plane kWallY = canonicalize(Vec4(0, 1, 0, 0)); // y = 0

// Axis-aligned rectangle in the plane's canonical frame coordinates.
PlanarPolygon rect_on(const Plane& plane, double u0, double u1, double v0, double v1) {
    return PlanarPolygon(plane, make_frame(plane), {{u0, v0}, {u1, v0}, {u1, v1}, {u0, v1}});
}

CandidateSegment candidate_on(const Plane& plane, double u0, double u1, double v0, double v1,
                              int cluster_id = 0) {
    return CandidateSegment{cluster_id, rect_on(plane, u0, u1, v0, v1)};
}

VotingParams relaxed() {
    VotingParams p;
    p.e_min = 0.5;
    p.v_min = 1;
    return p;
}

} // namespace

TEST(OverlapFractions, IdenticalPatchesOverlapFully) {
    const PlanarPolygon patch = rect_on(kWallX, 0, 4, 0, 2);
    const auto [i_vc, i_cv] = overlap_fractions(patch, patch);
    EXPECT_DOUBLE_EQ(i_vc, 1.0);
    EXPECT_DOUBLE_EQ(i_cv, 1.0);
}

TEST(OverlapFractions, ContainedHalfSizeVoter) {
    const auto [i_vc, i_cv] =
        overlap_fractions(rect_on(kWallX, 0, 5, 0, 1), rect_on(kWallX, 0, 10, 0, 1));
    EXPECT_DOUBLE_EQ(i_vc, 1.0);
    EXPECT_DOUBLE_EQ(i_cv, 0.5);
}

TEST(OverlapFractions, DisjointPatchesShareNothing) {
    const auto [i_vc, i_cv] =
        overlap_fractions(rect_on(kWallX, 20, 21, 0, 1), rect_on(kWallX, 0, 10, 0, 1));
    EXPECT_DOUBLE_EQ(i_vc, 0.0);
    EXPECT_DOUBLE_EQ(i_cv, 0.0);
}

TEST(OverlapFractions, PerpendicularVoterThrows) {
    EXPECT_THROW(overlap_fractions(rect_on(kWallY, 0, 1, 0, 1), rect_on(kWallX, 0, 10, 0, 1)),
                 NearPerpendicular);
}

// Three voters engineered to hit (i_vc, i_cv) = (0.8, 0.3), (0.9, 0.25) and
// (0.5, 0.4) against a 10 x 1 candidate. The third fails the voter-side
// threshold, so eta = 0.2 + 0.1 and r_c = 2/3.
TEST(VoteCandidate, HandComputedEnergyBothRatioModes) {
    const CandidateSegment cand = candidate_on(kWallX, 0, 10, 0, 1);
    const std::vector<PlanarPolygon> voters = {
        rect_on(kWallX, -0.75, 3, 0, 1),            // A = 3,   area = 3.75
        rect_on(kWallX, 2.5 - 2.5 / 0.9, 2.5, 0, 1), // A = 2.5, area = 2.5/0.9
        rect_on(kWallX, -4, 4, 0, 1),               // A = 4,   area = 8
    };

    VotingParams p = relaxed();
    p.ratio_mode = RatioMode::DividePaperLiteral;
    const VoteResult lit = vote_candidate(cand, voters, p);
    EXPECT_EQ(lit.inliers, 2);
    EXPECT_EQ(lit.voters_total, 3);
    EXPECT_NEAR(lit.r_c, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(lit.energy, 0.675, 1e-12);
    EXPECT_TRUE(lit.accepted); // 0.675 >= 0.5

    p.ratio_mode = RatioMode::MultiplyCorrected;
    const VoteResult cor = vote_candidate(cand, voters, p);
    EXPECT_EQ(cor.inliers, 2);
    EXPECT_NEAR(cor.energy, 2.0 / 15.0, 1e-12); // 0.3 * (2/3)^2
    EXPECT_FALSE(cor.accepted);                 // 0.1333 < 0.5
}

TEST(VoteCandidate, ThresholdsAreStrict) {
    // Intersection 7 of a 10-wide voter: i_vc lands exactly on t_vc = 0.7.
    const VoteResult r = vote_candidate(candidate_on(kWallX, 0, 10, 0, 1),
                                        {rect_on(kWallX, -3, 7, 0, 1)}, relaxed());
    EXPECT_EQ(r.inliers, 0);
    EXPECT_DOUBLE_EQ(r.energy, 0.0);
}

TEST(VoteCandidate, NoVotersMeansRejectedZeroEnergy) {
    const VoteResult r = vote_candidate(candidate_on(kWallX, 0, 10, 0, 1), {}, relaxed());
    EXPECT_EQ(r.voters_total, 0);
    EXPECT_EQ(r.inliers, 0);
    EXPECT_DOUBLE_EQ(r.energy, 0.0);
    EXPECT_DOUBLE_EQ(r.r_c, 0.0);
    EXPECT_FALSE(r.accepted);
}

TEST(VoteCandidate, ZeroInliersInLiteralModeStaysZero) {
    VotingParams p = relaxed();
    p.ratio_mode = RatioMode::DividePaperLiteral;
    const VoteResult r = vote_candidate(candidate_on(kWallX, 0, 10, 0, 1),
                                        {rect_on(kWallX, 20, 22, 0, 1)}, p);
    EXPECT_EQ(r.inliers, 0);
    EXPECT_DOUBLE_EQ(r.energy, 0.0);
    EXPECT_FALSE(r.accepted);
}

TEST(VoteCandidate, PerpendicularVotersCountTowardTotalOnly) {
    const CandidateSegment cand = candidate_on(kWallX, 0, 4, 0, 2);
    const std::vector<PlanarPolygon> voters = {
        rect_on(kWallY, 0, 1, 0, 1),      // projection fails
        rect_on(kWallX, -1, 4, 0, 2),     // overhangs: i_vc = 0.8
    };
    const VoteResult r = vote_candidate(cand, voters, relaxed());
    EXPECT_EQ(r.voters_total, 2);
    EXPECT_EQ(r.inliers, 1);
    EXPECT_DOUBLE_EQ(r.r_c, 0.5);
}

TEST(VoteCandidate, EnergyInvariantUnderVoterPermutation) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    const CandidateSegment cand = candidate_on(kWallX, 0, 6, 0, 2);
    std::vector<PlanarPolygon> voters;
    for (int i = 0; i < 12; ++i) {
        const double s = shift(rng);
        voters.push_back(rect_on(kWallX, s - 1.5, s + 3.0, 0.1, 1.9));
    }
    const VoteResult base = vote_candidate(cand, voters, relaxed());
    std::shuffle(voters.begin(), voters.end(), rng);
    const VoteResult shuffled = vote_candidate(cand, voters, relaxed());
    EXPECT_EQ(base.inliers, shuffled.inliers);
    EXPECT_NEAR(base.energy, shuffled.energy, 1e-12);

    // Bit-exact repeatability for identical input order.
    const VoteResult again = vote_candidate(cand, voters, relaxed());
    EXPECT_EQ(shuffled.energy, again.energy);
}

TEST(VoteCandidate, DisjointVoterNeverRaisesCorrectedEnergy) {
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    const CandidateSegment cand = candidate_on(kWallX, 0, 6, 0, 2);
    for (int round = 0; round < 20; ++round) {
        std::vector<PlanarPolygon> voters;
        for (int i = 0; i < 5; ++i) {
            const double s = shift(rng);
            voters.push_back(rect_on(kWallX, s - 1.0, s + 4.0, 0, 2));
        }
        const VoteResult before = vote_candidate(cand, voters, relaxed());
        voters.push_back(rect_on(kWallX, 50, 52, 0, 2));
        const VoteResult after = vote_candidate(cand, voters, relaxed());
        EXPECT_LE(after.energy, before.energy + 1e-15);
    }
}

TEST(VoteCandidate, InlierDecisionMonotoneInOverlap) {
    // Slide a fixed-size voter across the candidate edge; once it becomes an
    // inlier it must stay one while the overlap keeps growing.
    const CandidateSegment cand = candidate_on(kWallX, 0, 10, 0, 1);
    bool was_inlier = false;
    for (double x0 = -4.0; x0 <= 0.0; x0 += 0.05) {
        const VoteResult r =
            vote_candidate(cand, {rect_on(kWallX, x0, x0 + 5.0, 0, 1)}, relaxed());
        const bool inlier = r.inliers == 1;
        if (was_inlier) {
            EXPECT_TRUE(inlier) << "overlap grew but inlier status was lost";
        }
        was_inlier = inlier;
    }
    EXPECT_TRUE(was_inlier);
}

TEST(VoteCandidate, RejectsInvalidParams) {
    VotingParams p;
    p.t_vc = 0.0;
    EXPECT_THROW(vote_candidate(candidate_on(kWallX, 0, 1, 0, 1), {}, p), ConfigError);
    p = VotingParams{};
    p.a = -1.0;
    EXPECT_THROW(vote_candidate(candidate_on(kWallX, 0, 1, 0, 1), {}, p), ConfigError);
    p = VotingParams{};
    p.e_min = -0.1;
    EXPECT_THROW(vote_candidate(candidate_on(kWallX, 0, 1, 0, 1), {}, p), ConfigError);
}

TEST(VoteAll, SupportedCellAcceptedOthersRejected) {
    // Two perpendicular walls; all evidence lies on the y < 0 side of wall x=0
    // and overhangs the corner slightly, so exactly one cell collects energy.
    const Plane floor = canonicalize(Vec4(0, 0, 1, 0));
    const Plane ceiling = canonicalize(Vec4(0, 0, -1, 2));
    SceneBounds bounds;
    bounds.min = Vec3(-4, -4, -0.5);
    bounds.max = Vec3(4, 4, 2.5);
    auto candidates = generate_candidates({kWallX, kWallY}, floor, ceiling, bounds);
    ASSERT_EQ(candidates.size(), 4u);

    std::vector<GlobalMeasurement> measurements;
    for (int i = 0; i < 6; ++i) {
        const double dz = 0.01 * i;
        Measurement src;
        src.frame_id = i + 1;
        measurements.push_back(
            GlobalMeasurement{src, kWallX, rect_on(kWallX, -3.0, 0.5, dz, 1.5 + dz)});
    }

    PlaneCluster cx;
    cx.weight = 0.9;
    cx.mean = make_feature(kWallX).vector;
    cx.covariance_diag = Vec4::Constant(1e-4);
    cx.members = {0, 1, 2, 3, 4, 5};
    cx.plane = kWallX;
    PlaneCluster cy;
    cy.weight = 0.1;
    cy.mean = make_feature(kWallY).vector;
    cy.covariance_diag = Vec4::Constant(1e-4);
    cy.plane = kWallY;

    VotingParams p = relaxed();
    p.v_min = 3;
    const auto voted = vote_all(candidates, {cx, cy}, measurements, p);
    int accepted = 0;
    for (const CandidateSegment& c : voted) {
        if (c.accepted) {
            ++accepted;
            EXPECT_EQ(c.cluster_id, 0);
            EXPECT_LT(c.polygon.frame().to_world(c.polygon.centroid()).y(), 0.0);
            EXPECT_EQ(c.inliers, 6);
            EXPECT_NEAR(c.energy, 6.0 * (1.0 - 6.0 / 7.0), 1e-9);
        } else if (c.cluster_id == 1) {
            EXPECT_EQ(c.voters_total, 0);
        }
    }
    EXPECT_EQ(accepted, 1);

    p.e_min = std::numeric_limits<double>::infinity();
    for (const CandidateSegment& c : vote_all(candidates, {cx, cy}, measurements, p))
        EXPECT_FALSE(c.accepted);
}
