#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roomfuse/layout.hpp"
#include "roomfuse/measurements.hpp"

namespace roomfuse {

/// Weight balancing the plane-parameter regression losses against the
/// classification and box terms in the upstream detector's combined loss.
/// Not used by this library's own computations; exposed so downstream
/// training code and reports agree on the constant.
inline constexpr double kPlaneLossWeight = 0.05;

/// Angular error statistics over matched plane pairs, degrees.
struct NormalErrorStats {
    double mean = 0.0;
    double median = 0.0; // lower middle for even counts
    double rms = 0.0;
    double pct_below_11_25 = 0.0;
    double pct_below_22_5 = 0.0;
    double pct_below_30 = 0.0;
};

/// Point-to-plane distance statistics over instances, meters.
struct PlaneLocationStats {
    double mean = 0.0;
    double median = 0.0;
    double pct_below_0_2 = 0.0;
    double pct_below_0_5 = 0.0;
    double pct_below_1_0 = 0.0;
    int counted = 0; // instances with at least one back-projectable pixel
    int dropped = 0; // instances without any
};

/// Negative mean cosine similarity of matched unit normals, in [-1, 1].
double loss_norm(const std::vector<Vec3>& pred_normals, const std::vector<Vec3>& gt_normals);

/// Mean squared error of matched plane offsets.
double loss_d(const std::vector<double>& pred_d, const std::vector<double>& gt_d);

/// Per-pair angle between predicted and true normals, reduced to mean,
/// lower-middle median, rms and the sub-threshold percentages.
NormalErrorStats normal_error_stats(const std::vector<std::pair<Plane, Plane>>& pairs);

/// One instance of the plane-location protocol: every pixel center in the box
/// is back-projected onto the predicted plane and measured against the true
/// plane. Planes are in the camera frame of `K`.
struct PlaneLocationItem {
    Plane pred;
    BBox bbox;
    Intrinsics K;
    Plane gt;
};

/// Distance score per instance (mean of per-pixel |true-plane residual|),
/// reduced over instances. `stride` subsamples the pixel grid and must stay 1
/// for exact protocol runs.
PlaneLocationStats plane_location_stats(const std::vector<PlaneLocationItem>& items,
                                        int stride = 1);

/// Min-cost assignment of a dense cost matrix (rows() <= cols()); returns the
/// column chosen for each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Percent of pixels mislabeled after optimally mapping predicted plane
/// instances to the ground truth's class labels (gt uses 0 = background plus
/// class ids 1..5). The assignment cost of instance -> class is the number of
/// the instance's pixels the class label would get wrong, so with at most as
/// many instances as classes the assignment minimizes the final pixel error;
/// surplus instances fall to zero-cost dummy columns and relabel to
/// background.
double pixel_error_2d(const LabelImage& pred, const LabelImage& gt);

struct ScoredBox {
    double score = 0.0;
    BBox bbox;
};

/// Detections and ground truth of one image, split by class.
struct ImageDetections {
    std::vector<ScoredBox> pred_wall;
    std::vector<ScoredBox> pred_floor_ceiling;
    std::vector<BBox> gt_wall;
    std::vector<BBox> gt_floor_ceiling;
};

struct DetectionAp {
    std::optional<double> wall;          // absent when the class never occurs
    std::optional<double> floor_ceiling;
    std::optional<double> mean;          // over the classes that are present
};

/// All-point interpolated average precision per class: predictions greedily
/// matched to unclaimed same-image ground truth at IoU >= iou_min, in
/// descending score order.
DetectionAp detection_ap(const std::vector<ImageDetections>& images, double iou_min = 0.5);

/// Greedy matching of predicted to ground-truth measurements for the plane
/// quality protocols: descending prediction score, highest-IoU unclaimed
/// ground truth of the same frame and class, accepted at IoU >= iou_min.
struct MatchedPair {
    int pred = 0;
    int gt = 0;
};
std::vector<MatchedPair> match_by_bbox(const std::vector<Measurement>& preds,
                                       const std::vector<Measurement>& gts,
                                       double iou_min = 0.5);

/// Aligned two-table text report (normal error, then plane location).
std::string format_plane_metric_tables(const NormalErrorStats& n, const PlaneLocationStats& d);

/// The same numbers as a machine-readable JSON object.
std::string plane_metrics_json(const NormalErrorStats& n, const PlaneLocationStats& d);

} // namespace roomfuse
