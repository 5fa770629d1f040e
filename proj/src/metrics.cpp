#include "roomfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace roomfuse {

namespace {

double lower_middle_median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

double pct_below(const std::vector<double>& values, double threshold) {
    const auto n = std::count_if(values.begin(), values.end(),
                                 [threshold](double v) { return v < threshold; });
    return 100.0 * static_cast<double>(n) / static_cast<double>(values.size());
}

void check_unit(const Vec3& v, const char* who) {
    if (std::abs(v.norm() - 1.0) > 1e-6)
        throw InvariantViolation(std::string(who) + ": normal is not unit length");
}

std::optional<double> class_ap(const std::vector<std::vector<ScoredBox>>& preds,
                               const std::vector<std::vector<BBox>>& gts, double iou_min) {
    std::size_t total_gt = 0, total_pred = 0;
    for (const auto& g : gts) total_gt += g.size();
    for (const auto& p : preds) total_pred += p.size();
    if (total_gt == 0 && total_pred == 0) return std::nullopt;
    if (total_gt == 0) return 0.0; // every prediction is a false positive

    struct Flat {
        std::size_t image;
        double score;
        const BBox* box;
    };
    std::vector<Flat> flat;
    flat.reserve(total_pred);
    for (std::size_t i = 0; i < preds.size(); ++i)
        for (const ScoredBox& sb : preds[i]) flat.push_back({i, sb.score, &sb.bbox});
    std::stable_sort(flat.begin(), flat.end(),
                     [](const Flat& a, const Flat& b) { return a.score > b.score; });

    std::vector<std::vector<char>> claimed(gts.size());
    for (std::size_t i = 0; i < gts.size(); ++i) claimed[i].assign(gts[i].size(), 0);

    std::vector<double> recall, precision;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const auto& f = flat[k];
        double best_iou = 0.0;
        int best = -1;
        for (std::size_t g = 0; g < gts[f.image].size(); ++g) {
            if (claimed[f.image][g]) continue;
            const double iou = bbox_iou(*f.box, gts[f.image][g]);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0 && best_iou >= iou_min) {
            claimed[f.image][static_cast<std::size_t>(best)] = 1;
            ++tp;
        }
        recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
        precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    }
    if (flat.empty()) return 0.0; // ground truth exists but nothing predicted

    // Precision envelope, then sum area under it at recall steps.
    for (std::size_t k = precision.size() - 1; k-- > 0;)
        precision[k] = std::max(precision[k], precision[k + 1]);
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

std::string two_row_table(const char* title, const std::vector<const char*>& cols,
                          const std::vector<double>& values) {
    char buf[64];
    std::string head(title);
    std::string row(head.size(), ' ');
    for (std::size_t i = 0; i < cols.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%9s", cols[i]);
        head += buf;
        std::snprintf(buf, sizeof buf, "%9.3f", values[i]);
        row += buf;
    }
    return head + "\n" + row + "\n";
}

} // namespace

double loss_norm(const std::vector<Vec3>& pred_normals, const std::vector<Vec3>& gt_normals) {
    if (pred_normals.size() != gt_normals.size()) throw LengthMismatch();
    if (pred_normals.empty()) throw EmptyBatch();
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_normals.size(); ++i) {
        check_unit(pred_normals[i], "loss_norm");
        check_unit(gt_normals[i], "loss_norm");
        sum += pred_normals[i].dot(gt_normals[i]);
    }
    return -sum / static_cast<double>(pred_normals.size());
}

double loss_d(const std::vector<double>& pred_d, const std::vector<double>& gt_d) {
    if (pred_d.size() != gt_d.size()) throw LengthMismatch();
    if (pred_d.empty()) throw EmptyBatch();
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_d.size(); ++i) {
        const double diff = pred_d[i] - gt_d[i];
        sum += diff * diff;
    }
    return sum / static_cast<double>(pred_d.size());
}

NormalErrorStats normal_error_stats(const std::vector<std::pair<Plane, Plane>>& pairs) {
    if (pairs.empty()) throw EmptyInput();
    std::vector<double> angles;
    angles.reserve(pairs.size());
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& [pred, gt] : pairs) {
        // 2 asin(|a - b| / 2) equals acos(a . b) for unit vectors but stays
        // exact at 0 for identical normals, where the dot product's rounding
        // would smear acos into ~1e-7 degrees.
        const double chord = 0.5 * (pred.normal() - gt.normal()).norm();
        const double deg = 2.0 * std::asin(std::min(chord, 1.0)) * 180.0 / M_PI;
        angles.push_back(deg);
        sum += deg;
        sum_sq += deg * deg;
    }
    NormalErrorStats s;
    const double m = static_cast<double>(angles.size());
    s.mean = sum / m;
    s.median = lower_middle_median(angles);
    s.rms = std::sqrt(sum_sq / m);
    s.pct_below_11_25 = pct_below(angles, 11.25);
    s.pct_below_22_5 = pct_below(angles, 22.5);
    s.pct_below_30 = pct_below(angles, 30.0);
    return s;
}

PlaneLocationStats plane_location_stats(const std::vector<PlaneLocationItem>& items,
                                        int stride) {
    if (items.empty()) throw EmptyInput();
    if (stride < 1) throw ConfigError("plane_location_stats: stride must be >= 1");

    PlaneLocationStats s;
    std::vector<double> deltas;
    for (const PlaneLocationItem& item : items) {
        item.K.validate();
        if (!item.bbox.valid())
            throw InvariantViolation("plane_location_stats: invalid bounding box");

        const int px0 = std::max(0, static_cast<int>(std::ceil(item.bbox.x0 - 0.5)));
        const int px1 =
            std::min(item.K.width - 1, static_cast<int>(std::floor(item.bbox.x1 - 0.5)));
        const int py0 = std::max(0, static_cast<int>(std::ceil(item.bbox.y0 - 0.5)));
        const int py1 =
            std::min(item.K.height - 1, static_cast<int>(std::floor(item.bbox.y1 - 0.5)));

        double sum = 0.0;
        long count = 0;
        for (int py = py0; py <= py1; py += stride)
            for (int px = px0; px <= px1; px += stride) {
                Vec3 x;
                try {
                    x = backproject_pixel(Vec2(px + 0.5, py + 0.5), item.K, item.pred);
                } catch (const RayParallel&) {
                    continue;
                } catch (const BehindCamera&) {
                    continue;
                }
                sum += std::abs(item.gt.signed_distance(x));
                ++count;
            }
        if (count == 0) {
            ++s.dropped;
            continue;
        }
        deltas.push_back(sum / static_cast<double>(count));
        ++s.counted;
    }
    if (deltas.empty()) throw EmptyInput("plane_location_stats: every instance was dropped");

    s.mean = std::accumulate(deltas.begin(), deltas.end(), 0.0) /
             static_cast<double>(deltas.size());
    s.median = lower_middle_median(deltas);
    s.pct_below_0_2 = pct_below(deltas, 0.2);
    s.pct_below_0_5 = pct_below(deltas, 0.5);
    s.pct_below_1_0 = pct_below(deltas, 1.0);
    return s;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    if (n == 0) return {};
    if (n > m) throw InvariantViolation("solve_assignment: needs rows() <= cols()");

    const double inf = std::numeric_limits<double>::infinity();
    // Potential-based shortest augmenting paths, 1-based over columns.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = match[static_cast<std::size_t>(j0)];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                                   v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (match[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> result(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (match[static_cast<std::size_t>(j)] > 0)
            result[static_cast<std::size_t>(match[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return result;
}

double pixel_error_2d(const LabelImage& pred, const LabelImage& gt) {
    if (pred.width != gt.width || pred.height != gt.height) throw DimensionMismatch();
    const std::size_t total = pred.labels.size();
    if (total == 0 || gt.labels.size() != total) throw DimensionMismatch();

    constexpr int kClasses = 5;
    int instances = 0;
    for (const int l : pred.labels) {
        if (l < 0) throw InvariantViolation("pixel_error_2d: negative prediction label");
        instances = std::max(instances, l);
    }
    for (const int l : gt.labels)
        if (l < 0 || l > kClasses)
            throw InvariantViolation("pixel_error_2d: ground-truth label outside 0..5");

    std::vector<int> mapping(static_cast<std::size_t>(instances) + 1, 0);
    if (instances > 0) {
        Eigen::MatrixXd inter = Eigen::MatrixXd::Zero(instances, kClasses + 1);
        Eigen::VectorXd size = Eigen::VectorXd::Zero(instances);
        for (std::size_t k = 0; k < total; ++k) {
            const int pl = pred.labels[k];
            if (pl == 0) continue;
            size[pl - 1] += 1.0;
            inter(pl - 1, gt.labels[k]) += 1.0;
        }
        const int cols = std::max(kClasses, instances);
        Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(instances, cols);
        for (int i = 0; i < instances; ++i)
            for (int c = 0; c < kClasses; ++c) cost(i, c) = size[i] - inter(i, c + 1);
        const std::vector<int> assign = solve_assignment(cost);
        for (int i = 0; i < instances; ++i)
            mapping[static_cast<std::size_t>(i) + 1] = assign[static_cast<std::size_t>(i)] < kClasses
                                                           ? assign[static_cast<std::size_t>(i)] + 1
                                                           : 0;
    }

    std::size_t wrong = 0;
    for (std::size_t k = 0; k < total; ++k)
        if (mapping[static_cast<std::size_t>(pred.labels[k])] != gt.labels[k]) ++wrong;
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(total);
}

DetectionAp detection_ap(const std::vector<ImageDetections>& images, double iou_min) {
    if (!(iou_min > 0.0 && iou_min <= 1.0)) throw ConfigError("iou_min must be in (0, 1]");

    std::vector<std::vector<ScoredBox>> pw, pf;
    std::vector<std::vector<BBox>> gw, gf;
    for (const ImageDetections& im : images) {
        pw.push_back(im.pred_wall);
        pf.push_back(im.pred_floor_ceiling);
        gw.push_back(im.gt_wall);
        gf.push_back(im.gt_floor_ceiling);
    }

    DetectionAp out;
    out.wall = class_ap(pw, gw, iou_min);
    out.floor_ceiling = class_ap(pf, gf, iou_min);
    if (out.wall && out.floor_ceiling)
        out.mean = 0.5 * (*out.wall + *out.floor_ceiling);
    else if (out.wall)
        out.mean = out.wall;
    else if (out.floor_ceiling)
        out.mean = out.floor_ceiling;
    return out;
}

std::vector<MatchedPair> match_by_bbox(const std::vector<Measurement>& preds,
                                       const std::vector<Measurement>& gts, double iou_min) {
    std::vector<int> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&preds](int a, int b) {
        return preds[static_cast<std::size_t>(a)].score > preds[static_cast<std::size_t>(b)].score;
    });

    std::vector<char> claimed(gts.size(), 0);
    std::vector<MatchedPair> pairs;
    for (const int pi : order) {
        const Measurement& p = preds[static_cast<std::size_t>(pi)];
        double best_iou = 0.0;
        int best = -1;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (claimed[gi]) continue;
            const Measurement& g = gts[gi];
            if (g.frame_id != p.frame_id || g.klass != p.klass) continue;
            const double iou = bbox_iou(p.bbox, g.bbox);
            if (iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(gi);
            }
        }
        if (best >= 0 && best_iou >= iou_min) {
            claimed[static_cast<std::size_t>(best)] = 1;
            pairs.push_back(MatchedPair{pi, best});
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.pred < b.pred; });
    return pairs;
}

std::string format_plane_metric_tables(const NormalErrorStats& n, const PlaneLocationStats& d) {
    std::string out = two_row_table(
        "plane normals (deg) ", {"mean", "median", "rms", "11.25", "22.5", "30"},
        {n.mean, n.median, n.rms, n.pct_below_11_25, n.pct_below_22_5, n.pct_below_30});
    out += two_row_table("plane location (m)  ", {"mean", "median", "0.2", "0.5", "1.0"},
                         {d.mean, d.median, d.pct_below_0_2, d.pct_below_0_5, d.pct_below_1_0});
    return out;
}

std::string plane_metrics_json(const NormalErrorStats& n, const PlaneLocationStats& d) {
    nlohmann::ordered_json j;
    j["normal_error_deg"] = {{"mean", n.mean},
                             {"median", n.median},
                             {"rms", n.rms},
                             {"pct_below_11_25", n.pct_below_11_25},
                             {"pct_below_22_5", n.pct_below_22_5},
                             {"pct_below_30", n.pct_below_30}};
    j["plane_location_m"] = {{"mean", d.mean},
                             {"median", d.median},
                             {"pct_below_0_2", d.pct_below_0_2},
                             {"pct_below_0_5", d.pct_below_0_5},
                             {"pct_below_1_0", d.pct_below_1_0},
                             {"counted", d.counted},
                             {"dropped", d.dropped}};
    return j.dump(2);
}

} // namespace roomfuse
