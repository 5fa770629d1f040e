#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "roomfuse/measurements.hpp"

namespace roomfuse {

/// Clustering feature for one measurement: (s_n * nx, s_n * ny, s_n * nz, d).
/// The scale s_n balances the unitless normal against the metric offset.
struct PlaneFeature {
    Vec4 vector;
};

PlaneFeature make_feature(const Plane& plane, double s_n = 1.0);

std::vector<PlaneFeature> make_features(const std::vector<GlobalMeasurement>& measurements,
                                        double s_n = 1.0);

/// One mixture component, with hard member assignments and the room plane
/// its mean encodes (normal part renormalized, then canonicalized).
struct PlaneCluster {
    double weight = 0.0;
    Vec4 mean = Vec4::Zero();
    Vec4 covariance_diag = Vec4::Zero();
    std::vector<int> members; // feature indices, ascending
    Plane plane;
    double s_n = 1.0;
};

struct MixtureModel {
    std::vector<PlaneCluster> clusters;
    double log_likelihood = 0.0; // final data log-likelihood
    int iterations = 0;
    std::uint64_t seed = 0;
    /// Penalized-objective trace, one monotone segment per stretch of EM
    /// between component annihilations.
    std::vector<std::vector<double>> objective_trace;
};

struct MixtureConfig {
    /// Dirichlet concentration on the weights. Values below 1 push redundant
    /// components toward zero weight; a component is annihilated outright
    /// when its expected count drops below 1 - alpha0.
    double alpha0 = 0.5;
    double covariance_floor = 1e-6;
    double convergence_tol = 1e-6; // stop when objective gain falls below this
    int max_iterations = 200;
    double s_n = 1.0;
    /// After EM, components whose extracted planes coincide within these
    /// bounds are folded into the heaviest of them. The angle-noise model is
    /// leptokurtic (half-normal rotation angle), so EM legitimately spends a
    /// wide low-weight component on the tail ring around each tight core;
    /// both describe one room plane. Set the angle to 0 to disable.
    double merge_angle_deg = 10.0;
    double merge_offset_m = 0.15;
};

/// Fit a diagonal-covariance Gaussian mixture with at most k_max components
/// by EM under a Dirichlet weight prior. Underpopulated components are
/// removed as their adjusted weight hits zero; at least one always survives.
/// Deterministic for a given seed, independent of input order up to
/// component relabeling (initialization and reductions are value-driven).
MixtureModel fit_mixture(const std::vector<PlaneFeature>& features, int k_max,
                         std::uint64_t seed, const MixtureConfig& config = {});

/// Clusters with weight >= w_min, heaviest first (ties by original index).
std::vector<PlaneCluster> select_room_planes(const MixtureModel& model, double w_min = 0.05);

/// The cluster's member measurements most likely under its Gaussian,
/// best first, at most n of them. Ties broken by measurement index.
std::vector<int> rank_voters(const PlaneCluster& cluster,
                             const std::vector<GlobalMeasurement>& measurements, int n = 100);

/// Partition by detection class, preserving relative order.
std::pair<std::vector<GlobalMeasurement>, std::vector<GlobalMeasurement>>
split_by_class(const std::vector<GlobalMeasurement>& measurements);

/// Debug dump: one JSON object per cluster (weight, mean, covariance,
/// member count), mirroring the measurement-file syntax.
void save_mixture(const MixtureModel& model, const std::filesystem::path& path);

} // namespace roomfuse
