#include "roomfuse/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace roomfuse {

PlaneFeature make_feature(const Plane& plane, double s_n) {
    if (!(s_n > 0.0))
        throw ConfigError("feature normal scale must be positive");
    Vec4 v;
    v << s_n * plane.normal(), plane.offset();
    return PlaneFeature{v};
}

std::vector<PlaneFeature> make_features(const std::vector<GlobalMeasurement>& measurements,
                                        double s_n) {
    std::vector<PlaneFeature> out;
    out.reserve(measurements.size());
    for (const GlobalMeasurement& g : measurements)
        out.push_back(make_feature(g.plane_world, s_n));
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Hash of the feature's value bits mixed with the run seed. Everything the
// fit does with ordering derives from values, never from list positions, so
// permuting the input cannot change the outcome.
std::uint64_t feature_hash(const Vec4& v, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ull);
    for (int d = 0; d < 4; ++d) {
        const double x = v[d] == 0.0 ? 0.0 : v[d]; // fold -0.0 into +0.0
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        h = splitmix64(h ^ bits);
    }
    return h;
}

bool lex_less(const Vec4& a, const Vec4& b) {
    for (int d = 0; d < 4; ++d) {
        if (a[d] != b[d])
            return a[d] < b[d];
    }
    return false;
}

// Indices sorted by feature value; the fixed reduction order behind
// bit-exact permutation invariance.
std::vector<int> value_order(const std::vector<PlaneFeature>& f) {
    std::vector<int> ord(f.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return lex_less(f[a].vector, f[b].vector); });
    return ord;
}

// Farthest-point seeding. The first seed is the feature with the smallest
// value hash; each next seed maximizes the distance to the chosen set, ties
// resolved by hash then value. Stops early once only duplicates remain.
std::vector<int> pick_seeds(const std::vector<PlaneFeature>& f, const std::vector<int>& ord,
                            int k_max, std::uint64_t seed) {
    const int n = static_cast<int>(f.size());
    std::vector<std::uint64_t> hash(n);
    for (int i = 0; i < n; ++i)
        hash[i] = feature_hash(f[i].vector, seed);

    auto prefer = [&](int a, int b) { // is a a better tie-break choice than b
        if (hash[a] != hash[b])
            return hash[a] < hash[b];
        return lex_less(f[a].vector, f[b].vector);
    };

    int first = ord[0];
    for (int idx : ord) {
        if (prefer(idx, first))
            first = idx;
    }
    std::vector<int> seeds = {first};

    std::vector<double> dist2(n);
    for (int i = 0; i < n; ++i)
        dist2[i] = (f[i].vector - f[first].vector).squaredNorm();

    while (static_cast<int>(seeds.size()) < k_max) {
        int best = -1;
        for (int idx : ord) {
            if (best < 0 || dist2[idx] > dist2[best] ||
                (dist2[idx] == dist2[best] && prefer(idx, best)))
                best = idx;
        }
        if (dist2[best] <= 1e-24)
            break; // remaining features duplicate an existing seed
        seeds.push_back(best);
        for (int i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], (f[i].vector - f[best].vector).squaredNorm());
    }
    return seeds;
}

struct Component {
    double weight;
    Vec4 mean;
    Vec4 var; // diagonal covariance
};

double log_gaussian_diag(const Vec4& x, const Vec4& mean, const Vec4& var) {
    double acc = -2.0 * std::log(2.0 * M_PI); // -(D/2) log(2 pi), D = 4
    for (int d = 0; d < 4; ++d) {
        const double r = x[d] - mean[d];
        acc -= 0.5 * (std::log(var[d]) + r * r / var[d]);
    }
    return acc;
}

// Fold components whose extracted planes coincide into the heaviest of them.
// Coincidence includes the antipodal pairing (n, d) against (-n, -d): the
// canonical form (d >= 0) cuts the noisy measurements of a plane through the
// origin in half, and the halves converge as mirror components whose offsets
// are both biased away from zero. A merged component is therefore refit from
// its member features, reflecting members that oppose the representative's
// orientation, which cancels that bias instead of keeping it.
// Heaviest-first greedy, value-based tie-breaks throughout.
void merge_coincident(std::vector<PlaneCluster>& clusters,
                      const std::vector<PlaneFeature>& features, const MixtureConfig& config) {
    if (!(config.merge_angle_deg > 0.0) || clusters.size() < 2)
        return;
    const double cos_merge = std::cos(config.merge_angle_deg * M_PI / 180.0);

    std::vector<int> order(clusters.size());
    std::iota(order.begin(), order.end(), 0);
    auto heavier = [&](int a, int b) {
        if (clusters[a].weight != clusters[b].weight)
            return clusters[a].weight > clusters[b].weight;
        return lex_less(clusters[a].mean, clusters[b].mean);
    };
    std::sort(order.begin(), order.end(), heavier);

    auto refit = [&](PlaneCluster& rep) {
        if (rep.members.empty())
            return;
        std::sort(rep.members.begin(), rep.members.end());
        const Vec3 ref = rep.mean.head<3>();
        auto oriented = [&](int m) {
            const Vec4& x = features[m].vector;
            return x.head<3>().dot(ref) < 0.0 ? Vec4(-x) : x;
        };
        Vec4 mean = Vec4::Zero();
        for (int m : rep.members)
            mean += oriented(m);
        mean /= static_cast<double>(rep.members.size());
        Vec4 var = Vec4::Zero();
        for (int m : rep.members)
            var += (oriented(m) - mean).cwiseAbs2();
        var = (var / static_cast<double>(rep.members.size())).cwiseMax(config.covariance_floor);
        rep.mean = mean;
        rep.covariance_diag = var;
        const Vec3 n_part = mean.head<3>() / config.s_n;
        const double norm = n_part.norm();
        if (norm < 1e-6)
            throw DegeneratePlane("merged cluster mean has a vanishing normal part");
        const Vec3 n_hat = n_part / norm;
        rep.plane = canonicalize(Vec4(n_hat.x(), n_hat.y(), n_hat.z(), mean[3]));
    };

    std::vector<PlaneCluster> merged;
    for (int idx : order) {
        PlaneCluster& c = clusters[idx];
        bool absorbed = false;
        for (PlaneCluster& rep : merged) {
            const double cosine = rep.plane.normal().dot(c.plane.normal());
            const double d_rep = rep.plane.offset();
            const double d_c = c.plane.offset();
            const bool direct = cosine >= cos_merge &&
                                std::abs(d_rep - d_c) <= config.merge_offset_m;
            const bool mirror = -cosine >= cos_merge &&
                                std::abs(d_rep + d_c) <= config.merge_offset_m;
            if (direct || mirror) {
                rep.weight += c.weight;
                rep.members.insert(rep.members.end(), c.members.begin(), c.members.end());
                refit(rep);
                absorbed = true;
                break;
            }
        }
        if (!absorbed)
            merged.push_back(std::move(c));
    }
    for (PlaneCluster& c : merged)
        std::sort(c.members.begin(), c.members.end());
    std::sort(merged.begin(), merged.end(), [](const PlaneCluster& a, const PlaneCluster& b) {
        if (a.weight != b.weight)
            return a.weight > b.weight;
        return lex_less(a.mean, b.mean);
    });
    clusters = std::move(merged);
}

} // namespace

MixtureModel fit_mixture(const std::vector<PlaneFeature>& features, int k_max,
                         std::uint64_t seed, const MixtureConfig& config) {
    const int n = static_cast<int>(features.size());
    if (n < 2)
        throw TooFewSamples();
    if (k_max < 1)
        throw ConfigError("k_max must be at least 1");
    if (!(config.covariance_floor > 0.0))
        throw ConfigError("covariance floor must be positive");

    const std::vector<int> ord = value_order(features);

    // Global per-dimension variance seeds the initial covariances.
    Vec4 global_mean = Vec4::Zero();
    for (int idx : ord)
        global_mean += features[idx].vector;
    global_mean /= n;
    Vec4 global_var = Vec4::Zero();
    for (int idx : ord)
        global_var += (features[idx].vector - global_mean).cwiseAbs2();
    global_var = (global_var / n).cwiseMax(config.covariance_floor);

    const std::vector<int> seeds = pick_seeds(features, ord, k_max, seed);
    std::vector<Component> comps;
    comps.reserve(seeds.size());
    for (int s : seeds)
        comps.push_back(Component{1.0 / seeds.size(), features[s].vector, global_var});

    // Each component must hold at least this much expected count to survive
    // the Dirichlet-adjusted weight update.
    const double prune = 1.0 - config.alpha0;

    MixtureModel model;
    model.seed = seed;
    model.objective_trace.emplace_back();

    std::vector<double> resp; // row-major n x K, rows in value order
    double prev_objective = -std::numeric_limits<double>::infinity();

    int iter = 0;
    while (iter < config.max_iterations) {
        ++iter;
        const int K = static_cast<int>(comps.size());
        resp.assign(static_cast<std::size_t>(n) * K, 0.0);

        // E-step and data log-likelihood, features visited in value order.
        double ll = 0.0;
        std::vector<double> logp(K);
        for (int row = 0; row < n; ++row) {
            const Vec4& x = features[ord[row]].vector;
            double m = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                logp[k] = std::log(comps[k].weight) + log_gaussian_diag(x, comps[k].mean, comps[k].var);
                m = std::max(m, logp[k]);
            }
            double sum = 0.0;
            for (int k = 0; k < K; ++k)
                sum += std::exp(logp[k] - m);
            const double lse = m + std::log(sum);
            ll += lse;
            for (int k = 0; k < K; ++k)
                resp[static_cast<std::size_t>(row) * K + k] = std::exp(logp[k] - lse);
        }

        // Penalized objective: data term plus the Dirichlet weight prior.
        double objective = ll;
        for (const Component& c : comps)
            objective += (config.alpha0 - 1.0) * std::log(c.weight);
        model.objective_trace.back().push_back(objective);

        // M-step: expected counts, then the prior-adjusted weight update.
        std::vector<double> Nk(K, 0.0);
        std::vector<Vec4> sum_x(K, Vec4::Zero());
        for (int row = 0; row < n; ++row) {
            const Vec4& x = features[ord[row]].vector;
            for (int k = 0; k < K; ++k) {
                const double r = resp[static_cast<std::size_t>(row) * K + k];
                Nk[k] += r;
                sum_x[k] += r * x;
            }
        }

        std::vector<double> raw(K);
        double raw_sum = 0.0;
        for (int k = 0; k < K; ++k) {
            raw[k] = std::max(0.0, Nk[k] - prune);
            raw_sum += raw[k];
        }
        std::vector<bool> alive(K, true);
        if (raw_sum <= 0.0) {
            // Degenerate: keep only the best-supported component.
            int best = 0;
            for (int k = 1; k < K; ++k) {
                if (Nk[k] > Nk[best])
                    best = k;
            }
            for (int k = 0; k < K; ++k)
                alive[k] = (k == best);
            raw[best] = 1.0;
            raw_sum = 1.0;
        } else {
            for (int k = 0; k < K; ++k)
                alive[k] = raw[k] > 0.0;
        }

        // Mean / variance updates for the survivors.
        std::vector<Component> next;
        std::vector<int> survivor_col;
        next.reserve(K);
        for (int k = 0; k < K; ++k) {
            if (!alive[k])
                continue;
            Component c;
            c.weight = raw[k] / raw_sum;
            c.mean = sum_x[k] / Nk[k];
            c.var = Vec4::Zero();
            next.push_back(c);
            survivor_col.push_back(k);
        }
        for (int row = 0; row < n; ++row) {
            const Vec4& x = features[ord[row]].vector;
            for (std::size_t j = 0; j < next.size(); ++j) {
                const double r = resp[static_cast<std::size_t>(row) * K + survivor_col[j]];
                next[j].var += r * (x - next[j].mean).cwiseAbs2();
            }
        }
        for (std::size_t j = 0; j < next.size(); ++j)
            next[j].var = (next[j].var / Nk[survivor_col[j]]).cwiseMax(config.covariance_floor);

        const bool annihilated = next.size() < comps.size();
        comps = std::move(next);

        if (annihilated) {
            // The model changed dimension; the objective is not comparable
            // across the break, so start a fresh monotone segment.
            model.objective_trace.emplace_back();
            prev_objective = -std::numeric_limits<double>::infinity();
            continue;
        }
        if (objective - prev_objective < config.convergence_tol &&
            std::isfinite(prev_objective))
            break;
        prev_objective = objective;
    }
    model.iterations = iter;

    // Final pass with the converged parameters: reported log-likelihood and
    // hard assignments.
    const int K = static_cast<int>(comps.size());
    std::vector<std::vector<int>> members(K);
    double ll = 0.0;
    std::vector<double> logp(K);
    for (int row = 0; row < n; ++row) {
        const Vec4& x = features[ord[row]].vector;
        double m = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            logp[k] = std::log(comps[k].weight) + log_gaussian_diag(x, comps[k].mean, comps[k].var);
            m = std::max(m, logp[k]);
        }
        double sum = 0.0;
        for (int k = 0; k < K; ++k)
            sum += std::exp(logp[k] - m);
        ll += m + std::log(sum);
        int best = 0;
        for (int k = 1; k < K; ++k) {
            if (logp[k] > logp[best])
                best = k;
        }
        members[best].push_back(ord[row]);
    }
    model.log_likelihood = ll;

    model.clusters.reserve(K);
    for (int k = 0; k < K; ++k) {
        PlaneCluster c;
        c.weight = comps[k].weight;
        c.mean = comps[k].mean;
        c.covariance_diag = comps[k].var;
        c.members = std::move(members[k]);
        std::sort(c.members.begin(), c.members.end());
        c.s_n = config.s_n;
        // Unit-normalize the normal part only; the offset stays as learned.
        const Vec3 n_part = comps[k].mean.head<3>() / config.s_n;
        const double norm = n_part.norm();
        if (norm < 1e-6)
            throw DegeneratePlane("cluster mean has a vanishing normal part");
        const Vec3 n_hat = n_part / norm;
        c.plane = canonicalize(Vec4(n_hat.x(), n_hat.y(), n_hat.z(), comps[k].mean[3]));
        model.clusters.push_back(std::move(c));
    }

    merge_coincident(model.clusters, features, config);
    return model;
}

std::vector<PlaneCluster> select_room_planes(const MixtureModel& model, double w_min) {
    std::vector<int> order(model.clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return model.clusters[a].weight > model.clusters[b].weight;
    });
    std::vector<PlaneCluster> out;
    for (int idx : order) {
        if (model.clusters[idx].weight >= w_min)
            out.push_back(model.clusters[idx]);
    }
    if (out.empty())
        throw NoPlanesSelected();
    return out;
}

std::vector<int> rank_voters(const PlaneCluster& cluster,
                             const std::vector<GlobalMeasurement>& measurements, int n) {
    std::vector<std::pair<double, int>> scored;
    scored.reserve(cluster.members.size());
    for (int idx : cluster.members) {
        if (idx < 0 || idx >= static_cast<int>(measurements.size()))
            throw InvariantViolation("cluster member index out of range");
        const Vec4 x = make_feature(measurements[idx].plane_world, cluster.s_n).vector;
        scored.emplace_back(log_gaussian_diag(x, cluster.mean, cluster.covariance_diag), idx);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    const int take = std::max(0, std::min<int>(n, static_cast<int>(scored.size())));
    std::vector<int> out;
    out.reserve(take);
    for (int i = 0; i < take; ++i)
        out.push_back(scored[i].second);
    return out;
}

std::pair<std::vector<GlobalMeasurement>, std::vector<GlobalMeasurement>>
split_by_class(const std::vector<GlobalMeasurement>& measurements) {
    std::pair<std::vector<GlobalMeasurement>, std::vector<GlobalMeasurement>> out;
    for (const GlobalMeasurement& g : measurements) {
        if (g.source.klass == PlaneClass::Wall)
            out.first.push_back(g);
        else
            out.second.push_back(g);
    }
    return out;
}

void save_mixture(const MixtureModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write mixture file " + path.string());
    for (const PlaneCluster& c : model.clusters) {
        nlohmann::ordered_json j;
        j["weight"] = c.weight;
        j["mean"] = {c.mean[0], c.mean[1], c.mean[2], c.mean[3]};
        j["cov"] = {c.covariance_diag[0], c.covariance_diag[1], c.covariance_diag[2],
                    c.covariance_diag[3]};
        j["count"] = c.members.size();
        out << j.dump() << '\n';
    }
}

} // namespace roomfuse
