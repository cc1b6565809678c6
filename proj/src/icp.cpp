#include "edgescan/icp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace edgescan {

void ICPParams::validate() const {
    if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
    if (!(convergence_tol > 0.0)) throw ValidationError("convergence_tol must be positive");
    if (!(outlier_reject_factor > 0.0)) throw ValidationError("outlier_reject_factor must be positive");
    if (min_points < 3) throw ValidationError("min_points must be at least 3");
}

namespace {

double median_of(std::vector<double> values) {
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    if (values.size() % 2 == 1) return values[mid];
    const double hi = values[mid];
    const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

ICPResult icp_register(const PointCloud& scan, const PointCloud& model, const RigidTransform& init,
                       const ICPParams& params) {
    params.validate();
    if (scan.size() < static_cast<std::size_t>(params.min_points)) {
        throw InsufficientPoints("icp_register: scan has " + std::to_string(scan.size()) +
                                 " points, need " + std::to_string(params.min_points));
    }
    if (model.size() < scan.size()) {
        throw std::invalid_argument("icp_register: model cloud must be at least as dense as the scan");
    }

    ICPResult result;
    result.model_to_base = init;
    result.model_to_base.rotation = orthonormalized(init.rotation);

    const NNIndex index(model);

    // Median sampling step of the ordered model cloud. Residuals within a
    // few steps of the curve are in-family while ICP is still converging,
    // so the rejection cutoff never drops below this floor.
    std::vector<double> steps(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        steps[i] = (model.points[(i + 1) % model.size()] - model.points[i]).norm();
    }
    const double rejection_step = std::max(median_of(steps), 1e-12);
    const double rejection_floor = 10.0 * rejection_step;

    // The model cloud is an ordered closed border sampling; correspond to
    // the nearest point ON the polyline through it. Plain nearest-sample
    // matching stalls in local minima half a sample spacing deep, far
    // above the exact-recovery tolerance. The segment window around the
    // nearest sample widens with the query distance so the projection
    // stays the true curve minimizer during early iterations.
    const auto project_to_model = [&](const Vec3& q) -> Vec3 {
        const std::size_t n = model.size();
        const std::size_t hit = index.nearest_index(q);
        Vec3 best = model.points[hit];
        double best_d2 = (best - q).squaredNorm();
        const std::size_t window = std::min(
            n, static_cast<std::size_t>(3.0 * std::sqrt(best_d2) / rejection_step + 4.0));
        for (std::size_t k = 0; k <= 2 * window; ++k) {
            const std::size_t a = (hit + n - window + k) % n;
            const Vec3& pa = model.points[a];
            const Vec3 ab = model.points[(a + 1) % n] - pa;
            const double len2 = ab.squaredNorm();
            if (len2 <= 0.0) continue;
            const double u = std::clamp((q - pa).dot(ab) / len2, 0.0, 1.0);
            const Vec3 candidate = pa + u * ab;
            const double d2 = (candidate - q).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = candidate;
            }
        }
        return best;
    };

    const auto correspondence_rms = [&](const RigidTransform& t, std::vector<Vec3>& src,
                                        std::vector<Vec3>& dst) -> double {
        // Match in model frame: rigid transforms preserve the distances, so
        // matching T^-1 s against the model equals matching s against the
        // transformed model.
        const RigidTransform t_inv = invert(t);
        src.clear();
        dst.clear();
        std::vector<double> dists(scan.size());
        std::vector<Vec3> match(scan.size());
        for (std::size_t i = 0; i < scan.size(); ++i) {
            const Vec3 q = t_inv.apply(scan.points[i]);
            match[i] = project_to_model(q);
            dists[i] = (match[i] - q).norm();
        }

        std::vector<bool> accepted(scan.size(), true);
        if (scan.size() >= 6) {  // with fewer points every one is load-bearing
            const double med = median_of(dists);
            if (med > 0.0) {
                const double cutoff = std::max(params.outlier_reject_factor * med, rejection_floor);
                std::size_t kept = 0;
                for (std::size_t i = 0; i < scan.size(); ++i) {
                    accepted[i] = dists[i] <= cutoff;
                    if (accepted[i]) ++kept;
                }
                if (kept < static_cast<std::size_t>(params.min_points)) {
                    std::fill(accepted.begin(), accepted.end(), true);
                }
            }
        }

        double sum_sq = 0.0;
        for (std::size_t i = 0; i < scan.size(); ++i) {
            if (!accepted[i]) continue;
            src.push_back(match[i]);
            dst.push_back(scan.points[i]);
            sum_sq += dists[i] * dists[i];
        }
        return std::sqrt(sum_sq / static_cast<double>(src.size()));
    };

    std::vector<Vec3> src, dst;

    if (points_collinear(scan.points, 1e-9)) {
        result.degenerate = true;
        result.rms = correspondence_rms(result.model_to_base, src, dst);
        return result;
    }

    double prev_rms = correspondence_rms(result.model_to_base, src, dst);
    result.rms = prev_rms;

    // Outlier re-acceptance can bump the raw residual for an iteration;
    // the running best is what the caller gets, and the search stops once
    // it stays unbeaten for a few rounds.
    int stale = 0;
    for (int iter = 1; iter <= params.max_iterations; ++iter) {
        RigidTransform fitted;
        try {
            fitted = best_fit_transform(std::span<const Vec3>(src), std::span<const Vec3>(dst));
        } catch (const DegenerateGeometry&) {
            result.degenerate = true;
            break;
        }

        const double rms = correspondence_rms(fitted, src, dst);
        result.iterations = iter;

        if (rms < result.rms - 1e-15) {
            result.model_to_base = fitted;
            result.rms = rms;
            stale = 0;
        } else {
            ++stale;
        }
        result.rms_history.push_back(result.rms);

        if (rms < params.convergence_tol || std::abs(prev_rms - rms) < params.convergence_tol ||
            stale >= 5) {
            result.converged = true;
            break;
        }
        prev_rms = rms;
    }
    // Leave the reported residual consistent with the returned estimate.
    result.rms = correspondence_rms(result.model_to_base, src, dst);
    return result;
}

GlassModel transform_model(const GlassModel& model, const RigidTransform& t) {
    std::vector<Vec3> border;
    border.reserve(model.border().size());
    for (const Vec3& v : model.border()) border.push_back(t.apply(v));

    std::vector<Triangle> surface;
    surface.reserve(model.surface().size());
    for (const Triangle& tri : model.surface()) {
        surface.push_back({t.apply(tri.a), t.apply(tri.b), t.apply(tri.c)});
    }
    return GlassModel(std::move(border), std::move(surface), model.thickness(),
                      model.bevel_radius(), model.material());
}

void save_icp_result_json(const ICPResult& result, const std::string& path) {
    nlohmann::json j;
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot[static_cast<std::size_t>(3 * r + c)] = result.model_to_base.rotation(r, c);
        }
    }
    j["rotation"] = rot;
    j["translation"] = {result.model_to_base.translation.x(), result.model_to_base.translation.y(),
                        result.model_to_base.translation.z()};
    j["rms"] = result.rms;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["degenerate"] = result.degenerate;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write ICP result JSON: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace edgescan
