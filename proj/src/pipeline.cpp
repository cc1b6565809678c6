#include "edgescan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>

namespace edgescan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(trial) for every trial, spread over the thread budget. Outputs
// must be written into per-trial slots so results stay schedule-independent.
void for_each_trial(int trials, const std::function<void(int)>& fn) {
    const int workers = std::min(thread_budget(), trials);
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int t = w; t < trials; t += workers) fn(t);
        });
    }
    for (std::thread& th : pool) th.join();
}

}  // namespace

int thread_budget() {
    if (const char* env = std::getenv("EDGESCAN_THREADS")) {
        const int v = std::atoi(env);
        return v <= 1 ? 1 : v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Arc positions of sharp border vertices (turn above ~15 degrees). Scan
// poses aimed near such a corner lose transversality: the laser plane
// runs almost parallel to the adjacent rim and can graze its bevel far
// from the intended edge point.
std::vector<double> sharp_corner_positions(const GlassModel& model) {
    std::vector<double> corners;
    double s = 0.0;
    const std::size_t n = model.segment_count();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 prev = (model.segment_start(i) - model.segment_start((i + n - 1) % n)).normalized();
        const Vec3 next = (model.segment_end(i) - model.segment_start(i)).normalized();
        if (prev.dot(next) < std::cos(0.26)) corners.push_back(s);
        s += model.segment_length(i);
    }
    return corners;
}

double nudge_from_corners(double s, double perimeter, const std::vector<double>& corners,
                          double margin) {
    for (const double c : corners) {
        double d = std::fmod(s - c + perimeter, perimeter);
        if (d > perimeter / 2.0) d -= perimeter;  // signed circular distance
        if (std::abs(d) < margin) {
            s = d >= 0.0 ? c + margin : c - margin;
            s = std::fmod(s + perimeter, perimeter);
        }
    }
    return s;
}

}  // namespace

ScanPlan generate_scan_poses(const GlassModel& model, const RigidTransform& coarse_pose, int n,
                             double incidence, double standoff) {
    if (n < 1) throw std::invalid_argument("generate_scan_poses: n must be positive");
    if (!(standoff > 0.0)) throw std::invalid_argument("generate_scan_poses: standoff must be positive");

    const std::vector<BorderFrame> frames = border_frames(model);
    const std::vector<double> corners = sharp_corner_positions(model);
    ScanPlan plan;
    plan.incidence_angle = incidence;
    plan.n = n;
    plan.poses.reserve(static_cast<std::size_t>(n));

    const double ci = std::cos(incidence);
    const double si = std::sin(incidence);
    for (int k = 0; k < n; ++k) {
        const double uniform =
            (static_cast<double>(k) + 0.5) * model.perimeter() / static_cast<double>(n);
        const double s = nudge_from_corners(uniform, model.perimeter(), corners, 0.025);
        const Vec3 target = coarse_pose.apply(model.edge_point_at(s));
        const BorderFrame& f = frames[model.segment_index_at(s)];
        const Vec3 up = coarse_pose.rotate(f.up);
        const Vec3 outward = coarse_pose.rotate(f.outward);
        const Vec3 tangent = coarse_pose.rotate(f.tangent);

        // Scanner outside the border looking down and inward.
        const Vec3 axis = -(ci * up + si * outward);  // optical axis, toward the target
        RigidTransform pose;
        pose.translation = target - standoff * axis;
        const Vec3 y = tangent;            // laser plane transverse to the border
        const Vec3 x = y.cross(axis);
        pose.rotation.col(0) = x;
        pose.rotation.col(1) = y;
        pose.rotation.col(2) = axis;
        plan.poses.push_back(pose);
    }
    return plan;
}

double Trajectory::path_length() const {
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < tooltip_poses.size(); ++i) {
        len += (tooltip_poses[i + 1].translation - tooltip_poses[i].translation).norm();
    }
    if (tooltip_poses.size() > 1) {
        len += (tooltip_poses.front().translation - tooltip_poses.back().translation).norm();
    }
    return len;
}

ErrorStats compute_stats_mm(const std::vector<double>& errors_m) {
    ErrorStats stats;
    stats.n = static_cast<int>(errors_m.size());
    if (errors_m.empty()) return stats;
    double sum = 0.0;
    double max = 0.0;
    for (const double e : errors_m) {
        sum += e;
        max = std::max(max, e);
    }
    const double mean = sum / static_cast<double>(errors_m.size());
    double sq = 0.0;
    for (const double e : errors_m) sq += (e - mean) * (e - mean);
    const double var = errors_m.size() > 1 ? sq / static_cast<double>(errors_m.size() - 1) : 0.0;
    stats.mean_mm = mean * 1000.0;
    stats.std_mm = std::sqrt(var) * 1000.0;
    stats.max_mm = max * 1000.0;
    return stats;
}

ICPResult register_border_points(const PointCloud& scan, const GlassModel& model,
                                 const RigidTransform& init, const ICPParams& params,
                                 double spacing) {
    return icp_register(scan, model.sample_border(spacing), init, params);
}

PoseEstimate estimate_pose(const Scene& scene, const ScanPlan& plan, const GlassModel& model,
                           const RigidTransform& coarse_pose, const ICPParams& params,
                           const ScannerSpec& spec, std::uint64_t seed, double spacing) {
    PoseEstimate out;

    const auto scan_start = Clock::now();
    out.bips = collect_bips(scene, plan.poses, spec, seed);
    out.scanning_seconds = seconds_since(scan_start);

    const auto icp_start = Clock::now();
    out.icp = register_border_points(out.bips.to_point_cloud(), model, coarse_pose, params, spacing);
    out.pose_estimation_seconds = seconds_since(icp_start);
    return out;
}

Vec3 nearest_on_model(const GlassModel& estimated, const Vec3& p) {
    double best_d2 = std::numeric_limits<double>::infinity();
    Vec3 best = estimated.border().front();
    for (std::size_t i = 0; i < estimated.segment_count(); ++i) {
        const Vec3 a = estimated.segment_start(i);
        const Vec3 b = estimated.segment_end(i);
        const Vec3 ab = b - a;
        const double len2 = ab.squaredNorm();
        const double u = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const Vec3 candidate = a + u * ab;
        const double d2 = (p - candidate).squaredNorm();
        if (d2 < best_d2) {  // strict: ties stay with the lower segment index
            best_d2 = d2;
            best = candidate;
        }
    }
    return best;
}

Trajectory plan_contour_path(const GlassModel& estimated, const Mat3& r_approach, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("plan_contour_path: spacing must be positive");
    Trajectory traj;
    traj.spacing = spacing;
    const PointCloud samples = estimated.sample_border(spacing);
    traj.tooltip_poses.reserve(samples.size());
    for (const Vec3& p : samples.points) {
        traj.tooltip_poses.push_back({r_approach, p});
    }
    return traj;
}

namespace {

// True border points and their reference joint states, computed once per
// experiment; IK chains from the previous solution for robustness.
struct ReferenceTouch {
    Vec3 point;
    JointState q_ref;
};

std::vector<ReferenceTouch> reference_touches(const ExperimentSetup& setup,
                                              const std::vector<Vec3>& points) {
    std::vector<ReferenceTouch> refs;
    refs.reserve(points.size());
    JointState seed = setup.ik_seed;
    for (const Vec3& p : points) {
        const RigidTransform target{setup.r_approach, p};
        const JointState q = solve_ik(setup.arm, setup.cal, target, seed);
        refs.push_back({p, q});
        seed = q;
    }
    return refs;
}

}  // namespace

Experiment1Result run_experiment_1(const ExperimentSetup& setup, int trials,
                                   std::uint64_t master_seed) {
    if (trials < 1) throw std::invalid_argument("run_experiment_1: trials must be positive");

    const auto run_variant = [&](const Scene& scene, std::uint64_t variant_tag) {
        const std::uint64_t variant_seed = derive_seed(master_seed, variant_tag);
        // q_ref touches the true edge point under each pose; noise-free, so
        // computed once per pose.
        std::vector<Vec3> targets;
        targets.reserve(setup.plan.poses.size());
        for (const RigidTransform& pose : setup.plan.poses) {
            targets.push_back(true_edge_point(scene, pose));
        }
        const std::vector<ReferenceTouch> refs = reference_touches(setup, targets);

        std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(trials));
        for_each_trial(trials, [&](int trial) {
            const std::uint64_t trial_seed = derive_seed(variant_seed, static_cast<std::uint64_t>(trial));
            auto& errors = per_trial[static_cast<std::size_t>(trial)];
            errors.reserve(setup.plan.poses.size());
            for (std::size_t k = 0; k < setup.plan.poses.size(); ++k) {
                const std::uint64_t seed = derive_seed(trial_seed, k);
                const ScanProfile profile = simulate_profile(scene, setup.plan.poses[k], setup.spec, seed);
                const BIP bip = extract_bip(profile, scene.ground(), setup.spec, static_cast<int>(k));
                const RigidTransform target{setup.r_approach, bip.point};
                const JointState q_actual = solve_ik(setup.arm, setup.cal, target, refs[k].q_ref);
                errors.push_back(localisation_error(setup.arm, q_actual, refs[k].q_ref, setup.cal));
            }
        });

        std::vector<double> errors;
        errors.reserve(static_cast<std::size_t>(trials) * setup.plan.poses.size());
        for (const auto& trial_errors : per_trial) {
            errors.insert(errors.end(), trial_errors.begin(), trial_errors.end());
        }
        return errors;
    };

    Experiment1Result result;
    result.glass_errors_m = run_variant(setup.scene, 0);
    const Scene opaque(setup.scene.glass(), setup.scene.glass_pose(), setup.scene.ground(),
                       setup.scene.background_distance(), /*opaque_stand_in=*/true);
    result.opaque_errors_m = run_variant(opaque, 1);
    result.glass = compute_stats_mm(result.glass_errors_m);
    result.opaque = compute_stats_mm(result.opaque_errors_m);
    return result;
}

Experiment2Result run_experiment_2(const ExperimentSetup& setup, int n_validation, int trials,
                                   std::uint64_t master_seed) {
    if (n_validation < 1) throw std::invalid_argument("run_experiment_2: n_validation must be positive");
    if (trials < 1) throw std::invalid_argument("run_experiment_2: trials must be positive");

    // Validation points are uniformly spaced by arc length on the true-posed border.
    const GlassModel& model = setup.scene.glass();
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(n_validation));
    for (int j = 0; j < n_validation; ++j) {
        const double s =
            (static_cast<double>(j) + 0.5) * model.perimeter() / static_cast<double>(n_validation);
        points.push_back(setup.scene.glass_pose().apply(model.edge_point_at(s)));
    }
    const std::vector<ReferenceTouch> refs = reference_touches(setup, points);

    struct TrialOutcome {
        std::vector<double> errors;
        double scanning = 0.0, pose_estimation = 0.0, path_planning = 0.0, execution = 0.0;
    };
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));

    for_each_trial(trials, [&](int trial) {
        TrialOutcome& out = outcomes[static_cast<std::size_t>(trial)];
        const std::uint64_t trial_seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial));

        const PoseEstimate estimate =
            estimate_pose(setup.scene, setup.plan, model, setup.coarse_pose, setup.params, setup.spec,
                          trial_seed, setup.registration_spacing);
        out.scanning = estimate.scanning_seconds;
        out.pose_estimation = estimate.pose_estimation_seconds;

        const GlassModel estimated = transform_model(model, estimate.icp.model_to_base);

        const auto path_start = Clock::now();
        const Trajectory traj = plan_contour_path(estimated, setup.r_approach, setup.contour_spacing);
        out.path_planning = seconds_since(path_start);
        out.execution = traj.path_length() / setup.tooltip_speed;

        out.errors.reserve(refs.size());
        for (const ReferenceTouch& ref : refs) {
            const Vec3 tooltip_ref = tooltip_pose(setup.arm, ref.q_ref, setup.cal).translation;
            const Vec3 p_near = nearest_on_model(estimated, tooltip_ref);
            const RigidTransform target{setup.r_approach, p_near};
            const JointState q_touch = solve_ik(setup.arm, setup.cal, target, ref.q_ref);
            out.errors.push_back(localisation_error(setup.arm, q_touch, ref.q_ref, setup.cal));
        }
    });

    Experiment2Result result;
    for (const TrialOutcome& out : outcomes) {
        result.errors_m.insert(result.errors_m.end(), out.errors.begin(), out.errors.end());
        result.timing.scanning_s += out.scanning;
        result.timing.pose_estimation_s += out.pose_estimation;
        result.timing.path_planning_s += out.path_planning;
        result.timing.execution_s += out.execution;
    }
    const double inv = 1.0 / static_cast<double>(trials);
    result.timing.scanning_s *= inv;
    result.timing.pose_estimation_s *= inv;
    result.timing.path_planning_s *= inv;
    result.timing.execution_s *= inv;
    result.stats = compute_stats_mm(result.errors_m);
    return result;
}

}  // namespace edgescan
