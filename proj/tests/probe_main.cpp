// Scratch probe for simulator behavior; not part of the test suite.
#include <chrono>
#include <cstdio>

#include "edgescan/config.hpp"

using namespace edgescan;

int main() {
    const RunConfig cfg = config_from_json(nlohmann::json::object());
    const ExperimentSetup setup = cfg.experiment_setup();

    // Pose estimate quality, default noise.
    const GlassModel& model = setup.scene.glass();
    {
        const auto t0 = std::chrono::steady_clock::now();
        const PoseEstimate est = estimate_pose(setup.scene, setup.plan, model, setup.coarse_pose,
                                               setup.params, setup.spec, 42, 1e-3);
        const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        printf("estimate: converged=%d degenerate=%d iters=%d rms=%.6f mm skipped=%zu\n",
               est.icp.converged, est.icp.degenerate, est.icp.iterations, est.icp.rms * 1000,
               est.bips.skipped_poses.size());
        printf("  scan=%.3f s icp=%.3f s total=%.3f s\n", est.scanning_seconds,
               est.pose_estimation_seconds, el);
        // Border-point error vs truth
        double maxe = 0.0;
        for (const Vec3& v : model.border()) {
            const Vec3 a = est.icp.model_to_base.apply(v);
            const Vec3 b = setup.scene.glass_pose().apply(v);
            maxe = std::max(maxe, (a - b).norm());
        }
        printf("  max border-point pose error = %.4f mm\n", maxe * 1000);
    }

    // IK sanity for validation touches.
    try {
        const Vec3 p = setup.scene.glass_pose().apply(model.edge_point_at(0.1));
        const JointState q = solve_ik(setup.arm, setup.cal, {setup.r_approach, p}, setup.ik_seed);
        const RigidTransform reached = tooltip_pose(setup.arm, q, setup.cal);
        printf("IK ok, residual %.2e m\n", (reached.translation - p).norm());
    } catch (const Error& e) {
        printf("IK FAILED: %s\n", e.what());
    }

    // Mini experiment 2.
    {
        const auto t0 = std::chrono::steady_clock::now();
        const Experiment2Result r = run_experiment_2(setup, 12, 10, 99);
        const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        printf("exp2(10 trials): mean=%.3f mm std=%.3f max=%.3f n=%d  [%.2f s wall]\n",
               r.stats.mean_mm, r.stats.std_mm, r.stats.max_mm, r.stats.n, el);
        printf("  timing: scan=%.4f icp=%.4f path=%.4f exec=%.2f\n", r.timing.scanning_s,
               r.timing.pose_estimation_s, r.timing.path_planning_s, r.timing.execution_s);
    }

    // Mini experiment 1.
    {
        const auto t0 = std::chrono::steady_clock::now();
        const Experiment1Result r = run_experiment_1(setup, 5, 7);
        const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        printf("exp1(5 trials): glass mean=%.3f mm opaque mean=%.3f mm  [%.2f s wall]\n",
               r.glass.mean_mm, r.opaque.mean_mm, el);
    }
    return 0;
}
