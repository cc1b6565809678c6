#pragma once

#include <cstdint>
#include <vector>

#include "edgescan/bip.hpp"
#include "edgescan/icp.hpp"
#include "edgescan/kinematics.hpp"
#include "edgescan/scansim.hpp"

namespace edgescan {

/// Scanner poses along the glass border, base frame. Each pose aims the
/// optical axis at a border point, tilted `incidence_angle` from the
/// local surface normal, with the laser plane transverse to the border.
struct ScanPlan {
    std::vector<RigidTransform> poses;
    double incidence_angle = M_PI / 4.0;
    int n = 0;
};

ScanPlan generate_scan_poses(const GlassModel& model, const RigidTransform& coarse_pose, int n,
                             double incidence, double standoff = 0.15);

/// Tooltip poses along the estimated border, all with the same approach
/// orientation, ordered by arc length around the closed contour.
struct Trajectory {
    std::vector<RigidTransform> tooltip_poses;
    double spacing = 0.0;

    double path_length() const;
};

struct ErrorStats {
    double mean_mm = 0.0;
    double std_mm = 0.0;
    double max_mm = 0.0;
    int n = 0;
};

ErrorStats compute_stats_mm(const std::vector<double>& errors_m);

struct TimingReport {
    double scanning_s = 0.0;
    double pose_estimation_s = 0.0;
    double path_planning_s = 0.0;
    double execution_s = 0.0;
};

/// Registration of a BIP cloud against the border model sampled at
/// `spacing`; shared by estimate_pose and the exact-point sanity tests.
ICPResult register_border_points(const PointCloud& scan, const GlassModel& model,
                                 const RigidTransform& init, const ICPParams& params,
                                 double spacing = 1e-3);

struct PoseEstimate {
    ICPResult icp;
    BipCollection bips;
    double scanning_seconds = 0.0;
    double pose_estimation_seconds = 0.0;
};

PoseEstimate estimate_pose(const Scene& scene, const ScanPlan& plan, const GlassModel& model,
                           const RigidTransform& coarse_pose, const ICPParams& params,
                           const ScannerSpec& spec, std::uint64_t seed, double spacing = 1e-3);

/// Nearest point on the estimated border polyline (segment-projected).
/// Distance ties go to the lower segment index.
Vec3 nearest_on_model(const GlassModel& estimated, const Vec3& p);

Trajectory plan_contour_path(const GlassModel& estimated, const Mat3& r_approach, double spacing);

/// Everything the experiment harnesses need; values are owned copies so a
/// setup can be built once and reused across runs.
struct ExperimentSetup {
    Scene scene;
    ArmModel arm;
    CalibrationSet cal;
    ScanPlan plan;
    ScannerSpec spec;
    ICPParams params;
    RigidTransform coarse_pose;
    Mat3 r_approach = rot_y(M_PI) * rot_z(M_PI);  // tooltip z pointing down
    JointState ik_seed;
    double tooltip_speed = 0.05;          // m/s, execution-stage estimate
    double registration_spacing = 1e-3;   // metres
    double contour_spacing = 0.01;        // metres
};

/// Point-localisation experiment: per pose, touch the extracted BIP vs
/// the true edge point, both through IK with the approach orientation.
/// Runs once with glass optics and once with the opaque stand-in.
struct Experiment1Result {
    ErrorStats glass;
    ErrorStats opaque;
    std::vector<double> glass_errors_m;
    std::vector<double> opaque_errors_m;
};

Experiment1Result run_experiment_1(const ExperimentSetup& setup, int trials,
                                   std::uint64_t master_seed);

/// Full-pipeline experiment: estimate the pose, then per validation point
/// move to the nearest point on the estimated border and measure the
/// tooltip discrepancy. Monte Carlo over trials.
struct Experiment2Result {
    ErrorStats stats;
    TimingReport timing;
    std::vector<double> errors_m;
};

Experiment2Result run_experiment_2(const ExperimentSetup& setup, int n_validation, int trials,
                                   std::uint64_t master_seed);

// Thread budget honoring EDGESCAN_THREADS (0 or 1 = sequential).
int thread_budget();

}  // namespace edgescan
