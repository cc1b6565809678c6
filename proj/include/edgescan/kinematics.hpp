#pragma once

#include <array>

#include "edgescan/geom.hpp"

namespace edgescan {

struct DHRow {
    double a = 0.0;             // link length, metres
    double alpha = 0.0;         // link twist, radians
    double d = 0.0;             // link offset, metres
    double theta_offset = 0.0;  // joint angle offset, radians
};

struct JointLimits {
    double lower = -3.1;
    double upper = 3.1;
};

struct JointState {
    std::array<double, 6> q{};  // radians
};

/// 6-DOF serial arm described by standard (distal) DH parameters.
class ArmModel {
public:
    ArmModel(std::array<DHRow, 6> dh, std::array<JointLimits, 6> limits);

    const std::array<DHRow, 6>& dh() const { return dh_; }
    const std::array<JointLimits, 6>& limits() const { return limits_; }

    bool within_limits(const JointState& q) const;

    // Sum of |a| + |d| over all rows; Lipschitz bound for fk continuity.
    double total_link_length() const;

    // Built-in 6R test arm, reach about 0.9 m.
    static ArmModel default_test_arm();

private:
    std::array<DHRow, 6> dh_;
    std::array<JointLimits, 6> limits_;
};

struct CalibrationSet {
    RigidTransform flange_to_tooltip;
    RigidTransform flange_to_scanner;
};

// Single standard-DH link transform for joint angle q:
// RotZ(q + theta_offset) * TransZ(d) * TransX(a) * RotX(alpha).
RigidTransform dh_link_transform(const DHRow& row, double q);

// Base-to-flange transform, product of the six link transforms in order.
RigidTransform fk(const ArmModel& arm, const JointState& q);

RigidTransform tooltip_pose(const ArmModel& arm, const JointState& q, const CalibrationSet& cal);

// Euclidean distance (metres) between the tooltip positions at q_a and
// q_b. Rotation parts do not contribute.
double localisation_error(const ArmModel& arm, const JointState& q_a, const JointState& q_b,
                          const CalibrationSet& cal);

struct IKOptions {
    double damping = 0.01;      // damped-least-squares lambda
    int max_iterations = 200;
    double fd_step = 1e-6;      // central-difference step, radians
    double position_tol = 1e-10;   // inner convergence target, metres
    double rotation_tol = 1e-9;    // inner convergence target, radians
    double accept_position = 1e-5; // contract tolerance, metres
    double accept_rotation = 1e-4; // contract tolerance, radians
};

/// Damped-least-squares IK on a numeric Jacobian. `target` is the desired
/// tooltip pose. Throws NoConvergence when the accept tolerances cannot
/// be met, JointLimitViolation when the converged state is out of limits.
JointState solve_ik(const ArmModel& arm, const CalibrationSet& cal, const RigidTransform& target,
                    const JointState& q_seed, const IKOptions& options = {});

}  // namespace edgescan
