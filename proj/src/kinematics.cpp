#include "edgescan/kinematics.hpp"

#include <cmath>

namespace edgescan {

ArmModel::ArmModel(std::array<DHRow, 6> dh, std::array<JointLimits, 6> limits)
    : dh_(dh), limits_(limits) {
    for (const JointLimits& l : limits_) {
        if (!(l.lower < l.upper)) throw ValidationError("joint limits must satisfy lower < upper");
    }
}

bool ArmModel::within_limits(const JointState& q) const {
    for (int i = 0; i < 6; ++i) {
        if (q.q[static_cast<std::size_t>(i)] < limits_[static_cast<std::size_t>(i)].lower ||
            q.q[static_cast<std::size_t>(i)] > limits_[static_cast<std::size_t>(i)].upper) {
            return false;
        }
    }
    return true;
}

double ArmModel::total_link_length() const {
    double sum = 0.0;
    for (const DHRow& row : dh_) sum += std::abs(row.a) + std::abs(row.d);
    return sum;
}

ArmModel ArmModel::default_test_arm() {
    const double pi = M_PI;
    std::array<DHRow, 6> dh = {{
        {0.025, -pi / 2.0, 0.400, 0.0},
        {0.455, 0.0, 0.0, -pi / 2.0},
        {0.035, -pi / 2.0, 0.0, 0.0},
        {0.0, pi / 2.0, 0.420, 0.0},
        {0.0, -pi / 2.0, 0.0, 0.0},
        {0.0, 0.0, 0.080, 0.0},
    }};
    std::array<JointLimits, 6> limits = {{
        {-2.967, 2.967},
        {-2.400, 2.400},
        {-2.600, 2.600},
        {-2.967, 2.967},
        {-2.400, 2.400},
        {-2.967, 2.967},
    }};
    return ArmModel(dh, limits);
}

RigidTransform dh_link_transform(const DHRow& row, double q) {
    const double theta = q + row.theta_offset;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
    RigidTransform t;
    t.rotation << ct, -st * ca, st * sa,
                  st, ct * ca, -ct * sa,
                  0.0, sa, ca;
    t.translation = Vec3(row.a * ct, row.a * st, row.d);
    return t;
}

RigidTransform fk(const ArmModel& arm, const JointState& q) {
    RigidTransform t = RigidTransform::identity();
    for (std::size_t i = 0; i < 6; ++i) {
        t = compose(t, dh_link_transform(arm.dh()[i], q.q[i]));
    }
    return t;
}

RigidTransform tooltip_pose(const ArmModel& arm, const JointState& q, const CalibrationSet& cal) {
    return compose(fk(arm, q), cal.flange_to_tooltip);
}

double localisation_error(const ArmModel& arm, const JointState& q_a, const JointState& q_b,
                          const CalibrationSet& cal) {
    const Vec3 pa = tooltip_pose(arm, q_a, cal).translation;
    const Vec3 pb = tooltip_pose(arm, q_b, cal).translation;
    return (pa - pb).norm();
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

Vec6 pose_error(const RigidTransform& current, const RigidTransform& target) {
    Vec6 e;
    e.head<3>() = target.translation - current.translation;
    e.tail<3>() = rotation_log(target.rotation * current.rotation.transpose());
    return e;
}

}  // namespace

JointState solve_ik(const ArmModel& arm, const CalibrationSet& cal, const RigidTransform& target,
                    const JointState& q_seed, const IKOptions& options) {
    JointState q = q_seed;
    const double lambda2 = options.damping * options.damping;

    const auto converged = [&](const Vec6& e, double pos_tol, double rot_tol) {
        return e.head<3>().norm() <= pos_tol && e.tail<3>().norm() <= rot_tol;
    };

    Vec6 err = pose_error(tooltip_pose(arm, q, cal), target);
    if (converged(err, options.position_tol, options.rotation_tol)) return q;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        // Numeric Jacobian by central differences.
        Mat6 jac;
        for (std::size_t j = 0; j < 6; ++j) {
            JointState qp = q, qm = q;
            qp.q[j] += options.fd_step;
            qm.q[j] -= options.fd_step;
            const RigidTransform tp = tooltip_pose(arm, qp, cal);
            const RigidTransform tm = tooltip_pose(arm, qm, cal);
            Vec6 col;
            col.head<3>() = (tp.translation - tm.translation) / (2.0 * options.fd_step);
            col.tail<3>() = rotation_log(tp.rotation * tm.rotation.transpose()) / (2.0 * options.fd_step);
            jac.col(static_cast<Eigen::Index>(j)) = col;
        }

        const Mat6 jjt = jac * jac.transpose() + lambda2 * Mat6::Identity();
        const Vec6 dq = jac.transpose() * jjt.ldlt().solve(err);
        for (std::size_t j = 0; j < 6; ++j) q.q[j] += dq(static_cast<Eigen::Index>(j));

        err = pose_error(tooltip_pose(arm, q, cal), target);
        if (converged(err, options.position_tol, options.rotation_tol)) break;
    }

    if (!converged(err, options.accept_position, options.accept_rotation)) {
        throw NoConvergence("solve_ik: target not reached after " +
                            std::to_string(options.max_iterations) + " iterations");
    }

    // Revolute joints are 2*pi-periodic: wrap each angle to its principal
    // value, then shift by full turns into the limits where possible.
    for (std::size_t j = 0; j < 6; ++j) {
        double& v = q.q[j];
        v -= 2.0 * M_PI * std::round(v / (2.0 * M_PI));
        const JointLimits& l = arm.limits()[j];
        if (v < l.lower && v + 2.0 * M_PI <= l.upper) v += 2.0 * M_PI;
        if (v > l.upper && v - 2.0 * M_PI >= l.lower) v -= 2.0 * M_PI;
    }
    if (!arm.within_limits(q)) {
        throw JointLimitViolation("solve_ik: solution violates joint limits");
    }
    return q;
}

}  // namespace edgescan
