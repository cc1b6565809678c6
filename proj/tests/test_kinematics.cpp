#include "doctest.h"

#include <random>

#include "edgescan/kinematics.hpp"
#include "oracles.hpp"

using namespace edgescan;

namespace {

ArmModel zero_arm() {
    std::array<DHRow, 6> dh{};
    std::array<JointLimits, 6> limits;
    limits.fill({-M_PI, M_PI});
    return ArmModel(dh, limits);
}

JointState random_state(const ArmModel& arm, std::mt19937_64& rng) {
    JointState q;
    for (std::size_t i = 0; i < 6; ++i) {
        const JointLimits& l = arm.limits()[i];
        std::uniform_real_distribution<double> u(0.6 * l.lower, 0.6 * l.upper);
        q.q[i] = u(rng);
    }
    return q;
}

}  // namespace

TEST_CASE("fk of the all-zero arm is the identity") {
    const ArmModel arm = zero_arm();
    const RigidTransform t = fk(arm, JointState{});
    CHECK((t.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(t.translation.norm() < 1e-15);
}

TEST_CASE("fk with a single link offset") {
    std::array<DHRow, 6> dh{};
    dh[0].d = 0.3;
    std::array<JointLimits, 6> limits;
    limits.fill({-M_PI, M_PI});
    const ArmModel arm(dh, limits);
    const RigidTransform t = fk(arm, JointState{});
    CHECK((t.translation - Vec3(0.0, 0.0, 0.3)).norm() < 1e-15);
    CHECK((t.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fk matches the independent homogeneous-chain oracle") {
    const ArmModel arm = ArmModel::default_test_arm();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const JointState q = random_state(arm, rng);
        Eigen::Matrix4d chain = Eigen::Matrix4d::Identity();
        for (std::size_t i = 0; i < 6; ++i) {
            const DHRow& row = arm.dh()[i];
            chain *= oracles::dh_matrix(row.a, row.alpha, row.d, q.q[i] + row.theta_offset);
        }
        const RigidTransform t = fk(arm, q);
        CHECK((t.rotation - chain.block<3, 3>(0, 0)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t.translation - chain.block<3, 1>(0, 3)).norm() < 1e-12);
    }
}

TEST_CASE("tooltip_pose composes the flange calibration") {
    const ArmModel arm = ArmModel::default_test_arm();
    std::mt19937_64 rng(6);
    const JointState q = random_state(arm, rng);

    CalibrationSet identity_cal;
    const RigidTransform flange = fk(arm, q);
    const RigidTransform tool_id = tooltip_pose(arm, q, identity_cal);
    CHECK((tool_id.translation - flange.translation).norm() < 1e-15);

    CalibrationSet z_cal;
    z_cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});
    const RigidTransform tool = tooltip_pose(arm, q, z_cal);
    const Vec3 expected = flange.translation + flange.rotation * Vec3(0.0, 0.0, 0.12);
    CHECK((tool.translation - expected).norm() < 1e-12);

    // Composition oracle on random inputs.
    for (int i = 0; i < 50; ++i) {
        const JointState qi = random_state(arm, rng);
        const RigidTransform via_compose = compose(fk(arm, qi), z_cal.flange_to_tooltip);
        const RigidTransform direct = tooltip_pose(arm, qi, z_cal);
        CHECK((via_compose.rotation - direct.rotation).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((via_compose.translation - direct.translation).norm() < 1e-12);
    }
}

TEST_CASE("localisation_error basics") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});

    std::mt19937_64 rng(8);
    const JointState q = random_state(arm, rng);
    CHECK(localisation_error(arm, q, q, cal) == 0.0);

    // Tooltip sweeping a circle of radius 1: a 0.001-chord rotation about
    // the base yields exactly 0.001 of positional error.
    const ArmModel pivot = zero_arm();
    CalibrationSet unit_cal;
    unit_cal.flange_to_tooltip = RigidTransform::from_translation({1.0, 0.0, 0.0});
    JointState qa{}, qb{};
    qb.q[0] = 2.0 * std::asin(0.0005);
    CHECK(localisation_error(pivot, qa, qb, unit_cal) == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("localisation_error is symmetric over random pairs") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});
    std::mt19937_64 rng(9);
    for (int i = 0; i < 1000; ++i) {
        const JointState qa = random_state(arm, rng);
        const JointState qb = random_state(arm, rng);
        const double ab = localisation_error(arm, qa, qb, cal);
        CHECK(ab >= 0.0);
        CHECK(ab == localisation_error(arm, qb, qa, cal));
    }
}

TEST_CASE("fk is Lipschitz in the joint angles") {
    const ArmModel arm = ArmModel::default_test_arm();
    const double bound = arm.total_link_length();
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    for (int i = 0; i < 200; ++i) {
        const JointState q = random_state(arm, rng);
        JointState qd = q;
        double step = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            const double d = u(rng);
            qd.q[j] += d;
            step += std::abs(d);
        }
        const double moved = (fk(arm, qd).translation - fk(arm, q).translation).norm();
        CHECK(moved <= bound * step + 1e-12);
    }
}

TEST_CASE("solve_ik returns the seed when already on target") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});
    JointState seed;
    seed.q = {0.1, 0.4, 0.5, 0.2, 0.8, -0.3};

    const RigidTransform target = tooltip_pose(arm, seed, cal);
    const JointState solved = solve_ik(arm, cal, target, seed);
    for (std::size_t i = 0; i < 6; ++i) CHECK(solved.q[i] == seed.q[i]);
}

TEST_CASE("solve_ik converges to a nearby target") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});
    JointState seed;
    seed.q = {0.0, 0.35, 0.45, 0.0, 0.75, 0.0};

    RigidTransform target = tooltip_pose(arm, seed, cal);
    target.translation += Vec3(0.001, -0.0005, 0.0008);
    const JointState solved = solve_ik(arm, cal, target, seed);

    const RigidTransform reached = tooltip_pose(arm, solved, cal);
    CHECK((reached.translation - target.translation).norm() < 1e-5);
    CHECK(rotation_log(reached.rotation * target.rotation.transpose()).norm() < 1e-4);
}

TEST_CASE("solve_ik round-trips random reachable targets") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    cal.flange_to_tooltip = RigidTransform::from_translation({0.0, 0.0, 0.12});
    std::mt19937_64 rng(21);
    JointState seed;
    seed.q = {0.0, 0.35, 0.45, 0.0, 0.75, 0.0};

    int solved_count = 0;
    for (int i = 0; i < 25; ++i) {
        JointState q_true = seed;
        std::uniform_real_distribution<double> u(-0.15, 0.15);
        for (std::size_t j = 0; j < 6; ++j) q_true.q[j] += u(rng);
        const RigidTransform target = tooltip_pose(arm, q_true, cal);
        const JointState q_solved = solve_ik(arm, cal, target, seed);
        const RigidTransform reached = tooltip_pose(arm, q_solved, cal);
        CHECK((reached.translation - target.translation).norm() < 1e-5);
        ++solved_count;
    }
    CHECK(solved_count == 25);
}

TEST_CASE("solve_ik reports unreachable targets") {
    const ArmModel arm = ArmModel::default_test_arm();
    CalibrationSet cal;
    const RigidTransform beyond = RigidTransform::from_translation({5.0, 5.0, 5.0});
    CHECK_THROWS_AS(solve_ik(arm, cal, beyond, JointState{}), NoConvergence);
}
