#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgescan/pipeline.hpp"

namespace edgescan {

/// One experiment configuration: arm, scene, scanner, ICP parameters,
/// plan parameters, and seeds, composed from a single JSON document.
struct RunConfig {
    nlohmann::json raw;

    GlassModel model() const;
    RigidTransform glass_pose() const;
    GroundPlane ground() const;
    Scene scene() const;
    ScannerSpec scanner() const;
    ICPParams icp_params() const;
    ArmModel arm() const;
    CalibrationSet calibration() const;
    Mat3 approach_rotation() const;
    RigidTransform coarse_pose() const;  // true pose composed with the configured offset
    ScanPlan plan() const;

    int trials() const;
    int n_validation() const;
    std::uint64_t master_seed() const;
    double tooltip_speed() const;
    JointState ik_seed() const;
    double registration_spacing() const;
    double contour_spacing() const;

    ExperimentSetup experiment_setup() const;
};

// Built-in defaults: side glass on a table in front of the test arm.
nlohmann::json default_config_json();

RunConfig load_config(const std::string& path);
RunConfig config_from_json(nlohmann::json j);

// Applies "dotted.path=value" overrides; values parse as JSON literals,
// falling back to strings.
void apply_override(nlohmann::json& j, const std::string& assignment);

RigidTransform transform_from_json(const nlohmann::json& j);
nlohmann::json transform_to_json(const RigidTransform& t);

}  // namespace edgescan
