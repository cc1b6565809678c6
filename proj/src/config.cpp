#include "edgescan/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace edgescan {

using nlohmann::json;

namespace {

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 mat3_from(const json& j) {
    if (!j.is_array() || j.size() != 9) throw ParseError("expected a 9-element row-major array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = j[static_cast<std::size_t>(3 * r + c)].get<double>();
    }
    return m;
}

json mat3_to(const Mat3& m) {
    json j = json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) j.push_back(m(r, c));
    }
    return j;
}

MaterialOptics optics_from(const json& j) {
    MaterialOptics m;
    m.refractive_index = j.value("refractive_index", m.refractive_index);
    m.surface_diffuse_albedo = j.value("surface_diffuse_albedo", m.surface_diffuse_albedo);
    m.edge_diffuse_albedo = j.value("edge_diffuse_albedo", m.edge_diffuse_albedo);
    return m;
}

}  // namespace

RigidTransform transform_from_json(const json& j) {
    RigidTransform t;
    if (j.contains("rotation")) t.rotation = mat3_from(j.at("rotation"));
    if (j.contains("translation")) t.translation = vec3_from(j.at("translation"));
    if (!t.is_valid(1e-6)) throw ValidationError("configured transform is not rigid");
    t.rotation = orthonormalized(t.rotation);
    return t;
}

json transform_to_json(const RigidTransform& t) {
    return {{"rotation", mat3_to(t.rotation)},
            {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

json default_config_json() {
    json j;
    j["model"] = {
        {"generator", "side_glass"}, {"chord", 0.4},           {"height", 0.3},
        {"curvature_radius", 1.0},   {"thickness_m", 0.004},   {"bevel_radius_m", 0.0005},
        {"refractive_index", 1.5},   {"surface_diffuse_albedo", 0.01},
        {"edge_diffuse_albedo", 0.30},
    };
    j["scene"] = {
        {"glass_pose", {{"translation", {0.55, 0.0, 0.05}}}},
        {"ground",
         {{"point", {0.0, 0.0, 0.0}}, {"normal", {0.0, 0.0, 1.0}}, {"diffuse_albedo", 0.5}}},
        {"background_distance", 0.57},
        {"opaque_stand_in", false},
    };
    j["scanner"] = {
        {"line_fov", 0.70},
        {"rays_per_profile", 640},
        {"receiver_offset_angle", 0.30},
        {"receiver_acceptance_half_angle", 0.35},
        {"min_intensity_threshold", 0.05},
        {"saturation_threshold", 0.80},
        {"range_noise_sigma", 1e-4},
        {"exposure_gain", 1.0},
    };
    j["icp"] = {
        {"max_iterations", 50},
        {"convergence_tol", 1e-7},
        {"outlier_reject_factor", 3.0},
        {"min_points", 3},
    };
    j["plan"] = {{"n", 12}, {"incidence_rad", M_PI / 4.0}, {"standoff_m", 0.15}};
    j["coarse_offset"] = {{"translation", {0.008, -0.005, 0.004}},
                          {"rotation_rpy_deg", {1.5, -1.0, 2.0}}};

    const ArmModel arm = ArmModel::default_test_arm();
    json dh = json::array();
    json limits = json::array();
    for (int i = 0; i < 6; ++i) {
        const DHRow& row = arm.dh()[static_cast<std::size_t>(i)];
        dh.push_back({row.a, row.alpha, row.d, row.theta_offset});
        const JointLimits& l = arm.limits()[static_cast<std::size_t>(i)];
        limits.push_back({l.lower, l.upper});
    }
    j["arm"] = {
        {"dh", dh},
        {"limits", limits},
        {"flange_to_tooltip", transform_to_json(RigidTransform::from_translation({0.0, 0.0, 0.12}))},
        {"flange_to_scanner",
         transform_to_json(RigidTransform::from_translation({0.0, 0.05, 0.08}))},
    };
    j["approach_rotation"] = mat3_to(rot_y(M_PI) * rot_z(M_PI));
    j["experiment"] = {
        {"trials", 100},
        {"n_validation", 12},
        {"master_seed", 20260810},
        {"tooltip_speed", 0.05},
        {"ik_seed", {0.0, 0.35, 0.45, 0.0, 0.75, 0.0}},
        {"registration_spacing_m", 0.001},
        {"contour_spacing_m", 0.01},
    };
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("bad config " + path + ": " + e.what());
    }
    return config_from_json(std::move(j));
}

RunConfig config_from_json(json j) {
    // Overlay user values on the defaults so partial configs stay valid.
    json merged = default_config_json();
    merged.merge_patch(j);
    return RunConfig{std::move(merged)};
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ParseError("override must look like key.path=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &j;
    std::istringstream keys(path);
    std::string key;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) {
        if (key.empty()) throw ParseError("bad override path: " + path);
        parts.push_back(key);
    }
    if (parts.empty()) throw ParseError("bad override path: " + path);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];

    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain string
    (*node)[parts.back()] = parsed;
}

GlassModel RunConfig::model() const {
    const json& m = raw.at("model");
    if (m.contains("manifest")) {
        return load_glass_model(m.at("manifest").get<std::string>());
    }
    const std::string generator = m.value("generator", "side_glass");
    const double thickness = m.value("thickness_m", 0.004);
    const double bevel = m.value("bevel_radius_m", 0.0005);
    const MaterialOptics optics = optics_from(m);
    if (generator == "flat_panel") {
        return make_flat_panel(m.value("width", 0.4), m.value("height", 0.3), thickness, bevel,
                               optics);
    }
    if (generator == "side_glass") {
        return make_side_glass(m.value("chord", 0.4), m.value("height", 0.3),
                               m.value("curvature_radius", 1.0), thickness, bevel, optics);
    }
    throw ValidationError("unknown model generator: " + generator);
}

RigidTransform RunConfig::glass_pose() const {
    return transform_from_json(raw.at("scene").at("glass_pose"));
}

GroundPlane RunConfig::ground() const {
    const json& g = raw.at("scene").at("ground");
    GroundPlane plane;
    plane.point = vec3_from(g.at("point"));
    plane.normal = vec3_from(g.at("normal")).normalized();
    plane.diffuse_albedo = g.value("diffuse_albedo", 0.5);
    return plane;
}

Scene RunConfig::scene() const {
    const json& s = raw.at("scene");
    return Scene(model(), glass_pose(), ground(), s.value("background_distance", 0.57),
                 s.value("opaque_stand_in", false));
}

ScannerSpec RunConfig::scanner() const {
    const json& s = raw.at("scanner");
    ScannerSpec spec;
    spec.line_fov = s.value("line_fov", spec.line_fov);
    spec.rays_per_profile = s.value("rays_per_profile", spec.rays_per_profile);
    spec.receiver_offset_angle = s.value("receiver_offset_angle", spec.receiver_offset_angle);
    spec.receiver_acceptance_half_angle =
        s.value("receiver_acceptance_half_angle", spec.receiver_acceptance_half_angle);
    spec.min_intensity_threshold = s.value("min_intensity_threshold", spec.min_intensity_threshold);
    spec.saturation_threshold = s.value("saturation_threshold", spec.saturation_threshold);
    spec.range_noise_sigma = s.value("range_noise_sigma", spec.range_noise_sigma);
    spec.exposure_gain = s.value("exposure_gain", spec.exposure_gain);
    spec.validate();
    return spec;
}

ICPParams RunConfig::icp_params() const {
    const json& p = raw.at("icp");
    ICPParams params;
    params.max_iterations = p.value("max_iterations", params.max_iterations);
    params.convergence_tol = p.value("convergence_tol", params.convergence_tol);
    params.outlier_reject_factor = p.value("outlier_reject_factor", params.outlier_reject_factor);
    params.min_points = p.value("min_points", params.min_points);
    params.validate();
    return params;
}

ArmModel RunConfig::arm() const {
    const json& a = raw.at("arm");
    const json& dh = a.at("dh");
    const json& limits = a.at("limits");
    if (dh.size() != 6 || limits.size() != 6) throw ValidationError("arm needs 6 DH rows and limits");
    std::array<DHRow, 6> rows;
    std::array<JointLimits, 6> lim;
    for (std::size_t i = 0; i < 6; ++i) {
        const json& r = dh[i];
        if (r.size() != 4) throw ValidationError("DH row needs [a, alpha, d, theta_offset]");
        rows[i] = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
        const json& l = limits[i];
        if (l.size() != 2) throw ValidationError("joint limits need [lower, upper]");
        lim[i] = {l[0].get<double>(), l[1].get<double>()};
    }
    return ArmModel(rows, lim);
}

CalibrationSet RunConfig::calibration() const {
    const json& a = raw.at("arm");
    CalibrationSet cal;
    cal.flange_to_tooltip = transform_from_json(a.at("flange_to_tooltip"));
    cal.flange_to_scanner = transform_from_json(a.at("flange_to_scanner"));
    return cal;
}

Mat3 RunConfig::approach_rotation() const {
    return orthonormalized(mat3_from(raw.at("approach_rotation")));
}

RigidTransform RunConfig::coarse_pose() const {
    const json& o = raw.at("coarse_offset");
    const Vec3 rpy = vec3_from(o.at("rotation_rpy_deg")) * (M_PI / 180.0);
    RigidTransform offset;
    offset.rotation = rot_z(rpy.z()) * rot_y(rpy.y()) * rot_x(rpy.x());
    offset.translation = vec3_from(o.at("translation"));
    return compose(offset, glass_pose());
}

ScanPlan RunConfig::plan() const {
    const json& p = raw.at("plan");
    return generate_scan_poses(model(), coarse_pose(), p.value("n", 12),
                               p.value("incidence_rad", M_PI / 4.0), p.value("standoff_m", 0.15));
}

int RunConfig::trials() const { return raw.at("experiment").value("trials", 100); }
int RunConfig::n_validation() const { return raw.at("experiment").value("n_validation", 12); }

std::uint64_t RunConfig::master_seed() const {
    return raw.at("experiment").value("master_seed", std::uint64_t{20260810});
}

double RunConfig::tooltip_speed() const { return raw.at("experiment").value("tooltip_speed", 0.05); }

JointState RunConfig::ik_seed() const {
    const json& q = raw.at("experiment").at("ik_seed");
    if (q.size() != 6) throw ValidationError("ik_seed needs 6 joint values");
    JointState state;
    for (std::size_t i = 0; i < 6; ++i) state.q[i] = q[i].get<double>();
    return state;
}

double RunConfig::registration_spacing() const {
    return raw.at("experiment").value("registration_spacing_m", 0.001);
}

double RunConfig::contour_spacing() const {
    return raw.at("experiment").value("contour_spacing_m", 0.01);
}

ExperimentSetup RunConfig::experiment_setup() const {
    ExperimentSetup setup{scene(),        arm(),        calibration(),       plan(),
                          scanner(),      icp_params(), coarse_pose(),       approach_rotation(),
                          ik_seed(),      tooltip_speed(), registration_spacing(),
                          contour_spacing()};
    return setup;
}

}  // namespace edgescan
