#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "edgescan/geom.hpp"
#include "edgescan/model.hpp"

namespace edgescan {

/// 2D triangulation line scanner. Scanner frame: +z is the central beam,
/// the laser fan spreads in the x-z plane, the receiver baseline sits on
/// the +y side of that plane.
struct ScannerSpec {
    double line_fov = 0.70;                       // radians across the fan
    int rays_per_profile = 640;
    double receiver_offset_angle = 0.30;          // baseline angle off the retro direction
    double receiver_acceptance_half_angle = 0.35; // cone half-angle around the receiver axis
    double min_intensity_threshold = 0.05;
    double saturation_threshold = 0.80;
    double range_noise_sigma = 1e-4;              // metres
    double exposure_gain = 1.0;

    void validate() const;

    // Fan angle of ray i, radians in the scanner x-z plane.
    double ray_angle(int ray_index) const;
    // Unit ray direction in the scanner frame.
    Vec3 ray_direction(int ray_index) const;
};

enum class HitClass { surface, edge, background, none };

const char* to_string(HitClass c);
HitClass hit_class_from_string(const std::string& s);

struct CandidateReturn {
    double range = 0.0;      // metres along the ray
    double intensity = 0.0;  // received fraction, exposure gain applied
    HitClass cls = HitClass::none;
    bool specular = false;
};

struct RayReturn {
    std::vector<CandidateReturn> candidates;
};

struct SelectedReturn {
    double range = 0.0;
    double intensity = 0.0;
    bool saturated = false;
    HitClass cls = HitClass::none;
};

struct ProfileRecord {
    int ray_index = 0;
    double lateral_m = 0.0;  // scanner-frame x of the measured point
    double range_m = 0.0;
    double intensity = 0.0;
    bool saturated = false;
    HitClass cls = HitClass::none;
};

/// One laser-line reading. Records are ordered by lateral position;
/// hit_class is simulator ground truth and is never consumed by the BIP
/// extraction logic.
struct ScanProfile {
    std::vector<ProfileRecord> records;
    RigidTransform scan_pose;
};

// Measured point of a record in the scanner frame / base frame.
Vec3 record_point_scanner(const ScannerSpec& spec, const ProfileRecord& rec);
Vec3 record_point_base(const ScannerSpec& spec, const ScanProfile& profile, const ProfileRecord& rec);

void save_profile_csv(const ScanProfile& profile, const std::string& path);

/// Scan scene: posed glass over a ground plane with an opaque backdrop.
/// Geometry is posed and indexed once at construction; immutable after.
class Scene {
public:
    Scene(GlassModel glass, const RigidTransform& glass_pose, GroundPlane ground,
          double background_distance = 0.57, bool opaque_stand_in = false);

    const GlassModel& glass() const { return glass_; }
    const RigidTransform& glass_pose() const { return glass_pose_; }
    const GroundPlane& ground() const { return ground_; }
    double background_distance() const { return background_distance_; }
    bool opaque_stand_in() const { return opaque_stand_in_; }

    const std::vector<Vec3>& posed_border() const { return posed_border_; }

    // Per-segment frame along the posed border rim.
    struct BorderSegment {
        Vec3 a, b;        // rim endpoints, base frame
        Vec3 tangent;     // unit, a -> b
        Vec3 up;          // unit surface normal at the rim
        Vec3 outward;     // unit, away from the glass interior
        double length = 0.0;
    };
    const std::vector<BorderSegment>& border_segments() const { return segments_; }

    struct PosedTriangle {
        Vec3 a, b, c;
        Vec3 normal;  // unit, outward of the glass
    };
    const std::vector<PosedTriangle>& posed_surface() const { return triangles_; }

    struct MeshHit {
        double t = 0.0;
        Vec3 normal;
    };
    // Nearest surface intersection. entering=true wants hits facing the
    // ray (normal . dir < 0), entering=false wants exits from inside.
    std::optional<MeshHit> intersect_surface(const Vec3& origin, const Vec3& dir, bool entering) const;

    struct EdgeHit {
        double t = 0.0;
        Vec3 normal;
    };
    // Nearest hit on the edge geometry (bevel quarter-round or the edge
    // face below it), outside hits only.
    std::optional<EdgeHit> intersect_edge(const Vec3& origin, const Vec3& dir) const;

private:
    GlassModel glass_;
    RigidTransform glass_pose_;
    GroundPlane ground_;
    double background_distance_;
    bool opaque_stand_in_;

    std::vector<Vec3> posed_border_;
    std::vector<BorderSegment> segments_;
    std::vector<PosedTriangle> triangles_;
};

/// Unpolarized Fresnel reflectance, air to dielectric of index n, average
/// of the s- and p-polarized components.
double fresnel_reflectance(double n, double theta_i);

/// Total reflected fraction from a two-interface slab at normal-ish
/// incidence, truncated after the rear-surface bounce: R + (1-R)^2 R_int.
double two_surface_reflectance(double n, double theta_i);

/// Ray emitted from the scanner: direction plus the laser-plane normal
/// (the receiver baseline side), both unit length, base frame.
struct RayGeometry {
    Vec3 origin;
    Vec3 direction;
    Vec3 plane_normal;
};

/// All candidate returns along one ray: front/rear glass surface, edge
/// bevel or face, and background, each with exact geometric range.
RayReturn cast_ray(const Scene& scene, const RayGeometry& ray, const ScannerSpec& spec);

// Convenience overload for single-ray probes; picks an arbitrary
// deterministic plane normal perpendicular to the direction.
RayReturn cast_ray(const Scene& scene, const Vec3& origin, const Vec3& direction,
                   const ScannerSpec& spec);

/// Highest-intensity selection above the minimum threshold. A specular
/// winner at or above the saturation threshold is flagged saturated and
/// its range inflated by a uniform bias of +-5 sigma drawn from rng.
std::optional<SelectedReturn> select_return(const RayReturn& candidates, const ScannerSpec& spec,
                                            std::mt19937_64& rng);

/// Fan of rays across line_fov in the scanner's laser plane; per-ray cast
/// and select, seeded Gaussian range noise. Deterministic for fixed
/// (scene, pose, spec, seed).
ScanProfile simulate_profile(const Scene& scene, const RigidTransform& scan_pose,
                             const ScannerSpec& spec, std::uint64_t seed);

/// Intersection of the scanner's laser plane with the posed border
/// polyline, nearest to the scanner. Throws NoIntersection.
Vec3 true_edge_point(const Scene& scene, const RigidTransform& scan_pose);

}  // namespace edgescan
