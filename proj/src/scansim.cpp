#include "edgescan/scansim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace edgescan {

namespace {

constexpr double kEps = 1e-9;
// Received specular power relative to diffuse scatter: the mirror beam
// lands concentrated on a few CCD pixels instead of spreading over the
// hemisphere.
constexpr double kSpecularBoost = 50.0;
// Opaque stand-in object for the glass-vs-opaque comparison runs: matte
// dark body with a bright diffuse finished edge, so the edge stays the
// strongest high feature just as it is on glass.
constexpr double kOpaqueEdgeAlbedo = 0.9;
constexpr double kOpaqueSurfaceAlbedo = 0.05;

double fresnel_dielectric(double n1, double n2, double cos_i) {
    cos_i = std::clamp(cos_i, 0.0, 1.0);
    const double sin_i = std::sqrt(std::max(0.0, 1.0 - cos_i * cos_i));
    const double sin_t = n1 / n2 * sin_i;
    if (sin_t >= 1.0) return 1.0;  // total internal reflection
    const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin_t * sin_t));
    const double rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    const double rp = (n2 * cos_i - n1 * cos_t) / (n2 * cos_i + n1 * cos_t);
    return 0.5 * (rs * rs + rp * rp);
}

std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                                   const Vec3& c) {
    // Moeller-Trumbore.
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pvec = d.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 tvec = o - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
    const Vec3 qvec = tvec.cross(e1);
    const double v = d.dot(qvec) * inv;
    if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
    const double t = e2.dot(qvec) * inv;
    if (t <= kEps) return std::nullopt;
    return t;
}

}  // namespace

void ScannerSpec::validate() const {
    if (rays_per_profile < 2) throw ValidationError("rays_per_profile must be at least 2");
    if (!(line_fov > 0.0) || line_fov >= M_PI) throw ValidationError("line_fov outside (0, pi)");
    if (min_intensity_threshold <= 0.0 || min_intensity_threshold > 1.0)
        throw ValidationError("min_intensity_threshold outside (0,1]");
    if (saturation_threshold <= 0.0 || saturation_threshold > 1.0)
        throw ValidationError("saturation_threshold outside (0,1]");
    if (range_noise_sigma < 0.0) throw ValidationError("range_noise_sigma must be non-negative");
    if (!(exposure_gain > 0.0)) throw ValidationError("exposure_gain must be positive");
}

double ScannerSpec::ray_angle(int ray_index) const {
    return -line_fov / 2.0 +
           line_fov * static_cast<double>(ray_index) / static_cast<double>(rays_per_profile - 1);
}

Vec3 ScannerSpec::ray_direction(int ray_index) const {
    const double gamma = ray_angle(ray_index);
    return Vec3(std::sin(gamma), 0.0, std::cos(gamma));
}

const char* to_string(HitClass c) {
    switch (c) {
        case HitClass::surface: return "surface";
        case HitClass::edge: return "edge";
        case HitClass::background: return "background";
        case HitClass::none: return "none";
    }
    return "none";
}

HitClass hit_class_from_string(const std::string& s) {
    if (s == "surface") return HitClass::surface;
    if (s == "edge") return HitClass::edge;
    if (s == "background") return HitClass::background;
    if (s == "none") return HitClass::none;
    throw ParseError("unknown hit class: " + s);
}

Vec3 record_point_scanner(const ScannerSpec& spec, const ProfileRecord& rec) {
    return rec.range_m * spec.ray_direction(rec.ray_index);
}

Vec3 record_point_base(const ScannerSpec& spec, const ScanProfile& profile, const ProfileRecord& rec) {
    return profile.scan_pose.apply(record_point_scanner(spec, rec));
}

void save_profile_csv(const ScanProfile& profile, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write profile CSV: " + path);
    out.precision(17);
    out << "lateral_m,range_m,intensity,saturated,class\n";
    for (const ProfileRecord& rec : profile.records) {
        out << rec.lateral_m << ',' << rec.range_m << ',' << rec.intensity << ','
            << (rec.saturated ? 1 : 0) << ',' << to_string(rec.cls) << '\n';
    }
}

Scene::Scene(GlassModel glass, const RigidTransform& glass_pose, GroundPlane ground,
             double background_distance, bool opaque_stand_in)
    : glass_(std::move(glass)),
      glass_pose_(glass_pose),
      ground_(ground),
      background_distance_(background_distance),
      opaque_stand_in_(opaque_stand_in) {
    if (!glass_pose_.is_valid(1e-9)) throw ValidationError("scene glass pose is not rigid");
    if (!(background_distance_ > 0.0)) throw ValidationError("background_distance must be positive");
    ground_.validate();

    posed_border_.reserve(glass_.border().size());
    for (const Vec3& v : glass_.border()) posed_border_.push_back(glass_pose_.apply(v));

    triangles_.reserve(glass_.surface().size());
    for (const Triangle& t : glass_.surface()) {
        PosedTriangle pt;
        pt.a = glass_pose_.apply(t.a);
        pt.b = glass_pose_.apply(t.b);
        pt.c = glass_pose_.apply(t.c);
        pt.normal = (pt.b - pt.a).cross(pt.c - pt.a).normalized();
        triangles_.push_back(pt);
    }

    const std::vector<BorderFrame> frames = border_frames(glass_);
    segments_.reserve(frames.size());
    for (const BorderFrame& f : frames) {
        if (f.length < 1e-12) continue;
        BorderSegment seg;
        seg.a = glass_pose_.apply(f.a);
        seg.b = glass_pose_.apply(f.b);
        seg.tangent = glass_pose_.rotate(f.tangent);
        seg.up = glass_pose_.rotate(f.up);
        seg.outward = glass_pose_.rotate(f.outward);
        seg.length = f.length;
        segments_.push_back(seg);
    }
}

std::optional<Scene::MeshHit> Scene::intersect_surface(const Vec3& origin, const Vec3& dir,
                                                       bool entering) const {
    std::optional<MeshHit> best;
    for (const PosedTriangle& pt : triangles_) {
        const double facing = pt.normal.dot(dir);
        if (entering ? facing >= 0.0 : facing <= 0.0) continue;
        const auto t = ray_triangle(origin, dir, pt.a, pt.b, pt.c);
        if (t && (!best || *t < best->t)) best = MeshHit{*t, pt.normal};
    }
    return best;
}

std::optional<Scene::EdgeHit> Scene::intersect_edge(const Vec3& origin, const Vec3& dir) const {
    const double r = glass_.bevel_radius();
    const double face_depth = glass_.thickness() - r;
    std::optional<EdgeHit> best;

    const auto consider = [&](double t, const Vec3& normal) {
        if (t <= kEps) return;
        if (normal.dot(dir) >= 0.0) return;  // outside hits only
        if (!best || t < best->t) best = EdgeHit{t, normal};
    };

    for (const BorderSegment& seg : segments_) {
        // Quarter-round bevel: cylinder of radius r, axis r below the rim.
        if (r > 0.0) {
            const Vec3 c0 = seg.a - r * seg.up;
            const Vec3 m = origin - c0;
            const Vec3 mp = m - m.dot(seg.tangent) * seg.tangent;
            const Vec3 dp = dir - dir.dot(seg.tangent) * seg.tangent;
            const double a2 = dp.squaredNorm();
            if (a2 > 1e-16) {
                const double b2 = 2.0 * mp.dot(dp);
                const double c2 = mp.squaredNorm() - r * r;
                const double disc = b2 * b2 - 4.0 * a2 * c2;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    for (const double t : {(-b2 - sq) / (2.0 * a2), (-b2 + sq) / (2.0 * a2)}) {
                        if (t <= kEps) continue;
                        const Vec3 hit = origin + t * dir;
                        const Vec3 rel = hit - c0;
                        const double axial = rel.dot(seg.tangent);
                        if (axial < -kEps || axial > seg.length + kEps) continue;
                        const Vec3 radial = (rel - axial * seg.tangent) / r;
                        // Keep the quarter between "up" and "outward".
                        if (radial.dot(seg.up) < -1e-9 || radial.dot(seg.outward) < -1e-9) continue;
                        consider(t, radial.normalized());
                    }
                }
            }
        }

        // Flat edge face below the bevel, normal = outward.
        if (face_depth > 0.0) {
            const double denom = dir.dot(seg.outward);
            if (denom < -1e-14) {
                const Vec3 p0 = seg.a - r * seg.up + r * seg.outward;  // top edge of the face
                const double t = (p0 - origin).dot(seg.outward) / denom;
                if (t > kEps) {
                    const Vec3 rel = origin + t * dir - p0;
                    const double axial = rel.dot(seg.tangent);
                    const double down = -rel.dot(seg.up);
                    if (axial >= -kEps && axial <= seg.length + kEps && down >= -kEps &&
                        down <= face_depth + kEps) {
                        consider(t, seg.outward);
                    }
                }
            }
        }
    }
    return best;
}

double fresnel_reflectance(double n, double theta_i) {
    if (!(n > 1.0)) throw std::invalid_argument("fresnel_reflectance: n must exceed 1");
    if (theta_i < 0.0 || theta_i >= M_PI / 2.0)
        throw std::invalid_argument("fresnel_reflectance: theta outside [0, pi/2)");
    return fresnel_dielectric(1.0, n, std::cos(theta_i));
}

double two_surface_reflectance(double n, double theta_i) {
    const double r_front = fresnel_reflectance(n, theta_i);
    const double sin_t = std::sin(theta_i) / n;
    const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin_t * sin_t));
    const double r_rear = fresnel_dielectric(n, 1.0, cos_t);
    return r_front + (1.0 - r_front) * (1.0 - r_front) * r_rear;
}

RayReturn cast_ray(const Scene& scene, const RayGeometry& ray, const ScannerSpec& spec) {
    RayReturn out;
    const Vec3& o = ray.origin;
    const Vec3& d = ray.direction;
    const double gain = spec.exposure_gain;
    const double n_glass = scene.glass().material().refractive_index;

    const auto ground_hit = [&](const Vec3& from) -> std::optional<double> {
        const double denom = d.dot(scene.ground().normal);
        if (denom >= -1e-14) return std::nullopt;  // only descending rays land on it
        const double t = (scene.ground().point - from).dot(scene.ground().normal) / denom;
        if (t <= kEps) return std::nullopt;
        return t;
    };

    const auto receiver_dir = [&]() {
        return (-d + std::tan(spec.receiver_offset_angle) * ray.plane_normal).normalized();
    };

    const auto edge = scene.intersect_edge(o, d);
    const auto front = scene.intersect_surface(o, d, /*entering=*/true);
    const auto direct_ground = ground_hit(o);

    const double t_edge = edge ? edge->t : std::numeric_limits<double>::infinity();
    const double t_front = front ? front->t : std::numeric_limits<double>::infinity();
    const double t_ground = direct_ground ? *direct_ground : std::numeric_limits<double>::infinity();

    // The ray terminates at its first event; the bevel wins boundary ties
    // against the surface mesh it is tangent to.
    if (edge && t_edge <= t_front + 1e-12 && t_edge < t_ground) {
        const double cos_i = -d.dot(edge->normal);
        double intensity;
        if (scene.opaque_stand_in()) {
            intensity = kOpaqueEdgeAlbedo * cos_i * gain;
        } else {
            const double r = fresnel_dielectric(1.0, n_glass, cos_i);
            intensity = scene.glass().material().edge_diffuse_albedo * cos_i * (1.0 - r) * gain;
        }
        out.candidates.push_back({t_edge, intensity, HitClass::edge, false});
        return out;
    }

    if (direct_ground && t_ground < t_front && t_ground < t_edge) {
        const double cos_i = -d.dot(scene.ground().normal);
        out.candidates.push_back(
            {t_ground, scene.ground().diffuse_albedo * cos_i * gain, HitClass::background, false});
        return out;
    }

    if (!front) return out;  // nothing along this ray

    const Vec3 front_point = o + t_front * d;
    const Vec3& n_f = front->normal;
    const double cos_i = std::clamp(-d.dot(n_f), 0.0, 1.0);

    if (scene.opaque_stand_in()) {
        out.candidates.push_back(
            {t_front, kOpaqueSurfaceAlbedo * cos_i * gain, HitClass::surface, false});
        return out;
    }

    const double r_front = fresnel_dielectric(1.0, n_glass, cos_i);
    const MaterialOptics& mat = scene.glass().material();

    // Weak diffuse scatter of the reflected fraction at the front surface.
    out.candidates.push_back(
        {t_front, r_front * mat.surface_diffuse_albedo * cos_i * gain, HitClass::surface, false});

    // Specular flash when the mirror direction enters the receiver cone.
    const Vec3 mirror = d + 2.0 * cos_i * n_f;
    if (std::acos(std::clamp(mirror.dot(receiver_dir()), -1.0, 1.0)) <=
        spec.receiver_acceptance_half_angle) {
        out.candidates.push_back({t_front, r_front * kSpecularBoost * gain, HitClass::surface, true});
    }

    // Refract into the slab.
    const double eta = 1.0 / n_glass;
    const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
    if (k <= 0.0) return out;
    const Vec3 d_in = (eta * d + (eta * cos_i - std::sqrt(k)) * n_f).normalized();

    const auto rear = scene.intersect_surface(front_point + 1e-9 * d_in, d_in, /*entering=*/false);
    if (!rear) return out;  // leaves through the scattering edge region; no coherent return

    const double t_rear = rear->t + 1e-9;
    const double cos_int = std::clamp(d_in.dot(rear->normal), 0.0, 1.0);
    const double r_rear = fresnel_dielectric(n_glass, 1.0, cos_int);

    // Rear-surface diffuse return, attenuated by two front transmissions.
    out.candidates.push_back({t_front + t_rear,
                              (1.0 - r_front) * r_rear * (1.0 - r_front) * mat.surface_diffuse_albedo *
                                  cos_int * gain,
                              HitClass::surface, false});

    // Transmitted ray continues to the opaque background (parallel-slab
    // exit: original direction restored, offset at the exit point).
    const double through = (1.0 - r_front) * (1.0 - r_rear);
    if (through > 1e-9) {
        const Vec3 exit_point = front_point + t_rear * d_in;
        const double attenuation = through * through;  // out and back
        if (const auto bg = ground_hit(exit_point)) {
            const double cos_g = -d.dot(scene.ground().normal);
            out.candidates.push_back({t_front + t_rear + *bg,
                                      scene.ground().diffuse_albedo * cos_g * attenuation * gain,
                                      HitClass::background, false});
        } else {
            out.candidates.push_back({t_front + t_rear + scene.background_distance(),
                                      scene.ground().diffuse_albedo * attenuation * gain,
                                      HitClass::background, false});
        }
    }
    return out;
}

RayReturn cast_ray(const Scene& scene, const Vec3& origin, const Vec3& direction,
                   const ScannerSpec& spec) {
    RayGeometry ray;
    ray.origin = origin;
    ray.direction = direction;
    const Vec3 seed = std::abs(direction.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    ray.plane_normal = direction.cross(seed).normalized();
    return cast_ray(scene, ray, spec);
}

std::optional<SelectedReturn> select_return(const RayReturn& candidates, const ScannerSpec& spec,
                                            std::mt19937_64& rng) {
    const CandidateReturn* best = nullptr;
    for (const CandidateReturn& c : candidates.candidates) {
        if (c.intensity < spec.min_intensity_threshold) continue;
        if (!best || c.intensity > best->intensity) best = &c;
    }
    if (!best) return std::nullopt;

    SelectedReturn sel;
    sel.range = best->range;
    sel.intensity = best->intensity;
    sel.cls = best->cls;
    sel.saturated = best->specular && best->intensity >= spec.saturation_threshold;
    if (sel.saturated) {
        std::uniform_real_distribution<double> bias(-5.0 * spec.range_noise_sigma,
                                                    5.0 * spec.range_noise_sigma);
        sel.range += bias(rng);
    }
    return sel;
}

ScanProfile simulate_profile(const Scene& scene, const RigidTransform& scan_pose,
                             const ScannerSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (!scan_pose.is_valid(1e-9)) throw ValidationError("scan pose is not rigid");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    ScanProfile profile;
    profile.scan_pose = scan_pose;
    profile.records.reserve(static_cast<std::size_t>(spec.rays_per_profile));

    RayGeometry ray;
    ray.origin = scan_pose.translation;
    ray.plane_normal = scan_pose.rotate(Vec3::UnitY());

    for (int i = 0; i < spec.rays_per_profile; ++i) {
        ray.direction = scan_pose.rotate(spec.ray_direction(i));
        const RayReturn candidates = cast_ray(scene, ray, spec);
        const auto sel = select_return(candidates, spec, rng);
        if (!sel) continue;
        double range = sel->range;
        if (spec.range_noise_sigma > 0.0) range += spec.range_noise_sigma * noise(rng);

        ProfileRecord rec;
        rec.ray_index = i;
        rec.range_m = range;
        rec.lateral_m = range * std::sin(spec.ray_angle(i));
        rec.intensity = sel->intensity;
        rec.saturated = sel->saturated;
        rec.cls = sel->cls;
        profile.records.push_back(rec);
    }

    std::sort(profile.records.begin(), profile.records.end(),
              [](const ProfileRecord& a, const ProfileRecord& b) {
                  return a.lateral_m < b.lateral_m ||
                         (a.lateral_m == b.lateral_m && a.ray_index < b.ray_index);
              });
    return profile;
}

Vec3 true_edge_point(const Scene& scene, const RigidTransform& scan_pose) {
    const Vec3 origin = scan_pose.translation;
    const Vec3 plane_normal = scan_pose.rotate(Vec3::UnitY());

    std::optional<Vec3> best;
    double best_dist = std::numeric_limits<double>::infinity();
    const auto& border = scene.posed_border();
    for (std::size_t i = 0; i < border.size(); ++i) {
        const Vec3& a = border[i];
        const Vec3& b = border[(i + 1) % border.size()];
        const double da = plane_normal.dot(a - origin);
        const double db = plane_normal.dot(b - origin);
        std::optional<Vec3> hit;
        if (std::abs(da) < 1e-15) {
            hit = a;
        } else if ((da < 0.0) != (db < 0.0)) {
            const double u = da / (da - db);
            hit = a + u * (b - a);
        }
        if (hit) {
            const double dist = (*hit - origin).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = *hit;
            }
        }
    }
    if (!best) throw NoIntersection("laser plane does not cross the border polyline");
    return *best;
}

}  // namespace edgescan
