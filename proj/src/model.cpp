#include "edgescan/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace edgescan {

namespace fs = std::filesystem;
using nlohmann::json;

void MaterialOptics::validate() const {
    if (!(refractive_index > 1.0)) throw ValidationError("refractive_index must exceed 1");
    if (surface_diffuse_albedo < 0.0 || surface_diffuse_albedo > 1.0)
        throw ValidationError("surface_diffuse_albedo outside [0,1]");
    if (edge_diffuse_albedo < 0.0 || edge_diffuse_albedo > 1.0)
        throw ValidationError("edge_diffuse_albedo outside [0,1]");
    if (!(edge_diffuse_albedo > surface_diffuse_albedo))
        throw ValidationError("edge_diffuse_albedo must exceed surface_diffuse_albedo");
}

void GroundPlane::validate() const {
    if (std::abs(normal.norm() - 1.0) > 1e-12) throw ValidationError("ground normal must be unit length");
    if (diffuse_albedo < 0.0 || diffuse_albedo > 1.0) throw ValidationError("ground albedo outside [0,1]");
}

GlassModel::GlassModel(std::vector<Vec3> border, std::vector<Triangle> surface, double thickness,
                       double bevel_radius, MaterialOptics material)
    : border_(std::move(border)),
      surface_(std::move(surface)),
      thickness_(thickness),
      bevel_radius_(bevel_radius),
      material_(material) {
    // Accept an explicitly closed polyline (first == last) and strip the repeat.
    if (border_.size() >= 2 && (border_.front() - border_.back()).norm() < 1e-12) {
        border_.pop_back();
    }
    if (border_.size() < 3) throw ValidationError("border needs at least 3 vertices");
    if (!(thickness_ > 0.0)) throw ValidationError("thickness must be positive");
    if (bevel_radius_ < 0.0) throw ValidationError("bevel radius must be non-negative");
    if (bevel_radius_ >= thickness_) throw ValidationError("bevel radius must be below thickness");
    material_.validate();

    cumulative_.resize(border_.size() + 1);
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i < border_.size(); ++i) {
        cumulative_[i + 1] = cumulative_[i] + (segment_end(i) - segment_start(i)).norm();
    }
    perimeter_ = cumulative_.back();
    if (!(perimeter_ > 0.0)) throw ValidationError("border has zero arc length");
}

double GlassModel::segment_length(std::size_t i) const {
    return cumulative_[i + 1] - cumulative_[i];
}

std::size_t GlassModel::segment_index_at(double s) const {
    s = std::fmod(s, perimeter_);
    if (s < 0.0) s += perimeter_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t seg = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    seg = seg == 0 ? 0 : seg - 1;
    return seg >= border_.size() ? border_.size() - 1 : seg;
}

Vec3 GlassModel::edge_point_at(double s) const {
    s = std::fmod(s, perimeter_);
    if (s < 0.0) s += perimeter_;
    const std::size_t seg = segment_index_at(s);
    const double local = s - cumulative_[seg];
    const double len = segment_length(seg);
    const double u = len > 0.0 ? std::min(local / len, 1.0) : 0.0;
    return segment_start(seg) + u * (segment_end(seg) - segment_start(seg));
}

PointCloud GlassModel::sample_border(double spacing) const {
    if (!(spacing > 0.0)) throw std::invalid_argument("sample_border: spacing must be positive");
    PointCloud cloud;
    for (std::size_t i = 0; i < border_.size(); ++i) {
        const Vec3 a = segment_start(i);
        const Vec3 b = segment_end(i);
        const double len = segment_length(i);
        const auto subdivisions = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
        for (std::size_t j = 0; j < subdivisions; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(subdivisions);
            cloud.points.push_back(a + u * (b - a));
        }
    }
    return cloud;
}

namespace {

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection, closest point on triangle.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return (p - (a + v * ab + w * ac)).norm();
}

}  // namespace

std::vector<BorderFrame> border_frames(const GlassModel& model) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& v : model.border()) centroid += v;
    centroid /= static_cast<double>(model.border().size());

    std::vector<BorderFrame> frames;
    frames.reserve(model.segment_count());
    for (std::size_t i = 0; i < model.segment_count(); ++i) {
        BorderFrame f;
        f.a = model.segment_start(i);
        f.b = model.segment_end(i);
        f.length = (f.b - f.a).norm();
        if (f.length < 1e-12) {
            f.tangent = Vec3::UnitX();
            f.up = Vec3::UnitZ();
            f.outward = Vec3::UnitY();
            frames.push_back(f);
            continue;
        }
        f.tangent = (f.b - f.a) / f.length;

        const Vec3 mid = 0.5 * (f.a + f.b);
        double best = std::numeric_limits<double>::infinity();
        Vec3 up = Vec3::UnitZ();
        for (const Triangle& tri : model.surface()) {
            const double dist = point_triangle_distance(mid, tri.a, tri.b, tri.c);
            if (dist < best) {
                best = dist;
                up = tri.normal();
            }
        }
        f.up = (up - up.dot(f.tangent) * f.tangent).normalized();
        f.outward = f.tangent.cross(f.up).normalized();
        if (f.outward.dot(mid - centroid) < 0.0) f.outward = -f.outward;
        frames.push_back(f);
    }
    return frames;
}

namespace {

std::vector<Triangle> load_ply_surface(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open PLY: " + path);

    std::string line;
    std::size_t n_vertices = 0;
    std::size_t n_faces = 0;
    bool header_done = false;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        throw ParseError("not a PLY file: " + path);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream row(line);
        std::string tok;
        row >> tok;
        if (tok == "format") {
            std::string fmt;
            row >> fmt;
            if (fmt != "ascii") throw ParseError("only ascii PLY supported: " + path);
        } else if (tok == "element") {
            std::string kind;
            std::size_t count = 0;
            row >> kind >> count;
            if (kind == "vertex") n_vertices = count;
            if (kind == "face") n_faces = count;
        } else if (tok == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw ParseError("PLY header not terminated: " + path);

    std::vector<Vec3> vertices(n_vertices);
    for (std::size_t i = 0; i < n_vertices; ++i) {
        if (!(in >> vertices[i].x() >> vertices[i].y() >> vertices[i].z())) {
            throw ParseError("truncated PLY vertex list: " + path);
        }
    }
    std::vector<Triangle> tris;
    tris.reserve(n_faces);
    for (std::size_t i = 0; i < n_faces; ++i) {
        std::size_t n = 0, ia = 0, ib = 0, ic = 0;
        if (!(in >> n >> ia >> ib >> ic)) throw ParseError("truncated PLY face list: " + path);
        if (n != 3) throw ParseError("PLY face is not a triangle: " + path);
        if (ia >= n_vertices || ib >= n_vertices || ic >= n_vertices) {
            throw ParseError("PLY face index out of range: " + path);
        }
        tris.push_back({vertices[ia], vertices[ib], vertices[ic]});
    }
    return tris;
}

void save_ply_surface(const std::vector<Triangle>& tris, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write PLY: " + path);
    out.precision(17);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << tris.size() * 3 << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << tris.size() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    for (const Triangle& t : tris) {
        for (const Vec3* v : {&t.a, &t.b, &t.c}) {
            out << v->x() << ' ' << v->y() << ' ' << v->z() << '\n';
        }
    }
    for (std::size_t i = 0; i < tris.size(); ++i) {
        out << "3 " << 3 * i << ' ' << 3 * i + 1 << ' ' << 3 * i + 2 << '\n';
    }
}

}  // namespace

GlassModel load_glass_model(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open model manifest: " + manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError("bad model manifest " + manifest_path + ": " + e.what());
    }

    const fs::path base = fs::path(manifest_path).parent_path();
    try {
        const auto border_csv = (base / manifest.at("border_csv").get<std::string>()).string();
        const auto surface_ply = (base / manifest.at("surface_ply").get<std::string>()).string();
        MaterialOptics material;
        material.refractive_index = manifest.at("refractive_index").get<double>();
        material.surface_diffuse_albedo = manifest.at("surface_diffuse_albedo").get<double>();
        material.edge_diffuse_albedo = manifest.at("edge_diffuse_albedo").get<double>();

        const PointCloud border = load_point_cloud_csv(border_csv);
        return GlassModel(border.points, load_ply_surface(surface_ply),
                          manifest.at("thickness_m").get<double>(),
                          manifest.at("bevel_radius_m").get<double>(), material);
    } catch (const json::exception& e) {
        throw ParseError("model manifest " + manifest_path + " missing field: " + e.what());
    }
}

void save_glass_model(const GlassModel& model, const std::string& manifest_path) {
    const fs::path manifest(manifest_path);
    const fs::path base = manifest.parent_path();
    const std::string stem = manifest.stem().string();
    const std::string border_csv = stem + "_border.csv";
    const std::string surface_ply = stem + "_surface.ply";

    PointCloud border;
    border.points = model.border();
    save_point_cloud_csv(border, (base / border_csv).string());
    save_ply_surface(model.surface(), (base / surface_ply).string());

    json manifest_json = {
        {"border_csv", border_csv},
        {"surface_ply", surface_ply},
        {"thickness_m", model.thickness()},
        {"bevel_radius_m", model.bevel_radius()},
        {"refractive_index", model.material().refractive_index},
        {"surface_diffuse_albedo", model.material().surface_diffuse_albedo},
        {"edge_diffuse_albedo", model.material().edge_diffuse_albedo},
    };
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw ParseError("cannot write model manifest: " + manifest_path);
    out << manifest_json.dump(2) << '\n';
}

GlassModel make_flat_panel(double width, double height, double thickness, double bevel,
                           MaterialOptics material) {
    if (!(width > 0.0) || !(height > 0.0)) throw ValidationError("panel dimensions must be positive");
    const double hw = width / 2.0;
    const double hh = height / 2.0;

    // Counter-clockwise seen from +z so segment tangent x surface normal
    // points outward.
    const std::vector<Vec3> border = {
        {-hw, -hh, 0.0}, {hw, -hh, 0.0}, {hw, hh, 0.0}, {-hw, hh, 0.0}};

    std::vector<Triangle> surface;
    const Vec3 t0(-hw, -hh, 0.0), t1(hw, -hh, 0.0), t2(hw, hh, 0.0), t3(-hw, hh, 0.0);
    surface.push_back({t0, t1, t2});  // top, normal +z
    surface.push_back({t0, t2, t3});
    const double zb = -thickness;
    const Vec3 b0(-hw, -hh, zb), b1(hw, -hh, zb), b2(hw, hh, zb), b3(-hw, hh, zb);
    surface.push_back({b0, b2, b1});  // bottom, normal -z
    surface.push_back({b0, b3, b2});

    return GlassModel(border, surface, thickness, bevel, material);
}

GlassModel make_side_glass(double chord, double height, double curvature_radius, double thickness,
                           double bevel, MaterialOptics material) {
    if (!(chord > 0.0) || !(height > 0.0)) throw ValidationError("glass dimensions must be positive");
    if (!(curvature_radius > chord / 2.0)) {
        throw ValidationError("curvature_radius must exceed half the chord");
    }
    const double r_out = curvature_radius;
    const double r_in = curvature_radius - thickness;
    if (!(r_in > 0.0)) throw ValidationError("thickness exceeds curvature radius");
    const double phi0 = std::asin(chord / (2.0 * r_out));
    const double hh = height / 2.0;

    // Outer surface point at cylinder angle phi (axis along y at z = -r_out).
    const auto outer = [&](double phi, double y) {
        return Vec3(r_out * std::sin(phi), y, r_out * std::cos(phi) - r_out);
    };
    const auto inner = [&](double phi, double y) {
        return Vec3(r_in * std::sin(phi), y, r_in * std::cos(phi) - r_out);
    };

    // Border: two arcs (y = +-hh) joined by straight ends, CCW from +z.
    const double arc_len = 2.0 * phi0 * r_out;
    const auto arc_steps = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(arc_len / 0.002)));
    std::vector<Vec3> border;
    for (std::size_t i = 0; i <= arc_steps; ++i) {  // y = -hh arc, -phi0 -> +phi0
        const double phi = -phi0 + 2.0 * phi0 * static_cast<double>(i) / static_cast<double>(arc_steps);
        border.push_back(outer(phi, -hh));
    }
    for (std::size_t i = 0; i <= arc_steps; ++i) {  // y = +hh arc, +phi0 -> -phi0
        const double phi = phi0 - 2.0 * phi0 * static_cast<double>(i) / static_cast<double>(arc_steps);
        border.push_back(outer(phi, hh));
    }
    // The straight end at +phi0 is the segment between the two arcs; the
    // one at -phi0 closes the loop implicitly (last vertex back to first).

    std::vector<Triangle> surface;
    const auto n_phi = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(arc_len / 0.01)));
    const auto n_y = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(height / 0.02)));
    for (std::size_t i = 0; i < n_phi; ++i) {
        const double p0 = -phi0 + 2.0 * phi0 * static_cast<double>(i) / static_cast<double>(n_phi);
        const double p1 = -phi0 + 2.0 * phi0 * static_cast<double>(i + 1) / static_cast<double>(n_phi);
        for (std::size_t j = 0; j < n_y; ++j) {
            const double y0 = -hh + height * static_cast<double>(j) / static_cast<double>(n_y);
            const double y1 = -hh + height * static_cast<double>(j + 1) / static_cast<double>(n_y);
            // Outer surface, normals pointing up/outward.
            surface.push_back({outer(p0, y0), outer(p1, y0), outer(p1, y1)});
            surface.push_back({outer(p0, y0), outer(p1, y1), outer(p0, y1)});
            // Inner surface, normals pointing down/in.
            surface.push_back({inner(p0, y0), inner(p1, y1), inner(p1, y0)});
            surface.push_back({inner(p0, y0), inner(p0, y1), inner(p1, y1)});
        }
    }

    return GlassModel(border, surface, thickness, bevel, material);
}

}  // namespace edgescan
