#pragma once

#include <string>
#include <vector>

#include "edgescan/geom.hpp"

namespace edgescan {

/// Optical material parameters of the glass.
struct MaterialOptics {
    double refractive_index = 1.5;
    double surface_diffuse_albedo = 0.01;  // fraction of reflected light scattered diffusely
    double edge_diffuse_albedo = 0.30;     // finished edge scatters far more

    void validate() const;
};

struct Triangle {
    Vec3 a, b, c;

    Vec3 normal() const { return (b - a).cross(c - a).normalized(); }
    Vec3 centroid() const { return (a + b + c) / 3.0; }
};

/// Support surface beneath the glass; defines "above" for BIP selection.
struct GroundPlane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double diffuse_albedo = 0.5;

    double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
    void validate() const;
};

/// Glass object model: closed border polyline (the edge line), surface
/// mesh, edge bevel radius, thickness, and optics. Immutable after
/// construction.
class GlassModel {
public:
    // Border vertices are stored without a repeated closing vertex; the
    // polyline closes implicitly from the last vertex back to the first.
    GlassModel(std::vector<Vec3> border, std::vector<Triangle> surface, double thickness,
               double bevel_radius, MaterialOptics material);

    const std::vector<Vec3>& border() const { return border_; }
    const std::vector<Triangle>& surface() const { return surface_; }
    double thickness() const { return thickness_; }
    double bevel_radius() const { return bevel_radius_; }
    const MaterialOptics& material() const { return material_; }

    double perimeter() const { return perimeter_; }
    std::size_t segment_count() const { return border_.size(); }
    Vec3 segment_start(std::size_t i) const { return border_[i]; }
    Vec3 segment_end(std::size_t i) const { return border_[(i + 1) % border_.size()]; }
    double segment_length(std::size_t i) const;

    // Point at arc length s along the border; s wraps modulo the perimeter.
    Vec3 edge_point_at(double s) const;

    // Segment holding arc length s (wrapped).
    std::size_t segment_index_at(double s) const;

    // Border samples spaced at most `spacing` apart in arc length,
    // starting at vertex 0. All samples lie exactly on the polyline.
    PointCloud sample_border(double spacing) const;

private:
    std::vector<Vec3> border_;
    std::vector<Triangle> surface_;
    double thickness_;
    double bevel_radius_;
    MaterialOptics material_;
    std::vector<double> cumulative_;  // cumulative_[i] = arc length at vertex i
    double perimeter_ = 0.0;
};

// Manifest is JSON referencing a border CSV and an ASCII PLY surface mesh.
GlassModel load_glass_model(const std::string& manifest_path);
void save_glass_model(const GlassModel& model, const std::string& manifest_path);

/// Rectangular flat panel. Model frame: top surface in the z=0 plane,
/// glass extends down to z=-thickness, border centered on the origin.
GlassModel make_flat_panel(double width, double height, double thickness, double bevel,
                           MaterialOptics material = {});

/// Non-planar panel bent over a cylinder of radius `curvature_radius`
/// (axis along y, below the glass), convex side up. The border lies on
/// the outer cylindrical surface; apex of the outer surface touches z=0.
GlassModel make_side_glass(double chord, double height, double curvature_radius, double thickness,
                           double bevel, MaterialOptics material = {});

/// Local frame of one border segment, model frame. `up` is the surface
/// normal at the rim (from the nearest mesh facet), `outward` points away
/// from the glass interior.
struct BorderFrame {
    Vec3 a, b;
    Vec3 tangent;
    Vec3 up;
    Vec3 outward;
    double length = 0.0;
};

std::vector<BorderFrame> border_frames(const GlassModel& model);

}  // namespace edgescan
