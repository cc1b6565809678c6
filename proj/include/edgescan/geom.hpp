#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edgescan/errors.hpp"

namespace edgescan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Mat3 rot_x(double rad);
Mat3 rot_y(double rad);
Mat3 rot_z(double rad);

// Axis-angle vector (axis * angle, radians) of a rotation matrix.
Vec3 rotation_log(const Mat3& r);

// Nearest orthonormal matrix with det +1 (polar factor via SVD).
Mat3 orthonormalized(const Mat3& r);

/// Rigid SE(3) transform stored as an explicit rotation matrix plus
/// translation, in metres.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
    static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    // Rotation applied to a direction (no translation).
    Vec3 rotate(const Vec3& d) const { return rotation * d; }

    bool is_valid(double tol = 1e-9) const;
};

// Result applies b first, then a. Re-orthonormalizes when accumulated
// drift exceeds 1e-9.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
inline Vec3 apply(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<double> intensity;  // empty, or one entry per point

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_intensity() const { return intensity.size() == points.size() && !points.empty(); }
};

// CSV with header "x,y,z[,intensity]", metres, LF line endings.
PointCloud load_point_cloud_csv(const std::string& path);
void save_point_cloud_csv(const PointCloud& cloud, const std::string& path);

/// Spatial index over a point cloud. Queries return exactly what a
/// brute-force linear scan would, including the lowest-index tie rule.
/// Immutable after construction; safe for concurrent reads.
class NNIndex {
public:
    explicit NNIndex(const PointCloud& cloud);
    explicit NNIndex(std::vector<Vec3> points);

    // (nearest point, Euclidean distance); ties go to the lowest index.
    std::pair<Vec3, double> nearest(const Vec3& q) const;
    std::size_t nearest_index(const Vec3& q) const;

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

private:
    struct Node {
        std::size_t point;    // index into points_
        int axis = -1;        // -1 marks a leaf
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(std::span<std::size_t> items, int depth);
    void search(std::int32_t node, const Vec3& q, double& best_d2, std::size_t& best_idx) const;

    std::vector<Vec3> points_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
    bool brute_ = false;
};

// Number of points below which NNIndex skips tree construction.
inline constexpr std::size_t kNNBruteForceLimit = 64;

/// True when the points sit within `tol` of a common line (or point).
bool points_collinear(std::span<const Vec3> points, double tol = 1e-9);

/// Least-squares rigid fit mapping src onto dst over paired
/// correspondences (cross-covariance decomposition, reflection-corrected).
/// Throws DegenerateGeometry when src is collinear or coincident.
RigidTransform best_fit_transform(std::span<const Vec3> src, std::span<const Vec3> dst);
RigidTransform best_fit_transform(const PointCloud& src, const PointCloud& dst);

}  // namespace edgescan
