#include "edgescan/geom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace edgescan {

Mat3 rot_x(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitX()).toRotationMatrix();
}

Mat3 rot_y(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rot_z(double rad) {
    return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& r) {
    const Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
}

Mat3 orthonormalized(const Mat3& r) {
    Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 q = svd.matrixU() * svd.matrixV().transpose();
    if (q.determinant() < 0.0) {
        Mat3 flip = Mat3::Identity();
        flip(2, 2) = -1.0;
        q = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    return q;
}

bool RigidTransform::is_valid(double tol) const {
    if (!translation.allFinite() || !rotation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

namespace {

double orthogonality_drift(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    RigidTransform out;
    out.rotation = a.rotation * b.rotation;
    out.translation = a.rotation * b.translation + a.translation;
    if (orthogonality_drift(out.rotation) > 1e-9) {
        out.rotation = orthonormalized(out.rotation);
    }
    return out;
}

RigidTransform invert(const RigidTransform& t) {
    RigidTransform out;
    out.rotation = t.rotation.transpose();
    out.translation = -(out.rotation * t.translation);
    return out;
}

PointCloud load_point_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open point cloud CSV: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty point cloud CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    bool with_intensity = false;
    if (line == "x,y,z,intensity") {
        with_intensity = true;
    } else if (line != "x,y,z") {
        throw ParseError("bad point cloud CSV header '" + line + "' in " + path);
    }

    PointCloud cloud;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        double vals[4] = {0, 0, 0, 0};
        const int expected = with_intensity ? 4 : 3;
        int got = 0;
        while (std::getline(row, field, ',')) {
            if (got >= expected) break;
            try {
                vals[got] = std::stod(field);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
            }
            ++got;
        }
        if (got != expected) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(expected) + " fields");
        }
        cloud.points.emplace_back(vals[0], vals[1], vals[2]);
        if (with_intensity) cloud.intensity.push_back(vals[3]);
    }
    return cloud;
}

void save_point_cloud_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw ParseError("cannot write point cloud CSV: " + path);
    out.precision(17);
    const bool with_intensity = cloud.has_intensity();
    out << (with_intensity ? "x,y,z,intensity\n" : "x,y,z\n");
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out << p.x() << ',' << p.y() << ',' << p.z();
        if (with_intensity) out << ',' << cloud.intensity[i];
        out << '\n';
    }
}

NNIndex::NNIndex(const PointCloud& cloud) : NNIndex(cloud.points) {}

NNIndex::NNIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.size() < kNNBruteForceLimit) {
        brute_ = true;
        return;
    }
    std::vector<std::size_t> items(points_.size());
    std::iota(items.begin(), items.end(), 0);
    nodes_.reserve(points_.size());
    root_ = build(items, 0);
}

std::int32_t NNIndex::build(std::span<std::size_t> items, int depth) {
    if (items.empty()) return -1;
    const int axis = depth % 3;
    const std::size_t mid = items.size() / 2;
    std::nth_element(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(mid), items.end(),
                     [&](std::size_t a, std::size_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{items[mid], axis, -1, -1});
    const std::int32_t left = build(items.first(mid), depth + 1);
    const std::int32_t right = build(items.subspan(mid + 1), depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void NNIndex::search(std::int32_t node, const Vec3& q, double& best_d2, std::size_t& best_idx) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Vec3& p = points_[n.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && n.point < best_idx)) {
        best_d2 = d2;
        best_idx = n.point;
    }
    const double delta = q[n.axis] - p[n.axis];
    const std::int32_t near = delta < 0.0 ? n.left : n.right;
    const std::int32_t far = delta < 0.0 ? n.right : n.left;
    search(near, q, best_d2, best_idx);
    // <= keeps equal-distance candidates reachable so ties match brute force
    if (delta * delta <= best_d2) search(far, q, best_d2, best_idx);
}

std::size_t NNIndex::nearest_index(const Vec3& q) const {
    if (points_.empty()) throw EmptyCloud("nearest-neighbor query on empty cloud");
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_idx = points_.size();
    if (brute_) {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best_idx = i;
            }
        }
        return best_idx;
    }
    search(root_, q, best_d2, best_idx);
    return best_idx;
}

std::pair<Vec3, double> NNIndex::nearest(const Vec3& q) const {
    const std::size_t idx = nearest_index(q);
    return {points_[idx], (points_[idx] - q).norm()};
}

bool points_collinear(std::span<const Vec3> points, double tol) {
    if (points.size() < 3) return true;
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    Mat3 scatter = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 d = p - centroid;
        scatter += d * d.transpose();
    }
    scatter /= static_cast<double>(points.size());
    Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    // Second-largest variance below tol^2 means rank < 2. The relative
    // floor absorbs eigensolver noise that scales with the dominant mode.
    const double floor = 1e-12 * std::max(eig.eigenvalues()(2), 0.0);
    return eig.eigenvalues()(1) <= tol * tol + floor;
}

RigidTransform best_fit_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size()) {
        throw std::invalid_argument("best_fit_transform: size mismatch");
    }
    if (src.size() < 3) {
        throw std::invalid_argument("best_fit_transform: needs at least 3 correspondences");
    }
    if (points_collinear(src, 1e-9)) {
        throw DegenerateGeometry("best_fit_transform: source points collinear or coincident");
    }
    const auto n = static_cast<double>(src.size());

    Vec3 c_src = Vec3::Zero();
    Vec3 c_dst = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        c_src += src[i];
        c_dst += dst[i];
    }
    c_src /= n;
    c_dst /= n;

    Mat3 cross = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 a = src[i] - c_src;
        const Vec3 b = dst[i] - c_dst;
        cross += b * a.transpose();
    }

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }
    RigidTransform out;
    out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    out.translation = c_dst - out.rotation * c_src;
    return out;
}

RigidTransform best_fit_transform(const PointCloud& src, const PointCloud& dst) {
    return best_fit_transform(std::span<const Vec3>(src.points), std::span<const Vec3>(dst.points));
}

}  // namespace edgescan
