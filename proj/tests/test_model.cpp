#include "doctest.h"

#include <filesystem>

#include "edgescan/model.hpp"
#include "oracles.hpp"

using namespace edgescan;

namespace {

GlassModel unit_square(double thickness = 0.004, double bevel = 0.0005) {
    return make_flat_panel(1.0, 1.0, thickness, bevel);
}

}  // namespace

TEST_CASE("flat panel geometry") {
    const GlassModel panel = make_flat_panel(0.4, 0.3, 0.004, 0.0005);
    CHECK(panel.perimeter() == doctest::Approx(1.4).epsilon(1e-12));

    Vec3 centroid = Vec3::Zero();
    for (const Vec3& v : panel.border()) centroid += v;
    centroid /= static_cast<double>(panel.border().size());
    CHECK(centroid.norm() < 1e-12);

    CHECK_THROWS_AS(make_flat_panel(0.0, 0.3, 0.004, 0.0005), ValidationError);
    CHECK_THROWS_AS(make_flat_panel(0.4, 0.3, 0.0, 0.0005), ValidationError);
}

TEST_CASE("border validation") {
    std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(GlassModel(two, {}, 0.004, 0.0, MaterialOptics{}), ValidationError);

    MaterialOptics bad;
    bad.edge_diffuse_albedo = bad.surface_diffuse_albedo;  // edge must scatter more
    std::vector<Vec3> tri = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(GlassModel(tri, {}, 0.004, 0.0, bad), ValidationError);
}

TEST_CASE("sample_border counts and membership") {
    const GlassModel square = unit_square();
    const PointCloud samples = square.sample_border(0.5);
    CHECK(samples.size() == 8);  // perimeter 4 / 0.5

    const PointCloud sparse = square.sample_border(10.0);
    CHECK(sparse.size() == square.border().size());  // vertices only

    const PointCloud fine = square.sample_border(0.037);
    for (const Vec3& p : fine.points) {
        CHECK(oracles::point_polyline_distance(p, square.border()) < 1e-12);
    }
    CHECK((fine.points.front() - square.border().front()).norm() < 1e-15);  // includes vertex 0

    // Gaps never exceed the spacing, closing segment included.
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const Vec3& a = fine.points[i];
        const Vec3& b = fine.points[(i + 1) % fine.size()];
        CHECK((b - a).norm() <= 0.037 + 1e-12);
    }
}

TEST_CASE("sample_border grows monotonically as spacing decreases") {
    const GlassModel glass = make_side_glass(0.4, 0.3, 1.0, 0.004, 0.0005);
    std::size_t prev = 0;
    for (const double spacing : {0.1, 0.05, 0.02, 0.01, 0.005, 0.002}) {
        const std::size_t count = glass.sample_border(spacing).size();
        CHECK(count >= prev);
        prev = count;
    }
}

TEST_CASE("edge_point_at endpoints and wrap") {
    const GlassModel square = unit_square();
    CHECK((square.edge_point_at(0.0) - square.border().front()).norm() < 1e-12);
    CHECK((square.edge_point_at(square.perimeter()) - square.border().front()).norm() < 1e-12);

    // Half the perimeter from one corner lands on the opposite corner.
    const Vec3 opposite = square.edge_point_at(square.perimeter() / 2.0);
    CHECK((opposite - (-square.border().front())).head<2>().norm() < 1e-12);
}

TEST_CASE("edge_point_at is 1-Lipschitz in arc length") {
    const GlassModel glass = make_side_glass(0.4, 0.3, 1.0, 0.004, 0.0005);
    const double perimeter = glass.perimeter();
    for (int i = 0; i < 500; ++i) {
        const double s = perimeter * static_cast<double>(i) / 500.0;
        const double delta = 1e-4 + 1e-3 * static_cast<double>(i % 7);
        const double step = (glass.edge_point_at(s + delta) - glass.edge_point_at(s)).norm();
        CHECK(step <= delta + 1e-12);
    }
}

TEST_CASE("side glass border lies on the cylinder") {
    const double radius = 1.0;
    const GlassModel glass = make_side_glass(0.4, 0.3, radius, 0.004, 0.0005);

    // Cylinder axis runs along y through (0, *, -radius).
    for (const Vec3& v : glass.border()) {
        const double r = std::hypot(v.x(), v.z() + radius);
        CHECK(std::abs(r - radius) < 1e-9);
    }

    // Curvature makes the border longer than the flat rectangle outline.
    CHECK(glass.perimeter() > 2.0 * (0.4 + 0.3));

    // Non-planar: border deviates from its best-fit plane.
    double max_dev = 0.0;
    for (const Vec3& v : glass.border()) max_dev = std::max(max_dev, std::abs(v.z()));
    CHECK(max_dev > 1e-3);
}

TEST_CASE("side glass flattens in the large-radius limit") {
    const GlassModel nearly_flat = make_side_glass(0.4, 0.3, 1e6, 0.004, 0.0005);
    for (const Vec3& v : nearly_flat.border()) {
        CHECK(std::abs(v.z()) < 1e-6);
    }
    CHECK(nearly_flat.perimeter() == doctest::Approx(1.4).epsilon(1e-6));

    CHECK_THROWS_AS(make_side_glass(0.4, 0.3, 0.15, 0.004, 0.0005), ValidationError);
}

TEST_CASE("model manifest round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "edgescan_model_test";
    std::filesystem::create_directories(dir);
    const std::string manifest = (dir / "side_glass.json").string();

    const GlassModel glass = make_side_glass(0.4, 0.3, 1.0, 0.004, 0.0005);
    save_glass_model(glass, manifest);
    const GlassModel loaded = load_glass_model(manifest);

    REQUIRE(loaded.border().size() == glass.border().size());
    for (std::size_t i = 0; i < glass.border().size(); ++i) {
        CHECK((loaded.border()[i] - glass.border()[i]).norm() <= 1e-12);
    }
    REQUIRE(loaded.surface().size() == glass.surface().size());
    CHECK(loaded.thickness() == glass.thickness());
    CHECK(loaded.bevel_radius() == glass.bevel_radius());
    CHECK(loaded.material().refractive_index == glass.material().refractive_index);
    CHECK(loaded.perimeter() == doctest::Approx(glass.perimeter()).epsilon(1e-15));

    CHECK_THROWS_AS(load_glass_model((dir / "missing.json").string()), ParseError);
}

TEST_CASE("rectangle manifest arc length equals the perimeter") {
    const auto dir = std::filesystem::temp_directory_path() / "edgescan_model_rect";
    std::filesystem::create_directories(dir);
    const std::string manifest = (dir / "panel.json").string();
    save_glass_model(make_flat_panel(0.4, 0.3, 0.004, 0.0005), manifest);
    const GlassModel loaded = load_glass_model(manifest);
    CHECK(loaded.perimeter() == doctest::Approx(oracles::polyline_arc_length(loaded.border())));
    CHECK(loaded.perimeter() == doctest::Approx(1.4));
}

TEST_CASE("border frames point up and outward") {
    const GlassModel panel = make_flat_panel(0.4, 0.3, 0.004, 0.0005);
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& v : panel.border()) centroid += v;
    centroid /= static_cast<double>(panel.border().size());

    for (const BorderFrame& f : border_frames(panel)) {
        CHECK(f.up.dot(Vec3::UnitZ()) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(f.outward.dot(0.5 * (f.a + f.b) - centroid) > 0.0);
        CHECK(std::abs(f.tangent.dot(f.up)) < 1e-9);
        CHECK(std::abs(f.tangent.dot(f.outward)) < 1e-9);
    }
}
