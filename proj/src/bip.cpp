#include "edgescan/bip.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace edgescan {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

BIP extract_bip(const ScanProfile& profile, const GroundPlane& ground, const ScannerSpec& spec,
                int profile_index) {
    if (profile.records.empty()) throw EmptyProfile("profile has no returns");

    struct Candidate {
        const ProfileRecord* rec;
        Vec3 point;
        double height;
    };
    std::vector<Candidate> candidates;
    for (const ProfileRecord& rec : profile.records) {
        if (rec.saturated) continue;
        const Vec3 p = record_point_base(spec, profile, rec);
        const double height = ground.signed_distance(p);
        if (height <= 0.0) continue;  // at or below the ground plane
        candidates.push_back({&rec, p, height});
    }
    if (candidates.empty()) throw NoCandidate("all returns saturated or below the ground plane");

    double max_height = candidates.front().height;
    for (const Candidate& c : candidates) max_height = std::max(max_height, c.height);

    // Ties within 1e-9 m of the top go to the lowest ray index.
    const Candidate* best = nullptr;
    for (const Candidate& c : candidates) {
        if (c.height < max_height - 1e-9) continue;
        if (!best || c.rec->ray_index < best->rec->ray_index) best = &c;
    }
    const Vec3 best_point = best->point;

    BIP bip;
    bip.point = best_point;
    bip.profile_index = profile_index;
    bip.intensity = best->rec->intensity;
    return bip;
}

PointCloud BipCollection::to_point_cloud() const {
    PointCloud cloud;
    cloud.points.reserve(bips.size());
    cloud.intensity.reserve(bips.size());
    for (const BIP& b : bips) {
        cloud.points.push_back(b.point);
        cloud.intensity.push_back(b.intensity);
    }
    return cloud;
}

BipCollection collect_bips(const Scene& scene, const std::vector<RigidTransform>& poses,
                           const ScannerSpec& spec, std::uint64_t master_seed) {
    if (poses.empty()) throw std::invalid_argument("collect_bips: needs at least one pose");

    BipCollection out;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const std::uint64_t seed = derive_seed(master_seed, i);
        try {
            const ScanProfile profile = simulate_profile(scene, poses[i], spec, seed);
            out.bips.push_back(extract_bip(profile, scene.ground(), spec, static_cast<int>(i)));
        } catch (const EmptyProfile&) {
            out.skipped_poses.push_back(static_cast<int>(i));
        } catch (const NoCandidate&) {
            out.skipped_poses.push_back(static_cast<int>(i));
        }
    }
    if (out.bips.size() < 3) {
        throw InsufficientPoints("only " + std::to_string(out.bips.size()) +
                                 " BIPs survived extraction; need at least 3");
    }
    return out;
}

void save_bips_csv(const std::vector<BIP>& bips, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write BIP CSV: " + path);
    out.precision(17);
    out << "x,y,z,profile_index,intensity\n";
    for (const BIP& b : bips) {
        out << b.point.x() << ',' << b.point.y() << ',' << b.point.z() << ',' << b.profile_index
            << ',' << b.intensity << '\n';
    }
}

std::vector<BIP> load_bips_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open BIP CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty BIP CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,z,profile_index,intensity") {
        throw ParseError("bad BIP CSV header in " + path);
    }
    std::vector<BIP> bips;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        double vals[5];
        int got = 0;
        while (std::getline(row, field, ',') && got < 5) {
            try {
                vals[got] = std::stod(field);
            } catch (const std::exception&) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
            }
            ++got;
        }
        if (got != 5) throw ParseError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
        BIP b;
        b.point = Vec3(vals[0], vals[1], vals[2]);
        b.profile_index = static_cast<int>(vals[3]);
        b.intensity = vals[4];
        bips.push_back(b);
    }
    return bips;
}

}  // namespace edgescan
