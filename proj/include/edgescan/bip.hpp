#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgescan/scansim.hpp"

namespace edgescan {

/// Border Identifier Point: the single filtered point per scan profile
/// representing the glass edge line.
struct BIP {
    Vec3 point = Vec3::Zero();  // base frame
    int profile_index = 0;
    double intensity = 0.0;
};

/// Filters the profile's collinear returns: drops saturated returns and
/// returns at or below the ground plane, then keeps the point with the
/// greatest signed distance along the ground normal. Height ties within
/// 1e-9 m go to the lowest ray index.
BIP extract_bip(const ScanProfile& profile, const GroundPlane& ground, const ScannerSpec& spec,
                int profile_index = 0);

struct BipCollection {
    std::vector<BIP> bips;
    std::vector<int> skipped_poses;  // pose indices whose extraction failed

    PointCloud to_point_cloud() const;
};

/// One BIP per scan pose, in pose order. Poses whose extraction fails are
/// recorded and skipped. Per-profile seeds derive from the master seed by
/// pose index, so results are schedule-independent.
BipCollection collect_bips(const Scene& scene, const std::vector<RigidTransform>& poses,
                           const ScannerSpec& spec, std::uint64_t master_seed);

// CSV "x,y,z,profile_index,intensity", metres.
void save_bips_csv(const std::vector<BIP>& bips, const std::string& path);
std::vector<BIP> load_bips_csv(const std::string& path);

// Deterministic seed derivation (splitmix-style mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace edgescan
