#pragma once

#include <vector>

#include "edgescan/geom.hpp"
#include "edgescan/model.hpp"

namespace edgescan {

struct ICPParams {
    int max_iterations = 50;
    double convergence_tol = 1e-7;       // metres, on RMS change
    double outlier_reject_factor = 3.0;  // multiple of the median correspondence distance
    int min_points = 3;

    void validate() const;
};

struct ICPResult {
    RigidTransform model_to_base;  // maps model frame into the workspace
    double rms = 0.0;              // metres, over accepted correspondences
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;

    // Accepted-correspondence RMS after each completed iteration.
    std::vector<double> rms_history;
};

/// ICP of the sparse scan set (base frame) against the border model cloud
/// (model frame), starting from the coarse pose. The model cloud must be
/// an ordered closed border sampling: correspondences project each scan
/// point onto the polyline through the samples (point-to-line matching,
/// the curve analogue of point-to-plane). Correspondence search is
/// scan-to-model only; outlier rejection by median-distance multiple is
/// disabled below 6 scan points. A collinear scan sets the degenerate
/// flag and returns the partial result.
ICPResult icp_register(const PointCloud& scan, const PointCloud& model, const RigidTransform& init,
                       const ICPParams& params = {});

/// Applies t to every border and surface vertex; optics unchanged.
GlassModel transform_model(const GlassModel& model, const RigidTransform& t);

void save_icp_result_json(const ICPResult& result, const std::string& path);

}  // namespace edgescan
