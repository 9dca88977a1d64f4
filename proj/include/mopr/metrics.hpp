#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mopr/motion_clip.hpp"
#include "mopr/prior.hpp"
#include "mopr/skeleton.hpp"

namespace mopr::eval {

// Global joint positions, [frame][joint], meters.
using Positions = std::vector<std::vector<Eigen::Vector3d>>;

Positions fk_positions_clip(const kin::SkeletonModel& skel, const data::MotionClip& clip);

// Subtract the root joint's position per frame (pelvis-relative coordinates).
Positions align_pelvis(const Positions& p);

// Mean Euclidean per-joint position error in cm. `joint_set` restricts the
// mean to those joints (the legs variant). Positions must already be in the
// intended alignment.
double mpjpe_cm(const Positions& pred, const Positions& gt,
                const std::vector<int>* joint_set = nullptr);

// Mean per-joint velocity error in cm/s; velocities are frame deltas * fps.
double mpjve_cm_per_s(const Positions& pred, const Positions& gt, double fps);

// 1 - cos between the eval prior's latents of the two windows. The eval prior
// must be distinct from any prior trained against; pass the training prior's
// parameter hash (0 = trained without one) to enforce that.
double motion_distance(const prior::FullMotionPrior& eval_prior,
                       const data::MotionClip& pred_window,
                       const data::MotionClip& gt_window, std::uint64_t train_prior_hash);

struct FidResult {
    double value = 0.0;
    double neg_clamp = 0.0;  // total magnitude of eigenvalues clamped to zero
};

// Frechet distance between Gaussians fit to the two sample sets (rows =
// samples). Matrix square roots via symmetric eigendecomposition; negative
// eigenvalues are clamped to zero and their magnitude reported.
FidResult fid_detailed(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace mopr::eval
