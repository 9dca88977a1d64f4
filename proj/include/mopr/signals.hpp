#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "mopr/motion_clip.hpp"
#include "mopr/rotation.hpp"
#include "mopr/skeleton.hpp"

namespace mopr::sig {

// Global position and rotation of the three tracked joints, order
// head, left hand, right hand.
struct SparseSignalFrame {
    std::array<Eigen::Vector3d, 3> g3;
    std::array<kin::Rot6d, 3> r3;
};

// 54 reals per frame, laid out [g3 (9) | dg3 (9) | r3 (18) | dr3 (18)].
// Velocities are per-frame deltas; the metric layer converts to per-second.
struct AugmentedSignalFrame {
    Eigen::Matrix<double, 54, 1> x54;
};

struct SparseMotionSequence {
    std::vector<AugmentedSignalFrame> frames;
    double fps = 30.0;

    int n_frames() const { return static_cast<int>(frames.size()); }
};

// Appends positional and angular velocities to each frame. Frame 0 copies
// frame 1's velocities; a single-frame input gets zero-motion values.
SparseMotionSequence augment(const std::vector<SparseSignalFrame>& raw, double fps);

// Per frame: subtract the three joints' mean (x, z) from each joint's (x, z).
// y, velocities, and rotations pass through untouched.
SparseMotionSequence normalize_horizontal(const SparseMotionSequence& seq);

// FK per frame, then pick the skeleton's tracked joints (global transforms,
// root translation included).
std::vector<SparseSignalFrame> extract_sparse_signals(const kin::SkeletonModel& skel,
                                                      const data::MotionClip& motion);

}  // namespace mopr::sig
