#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mopr/rotation.hpp"

namespace mopr::kin {

// Fixed kinematic tree with rest-pose bone offsets in meters. The canonical
// skeleton shipped in data/skeleton_smpl22.json has 22 joints with the
// neutral-body offset table; the struct itself is joint-count agnostic so
// that small test skeletons can be built inline.
struct SkeletonModel {
    std::vector<int> parents;                 // parents[0] == -1 (root sentinel)
    std::vector<Eigen::Vector3d> offsets;     // bone offset in the parent frame
    std::vector<int> leg_joints;              // subset used for Legs MPJPE
    int head = -1;
    int lhand = -1;
    int rhand = -1;

    int n_joints() const { return static_cast<int>(parents.size()); }
    bool has_tracked_joints() const { return head >= 0 && lhand >= 0 && rhand >= 0; }

    // Tree structure: root sentinel, topological parent order, offset count.
    // With `canonical` also enforces 22 joints, a leg set of >= 6 joints
    // disjoint from the tracked trio, and valid tracked indices.
    void validate(bool canonical = false) const;

    // Content hash over parents, offsets, leg set and tracked indices.
    std::uint64_t hash() const;
};

SkeletonModel load_skeleton(const std::string& path);
void save_skeleton(const SkeletonModel& skel, const std::string& path);

nlohmann::json skeleton_to_json(const SkeletonModel& skel);
SkeletonModel skeleton_from_json(const nlohmann::json& j);

// Full-body pose: one local rotation per joint plus the root translation.
struct FullPose {
    std::vector<Rot6d> local_rot;
    Eigen::Vector3d root_translation = Eigen::Vector3d::Zero();
};

struct FkResult {
    std::vector<Eigen::Vector3d> positions;   // global, meters
    std::vector<Rotation> rotations;          // global
};

// global_rot[j] = global_rot[parent] * local_rot[j]
// global_pos[j] = global_pos[parent] + global_rot[parent] * offsets[j]
// The root takes root_translation and its own local rotation.
FkResult forward_kinematics(const SkeletonModel& skel, const FullPose& pose);

}  // namespace mopr::kin
