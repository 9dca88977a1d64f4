#pragma once

#include "mopr/skeleton.hpp"
#include "mopr/tensor.hpp"

namespace mopr::nn {

// Gram-Schmidt decode, batched over rows (one frame per row). Input T x 6 in
// the library's 6D layout (first column, then second column of R); output
// T x 9 row-major flattened matrices. Throws DegenerateInput like the
// non-differentiable decoder.
Var rot6d_to_rotmat_rows(const Var& r6);

// R_a * R_b per row, both T x 9 row-major.
Var compose_rotmat_rows(const Var& a, const Var& b);

// R * v per row with a constant vector; T x 9 -> T x 3.
Var rotate_rows(const Var& rotmat, const Eigen::Vector3d& v);

// Joint positions for a window of poses. rot_block is T x (6 * n_joints)
// local rotations; trans (T x 3) is optional, leave undefined for
// root-relative positions. Output T x (3 * n_joints).
Var fk_positions(const kin::SkeletonModel& skel, const Var& rot_block,
                 const Var& trans = {});

}  // namespace mopr::nn
