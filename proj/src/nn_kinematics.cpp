#include "mopr/nn_kinematics.hpp"

#include <cmath>

#include "mopr/errors.hpp"

namespace mopr::nn {

namespace {

constexpr double kDegenerateTol = 1e-9;

Var col(const Var& m, int c) { return slice_cols(m, c, c + 1); }

Var row_norm(const Var& m) { return sqrt(row_sum(mul(m, m))); }

}  // namespace

Var rot6d_to_rotmat_rows(const Var& r6) {
    if (r6.cols() != 6)
        throw ShapeError("rot6d_to_rotmat_rows: want T x 6, got " +
                         std::to_string(r6.cols()) + " cols");
    Var a1 = slice_cols(r6, 0, 3);
    Var a2 = slice_cols(r6, 3, 6);

    for (int t = 0; t < r6.rows(); ++t)
        if (a1.value().row(t).norm() < kDegenerateTol)
            throw DegenerateInput("rot6d decode: first vector near zero at row " +
                                  std::to_string(t));
    Var b1 = div(a1, row_norm(a1));

    Var d = row_sum(mul(b1, a2));
    Var u2 = sub(a2, mul(b1, d));
    for (int t = 0; t < r6.rows(); ++t)
        if (u2.value().row(t).norm() < kDegenerateTol)
            throw DegenerateInput("rot6d decode: vectors near collinear at row " +
                                  std::to_string(t));
    Var b2 = div(u2, row_norm(u2));

    Var x1 = col(b1, 0), y1 = col(b1, 1), z1 = col(b1, 2);
    Var x2 = col(b2, 0), y2 = col(b2, 1), z2 = col(b2, 2);
    Var x3 = sub(mul(y1, z2), mul(z1, y2));
    Var y3 = sub(mul(z1, x2), mul(x1, z2));
    Var z3 = sub(mul(x1, y2), mul(y1, x2));

    // row-major [r00 r01 r02 r10 ...], columns of R are b1, b2, b3
    return concat_cols({x1, x2, x3, y1, y2, y3, z1, z2, z3});
}

Var compose_rotmat_rows(const Var& a, const Var& b) {
    if (a.cols() != 9 || b.cols() != 9 || a.rows() != b.rows())
        throw ShapeError("compose_rotmat_rows: want matching T x 9 blocks");
    std::vector<Var> out;
    out.reserve(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Var sum = mul(col(a, 3 * i), col(b, j));
            sum = add(sum, mul(col(a, 3 * i + 1), col(b, 3 + j)));
            sum = add(sum, mul(col(a, 3 * i + 2), col(b, 6 + j)));
            out.push_back(sum);
        }
    return concat_cols(out);
}

Var rotate_rows(const Var& rotmat, const Eigen::Vector3d& v) {
    if (rotmat.cols() != 9) throw ShapeError("rotate_rows: want T x 9");
    std::vector<Var> out;
    out.reserve(3);
    for (int i = 0; i < 3; ++i) {
        Var sum = scale(col(rotmat, 3 * i), v.x());
        sum = add(sum, scale(col(rotmat, 3 * i + 1), v.y()));
        sum = add(sum, scale(col(rotmat, 3 * i + 2), v.z()));
        out.push_back(sum);
    }
    return concat_cols(out);
}

Var fk_positions(const kin::SkeletonModel& skel, const Var& rot_block, const Var& trans) {
    const int nj = skel.n_joints();
    if (rot_block.cols() != 6 * nj)
        throw ShapeError("fk_positions: rot block has " + std::to_string(rot_block.cols()) +
                         " cols, want " + std::to_string(6 * nj));
    const int T = rot_block.rows();
    if (trans.defined() && (trans.rows() != T || trans.cols() != 3))
        throw ShapeError("fk_positions: translation must be T x 3");

    std::vector<Var> glob_rot(nj);
    std::vector<Var> glob_pos(nj);
    glob_rot[0] = rot6d_to_rotmat_rows(slice_cols(rot_block, 0, 6));
    glob_pos[0] = trans.defined() ? trans : constant(Eigen::MatrixXd::Zero(T, 3));
    for (int j = 1; j < nj; ++j) {
        const int p = skel.parents[j];
        Var local = rot6d_to_rotmat_rows(slice_cols(rot_block, 6 * j, 6 * j + 6));
        glob_rot[j] = compose_rotmat_rows(glob_rot[p], local);
        glob_pos[j] = add(glob_pos[p], rotate_rows(glob_rot[p], skel.offsets[j]));
    }
    return concat_cols(glob_pos);
}

}  // namespace mopr::nn
