#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mopr/errors.hpp"

namespace mopr::kin {

// 6D rotation representation: the first two COLUMNS of a rotation matrix,
// flattened column-major, i.e. v = [R00 R10 R20 R01 R11 R21]. Decoding
// Gram-Schmidts the two 3-vectors; the row convention would silently
// transpose every rotation, so it is fixed here once.
using Rot6d = Eigen::Matrix<double, 6, 1>;

// A proper rotation: 3x3 orthonormal with det +1.
class Rotation {
public:
    Rotation() : m_(Eigen::Matrix3d::Identity()) {}
    explicit Rotation(const Eigen::Matrix3d& m) : m_(m) {}

    static Rotation identity() { return Rotation(); }
    static Rotation from_axis_angle(const Eigen::Vector3d& axis_angle);
    static Rotation from_quaternion(const Eigen::Quaterniond& q);

    const Eigen::Matrix3d& matrix() const { return m_; }

    Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
    Rotation transposed() const { return Rotation(m_.transpose()); }
    Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

    // Orthonormality and determinant within `tol` (Frobenius norm).
    bool is_valid(double tol = 1e-6) const;

private:
    Eigen::Matrix3d m_;
};

Rot6d rot6d_identity();

// First two columns of R, column-major.
Rot6d rot6d_encode(const Rotation& r);

// Gram-Schmidt the two halves, third column via cross product. Throws
// DegenerateInput when the first half has near-zero norm or the halves are
// near-parallel; degenerate vectors indicate upstream bugs and are never
// silently repaired.
Rotation rot6d_decode(const Rot6d& v);

// Relative rotation from the previous frame to the current one, in 6D:
// encode(R_curr * R_prev^T).
Rot6d angular_delta_6d(const Rot6d& r_prev, const Rot6d& r_curr);

}  // namespace mopr::kin
