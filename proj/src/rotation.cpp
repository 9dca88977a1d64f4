#include "mopr/rotation.hpp"

#include <cmath>
#include <sstream>

namespace mopr::kin {

namespace {
constexpr double kDegenerateTol = 1e-9;
}

Rotation Rotation::from_axis_angle(const Eigen::Vector3d& axis_angle) {
    double angle = axis_angle.norm();
    if (angle < 1e-14) return Rotation::identity();
    return Rotation(Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix());
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
    return Rotation(q.normalized().toRotationMatrix());
}

bool Rotation::is_valid(double tol) const {
    double ortho = (m_.transpose() * m_ - Eigen::Matrix3d::Identity()).norm();
    return ortho <= tol && std::abs(m_.determinant() - 1.0) <= tol;
}

Rot6d rot6d_identity() {
    Rot6d v;
    v << 1, 0, 0, 0, 1, 0;
    return v;
}

Rot6d rot6d_encode(const Rotation& r) {
    Rot6d v;
    v.head<3>() = r.matrix().col(0);
    v.tail<3>() = r.matrix().col(1);
    return v;
}

Rotation rot6d_decode(const Rot6d& v) {
    Eigen::Vector3d a1 = v.head<3>();
    Eigen::Vector3d a2 = v.tail<3>();
    double n1 = a1.norm();
    if (n1 <= kDegenerateTol) {
        std::ostringstream os;
        os << "rot6d_decode: first column norm " << n1 << " below " << kDegenerateTol;
        throw DegenerateInput(os.str());
    }
    Eigen::Vector3d b1 = a1 / n1;
    Eigen::Vector3d u2 = a2 - b1.dot(a2) * b1;
    double n2 = u2.norm();
    if (n2 <= kDegenerateTol) {
        std::ostringstream os;
        os << "rot6d_decode: columns near-parallel, residual norm " << n2;
        throw DegenerateInput(os.str());
    }
    Eigen::Vector3d b2 = u2 / n2;
    Eigen::Vector3d b3 = b1.cross(b2);
    Eigen::Matrix3d m;
    m.col(0) = b1;
    m.col(1) = b2;
    m.col(2) = b3;
    return Rotation(m);
}

Rot6d angular_delta_6d(const Rot6d& r_prev, const Rot6d& r_curr) {
    Rotation prev = rot6d_decode(r_prev);
    Rotation curr = rot6d_decode(r_curr);
    return rot6d_encode(curr * prev.transposed());
}

}  // namespace mopr::kin
