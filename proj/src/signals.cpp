#include "mopr/signals.hpp"

#include "mopr/errors.hpp"

namespace mopr::sig {

namespace {

Eigen::Matrix<double, 54, 1> pack_frame(const SparseSignalFrame& f,
                                        const std::array<Eigen::Vector3d, 3>& dg,
                                        const std::array<kin::Rot6d, 3>& dr) {
    Eigen::Matrix<double, 54, 1> x;
    for (int j = 0; j < 3; ++j) x.segment<3>(3 * j) = f.g3[j];
    for (int j = 0; j < 3; ++j) x.segment<3>(9 + 3 * j) = dg[j];
    for (int j = 0; j < 3; ++j) x.segment<6>(18 + 6 * j) = f.r3[j];
    for (int j = 0; j < 3; ++j) x.segment<6>(36 + 6 * j) = dr[j];
    return x;
}

}  // namespace

SparseMotionSequence augment(const std::vector<SparseSignalFrame>& raw, double fps) {
    if (raw.empty()) throw ShapeError("augment: need at least one frame");
    const int T = static_cast<int>(raw.size());
    SparseMotionSequence out;
    out.fps = fps;
    out.frames.resize(T);

    std::array<Eigen::Vector3d, 3> dg;
    std::array<kin::Rot6d, 3> dr;
    for (int t = 1; t < T; ++t) {
        for (int j = 0; j < 3; ++j) {
            dg[j] = raw[t].g3[j] - raw[t - 1].g3[j];
            dr[j] = kin::angular_delta_6d(raw[t - 1].r3[j], raw[t].r3[j]);
        }
        out.frames[t].x54 = pack_frame(raw[t], dg, dr);
    }
    if (T > 1) {
        // frame 0 borrows frame 1's velocities
        out.frames[0].x54 = pack_frame(raw[0], dg, dr);
        out.frames[0].x54.segment<9>(9) = out.frames[1].x54.segment<9>(9);
        out.frames[0].x54.segment<18>(36) = out.frames[1].x54.segment<18>(36);
    } else {
        for (int j = 0; j < 3; ++j) {
            dg[j].setZero();
            dr[j] = kin::rot6d_identity();
        }
        out.frames[0].x54 = pack_frame(raw[0], dg, dr);
    }
    return out;
}

SparseMotionSequence normalize_horizontal(const SparseMotionSequence& seq) {
    SparseMotionSequence out = seq;
    for (auto& f : out.frames) {
        const double mx = (f.x54[0] + f.x54[3] + f.x54[6]) / 3.0;
        const double mz = (f.x54[2] + f.x54[5] + f.x54[8]) / 3.0;
        for (int j = 0; j < 3; ++j) {
            f.x54[3 * j] -= mx;
            f.x54[3 * j + 2] -= mz;
        }
    }
    return out;
}

std::vector<SparseSignalFrame> extract_sparse_signals(const kin::SkeletonModel& skel,
                                                      const data::MotionClip& motion) {
    if (motion.n_frames() < 1) throw ShapeError("extract_sparse_signals: empty motion");
    if (!skel.has_tracked_joints())
        throw DataError("extract_sparse_signals: skeleton lacks tracked joints");
    const int tracked[3] = {skel.head, skel.lhand, skel.rhand};
    std::vector<SparseSignalFrame> out(motion.n_frames());
    for (int t = 0; t < motion.n_frames(); ++t) {
        const kin::FkResult fk = kin::forward_kinematics(skel, motion.pose(t));
        for (int j = 0; j < 3; ++j) {
            out[t].g3[j] = fk.positions[tracked[j]];
            out[t].r3[j] = kin::rot6d_encode(fk.rotations[tracked[j]]);
        }
    }
    return out;
}

}  // namespace mopr::sig
