#include "mopr/metrics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::eval {

namespace {

void check_same_shape(const Positions& pred, const Positions& gt, const char* where) {
    if (pred.size() != gt.size())
        throw ShapeError(std::string(where) + ": " + std::to_string(pred.size()) + " vs " +
                         std::to_string(gt.size()) + " frames");
    if (pred.empty()) throw ShapeError(std::string(where) + ": no frames");
    if (pred[0].size() != gt[0].size())
        throw ShapeError(std::string(where) + ": " + std::to_string(pred[0].size()) + " vs " +
                         std::to_string(gt[0].size()) + " joints");
}

}  // namespace

Positions fk_positions_clip(const kin::SkeletonModel& skel, const data::MotionClip& clip) {
    Positions out(static_cast<std::size_t>(clip.n_frames()));
    for (int t = 0; t < clip.n_frames(); ++t)
        out[static_cast<std::size_t>(t)] = kin::forward_kinematics(skel, clip.pose(t)).positions;
    return out;
}

Positions align_pelvis(const Positions& p) {
    Positions out(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        out[t].resize(p[t].size());
        for (std::size_t j = 0; j < p[t].size(); ++j) out[t][j] = p[t][j] - p[t][0];
    }
    return out;
}

double mpjpe_cm(const Positions& pred, const Positions& gt, const std::vector<int>* joint_set) {
    check_same_shape(pred, gt, "mpjpe");
    const int n_joints = static_cast<int>(pred[0].size());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (joint_set != nullptr) {
            for (const int j : *joint_set) {
                if (j < 0 || j >= n_joints)
                    throw ShapeError("mpjpe: joint " + std::to_string(j) + " out of range");
                sum += (pred[t][static_cast<std::size_t>(j)] -
                        gt[t][static_cast<std::size_t>(j)])
                           .norm();
                ++count;
            }
        } else {
            for (std::size_t j = 0; j < pred[t].size(); ++j) {
                sum += (pred[t][j] - gt[t][j]).norm();
                ++count;
            }
        }
    }
    return 100.0 * sum / static_cast<double>(count);
}

double mpjve_cm_per_s(const Positions& pred, const Positions& gt, double fps) {
    check_same_shape(pred, gt, "mpjve");
    if (pred.size() < 2)
        throw InsufficientFrames("mpjve: need >= 2 frames, got " + std::to_string(pred.size()));
    if (fps <= 0.0) throw InvalidFps("mpjve: fps must be positive");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 1; t < pred.size(); ++t)
        for (std::size_t j = 0; j < pred[t].size(); ++j) {
            const Eigen::Vector3d vp = (pred[t][j] - pred[t - 1][j]) * fps;
            const Eigen::Vector3d vg = (gt[t][j] - gt[t - 1][j]) * fps;
            sum += (vp - vg).norm();
            ++count;
        }
    return 100.0 * sum / static_cast<double>(count);
}

double motion_distance(const prior::FullMotionPrior& eval_prior,
                       const data::MotionClip& pred_window, const data::MotionClip& gt_window,
                       std::uint64_t train_prior_hash) {
    const std::uint64_t eval_hash = eval_prior.store().content_hash();
    if (train_prior_hash != 0 && eval_hash == train_prior_hash)
        throw SamePriorError("motion_distance: eval prior is the training prior (hash " +
                             hex64(eval_hash) + ")");
    const Eigen::VectorXd a = eval_prior.encode_full(pred_window);
    const Eigen::VectorXd b = eval_prior.encode_full(gt_window);
    const double denom = std::sqrt((a.squaredNorm() + 1e-24) * (b.squaredNorm() + 1e-24));
    return 1.0 - a.dot(b) / denom;
}

namespace {

// PSD-projected eigendecomposition; returns eigvecs, clamped eigvals,
// accumulates clamped magnitude.
void psd_eig(const Eigen::MatrixXd& m, Eigen::MatrixXd& vecs, Eigen::VectorXd& vals,
             double* neg_clamp) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    vecs = es.eigenvectors();
    vals = es.eigenvalues();
    for (int i = 0; i < vals.size(); ++i)
        if (vals(i) < 0.0) {
            *neg_clamp += -vals(i);
            vals(i) = 0.0;
        }
}

}  // namespace

FidResult fid_detailed(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols())
        throw ShapeError("fid: dimension mismatch " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
    if (a.rows() < 2 || b.rows() < 2)
        throw InsufficientSamples("fid: need >= 2 samples per set, got " +
                                  std::to_string(a.rows()) + " and " + std::to_string(b.rows()));

    const auto fit = [](const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
        mu = x.colwise().mean();
        const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
        cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    };
    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd cov1, cov2;
    fit(a, mu1, cov1);
    fit(b, mu2, cov2);

    FidResult r;
    Eigen::MatrixXd v1;
    Eigen::VectorXd w1;
    psd_eig(cov1, v1, w1, &r.neg_clamp);
    const Eigen::MatrixXd sqrt1 = v1 * w1.cwiseSqrt().asDiagonal() * v1.transpose();

    Eigen::MatrixXd vm;
    Eigen::VectorXd wm;
    psd_eig(sqrt1 * cov2 * sqrt1, vm, wm, &r.neg_clamp);
    const double tr_cross = wm.cwiseSqrt().sum();

    r.value = (mu1 - mu2).squaredNorm() + cov1.trace() + cov2.trace() - 2.0 * tr_cross;
    return r;
}

double fid(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return fid_detailed(a, b).value; }

}  // namespace mopr::eval
