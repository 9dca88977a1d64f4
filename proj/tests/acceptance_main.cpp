// Acceptance gate for the motion reconstruction pipeline. Each criterion
// prints exactly one PASS/FAIL line with its runtime and measured values;
// the process exits nonzero if any criterion fails. Passing criterion names
// as arguments runs only the matching subset (handy while tuning).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopr/errors.hpp"
#include "mopr/evaluate.hpp"
#include "mopr/layers.hpp"
#include "mopr/metrics.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/nn_kinematics.hpp"
#include "mopr/param_store.hpp"
#include "mopr/prior.hpp"
#include "mopr/rotation.hpp"
#include "mopr/sequence.hpp"
#include "mopr/signals.hpp"
#include "mopr/skeleton.hpp"
#include "mopr/synth.hpp"
#include "mopr/tensor.hpp"
#include "mopr/util.hpp"
#include "test_helpers.hpp"

#ifndef MOPR_CLI_PATH
#define MOPR_CLI_PATH "./mopr"
#endif

using namespace mopr;

namespace {

std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(3) << v;
    return o.str();
}

struct Gate {
    std::vector<std::string> fails;
    std::string note;

    void expect(bool ok, const std::string& what) {
        if (!ok) fails.push_back(what);
    }
    template <class E, class Fn>
    void expect_throws(const std::string& what, Fn&& fn) {
        try {
            fn();
            fails.push_back(what + ": no error raised");
        } catch (const E&) {
        } catch (const std::exception& e) {
            fails.push_back(what + ": wrong error: " + e.what());
        }
    }
};

// ---------------------------------------------------------------- rotation

Gate crit_rotation() {
    Gate g;
    Rng rng(11);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const kin::Rotation r = test::random_rotation(rng);
        const kin::Rotation back = kin::rot6d_decode(kin::rot6d_encode(r));
        worst = std::max(worst, (back.matrix() - r.matrix()).norm());
    }
    g.expect(worst < 1e-6, "roundtrip worst frobenius " + fmt(worst));

    // power-of-two scalings only shift exponents, so the Gram-Schmidt decode
    // must return the same bits; other positive scalings stay within fp noise
    double worst_any = 0.0;
    for (int i = 0; i < 200; ++i) {
        const kin::Rot6d v = kin::rot6d_encode(test::random_rotation(rng));
        const Eigen::Matrix3d base = kin::rot6d_decode(v).matrix();
        for (const double c : {0.5, 2.0, 8.0, 0x1p-20, 0x1p+18}) {
            if (!(kin::rot6d_decode(c * v).matrix() == base)) {
                g.expect(false, "decode not bitwise invariant to scale " + fmt(c));
                break;
            }
        }
        worst_any = std::max(
            worst_any, (kin::rot6d_decode(3.7 * v).matrix() - base).cwiseAbs().maxCoeff());
    }
    g.expect(worst_any < 1e-12, "non-dyadic scale drift " + fmt(worst_any));
    g.note = "roundtrip " + fmt(worst) + ", scale drift " + fmt(worst_any);
    return g;
}

// --------------------------------------------------------------- fk oracle

std::vector<Eigen::Vector3d> homogeneous_fk(const kin::SkeletonModel& skel,
                                            const kin::FullPose& pose) {
    const int n = skel.n_joints();
    std::vector<Eigen::Matrix4d> acc(static_cast<std::size_t>(n));
    std::vector<Eigen::Vector3d> out(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
        local.block<3, 3>(0, 0) = kin::rot6d_decode(pose.local_rot[j]).matrix();
        local.block<3, 1>(0, 3) = j == 0 ? pose.root_translation : skel.offsets[j];
        acc[j] = j == 0 ? local : acc[skel.parents[j]] * local;
        out[j] = acc[j].block<3, 1>(0, 3);
    }
    return out;
}

Gate crit_fk_oracle() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    Rng rng(12);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const data::MotionClip clip = test::random_clip(skel, 1, rng);
        const kin::FkResult fk = kin::forward_kinematics(skel, clip.pose(0));
        const auto oracle = homogeneous_fk(skel, clip.pose(0));
        for (int j = 0; j < skel.n_joints(); ++j)
            worst = std::max(worst, (fk.positions[j] - oracle[j]).cwiseAbs().maxCoeff());
    }
    g.expect(worst < 1e-9, "fk vs homogeneous worst " + fmt(worst));
    g.note = "worst " + fmt(worst) + " over 100 poses";
    return g;
}

// ---------------------------------------------------------- gradient checks

double fd_vars(std::vector<nn::Var> inputs, const std::function<nn::Var()>& loss_fn) {
    for (auto& v : inputs) v.node->grad = Eigen::MatrixXd();
    nn::backward(loss_fn());
    const double h = 1e-4;
    double worst = 0.0;
    for (auto& v : inputs) {
        Eigen::MatrixXd an = v.node->grad;
        if (an.size() == 0) an = Eigen::MatrixXd::Zero(v.rows(), v.cols());
        for (int i = 0; i < v.rows(); ++i)
            for (int j = 0; j < v.cols(); ++j) {
                const double keep = v.node->value(i, j);
                v.node->value(i, j) = keep + h;
                const double up = loss_fn().value()(0, 0);
                v.node->value(i, j) = keep - h;
                const double dn = loss_fn().value()(0, 0);
                v.node->value(i, j) = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double rel = std::abs(fd - an(i, j)) /
                                   std::max({std::abs(fd), std::abs(an(i, j)), 1e-6});
                worst = std::max(worst, rel);
            }
    }
    return worst;
}

double fd_store(nn::ParamStore& store, const std::function<nn::Var()>& loss_fn) {
    store.zero_grads();
    nn::backward(loss_fn());
    const double h = 1e-4;
    double worst = 0.0;
    for (const auto& name : store.names()) {
        const nn::NodePtr p = store.at(name);
        Eigen::MatrixXd an = p->grad;
        if (an.size() == 0) an = Eigen::MatrixXd::Zero(p->rows(), p->cols());
        for (int i = 0; i < p->rows(); ++i)
            for (int j = 0; j < p->cols(); ++j) {
                const double keep = p->value(i, j);
                p->value(i, j) = keep + h;
                const double up = loss_fn().value()(0, 0);
                p->value(i, j) = keep - h;
                const double dn = loss_fn().value()(0, 0);
                p->value(i, j) = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double rel = std::abs(fd - an(i, j)) /
                                   std::max({std::abs(fd), std::abs(an(i, j)), 1e-6});
                worst = std::max(worst, rel);
            }
    }
    return worst;
}

Gate crit_gradients() {
    Gate g;
    Rng rng(13);
    const auto target = [&rng](int r, int c) { return nn::constant(rng.gaussian_matrix(r, c)); };

    struct Case {
        std::string name;
        double worst;
    };
    std::vector<Case> cases;
    const auto run = [&cases](const std::string& name, std::vector<nn::Var> inputs,
                              const std::function<nn::Var()>& fn) {
        cases.push_back({name, fd_vars(std::move(inputs), fn)});
    };

    {
        nn::Var a = nn::parameter(rng.gaussian_matrix(4, 3));
        nn::Var b = nn::parameter(rng.gaussian_matrix(1, 3));  // broadcast row
        nn::Var t = target(4, 3);
        run("add", {a, b}, [&] { return nn::mse(nn::add(a, b), t); });
        run("sub", {a, b}, [&] { return nn::mse(nn::sub(a, b), t); });
        run("mul", {a, b}, [&] { return nn::mse(nn::mul(a, b), t); });
        nn::Var bp = nn::parameter(rng.gaussian_matrix(1, 3).cwiseAbs().array() + 1.0);
        run("div", {a, bp}, [&] { return nn::mse(nn::div(a, bp), t); });
        run("scale-addconst", {a},
            [&] { return nn::mse(nn::add_const(nn::scale(a, -1.7), 0.4), t); });
    }
    {
        nn::Var a = nn::parameter(rng.gaussian_matrix(4, 3));
        nn::Var b = nn::parameter(rng.gaussian_matrix(3, 5));
        nn::Var t = target(4, 5);
        run("matmul", {a, b}, [&] { return nn::mse(nn::matmul(a, b), t); });
        nn::Var tt = target(3, 4);
        run("transpose", {a}, [&] { return nn::mse(nn::transpose(a), tt); });
    }
    {
        nn::Var a = nn::parameter(rng.gaussian_matrix(2, 5) * 0.5);
        nn::Var t = target(2, 5);
        run("exp", {a}, [&] { return nn::mse(nn::exp(a), t); });
        run("tanh", {a}, [&] { return nn::mse(nn::tanh(a), t); });
        run("sigmoid", {a}, [&] { return nn::mse(nn::sigmoid(a), t); });
        nn::Var pos = nn::parameter(rng.gaussian_matrix(2, 5).cwiseAbs().array() + 2.0);
        run("log", {pos}, [&] { return nn::mse(nn::log(pos), t); });
        run("sqrt", {pos}, [&] { return nn::mse(nn::sqrt(pos), t); });
        nn::Var off = nn::parameter(rng.gaussian_matrix(2, 5).array() + 3.0);  // off the kink
        run("relu", {off}, [&] { return nn::mse(nn::relu(off), t); });
    }
    {
        nn::Var a = nn::parameter(rng.gaussian_matrix(4, 3));
        nn::Var t = target(4, 3);
        run("softmax", {a}, [&] { return nn::mse(nn::softmax_rows(a), t); });
        run("layernorm", {a}, [&] { return nn::mse(nn::layer_norm_rows(a), t); });
        run("sum-all", {a}, [&] { return nn::mul(nn::sum_all(a), nn::sum_all(a)); });
        run("mean-all", {a}, [&] { return nn::mul(nn::mean_all(a), nn::mean_all(a)); });
        nn::Var tr = target(4, 1);
        run("row-sum", {a}, [&] { return nn::mse(nn::row_sum(a), tr); });
        nn::Var tc = target(1, 3);
        run("col-sum", {a}, [&] { return nn::mse(nn::col_sum(a), tc); });
        run("slice-concat", {a}, [&] {
            nn::Var rows = nn::concat_rows({nn::slice_rows(a, 2, 4), nn::slice_rows(a, 0, 2)});
            nn::Var cols = nn::concat_cols({nn::slice_cols(rows, 1, 3), nn::slice_cols(rows, 0, 1)});
            return nn::mse(cols, t);
        });
        nn::Var b = nn::parameter(rng.gaussian_matrix(4, 3));
        run("mse", {a, b}, [&] { return nn::mse(a, b); });
        run("cosine", {a, b}, [&] { return nn::cosine(a, b); });
    }
    {
        nn::ParamStore s;
        Rng wrng(14);
        const nn::LinearParams fc = nn::build_linear(s, "fc", 5, 4, wrng);
        const nn::Var x = nn::constant(wrng.gaussian_matrix(3, 5));
        const nn::Var t = nn::constant(wrng.gaussian_matrix(3, 4));
        cases.push_back({"linear", fd_store(s, [&] { return nn::mse(nn::linear(x, fc), t); })});
    }
    {
        nn::ParamStore s;
        Rng wrng(15);
        const nn::EncoderLayerParams enc = nn::build_encoder_layer(s, "enc", 6, 2, 12, wrng);
        const nn::Var x = nn::constant(wrng.gaussian_matrix(4, 6));
        const nn::Var t = nn::constant(wrng.gaussian_matrix(4, 6));
        cases.push_back(
            {"encoder-layer", fd_store(s, [&] { return nn::mse(nn::encoder_layer(x, enc), t); })});
    }
    {
        nn::ParamStore s;
        Rng wrng(16);
        const nn::DecoderLayerParams dec = nn::build_decoder_layer(s, "dec", 6, 2, 12, wrng);
        const nn::Var y = nn::constant(wrng.gaussian_matrix(4, 6));
        const nn::Var mem = nn::constant(wrng.gaussian_matrix(2, 6));
        const nn::Var t = nn::constant(wrng.gaussian_matrix(4, 6));
        cases.push_back({"decoder-layer",
                         fd_store(s, [&] { return nn::mse(nn::decoder_layer(y, mem, dec), t); })});
    }
    {
        nn::ParamStore s;
        Rng wrng(17);
        const nn::LstmStackParams lstm = nn::build_lstm_stack(s, "lstm", 5, 7, 2, wrng);
        const nn::Var x = nn::constant(wrng.gaussian_matrix(6, 5));
        const nn::Var t = nn::constant(wrng.gaussian_matrix(6, 7));
        cases.push_back(
            {"lstm", fd_store(s, [&] { return nn::mse(nn::lstm_stack(x, lstm).outputs, t); })});
    }

    double worst_prim = 0.0;
    for (const auto& c : cases) {
        worst_prim = std::max(worst_prim, c.worst);
        g.expect(c.worst < 1e-4, c.name + " rel err " + fmt(c.worst));
    }

    // end-to-end toy: sparse signals through embedding, LSTM, pose head and FK
    const kin::SkeletonModel chain = test::chain_skeleton();
    seq::SeqConfig scfg;
    scfg.S = 2;
    scfg.lstm_hidden = 6;
    scfg.n_lstm_layers = 1;
    scfg.embed_dim = 3;
    scfg.latent_dim = 4;
    seq::SequenceModel model(chain, scfg, 18);
    Rng drng(19);
    const data::MotionClip clip = test::random_clip(chain, 4, drng);
    const Eigen::MatrixXd x = seq::normalized_feature_rows(
        sig::extract_sparse_signals(chain, clip), clip.fps);
    const int seg = 2, a = 1, W = seg + scfg.S - 1;
    Eigen::MatrixXd xw(W, 54);
    for (int k = 0; k < W; ++k) xw.row(k) = x.row(std::max(0, a - scfg.S + 1 + k));
    const Eigen::MatrixXd lw = drng.gaussian_matrix(W, scfg.latent_dim);
    const data::MotionClip gt_seg = data::slice_clip(clip, a, seg);

    const double worst_e2e = fd_store(model.store(), [&] {
        nn::Var embeds = model.motion_embedding(nn::constant(lw));
        std::vector<nn::Var> preds;
        for (int u = 0; u < seg; ++u)
            preds.push_back(model.predict_pose(xw.middleRows(u, scfg.S),
                                               nn::slice_rows(embeds, u, u + scfg.S)));
        return seq::loss_seq(chain, nn::concat_rows(preds), gt_seg, nullptr, 1.0, 1.0, 1.0,
                             0.0, "position")
            .total;
    });
    g.expect(worst_e2e < 1e-3, "end-to-end rel err " + fmt(worst_e2e));
    g.note = "primitives " + fmt(worst_prim) + ", end-to-end " + fmt(worst_e2e);
    return g;
}

// ------------------------------------------------------ shift invariance

// Tracked positions on a power-of-two grid with the hands placed symmetrically
// about the head, so the three-joint mean is computed exactly and dyadic
// shifts cancel without rounding.
std::vector<sig::SparseSignalFrame> dyadic_stream(int frames, Rng& rng) {
    std::vector<sig::SparseSignalFrame> raw(static_cast<std::size_t>(frames));
    for (auto& f : raw) {
        const double hx = static_cast<double>(rng.uniform_index(64)) * 0.0625 - 2.0;
        const double hz = static_cast<double>(rng.uniform_index(64)) * 0.03125 - 1.0;
        const double hy = 1.0 + static_cast<double>(rng.uniform_index(16)) * 0.0625;
        const double dx = 0.25 + static_cast<double>(rng.uniform_index(4)) * 0.125;
        const double dz = 0.125 + static_cast<double>(rng.uniform_index(4)) * 0.0625;
        f.g3[0] = Eigen::Vector3d(hx, hy, hz);
        f.g3[1] = Eigen::Vector3d(hx + dx, hy - 0.5, hz + dz);
        f.g3[2] = Eigen::Vector3d(hx - dx, hy - 0.5, hz - dz);
        for (int j = 0; j < 3; ++j) f.r3[j] = kin::rot6d_encode(test::random_rotation(rng));
    }
    return raw;
}

std::vector<sig::SparseSignalFrame> shifted(const std::vector<sig::SparseSignalFrame>& raw,
                                            double sx, double sz) {
    auto out = raw;
    for (auto& f : out)
        for (auto& p : f.g3) {
            p.x() += sx;
            p.z() += sz;
        }
    return out;
}

Gate crit_shift_invariance() {
    Gate g;
    Rng rng(21);
    const auto raw = dyadic_stream(16, rng);
    const sig::SparseMotionSequence base = sig::normalize_horizontal(sig::augment(raw, 30.0));

    for (const auto& [sx, sz] : std::vector<std::pair<double, double>>{
             {2.0, -16.0}, {0.5, 0.25}, {-1024.0, 0.0078125}}) {
        const sig::SparseMotionSequence moved =
            sig::normalize_horizontal(sig::augment(shifted(raw, sx, sz), 30.0));
        bool all = true;
        for (int t = 0; t < base.n_frames(); ++t)
            all = all && (moved.frames[t].x54 == base.frames[t].x54);
        g.expect(all, "normalized signals not bitwise stable under shift (" + fmt(sx) + ", " +
                          fmt(sz) + ")");
    }

    // non-representable shifts cannot be bitwise; they must stay within fp noise
    const sig::SparseMotionSequence odd =
        sig::normalize_horizontal(sig::augment(shifted(raw, 0.1234567, -3.987), 30.0));
    double drift = 0.0;
    for (int t = 0; t < base.n_frames(); ++t)
        drift = std::max(drift,
                         (odd.frames[t].x54 - base.frames[t].x54).cwiseAbs().maxCoeff());
    g.expect(drift < 1e-9, "arbitrary-shift drift " + fmt(drift));

    // the full model chain: same rotations out, to the bit, when the stream
    // stands somewhere else on the grid
    const kin::SkeletonModel skel = test::canonical_skeleton();
    prior::PriorConfig pcfg;
    pcfg.d_model = 16;
    pcfg.n_heads = 2;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 1;
    pcfg.d_ff = 32;
    pcfg.T = 8;
    pcfg.latent_dim = 12;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;
    const prior::SparseMotionEncoder enc(pcfg, 22);
    seq::SeqConfig scfg;
    scfg.S = 5;
    scfg.lstm_hidden = 16;
    scfg.n_lstm_layers = 1;
    scfg.embed_dim = 6;
    scfg.latent_dim = 12;
    const seq::SequenceModel model(skel, scfg, 23);

    const data::MotionClip pred = seq::infer_motion(model, &enc, raw, 30.0);
    const data::MotionClip pred_moved =
        seq::infer_motion(model, &enc, shifted(raw, -8.0, 0.5), 30.0);
    bool rot_stable = true;
    for (int t = 0; t < pred.n_frames(); ++t)
        for (int j = 0; j < skel.n_joints(); ++j)
            rot_stable = rot_stable && (pred_moved.local_rot[t][j] == pred.local_rot[t][j]);
    g.expect(rot_stable, "predicted local rotations changed under a dyadic shift");

    double root_drift = 0.0;
    for (int t = 0; t < pred.n_frames(); ++t)
        root_drift = std::max(
            root_drift, (pred_moved.root_translation[t] - pred.root_translation[t] -
                         Eigen::Vector3d(-8.0, 0.0, 0.5))
                            .cwiseAbs()
                            .maxCoeff());
    g.expect(root_drift < 1e-9, "root did not follow the shift, drift " + fmt(root_drift));
    g.note = "arbitrary-shift drift " + fmt(drift);
    return g;
}

// ------------------------------------------------------- metric identities

Gate crit_metric_identities() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    Rng rng(31);

    const data::MotionClip clip = test::random_clip(skel, 6, rng);
    const eval::Positions p = eval::fk_positions_clip(skel, clip);
    g.expect(eval::mpjpe_cm(p, p) == 0.0, "self mpjpe nonzero");
    g.expect(eval::mpjve_cm_per_s(p, p, clip.fps) == 0.0, "self mpjve nonzero");

    prior::PriorConfig pcfg;
    pcfg.d_model = 16;
    pcfg.n_heads = 2;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 1;
    pcfg.d_ff = 32;
    pcfg.T = 8;
    pcfg.latent_dim = 12;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;
    const prior::FullMotionPrior eval_prior(skel, pcfg, 32);
    const data::MotionClip w = test::random_clip(skel, 8, rng);
    const double self_md = eval::motion_distance(eval_prior, w, w, 0);
    g.expect(self_md < 1e-9, "self motion distance " + fmt(self_md));

    const Eigen::MatrixXd a = rng.gaussian_matrix(40, 5);
    const double self_fid = std::abs(eval::fid(a, a));
    g.expect(self_fid < 1e-8, "self fid " + fmt(self_fid));

    Eigen::VectorXd d(5);
    d << 0.3, -0.1, 0.25, 0.0, -0.4;
    Eigen::MatrixXd b = a;
    b.rowwise() += d.transpose();
    const double shift_fid = eval::fid(a, b);
    const double shift_err = std::abs(shift_fid - d.squaredNorm()) / d.squaredNorm();
    g.expect(shift_err < 1e-6, "mean-shift identity rel err " + fmt(shift_err));

    const int n = 10000, dim = 4;
    const Eigen::MatrixXd ga = rng.gaussian_matrix(n, dim);
    Eigen::VectorXd mu(dim), s(dim);
    mu << 0.5, -0.3, 0.2, 0.1;
    s << 1.5, 0.7, 1.0, 1.2;
    Eigen::MatrixXd gb = rng.gaussian_matrix(n, dim) * s.asDiagonal();
    gb.rowwise() += mu.transpose();
    double expect = mu.squaredNorm();
    for (int i = 0; i < dim; ++i) expect += (1.0 - s[i]) * (1.0 - s[i]);
    const double got = eval::fid(ga, gb);
    const double gauss_err = std::abs(got - expect) / expect;
    g.expect(gauss_err < 0.05, "closed-form gaussian fid off by " + fmt(100.0 * gauss_err) + "%");
    g.note = "mean-shift rel " + fmt(shift_err) + ", gaussian rel " + fmt(gauss_err);
    return g;
}

// --------------------------------------------------------- overfit capacity

double decode_error_cm(const prior::FullMotionPrior& p,
                       const std::vector<data::MotionClip>& clips) {
    const kin::SkeletonModel& skel = p.skeleton();
    double sum = 0.0;
    for (const auto& c : clips) {
        const data::MotionClip dec = p.decode_full(p.encode_full(c), c.fps);
        sum += eval::mpjpe_cm(eval::fk_positions_clip(skel, dec),
                              eval::fk_positions_clip(skel, c));
    }
    return sum / static_cast<double>(clips.size());
}

double clip_mpjpe_cm(const seq::SequenceModel& model, const prior::SparseMotionEncoder* enc,
                     const data::MotionClip& clip) {
    const kin::SkeletonModel& skel = model.skeleton();
    const auto raw = sig::extract_sparse_signals(skel, clip);
    const data::MotionClip pred = seq::infer_motion(model, enc, raw, clip.fps);
    return eval::mpjpe_cm(eval::align_pelvis(eval::fk_positions_clip(skel, pred)),
                          eval::align_pelvis(eval::fk_positions_clip(skel, clip)));
}

Gate crit_overfit() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    const std::string dir = test::tmp_dir("acceptance_overfit");

    // full prior memorizes five one-window clips
    prior::PriorConfig pcfg;
    pcfg.d_model = 48;
    pcfg.n_heads = 4;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 2;
    pcfg.d_ff = 96;
    pcfg.T = 16;
    pcfg.latent_dim = 64;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;
    const auto prior_clips = test::small_synth_set(skel, 1, 16, 301);

    prior::PriorTrainConfig ptc;
    ptc.arch = pcfg;
    ptc.batch = 5;
    ptc.window_stride = 1;
    ptc.log_every = 100;
    ptc.seed = 33;
    const std::string prior_ckpt = dir + "/prior.ckpt";
    double prior_err = 1e9;
    int done = 0;
    const std::vector<std::pair<int, double>> prior_ladder = {
        {400, 1e-3}, {800, 1e-3}, {1400, 5e-4}, {2000, 3e-4}, {2800, 2e-4}, {3600, 1e-4}};
    for (const auto& [target, lr] : prior_ladder) {
        ptc.steps = target;
        ptc.lr = lr;
        ptc.resume_from = done == 0 ? "" : prior_ckpt;
        const prior::FullMotionPrior p =
            prior::train_full_prior(skel, prior_clips, ptc, dir + "/prior_log.jsonl");
        p.save(prior_ckpt, {{"step", target}});
        done = target;
        prior_err = decode_error_cm(p, prior_clips);
        if (prior_err < 1.6) break;
    }
    g.expect(prior_err < 2.0, "prior decode error " + fmt(prior_err) + " cm after " +
                                  std::to_string(done) + " steps");

    // sequence model memorizes a single clip
    const data::MotionClip clip = test::small_synth_set(skel, 1, 30, 302)[0];
    prior::PriorConfig ecfg;
    ecfg.d_model = 16;
    ecfg.n_heads = 2;
    ecfg.n_enc_layers = 1;
    ecfg.n_dec_layers = 1;
    ecfg.d_ff = 32;
    ecfg.T = 8;
    ecfg.latent_dim = 16;
    ecfg.lambda_text = 0.0;
    ecfg.lambda_image = 0.0;
    const prior::SparseMotionEncoder enc(ecfg, 34);

    seq::SeqTrainConfig stc;
    stc.arch.S = 8;
    stc.arch.lstm_hidden = 64;
    stc.arch.n_lstm_layers = 1;
    stc.arch.embed_dim = 8;
    stc.arch.latent_dim = 16;
    stc.batch = 2;
    stc.segment_len = 10;
    stc.log_every = 100;
    stc.seed = 35;
    stc.ablation = "no_motion_loss";
    stc.latent_cache_path = dir + "/latents.cache";
    const std::string seq_ckpt = dir + "/seq.ckpt";
    double seq_err = 1e9;
    done = 0;
    const std::vector<std::pair<int, double>> seq_ladder = {
        {300, 2e-3}, {600, 2e-3}, {1000, 1e-3}, {1600, 5e-4}, {2400, 3e-4}, {3200, 2e-4}};
    for (const auto& [target, lr] : seq_ladder) {
        stc.steps = target;
        stc.lr = lr;
        stc.resume_from = done == 0 ? "" : seq_ckpt;
        const seq::SequenceModel m =
            seq::train_sequence_model(skel, {clip}, &enc, nullptr, stc, dir + "/seq_log.jsonl");
        m.save(seq_ckpt, {{"step", target}});
        done = target;
        seq_err = clip_mpjpe_cm(m, &enc, clip);
        if (seq_err < 0.85) break;
    }
    g.expect(seq_err < 1.0,
             "sequence mpjpe " + fmt(seq_err) + " cm after " + std::to_string(done) + " steps");
    g.note = "prior " + fmt(prior_err) + " cm, sequence " + fmt(seq_err) + " cm";
    return g;
}

// ----------------------------------------------------- freeze / stage order

Gate crit_freeze_order() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    const std::string dir = test::tmp_dir("acceptance_freeze");
    const auto clips = test::small_synth_set(skel, 2, 16, 401);

    prior::PriorConfig pcfg;
    pcfg.d_model = 16;
    pcfg.n_heads = 2;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 1;
    pcfg.d_ff = 32;
    pcfg.T = 8;
    pcfg.latent_dim = 12;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;

    prior::PriorTrainConfig ptc;
    ptc.arch = pcfg;
    ptc.steps = 3;
    ptc.batch = 2;
    ptc.seed = 41;
    const prior::FullMotionPrior prior =
        prior::train_full_prior(skel, clips, ptc, dir + "/p.jsonl");
    const std::uint64_t prior_hash = prior.hash();

    prior::SparseTrainConfig sptc;
    sptc.arch = pcfg;
    sptc.steps = 3;
    sptc.batch = 2;
    sptc.seed = 42;
    sptc.lambda_text = 0.0;
    sptc.lambda_image = 0.0;
    sptc.lambda_latent = 1.0;
    const prior::SparseMotionEncoder enc =
        prior::train_sparse_encoder(skel, clips, prior, sptc, dir + "/s.jsonl");
    g.expect(prior.hash() == prior_hash, "sparse training modified the frozen prior");
    const std::uint64_t enc_hash = enc.hash();

    seq::SeqTrainConfig stc;
    stc.arch.S = 4;
    stc.arch.lstm_hidden = 16;
    stc.arch.n_lstm_layers = 1;
    stc.arch.embed_dim = 6;
    stc.arch.latent_dim = 12;
    stc.steps = 2;
    stc.batch = 1;
    stc.segment_len = 8;
    stc.seed = 43;
    stc.latent_cache_path.clear();
    seq::train_sequence_model(skel, clips, &enc, &prior, stc, dir + "/q.jsonl");
    g.expect(prior.hash() == prior_hash, "sequence training modified the frozen prior");
    g.expect(enc.hash() == enc_hash, "sequence training modified the frozen encoder");

    // stage-order violations are hard errors, not silent fallbacks
    g.expect_throws<MissingCheckpoint>("sequence training without an encoder", [&] {
        seq::train_sequence_model(skel, clips, nullptr, &prior, stc, "");
    });
    g.expect_throws<MissingCheckpoint>("sequence training without a prior", [&] {
        seq::train_sequence_model(skel, clips, &enc, nullptr, stc, "");
    });
    g.expect_throws<MissingCheckpoint>("loading a missing checkpoint", [&] {
        prior::SparseMotionEncoder::load(dir + "/absent.ckpt");
    });

    prior.save(dir + "/prior.ckpt");
    g.expect_throws<ConfigError>("sequence model loading a prior checkpoint", [&] {
        seq::SequenceModel::load(dir + "/prior.ckpt");
    });
    enc.save(dir + "/sparse.ckpt");
    g.expect_throws<ConfigError>("prior loading an encoder checkpoint", [&] {
        prior::FullMotionPrior::load(dir + "/sparse.ckpt");
    });

    prior::PriorConfig open_cfg = pcfg;
    open_cfg.latent_dim = 24;
    const prior::SparseMotionEncoder mismatched(open_cfg, 44);
    g.expect_throws<ConfigError>("latent width mismatch accepted", [&] {
        seq::train_sequence_model(skel, clips, &mismatched, &prior, stc, "");
    });
    g.note = "hashes stable, 6 ordering violations rejected";
    return g;
}

// --------------------------------------------------- ablation direction

struct ChainModels {
    prior::FullMotionPrior prior;
    prior::SparseMotionEncoder enc;
    seq::SequenceModel full;
    seq::SequenceModel ablated;
};

double leg_heavy_mpjpe(const eval::EvalReport& rep) {
    return 0.5 * (rep.per_action.at("squat").legs_mpjpe_cm +
                  rep.per_action.at("kick").legs_mpjpe_cm);
}

Gate crit_ablation_direction() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    const std::string dir = test::tmp_dir("acceptance_ablation");

    prior::PriorConfig pcfg;
    pcfg.d_model = 32;
    pcfg.n_heads = 4;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 1;
    pcfg.d_ff = 64;
    pcfg.T = 16;
    pcfg.latent_dim = 32;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;

    int wins = 0;
    std::ostringstream detail;
    for (int s = 1; s <= 3; ++s) {
        const std::uint64_t base = 500 + static_cast<std::uint64_t>(s);
        data::SynthConfig synth_cfg;
        synth_cfg.clips_per_class = 12;
        synth_cfg.n_frames = 48;
        const auto table = data::build_embedding_table(data::synth_classes(), base);
        const auto train_clips = data::synth_generate(skel, synth_cfg, table, base);
        data::SynthConfig test_cfg = synth_cfg;
        test_cfg.clips_per_class = 4;
        const auto test_clips = data::synth_generate(skel, test_cfg, table, base + 50);

        prior::PriorTrainConfig ptc;
        ptc.arch = pcfg;
        ptc.steps = 1200;
        ptc.batch = 8;
        ptc.lr = 1e-3;
        ptc.window_stride = 4;
        ptc.log_every = 200;
        ptc.seed = base;
        const prior::FullMotionPrior prior = prior::train_full_prior(
            skel, train_clips, ptc, dir + "/prior_" + std::to_string(s) + ".jsonl");

        prior::SparseTrainConfig sptc;
        sptc.arch = pcfg;
        sptc.steps = 1200;
        sptc.batch = 8;
        sptc.lr = 1e-3;
        sptc.window_stride = 4;
        sptc.log_every = 200;
        sptc.seed = base + 1;
        sptc.lambda_text = 0.0;
        sptc.lambda_image = 0.0;
        sptc.lambda_latent = 1.0;
        const prior::SparseMotionEncoder enc = prior::train_sparse_encoder(
            skel, train_clips, prior, sptc, dir + "/sparse_" + std::to_string(s) + ".jsonl");

        seq::SeqTrainConfig stc;
        stc.arch.S = 8;
        stc.arch.lstm_hidden = 64;
        stc.arch.n_lstm_layers = 1;
        stc.arch.embed_dim = 16;
        stc.arch.latent_dim = 32;
        stc.steps = 900;
        stc.batch = 4;
        stc.segment_len = 16;
        stc.lr = 1.5e-3;
        stc.log_every = 200;
        stc.seed = base + 2;
        stc.latent_cache_path = dir + "/latents_" + std::to_string(s) + ".cache";
        const seq::SequenceModel full = seq::train_sequence_model(
            skel, train_clips, &enc, &prior, stc, dir + "/full_" + std::to_string(s) + ".jsonl");

        seq::SeqTrainConfig atc = stc;
        atc.ablation = "no_motion_prior";
        atc.latent_cache_path.clear();
        const seq::SequenceModel ablated = seq::train_sequence_model(
            skel, train_clips, nullptr, nullptr, atc, dir + "/abl_" + std::to_string(s) + ".jsonl");

        const prior::FullMotionPrior eval_prior(skel, pcfg, 900 + static_cast<std::uint64_t>(s));
        eval::EvalOptions opts;
        opts.train_prior_hash = prior.hash();
        const auto predictor = [&skel](const seq::SequenceModel& m,
                                       const prior::SparseMotionEncoder* e) {
            return [&skel, &m, e](const data::MotionClip& gt) {
                return seq::infer_motion(m, e, sig::extract_sparse_signals(skel, gt), gt.fps);
            };
        };
        const eval::EvalReport rep_full =
            eval::evaluate_dataset(skel, test_clips, predictor(full, &enc), eval_prior, opts);
        const eval::EvalReport rep_abl =
            eval::evaluate_dataset(skel, test_clips, predictor(ablated, nullptr), eval_prior, opts);

        const double legs_full = leg_heavy_mpjpe(rep_full);
        const double legs_abl = leg_heavy_mpjpe(rep_abl);
        const bool ok = legs_full <= legs_abl && rep_full.motion_distance < rep_abl.motion_distance;
        wins += ok ? 1 : 0;
        detail << (s > 1 ? " | " : "") << "seed " << s << ": legs " << fmt(legs_full)
               << (legs_full <= legs_abl ? " <= " : " > ") << fmt(legs_abl) << ", md "
               << fmt(rep_full.motion_distance)
               << (rep_full.motion_distance < rep_abl.motion_distance ? " < " : " >= ")
               << fmt(rep_abl.motion_distance) << ", mpjpe " << fmt(rep_full.mpjpe_cm) << " vs "
               << fmt(rep_abl.mpjpe_cm);
    }
    g.expect(wins >= 2, "direction held in " + std::to_string(wins) + "/3 seeds (" +
                            detail.str() + ")");
    g.note = std::to_string(wins) + "/3 seeds (" + detail.str() + ")";
    return g;
}

// ------------------------------------------------- streaming equivalence

Gate crit_streaming() {
    Gate g;
    const kin::SkeletonModel skel = test::canonical_skeleton();
    prior::PriorConfig pcfg;
    pcfg.d_model = 16;
    pcfg.n_heads = 2;
    pcfg.n_enc_layers = 1;
    pcfg.n_dec_layers = 1;
    pcfg.d_ff = 32;
    pcfg.T = 8;
    pcfg.latent_dim = 12;
    pcfg.lambda_text = 0.0;
    pcfg.lambda_image = 0.0;
    const prior::SparseMotionEncoder enc(pcfg, 61);
    seq::SeqConfig scfg;
    scfg.S = 5;
    scfg.lstm_hidden = 16;
    scfg.n_lstm_layers = 2;
    scfg.embed_dim = 6;
    scfg.latent_dim = 12;
    const seq::SequenceModel model(skel, scfg, 62);

    Rng rng(63);
    const auto raw =
        sig::extract_sparse_signals(skel, test::random_clip(skel, 20, rng));

    for (const prior::SparseMotionEncoder* e :
         std::vector<const prior::SparseMotionEncoder*>{&enc, nullptr}) {
        const data::MotionClip batch = seq::infer_motion(model, e, raw, 30.0);
        seq::StreamingInference stream(model, e, 30.0);
        bool equal = true;
        for (int t = 0; t < batch.n_frames(); ++t) {
            const kin::FullPose pose = stream.push(raw[t]);
            equal = equal && (pose.root_translation == batch.root_translation[t]);
            for (int j = 0; j < skel.n_joints(); ++j)
                equal = equal && (pose.local_rot[j] == batch.local_rot[t][j]);
        }
        g.expect(equal, e != nullptr ? "streaming diverged from batch (with encoder)"
                                     : "streaming diverged from batch (encoder-free)");
    }
    g.note = "20 frames bitwise, with and without encoder";
    return g;
}

// ------------------------------------------------------- cli smoke run

int run_cli(const std::string& args, const std::string& log) {
    const std::string cmd = std::string(MOPR_CLI_PATH) + " " + args + " >" + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << "\n";
}

Gate crit_cli_smoke() {
    Gate g;
    const std::string dir = test::tmp_dir("acceptance_cli");
    const std::string skel_path = test::data_path("skeleton_smpl22.json");
    const nlohmann::json arch = {{"T", 8},       {"d_model", 16},    {"n_heads", 2},
                                 {"n_enc_layers", 1}, {"n_dec_layers", 1}, {"d_ff", 32},
                                 {"latent_dim", 12},  {"lambda_text", 0.0},
                                 {"lambda_image", 0.0}};

    write_json(dir + "/synth.json", {{"skeleton", skel_path},
                                     {"clips_per_class", 2},
                                     {"n_frames", 24},
                                     {"seed", 5}});
    g.expect(run_cli("synth --config " + dir + "/synth.json --out " + dir + "/data",
                     dir + "/synth.log") == 0,
             "synth failed");

    const nlohmann::json prior_cfg = {{"skeleton", skel_path},
                                      {"data", dir + "/data/clips"},
                                      {"arch", arch},
                                      {"steps", 6},
                                      {"batch", 4},
                                      {"log_every", 2}};
    write_json(dir + "/prior.json", prior_cfg);
    g.expect(run_cli("train-prior --config " + dir + "/prior.json --out " + dir +
                         "/prior --seed 1",
                     dir + "/prior.log") == 0,
             "train-prior failed");
    write_json(dir + "/eval_prior.json", prior_cfg);
    g.expect(run_cli("train-prior --config " + dir + "/eval_prior.json --out " + dir +
                         "/eval_prior --seed 9",
                     dir + "/eval_prior.log") == 0,
             "train-prior (eval prior) failed");

    write_json(dir + "/sparse.json", {{"skeleton", skel_path},
                                      {"data", dir + "/data/clips"},
                                      {"prior", dir + "/prior/prior.ckpt"},
                                      {"lambda_text", 0.0},
                                      {"lambda_image", 0.0},
                                      {"steps", 6},
                                      {"batch", 4},
                                      {"log_every", 2}});
    g.expect(run_cli("train-sparse --mode extended --config " + dir + "/sparse.json --out " +
                         dir + "/sparse --seed 2",
                     dir + "/sparse.log") == 0,
             "train-sparse failed");

    write_json(dir + "/seq.json",
               {{"skeleton", skel_path},
                {"data", dir + "/data/clips"},
                {"sparse", dir + "/sparse/sparse.ckpt"},
                {"prior", dir + "/prior/prior.ckpt"},
                {"arch",
                 {{"S", 4}, {"lstm_hidden", 16}, {"n_lstm_layers", 1}, {"embed_dim", 6},
                  {"latent_dim", 12}}},
                {"steps", 6},
                {"batch", 2},
                {"segment_len", 8},
                {"log_every", 2}});
    g.expect(run_cli("train-seq --config " + dir + "/seq.json --out " + dir + "/seq --seed 3",
                     dir + "/seq.log") == 0,
             "train-seq failed");

    write_json(dir + "/infer.json", {{"model", dir + "/seq/seq.ckpt"},
                                     {"sparse", dir + "/sparse/sparse.ckpt"},
                                     {"input", dir + "/data/clips"}});
    g.expect(run_cli("infer --config " + dir + "/infer.json --out " + dir + "/pred",
                     dir + "/infer.log") == 0,
             "infer failed");

    write_json(dir + "/eval.json", {{"data", dir + "/data/clips"},
                                    {"model", dir + "/seq/seq.ckpt"},
                                    {"sparse", dir + "/sparse/sparse.ckpt"},
                                    {"eval_prior", dir + "/eval_prior/prior.ckpt"},
                                    {"train_prior", dir + "/prior/prior.ckpt"}});
    g.expect(run_cli("eval --config " + dir + "/eval.json --out " + dir + "/eval",
                     dir + "/eval.log") == 0,
             "eval failed");

    std::ifstream rep_in(dir + "/eval/report.json");
    if (!rep_in) {
        g.expect(false, "report.json missing");
        return g;
    }
    nlohmann::json rep;
    try {
        rep = nlohmann::json::parse(rep_in);
    } catch (const nlohmann::json::exception& e) {
        g.expect(false, std::string("report.json unparsable: ") + e.what());
        return g;
    }
    for (const char* key : {"mpjpe_cm", "legs_mpjpe_cm", "global_mpjpe_cm", "mpjve_cm_per_s",
                            "motion_distance", "fid", "fid_neg_clamp"}) {
        const bool ok = rep.contains("metrics") && rep["metrics"].contains(key) &&
                        rep["metrics"][key].is_number() &&
                        std::isfinite(rep["metrics"][key].get<double>());
        g.expect(ok, std::string("metric '") + key + "' missing or not finite");
    }
    g.expect(rep.value("per_action", nlohmann::json::array()).size() == 5,
             "per-action table incomplete");
    g.expect(rep.contains("config") && rep["config"].value("n_windows", 0) >= 2,
             "window count suspicious");
    if (g.fails.empty())
        g.note = "mpjpe " + fmt(rep["metrics"]["mpjpe_cm"].get<double>()) + " cm over " +
                 std::to_string(rep["config"]["n_windows"].get<int>()) + " windows";
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* name;
        Gate (*run)();
        double budget_s;  // 0 = no stated budget
    };
    const std::vector<Criterion> criteria = {
        {"rotation-roundtrip-scale-invariance", crit_rotation, 5.0},
        {"fk-matches-homogeneous-oracle", crit_fk_oracle, 5.0},
        {"metric-identities", crit_metric_identities, 60.0},
        {"horizontal-shift-invariance", crit_shift_invariance, 0.0},
        {"gradient-checks", crit_gradients, 120.0},
        {"freeze-and-stage-order", crit_freeze_order, 0.0},
        {"streaming-matches-offline", crit_streaming, 0.0},
        {"overfit-capacity", crit_overfit, 900.0},
        {"motion-prior-ablation-direction", crit_ablation_direction, 7200.0},
        {"cli-end-to-end-smoke", crit_cli_smoke, 0.0},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (argc > 1) {
            bool wanted = false;
            for (int i = 1; i < argc; ++i)
                wanted = wanted || std::string(c.name).find(argv[i]) != std::string::npos;
            if (!wanted) continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Gate g;
        try {
            g = c.run();
        } catch (const std::exception& e) {
            g.fails.push_back(std::string("unexpected error: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0 && secs > c.budget_s)
            g.fails.push_back("runtime " + fmt(secs) + " s exceeds budget " + fmt(c.budget_s) +
                              " s");
        std::ostringstream line;
        line << (g.fails.empty() ? "PASS" : "FAIL") << "  " << std::left << std::setw(38)
             << c.name << " (" << std::fixed << std::setprecision(1) << secs << " s)";
        if (g.fails.empty()) {
            if (!g.note.empty()) line << "  " << g.note;
        } else {
            for (std::size_t i = 0; i < g.fails.size(); ++i)
                line << (i == 0 ? "  " : "; ") << g.fails[i];
            ++failed;
        }
        std::cout << line.str() << std::endl;
    }
    if (failed > 0) std::cout << failed << " criteria failed" << std::endl;
    return failed == 0 ? 0 : 1;
}
