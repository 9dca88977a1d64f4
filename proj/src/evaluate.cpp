#include "mopr/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::eval {

namespace {

struct Weighted {
    double sum = 0.0;
    double weight = 0.0;

    void add(double value, double w) {
        sum += value * w;
        weight += w;
    }
    double mean() const { return weight > 0.0 ? sum / weight : 0.0; }
};

struct ActionAcc {
    Weighted mpjpe, legs, baseline;
    int n_clips = 0;
};

std::string action_key(const data::MotionClip& clip) {
    return clip.action_label.empty() ? "(unlabeled)" : clip.action_label;
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double denom = std::sqrt((a.squaredNorm() + 1e-24) * (b.squaredNorm() + 1e-24));
    return 1.0 - a.dot(b) / denom;
}

}  // namespace

EvalReport evaluate_dataset(const kin::SkeletonModel& skel,
                            const std::vector<data::MotionClip>& test_clips,
                            const Predictor& predict, const prior::FullMotionPrior& eval_prior,
                            const EvalOptions& opts) {
    if (test_clips.empty()) throw DataError("evaluate_dataset: no test clips");
    if (opts.window_stride < 1) throw ConfigError("evaluate_dataset: window_stride must be >= 1");
    const std::uint64_t eval_hash = eval_prior.store().content_hash();
    if (opts.train_prior_hash != 0 && eval_hash == opts.train_prior_hash)
        throw SamePriorError("evaluate_dataset: eval prior is the training prior (hash " +
                             hex64(eval_hash) + ")");

    EvalReport rep;
    rep.leg_joints = skel.leg_joints;
    rep.fps = test_clips[0].fps;
    rep.window_len = eval_prior.config().T;
    rep.window_stride = opts.window_stride;
    rep.n_clips = static_cast<int>(test_clips.size());
    rep.eval_prior_hash = hex64(eval_hash);
    rep.train_prior_hash = hex64(opts.train_prior_hash);

    Weighted w_mpjpe, w_legs, w_global, w_mpjve, w_md;
    std::map<std::string, ActionAcc> actions;
    std::vector<data::MotionClip> preds;
    preds.reserve(test_clips.size());

    for (const auto& clip : test_clips) {
        data::MotionClip pred = predict(clip);
        if (pred.n_frames() != clip.n_frames() || pred.n_joints() != clip.n_joints())
            throw ShapeError("evaluate_dataset: prediction is " +
                             std::to_string(pred.n_frames()) + " x " +
                             std::to_string(pred.n_joints()) + ", ground truth " +
                             std::to_string(clip.n_frames()) + " x " +
                             std::to_string(clip.n_joints()));

        const Positions gt_global = fk_positions_clip(skel, clip);
        const Positions pred_global = fk_positions_clip(skel, pred);
        const Positions gt_aligned = align_pelvis(gt_global);
        const Positions pred_aligned = align_pelvis(pred_global);

        const double frames = clip.n_frames();
        const double m = mpjpe_cm(pred_aligned, gt_aligned);
        const double l = mpjpe_cm(pred_aligned, gt_aligned, &skel.leg_joints);
        w_mpjpe.add(m, frames);
        w_legs.add(l, frames);
        w_global.add(mpjpe_cm(pred_global, gt_global), frames);
        if (clip.n_frames() >= 2)
            w_mpjve.add(mpjve_cm_per_s(pred_global, gt_global, clip.fps), frames - 1.0);

        ActionAcc& acc = actions[action_key(clip)];
        acc.mpjpe.add(m, frames);
        acc.legs.add(l, frames);
        ++acc.n_clips;
        if (opts.baseline) {
            const data::MotionClip base = opts.baseline(clip);
            if (base.n_frames() != clip.n_frames())
                throw ShapeError("evaluate_dataset: baseline frame count mismatch");
            const Positions base_aligned = align_pelvis(fk_positions_clip(skel, base));
            acc.baseline.add(mpjpe_cm(base_aligned, gt_aligned), frames);
        }
        preds.push_back(std::move(pred));
    }
    if (w_mpjve.weight == 0.0)
        throw InsufficientFrames("evaluate_dataset: no clip has >= 2 frames");

    const data::WindowedDataset ws =
        data::make_windows(test_clips, rep.window_len, opts.window_stride);
    rep.n_windows = static_cast<int>(ws.windows.size());
    if (rep.n_windows < 2)
        throw InsufficientSamples("evaluate_dataset: " + std::to_string(rep.n_windows) +
                                  " windows of length " + std::to_string(rep.window_len) +
                                  "; need >= 2 for the distribution metrics");
    const int latent_dim = eval_prior.config().latent_dim;
    Eigen::MatrixXd lat_pred(rep.n_windows, latent_dim);
    Eigen::MatrixXd lat_gt(rep.n_windows, latent_dim);
    for (int i = 0; i < rep.n_windows; ++i) {
        const data::WindowRef& ref = ws.windows[static_cast<std::size_t>(i)];
        const data::MotionClip gt_w = ws.slice(test_clips, i);
        const data::MotionClip pred_w =
            data::slice_clip(preds[static_cast<std::size_t>(ref.clip_index)], ref.start,
                             rep.window_len);
        lat_pred.row(i) = eval_prior.encode_full(pred_w).transpose();
        lat_gt.row(i) = eval_prior.encode_full(gt_w).transpose();
        w_md.add(cosine_distance(lat_pred.row(i).transpose(), lat_gt.row(i).transpose()), 1.0);
    }
    const FidResult fr = fid_detailed(lat_pred, lat_gt);

    rep.mpjpe_cm = w_mpjpe.mean();
    rep.legs_mpjpe_cm = w_legs.mean();
    rep.global_mpjpe_cm = w_global.mean();
    rep.mpjve_cm_per_s = w_mpjve.mean();
    rep.motion_distance = w_md.mean();
    rep.fid = fr.value;
    rep.fid_neg_clamp = fr.neg_clamp;

    for (const auto& [label, acc] : actions) {
        ActionErrors e;
        e.mpjpe_cm = acc.mpjpe.mean();
        e.legs_mpjpe_cm = acc.legs.mean();
        e.n_clips = acc.n_clips;
        if (opts.baseline) {
            e.baseline_mpjpe_cm = acc.baseline.mean();
            e.improvement_cm = *e.baseline_mpjpe_cm - e.mpjpe_cm;
        }
        rep.per_action[label] = e;
        rep.action_order.push_back(label);
    }
    if (opts.baseline)
        std::sort(rep.action_order.begin(), rep.action_order.end(),
                  [&rep](const std::string& a, const std::string& b) {
                      const double ia = *rep.per_action.at(a).improvement_cm;
                      const double ib = *rep.per_action.at(b).improvement_cm;
                      return ia != ib ? ia > ib : a < b;
                  });
    return rep;
}

nlohmann::json report_to_json(const EvalReport& rep) {
    nlohmann::json j;
    j["metrics"] = {{"mpjpe_cm", rep.mpjpe_cm},
                    {"legs_mpjpe_cm", rep.legs_mpjpe_cm},
                    {"global_mpjpe_cm", rep.global_mpjpe_cm},
                    {"mpjve_cm_per_s", rep.mpjve_cm_per_s},
                    {"motion_distance", rep.motion_distance},
                    {"fid", rep.fid},
                    {"fid_neg_clamp", rep.fid_neg_clamp}};
    j["per_action"] = nlohmann::json::array();
    for (const auto& label : rep.action_order) {
        const ActionErrors& e = rep.per_action.at(label);
        nlohmann::json row = {{"action", label},
                              {"n_clips", e.n_clips},
                              {"mpjpe_cm", e.mpjpe_cm},
                              {"legs_mpjpe_cm", e.legs_mpjpe_cm}};
        if (e.baseline_mpjpe_cm) row["baseline_mpjpe_cm"] = *e.baseline_mpjpe_cm;
        if (e.improvement_cm) row["improvement_cm"] = *e.improvement_cm;
        j["per_action"].push_back(row);
    }
    j["config"] = {{"leg_joints", rep.leg_joints},
                   {"fps", rep.fps},
                   {"window_len", rep.window_len},
                   {"window_stride", rep.window_stride},
                   {"n_clips", rep.n_clips},
                   {"n_windows", rep.n_windows},
                   {"mpjpe_alignment", rep.mpjpe_alignment},
                   {"eval_prior_hash", rep.eval_prior_hash},
                   {"train_prior_hash", rep.train_prior_hash}};
    return j;
}

void save_report_json(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write report: " + path);
    out << report_to_json(rep).dump(2) << "\n";
}

void save_report_csv(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write report: " + path);
    out << "mpjpe_cm,legs_mpjpe_cm,global_mpjpe_cm,mpjve_cm_per_s,motion_distance,fid\n";
    out << rep.mpjpe_cm << "," << rep.legs_mpjpe_cm << "," << rep.global_mpjpe_cm << ","
        << rep.mpjve_cm_per_s << "," << rep.motion_distance << "," << rep.fid << "\n\n";
    out << "action,n_clips,mpjpe_cm,legs_mpjpe_cm";
    const bool with_baseline =
        !rep.action_order.empty() &&
        rep.per_action.at(rep.action_order.front()).improvement_cm.has_value();
    if (with_baseline) out << ",baseline_mpjpe_cm,improvement_cm";
    out << "\n";
    for (const auto& label : rep.action_order) {
        const ActionErrors& e = rep.per_action.at(label);
        out << label << "," << e.n_clips << "," << e.mpjpe_cm << "," << e.legs_mpjpe_cm;
        if (with_baseline) out << "," << *e.baseline_mpjpe_cm << "," << *e.improvement_cm;
        out << "\n";
    }
}

}  // namespace mopr::eval
