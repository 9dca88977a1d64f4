#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopr/metrics.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/prior.hpp"
#include "mopr/skeleton.hpp"

namespace mopr::eval {

// Maps a ground-truth clip to the model chain's prediction for its signal
// stream; the prediction must have the same frame count and carry its own
// (head-aligned) root translation.
using Predictor = std::function<data::MotionClip(const data::MotionClip&)>;

struct ActionErrors {
    double mpjpe_cm = 0.0;
    double legs_mpjpe_cm = 0.0;
    int n_clips = 0;
    std::optional<double> baseline_mpjpe_cm;
    std::optional<double> improvement_cm;  // baseline - model, positive = better
};

struct EvalReport {
    double mpjpe_cm = 0.0;
    double legs_mpjpe_cm = 0.0;
    double global_mpjpe_cm = 0.0;
    double mpjve_cm_per_s = 0.0;
    double motion_distance = 0.0;
    double fid = 0.0;
    double fid_neg_clamp = 0.0;

    std::map<std::string, ActionErrors> per_action;
    std::vector<std::string> action_order;  // by improvement when a baseline ran

    // config echo
    std::vector<int> leg_joints;
    double fps = 0.0;
    int window_len = 0;
    int window_stride = 0;
    int n_clips = 0;
    int n_windows = 0;
    std::string mpjpe_alignment = "pelvis";
    std::string eval_prior_hash;
    std::string train_prior_hash;
};

struct EvalOptions {
    int window_stride = 10;  // stride of the FID / motion-distance windows
    std::uint64_t train_prior_hash = 0;
    Predictor baseline;  // optional second chain for the improvement column
};

EvalReport evaluate_dataset(const kin::SkeletonModel& skel,
                            const std::vector<data::MotionClip>& test_clips,
                            const Predictor& predict, const prior::FullMotionPrior& eval_prior,
                            const EvalOptions& opts = {});

nlohmann::json report_to_json(const EvalReport& report);
void save_report_json(const EvalReport& report, const std::string& path);
void save_report_csv(const EvalReport& report, const std::string& path);

}  // namespace mopr::eval
