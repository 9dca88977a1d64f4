#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mopr/layers.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/param_store.hpp"
#include "mopr/prior.hpp"
#include "mopr/signals.hpp"
#include "mopr/skeleton.hpp"
#include "mopr/tensor.hpp"

namespace mopr::seq {

struct SeqConfig {
    int S = 40;  // input window length per predicted pose
    int lstm_hidden = 512;
    int n_lstm_layers = 3;
    int embed_dim = 64;
    int latent_dim = 512;
    double lambda_rot = 1.0;
    double lambda_pos = 1.0;
    double lambda_vel = 1.0;
    double lambda_mo = 0.1;
    std::string vel_mode = "position";  // "position" | "rotation"
};

void to_json(nlohmann::json& j, const SeqConfig& c);
void from_json(const nlohmann::json& j, SeqConfig& c);

// LSTM over windows of [normalized 54-dim signals | 64-dim motion embedding],
// final hidden state mapped to one full-body pose (local 6D rotations only;
// global placement happens at inference by head alignment).
class SequenceModel {
public:
    SequenceModel(kin::SkeletonModel skel, SeqConfig cfg, std::uint64_t seed);
    SequenceModel(kin::SkeletonModel skel, SeqConfig cfg, nn::ParamStore store);

    const SeqConfig& config() const { return cfg_; }
    const kin::SkeletonModel& skeleton() const { return skel_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }

    // rows x latent_dim -> rows x embed_dim
    nn::Var motion_embedding(const nn::Var& m) const;

    // x_norm: S x 54 normalized signals, embeds: S x embed_dim. Returns the
    // pose for the window's last frame, 1 x (6 * n_joints).
    nn::Var predict_pose(const Eigen::MatrixXd& x_norm, const nn::Var& embeds) const;

    void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
    static SequenceModel load(const std::string& path);

private:
    void bind();

    kin::SkeletonModel skel_;
    SeqConfig cfg_;
    nn::ParamStore store_;
    nn::LinearParams embed_;
    nn::LstmStackParams lstm_;
    nn::LinearParams head_;
};

// One normalized 54-dim feature row per stream frame, causal: velocities are
// deltas against the previous frame, frame 0 gets zero-motion values. This is
// the per-frame LSTM featurization shared by training, batch inference and
// streaming inference.
Eigen::VectorXd feature_row(const std::optional<sig::SparseSignalFrame>& prev,
                            const sig::SparseSignalFrame& curr, double fps);
Eigen::MatrixXd normalized_feature_rows(const std::vector<sig::SparseSignalFrame>& raw,
                                        double fps);

// Latent for the unnormalized window of the encoder's length ending at the
// window's last frame; the window must already be left-padded by the caller.
Eigen::VectorXd latent_for_window(const prior::SparseMotionEncoder& enc,
                                  const std::vector<sig::SparseSignalFrame>& window,
                                  double fps);

// Per-frame latents M*_t over a whole stream (windows left-padded by
// repeating the first frame).
Eigen::MatrixXd window_latents(const prior::SparseMotionEncoder& enc,
                               const std::vector<sig::SparseSignalFrame>& raw, double fps);

// Disk cache of per-frame latents, keyed by encoder content hash and clip
// content hash so retrained encoders or edited clips never hit stale rows.
struct LatentCache {
    std::uint64_t encoder_hash = 0;
    int latent_dim = 0;
    std::map<std::uint64_t, Eigen::MatrixXd> rows;  // content_hash(clip) -> n_frames x latent

    const Eigen::MatrixXd& at(std::uint64_t clip_hash) const;
};

LatentCache load_latent_cache(const std::string& path);
void save_latent_cache(const LatentCache& cache, const std::string& path);

// Returns a cache covering every clip: loads `path` when it matches the
// encoder hash, computes any missing clips, and rewrites the file if dirty.
// Empty path = in-memory only.
LatentCache build_or_load_latent_cache(const std::string& path,
                                       const prior::SparseMotionEncoder& enc,
                                       const kin::SkeletonModel& skel,
                                       const std::vector<data::MotionClip>& clips);

struct SeqLossTerms {
    nn::Var total, rot, pos, vel, mo;
};

// pred_rot: T_seg x (6 * n_joints) predicted local rotations for consecutive
// frames; gt_segment the matching ground truth. The motion term encodes both
// root-relative position windows through `mo_prior` (frozen) and needs
// exactly that prior's window length of consecutive predictions.
SeqLossTerms loss_seq(const kin::SkeletonModel& skel, const nn::Var& pred_rot,
                      const data::MotionClip& gt_segment,
                      const prior::FullMotionPrior* mo_prior, double lambda_rot,
                      double lambda_pos, double lambda_vel, double lambda_mo,
                      const std::string& vel_mode);

struct SeqTrainConfig {
    SeqConfig arch;
    int steps = 1500;
    int batch = 4;
    double lr = 1e-4;
    int segment_len = 60;  // predicted frames per sample; must equal the prior
                           // window length whenever the motion term is active
    int log_every = 25;
    std::uint64_t seed = 3;
    std::string ablation = "none";  // "none" | "no_motion_loss" | "no_motion_prior"
    std::string resume_from;
    std::string latent_cache_path;
};

// Ablations: "no_motion_loss" drops the motion term (sparse encoder still
// required), "no_motion_prior" additionally zeroes the motion-embedding input
// and needs no prior checkpoints at all.
SequenceModel train_sequence_model(const kin::SkeletonModel& skel,
                                   const std::vector<data::MotionClip>& clips,
                                   const prior::SparseMotionEncoder* sparse_enc,
                                   const prior::FullMotionPrior* mo_prior,
                                   const SeqTrainConfig& cfg, const std::string& log_path);

// Offline inference over a whole raw stream. Null encoder = zeroed motion
// embeddings. Root translation places the predicted head joint exactly at the
// tracked head position.
data::MotionClip infer_motion(const SequenceModel& model,
                              const prior::SparseMotionEncoder* enc,
                              const std::vector<sig::SparseSignalFrame>& raw, double fps);

// One-frame-at-a-time inference; bitwise-equal to infer_motion on the same
// stream. Keeps only the rolling windows it needs.
class StreamingInference {
public:
    StreamingInference(const SequenceModel& model, const prior::SparseMotionEncoder* enc,
                       double fps);

    kin::FullPose push(const sig::SparseSignalFrame& frame);

private:
    const SequenceModel& model_;
    const prior::SparseMotionEncoder* enc_;
    double fps_;
    std::optional<sig::SparseSignalFrame> prev_;
    std::deque<sig::SparseSignalFrame> raw_win_;    // last <= T raw frames
    std::deque<Eigen::VectorXd> x_rows_;            // last <= S normalized rows
    std::deque<Eigen::VectorXd> e_rows_;            // last <= S embedding rows
};

}  // namespace mopr::seq
