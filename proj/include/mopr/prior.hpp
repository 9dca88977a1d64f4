#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopr/layers.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/nn_kinematics.hpp"
#include "mopr/param_store.hpp"
#include "mopr/signals.hpp"
#include "mopr/skeleton.hpp"

namespace mopr::prior {

struct PriorConfig {
    int d_model = 256;
    int n_heads = 4;
    int n_enc_layers = 4;
    int n_dec_layers = 4;
    int d_ff = 1024;
    int T = 60;
    int latent_dim = 512;
    double lambda_text = 0.01;
    double lambda_image = 0.01;
    double lambda_p = 1.0;
};

void to_json(nlohmann::json& j, const PriorConfig& c);
void from_json(const nlohmann::json& j, PriorConfig& c);

// window feature helpers (T x ... matrices over a clip's frames)
Eigen::MatrixXd rot_block(const data::MotionClip& w);    // T x 6J
Eigen::MatrixXd trans_block(const data::MotionClip& w);  // T x 3
Eigen::MatrixXd root_relative_positions(const kin::SkeletonModel& skel,
                                        const data::MotionClip& w);  // T x 3J

struct EncoderBindings {
    nn::LinearParams in, out;
    nn::NodePtr summary;
    std::vector<nn::EncoderLayerParams> layers;
};

// shared summary-token encoder: features -> 1 x latent
nn::Var summary_encode(const EncoderBindings& b, const nn::Var& features,
                       const Eigen::MatrixXd& pos_enc);

// Transformer autoencoder over fixed-length full-body windows. The encoder
// reads root-relative joint positions; the decoder emits per-frame rotations
// plus root translation from learned queries cross-attending to the latent.
class FullMotionPrior {
public:
    FullMotionPrior(kin::SkeletonModel skel, PriorConfig cfg, std::uint64_t seed);
    FullMotionPrior(kin::SkeletonModel skel, PriorConfig cfg, nn::ParamStore store);

    const PriorConfig& config() const { return cfg_; }
    const kin::SkeletonModel& skeleton() const { return skel_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }
    std::uint64_t hash() const { return store_.content_hash(); }

    // differentiable paths
    nn::Var encode_positions(const nn::Var& pos) const;  // T x 3J -> 1 x latent
    nn::Var decode_latent(const nn::Var& m) const;       // 1 x latent -> T x (6J + 3)

    // convenience over plain data
    Eigen::VectorXd encode_full(const data::MotionClip& window) const;
    data::MotionClip decode_full(const Eigen::VectorXd& latent, double fps = 30.0) const;

    void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
    static FullMotionPrior load(const std::string& path);

private:
    void bind();

    kin::SkeletonModel skel_;
    PriorConfig cfg_;
    nn::ParamStore store_;
    EncoderBindings enc_;
    struct DecoderBindings {
        nn::LinearParams in, out;
        nn::NodePtr query;
        std::vector<nn::DecoderLayerParams> layers;
    } dec_;
    Eigen::MatrixXd pos_enc_;
};

// Same encoder stack over augmented sparse windows. The input is never
// horizontally normalized; instead the window is re-origined once, by
// subtracting the first frame's mean tracked (x, z) from the position block,
// so the latent is invariant to where the stream happens to be standing.
class SparseMotionEncoder {
public:
    SparseMotionEncoder(PriorConfig cfg, std::uint64_t seed);
    SparseMotionEncoder(PriorConfig cfg, nn::ParamStore store);

    const PriorConfig& config() const { return cfg_; }
    nn::ParamStore& store() { return store_; }
    const nn::ParamStore& store() const { return store_; }
    std::uint64_t hash() const { return store_.content_hash(); }

    static Eigen::MatrixXd signal_matrix(const sig::SparseMotionSequence& window);  // T x 54
    static Eigen::MatrixXd canonicalize_origin(Eigen::MatrixXd x);

    nn::Var encode_matrix(const nn::Var& canonicalized) const;  // T x 54 -> 1 x latent
    Eigen::VectorXd encode_sparse(const sig::SparseMotionSequence& window) const;

    void save(const std::string& path, const nlohmann::json& extra_meta = {}) const;
    static SparseMotionEncoder load(const std::string& path);

private:
    void bind();

    PriorConfig cfg_;
    nn::ParamStore store_;
    EncoderBindings enc_;
    Eigen::MatrixXd pos_enc_;
};

// loss terms (total plus components, for logging)
struct FmLossTerms {
    nn::Var total, recon_rot, recon_pos, text, image;
};
FmLossTerms loss_fm_terms(const FullMotionPrior& prior, const data::MotionClip& window,
                          const Eigen::VectorXd& text_emb, const Eigen::VectorXd& image_emb,
                          double lambda_text, double lambda_image, double lambda_p);
nn::Var loss_fm(const FullMotionPrior& prior, const data::MotionClip& window,
                const Eigen::VectorXd& text_emb, const Eigen::VectorXd& image_emb);

struct SmLossTerms {
    nn::Var total, text, image, latent;
};
// m_target may be empty when lambda_latent == 0
SmLossTerms loss_sm(const nn::Var& m_star, const Eigen::VectorXd& text_emb,
                    const Eigen::VectorXd& image_emb, const Eigen::VectorXd& m_target,
                    double lambda_text = 0.01, double lambda_image = 0.01,
                    double lambda_latent = 0.0);

struct PriorTrainConfig {
    PriorConfig arch;
    int steps = 2000;
    int batch = 8;
    double lr = 1e-4;
    int window_stride = 1;
    int log_every = 25;
    std::uint64_t seed = 1;
    std::string resume_from;
};

struct SparseTrainConfig {
    PriorConfig arch;  // encoder stack shape; latent_dim must match the prior
    int steps = 2000;
    int batch = 8;
    double lr = 1e-4;
    int window_stride = 1;
    int log_every = 25;
    std::uint64_t seed = 2;
    double lambda_text = 0.01;
    double lambda_image = 0.01;
    double lambda_latent = 0.0;  // 0 = paper-faithful two-term loss, 1 = extended
    std::string resume_from;
};

// Trains the autoencoder on every T-frame window of the labeled clips.
// Clips without embeddings are skipped (count reported in the log).
FullMotionPrior train_full_prior(const kin::SkeletonModel& skel,
                                 const std::vector<data::MotionClip>& clips,
                                 const PriorTrainConfig& cfg, const std::string& log_path);

// Trains the sparse encoder against label embeddings (and, in extended mode,
// the frozen full encoder's latents). The prior is never modified.
SparseMotionEncoder train_sparse_encoder(const kin::SkeletonModel& skel,
                                         const std::vector<data::MotionClip>& clips,
                                         const FullMotionPrior& prior,
                                         const SparseTrainConfig& cfg,
                                         const std::string& log_path);

}  // namespace mopr::prior
