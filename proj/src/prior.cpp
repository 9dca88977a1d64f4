#include "mopr/prior.hpp"

#include <chrono>
#include <fstream>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::prior {

void to_json(nlohmann::json& j, const PriorConfig& c) {
    j = nlohmann::json{{"d_model", c.d_model},
                       {"n_heads", c.n_heads},
                       {"n_enc_layers", c.n_enc_layers},
                       {"n_dec_layers", c.n_dec_layers},
                       {"d_ff", c.d_ff},
                       {"T", c.T},
                       {"latent_dim", c.latent_dim},
                       {"lambda_text", c.lambda_text},
                       {"lambda_image", c.lambda_image},
                       {"lambda_p", c.lambda_p}};
}

void from_json(const nlohmann::json& j, PriorConfig& c) {
    const PriorConfig d;
    c.d_model = j.value("d_model", d.d_model);
    c.n_heads = j.value("n_heads", d.n_heads);
    c.n_enc_layers = j.value("n_enc_layers", d.n_enc_layers);
    c.n_dec_layers = j.value("n_dec_layers", d.n_dec_layers);
    c.d_ff = j.value("d_ff", d.d_ff);
    c.T = j.value("T", d.T);
    c.latent_dim = j.value("latent_dim", d.latent_dim);
    c.lambda_text = j.value("lambda_text", d.lambda_text);
    c.lambda_image = j.value("lambda_image", d.lambda_image);
    c.lambda_p = j.value("lambda_p", d.lambda_p);
}

Eigen::MatrixXd rot_block(const data::MotionClip& w) {
    const int T = w.n_frames(), J = w.n_joints();
    Eigen::MatrixXd out(T, 6 * J);
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < J; ++j) out.block<1, 6>(t, 6 * j) = w.local_rot[t][j].transpose();
    return out;
}

Eigen::MatrixXd trans_block(const data::MotionClip& w) {
    Eigen::MatrixXd out(w.n_frames(), 3);
    for (int t = 0; t < w.n_frames(); ++t) out.row(t) = w.root_translation[t].transpose();
    return out;
}

Eigen::MatrixXd root_relative_positions(const kin::SkeletonModel& skel,
                                        const data::MotionClip& w) {
    const int T = w.n_frames(), J = skel.n_joints();
    Eigen::MatrixXd out(T, 3 * J);
    for (int t = 0; t < T; ++t) {
        kin::FullPose pose = w.pose(t);
        pose.root_translation.setZero();
        const kin::FkResult fk = kin::forward_kinematics(skel, pose);
        for (int j = 0; j < J; ++j) out.block<1, 3>(t, 3 * j) = fk.positions[j].transpose();
    }
    return out;
}

namespace {

Eigen::MatrixXd global_positions(const kin::SkeletonModel& skel, const data::MotionClip& w) {
    const int T = w.n_frames(), J = skel.n_joints();
    Eigen::MatrixXd out(T, 3 * J);
    for (int t = 0; t < T; ++t) {
        const kin::FkResult fk = kin::forward_kinematics(skel, w.pose(t));
        for (int j = 0; j < J; ++j) out.block<1, 3>(t, 3 * j) = fk.positions[j].transpose();
    }
    return out;
}

Eigen::MatrixXd row_of(const Eigen::VectorXd& v) { return v.transpose(); }

nn::Var one_minus(const nn::Var& x) { return nn::add_const(nn::scale(x, -1.0), 1.0); }

EncoderBindings build_summary_encoder(nn::ParamStore& store, const std::string& prefix,
                                      int in_dim, const PriorConfig& cfg, Rng& rng) {
    EncoderBindings b;
    b.in = nn::build_linear(store, prefix + ".in", in_dim, cfg.d_model, rng);
    b.summary = store.create(prefix + ".sum", rng.gaussian_matrix(1, cfg.d_model, 0.02));
    for (int i = 0; i < cfg.n_enc_layers; ++i)
        b.layers.push_back(nn::build_encoder_layer(store, prefix + ".l" + std::to_string(i),
                                                   cfg.d_model, cfg.n_heads, cfg.d_ff, rng));
    b.out = nn::build_linear(store, prefix + ".out", cfg.d_model, cfg.latent_dim, rng);
    return b;
}

EncoderBindings bind_summary_encoder(const nn::ParamStore& store, const std::string& prefix,
                                     const PriorConfig& cfg) {
    EncoderBindings b;
    b.in = nn::bind_linear(store, prefix + ".in");
    b.summary = store.at(prefix + ".sum");
    for (int i = 0; i < cfg.n_enc_layers; ++i)
        b.layers.push_back(
            nn::bind_encoder_layer(store, prefix + ".l" + std::to_string(i), cfg.n_heads));
    b.out = nn::bind_linear(store, prefix + ".out");
    return b;
}

void merge_meta(nlohmann::json& meta, const nlohmann::json& extra) {
    for (const auto& [key, value] : extra.items()) meta[key] = value;
}

}  // namespace

nn::Var summary_encode(const EncoderBindings& b, const nn::Var& features,
                       const Eigen::MatrixXd& pos_enc) {
    if (features.rows() != pos_enc.rows())
        throw ShapeError("summary_encode: " + std::to_string(features.rows()) +
                         " frames, positional table has " + std::to_string(pos_enc.rows()));
    nn::Var x = nn::linear(features, b.in);
    x = nn::add(x, nn::constant(pos_enc));
    x = nn::concat_rows({nn::Var(b.summary), x});
    for (const auto& layer : b.layers) x = nn::encoder_layer(x, layer);
    return nn::linear(nn::slice_rows(x, 0, 1), b.out);
}

FullMotionPrior::FullMotionPrior(kin::SkeletonModel skel, PriorConfig cfg, std::uint64_t seed)
    : skel_(std::move(skel)), cfg_(cfg) {
    skel_.validate();
    Rng rng(mix_seed(seed, fnv1a64("full-prior")));
    const int J = skel_.n_joints();
    build_summary_encoder(store_, "fm.enc", 3 * J, cfg_, rng);
    nn::build_linear(store_, "fm.dec.in", cfg_.latent_dim, cfg_.d_model, rng);
    store_.create("fm.dec.query", rng.gaussian_matrix(cfg_.T, cfg_.d_model, 0.02));
    for (int i = 0; i < cfg_.n_dec_layers; ++i)
        nn::build_decoder_layer(store_, "fm.dec.l" + std::to_string(i), cfg_.d_model,
                                cfg_.n_heads, cfg_.d_ff, rng);
    nn::build_linear(store_, "fm.dec.out", cfg_.d_model, 6 * J + 3, rng);
    bind();
}

FullMotionPrior::FullMotionPrior(kin::SkeletonModel skel, PriorConfig cfg, nn::ParamStore store)
    : skel_(std::move(skel)), cfg_(cfg), store_(std::move(store)) {
    skel_.validate();
    bind();
}

void FullMotionPrior::bind() {
    enc_ = bind_summary_encoder(store_, "fm.enc", cfg_);
    dec_.in = nn::bind_linear(store_, "fm.dec.in");
    dec_.query = store_.at("fm.dec.query");
    dec_.layers.clear();
    for (int i = 0; i < cfg_.n_dec_layers; ++i)
        dec_.layers.push_back(
            nn::bind_decoder_layer(store_, "fm.dec.l" + std::to_string(i), cfg_.n_heads));
    dec_.out = nn::bind_linear(store_, "fm.dec.out");
    pos_enc_ = nn::positional_encoding(cfg_.T, cfg_.d_model);
}

nn::Var FullMotionPrior::encode_positions(const nn::Var& pos) const {
    if (pos.rows() != cfg_.T || pos.cols() != 3 * skel_.n_joints())
        throw ShapeError("encode_positions: want " + std::to_string(cfg_.T) + " x " +
                         std::to_string(3 * skel_.n_joints()) + ", got " +
                         std::to_string(pos.rows()) + " x " + std::to_string(pos.cols()));
    return summary_encode(enc_, pos, pos_enc_);
}

nn::Var FullMotionPrior::decode_latent(const nn::Var& m) const {
    if (m.rows() != 1 || m.cols() != cfg_.latent_dim)
        throw ShapeError("decode_latent: want 1 x " + std::to_string(cfg_.latent_dim));
    nn::Var memory = nn::linear(m, dec_.in);
    nn::Var y = nn::add(nn::Var(dec_.query), nn::constant(pos_enc_));
    for (const auto& layer : dec_.layers) y = nn::decoder_layer(y, memory, layer);
    return nn::linear(y, dec_.out);
}

Eigen::VectorXd FullMotionPrior::encode_full(const data::MotionClip& window) const {
    if (window.n_frames() != cfg_.T)
        throw ShapeError("encode_full: want exactly " + std::to_string(cfg_.T) +
                         " frames, got " + std::to_string(window.n_frames()));
    nn::Var m = encode_positions(nn::constant(root_relative_positions(skel_, window)));
    return m.value().row(0).transpose();
}

data::MotionClip FullMotionPrior::decode_full(const Eigen::VectorXd& latent, double fps) const {
    nn::Var out = decode_latent(nn::constant(row_of(latent)));
    const int J = skel_.n_joints();
    data::MotionClip clip;
    clip.fps = fps;
    clip.skeleton_hash = skel_.hash();
    clip.local_rot.resize(cfg_.T);
    clip.root_translation.resize(cfg_.T);
    for (int t = 0; t < cfg_.T; ++t) {
        clip.local_rot[t].resize(J);
        for (int j = 0; j < J; ++j)
            clip.local_rot[t][j] = out.value().block<1, 6>(t, 6 * j).transpose();
        clip.root_translation[t] = out.value().block<1, 3>(t, 6 * J).transpose();
    }
    return clip;
}

void FullMotionPrior::save(const std::string& path, const nlohmann::json& extra_meta) const {
    nlohmann::json meta;
    meta["kind"] = "full_prior";
    meta["config"] = cfg_;
    meta["skeleton"] = kin::skeleton_to_json(skel_);
    merge_meta(meta, extra_meta);
    store_.save(path, meta);
}

FullMotionPrior FullMotionPrior::load(const std::string& path) {
    nlohmann::json meta;
    nn::ParamStore store = nn::ParamStore::load(path, &meta);
    if (meta.value("kind", "") != "full_prior")
        throw ConfigError(path + ": checkpoint kind '" + meta.value("kind", "") +
                          "', want 'full_prior'");
    PriorConfig cfg = meta.at("config").get<PriorConfig>();
    kin::SkeletonModel skel = kin::skeleton_from_json(meta.at("skeleton"));
    return FullMotionPrior(std::move(skel), cfg, std::move(store));
}

SparseMotionEncoder::SparseMotionEncoder(PriorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    Rng rng(mix_seed(seed, fnv1a64("sparse-encoder")));
    build_summary_encoder(store_, "sm", 54, cfg_, rng);
    bind();
}

SparseMotionEncoder::SparseMotionEncoder(PriorConfig cfg, nn::ParamStore store)
    : cfg_(cfg), store_(std::move(store)) {
    bind();
}

void SparseMotionEncoder::bind() {
    enc_ = bind_summary_encoder(store_, "sm", cfg_);
    pos_enc_ = nn::positional_encoding(cfg_.T, cfg_.d_model);
}

Eigen::MatrixXd SparseMotionEncoder::signal_matrix(const sig::SparseMotionSequence& window) {
    Eigen::MatrixXd x(window.n_frames(), 54);
    for (int t = 0; t < window.n_frames(); ++t) x.row(t) = window.frames[t].x54.transpose();
    return x;
}

Eigen::MatrixXd SparseMotionEncoder::canonicalize_origin(Eigen::MatrixXd x) {
    if (x.cols() != 54) throw ShapeError("canonicalize_origin: want T x 54");
    if (x.rows() < 1) throw ShapeError("canonicalize_origin: empty window");
    const double mx = (x(0, 0) + x(0, 3) + x(0, 6)) / 3.0;
    const double mz = (x(0, 2) + x(0, 5) + x(0, 8)) / 3.0;
    for (int j = 0; j < 3; ++j) {
        x.col(3 * j).array() -= mx;
        x.col(3 * j + 2).array() -= mz;
    }
    return x;
}

nn::Var SparseMotionEncoder::encode_matrix(const nn::Var& canonicalized) const {
    if (canonicalized.rows() != cfg_.T || canonicalized.cols() != 54)
        throw ShapeError("encode_matrix: want " + std::to_string(cfg_.T) + " x 54, got " +
                         std::to_string(canonicalized.rows()) + " x " +
                         std::to_string(canonicalized.cols()));
    return summary_encode(enc_, canonicalized, pos_enc_);
}

Eigen::VectorXd SparseMotionEncoder::encode_sparse(const sig::SparseMotionSequence& window) const {
    nn::Var m = encode_matrix(nn::constant(canonicalize_origin(signal_matrix(window))));
    return m.value().row(0).transpose();
}

void SparseMotionEncoder::save(const std::string& path, const nlohmann::json& extra_meta) const {
    nlohmann::json meta;
    meta["kind"] = "sparse_encoder";
    meta["config"] = cfg_;
    merge_meta(meta, extra_meta);
    store_.save(path, meta);
}

SparseMotionEncoder SparseMotionEncoder::load(const std::string& path) {
    nlohmann::json meta;
    nn::ParamStore store = nn::ParamStore::load(path, &meta);
    if (meta.value("kind", "") != "sparse_encoder")
        throw ConfigError(path + ": checkpoint kind '" + meta.value("kind", "") +
                          "', want 'sparse_encoder'");
    PriorConfig cfg = meta.at("config").get<PriorConfig>();
    return SparseMotionEncoder(cfg, std::move(store));
}

FmLossTerms loss_fm_terms(const FullMotionPrior& prior, const data::MotionClip& window,
                          const Eigen::VectorXd& text_emb, const Eigen::VectorXd& image_emb,
                          double lambda_text, double lambda_image, double lambda_p) {
    const kin::SkeletonModel& skel = prior.skeleton();
    const int J = skel.n_joints();
    nn::Var m = prior.encode_positions(nn::constant(root_relative_positions(skel, window)));
    nn::Var out = prior.decode_latent(m);

    nn::Var pred_rot = nn::slice_cols(out, 0, 6 * J);
    nn::Var pred_trans = nn::slice_cols(out, 6 * J, 6 * J + 3);
    FmLossTerms terms;
    terms.recon_rot = nn::mse(pred_rot, nn::constant(rot_block(window)));
    nn::Var pred_pos = nn::fk_positions(skel, pred_rot, pred_trans);
    terms.recon_pos = nn::mse(pred_pos, nn::constant(global_positions(skel, window)));
    // disabled alignment terms stay out of the graph entirely, so small-latent
    // configurations (latent != embedding dim) remain usable with the lambdas at 0
    terms.text = lambda_text != 0.0
                     ? one_minus(nn::cosine(m, nn::constant(row_of(text_emb))))
                     : nn::constant(Eigen::MatrixXd::Zero(1, 1));
    terms.image = lambda_image != 0.0
                      ? one_minus(nn::cosine(m, nn::constant(row_of(image_emb))))
                      : nn::constant(Eigen::MatrixXd::Zero(1, 1));
    terms.total = nn::add(nn::add(terms.recon_rot, nn::scale(terms.recon_pos, lambda_p)),
                          nn::add(nn::scale(terms.text, lambda_text),
                                  nn::scale(terms.image, lambda_image)));
    return terms;
}

nn::Var loss_fm(const FullMotionPrior& prior, const data::MotionClip& window,
                const Eigen::VectorXd& text_emb, const Eigen::VectorXd& image_emb) {
    const PriorConfig& c = prior.config();
    return loss_fm_terms(prior, window, text_emb, image_emb, c.lambda_text, c.lambda_image,
                         c.lambda_p)
        .total;
}

SmLossTerms loss_sm(const nn::Var& m_star, const Eigen::VectorXd& text_emb,
                    const Eigen::VectorXd& image_emb, const Eigen::VectorXd& m_target,
                    double lambda_text, double lambda_image, double lambda_latent) {
    SmLossTerms terms;
    terms.text = lambda_text != 0.0
                     ? one_minus(nn::cosine(m_star, nn::constant(row_of(text_emb))))
                     : nn::constant(Eigen::MatrixXd::Zero(1, 1));
    terms.image = lambda_image != 0.0
                      ? one_minus(nn::cosine(m_star, nn::constant(row_of(image_emb))))
                      : nn::constant(Eigen::MatrixXd::Zero(1, 1));
    terms.total = nn::add(nn::scale(terms.text, lambda_text),
                          nn::scale(terms.image, lambda_image));
    if (lambda_latent != 0.0) {
        if (m_target.size() == 0)
            throw ConfigError("loss_sm: lambda_latent set but no target latent given");
        terms.latent = one_minus(nn::cosine(m_star, nn::constant(row_of(m_target))));
        terms.total = nn::add(terms.total, nn::scale(terms.latent, lambda_latent));
    }
    return terms;
}

namespace {

struct TrainLog {
    std::ofstream out;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    TrainLog(const std::string& path, bool append) {
        if (path.empty()) return;
        out.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out) throw DataError("cannot open training log: " + path);
    }
    void line(nlohmann::json j) {
        if (!out.is_open()) return;
        j["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count();
        out << j.dump() << "\n" << std::flush;
    }
};

std::vector<data::MotionClip> embedded_clips(const std::vector<data::MotionClip>& clips,
                                             int* excluded) {
    std::vector<data::MotionClip> usable;
    *excluded = 0;
    for (const auto& c : clips) {
        if (c.text_embedding && c.image_embedding)
            usable.push_back(c);
        else
            ++*excluded;
    }
    return usable;
}

nn::Var mean_of(const std::vector<nn::Var>& terms) {
    nn::Var sum = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) sum = nn::add(sum, terms[i]);
    return nn::scale(sum, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

FullMotionPrior train_full_prior(const kin::SkeletonModel& skel,
                                 const std::vector<data::MotionClip>& clips,
                                 const PriorTrainConfig& cfg, const std::string& log_path) {
    if ((cfg.arch.lambda_text != 0.0 || cfg.arch.lambda_image != 0.0) &&
        cfg.arch.latent_dim != data::kEmbedDim)
        throw ConfigError("train_full_prior: alignment terms need latent_dim == " +
                          std::to_string(data::kEmbedDim));
    int excluded = 0;
    const std::vector<data::MotionClip> usable = embedded_clips(clips, &excluded);
    if (usable.empty()) throw DataError("train_full_prior: no clips carry embeddings");
    const data::WindowedDataset ws = data::make_windows(usable, cfg.arch.T, cfg.window_stride);
    if (ws.windows.empty())
        throw DataError("train_full_prior: no windows of length " + std::to_string(cfg.arch.T));

    int start_step = 0;
    const bool resuming = !cfg.resume_from.empty();
    FullMotionPrior prior = resuming ? FullMotionPrior::load(cfg.resume_from)
                                     : FullMotionPrior(skel, cfg.arch, cfg.seed);
    if (resuming) {
        const nlohmann::json meta = nn::ParamStore::read_meta(cfg.resume_from);
        start_step = meta.value("step", 0);
        if (nlohmann::json(prior.config()) != nlohmann::json(cfg.arch))
            throw ConfigError("train_full_prior: resume config differs from checkpoint");
    }

    TrainLog log(log_path, resuming);
    log.line({{"event", "start"},
              {"windows", ws.windows.size()},
              {"clips_excluded", excluded},
              {"clips_skipped_short", ws.skipped_clips},
              {"start_step", start_step}});

    const nn::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    for (int step = start_step; step < cfg.steps; ++step) {
        Rng rng(mix_seed(cfg.seed, fnv1a64("prior-step"), static_cast<std::uint64_t>(step)));
        prior.store().zero_grads();
        std::vector<nn::Var> totals;
        double rot = 0, pos = 0, text = 0, image = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const auto idx = rng.uniform_index(ws.windows.size());
            const data::MotionClip w = ws.slice(usable, static_cast<int>(idx));
            FmLossTerms terms =
                loss_fm_terms(prior, w, *w.text_embedding, *w.image_embedding,
                              cfg.arch.lambda_text, cfg.arch.lambda_image, cfg.arch.lambda_p);
            totals.push_back(terms.total);
            rot += terms.recon_rot.value()(0, 0);
            pos += terms.recon_pos.value()(0, 0);
            text += terms.text.value()(0, 0);
            image += terms.image.value()(0, 0);
        }
        nn::Var loss = mean_of(totals);
        nn::backward(loss);
        prior.store().adam_step(adam);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps)
            log.line({{"step", step},
                      {"loss", loss.value()(0, 0)},
                      {"recon_rot", rot / cfg.batch},
                      {"recon_pos", pos / cfg.batch},
                      {"text", text / cfg.batch},
                      {"image", image / cfg.batch}});
    }
    return prior;
}

SparseMotionEncoder train_sparse_encoder(const kin::SkeletonModel& skel,
                                         const std::vector<data::MotionClip>& clips,
                                         const FullMotionPrior& prior,
                                         const SparseTrainConfig& cfg,
                                         const std::string& log_path) {
    if (cfg.arch.latent_dim != prior.config().latent_dim)
        throw ConfigError("train_sparse_encoder: latent dim mismatch with prior");
    if (cfg.arch.T != prior.config().T)
        throw ConfigError("train_sparse_encoder: window length mismatch with prior");
    if ((cfg.lambda_text != 0.0 || cfg.lambda_image != 0.0) &&
        cfg.arch.latent_dim != data::kEmbedDim)
        throw ConfigError("train_sparse_encoder: alignment terms need latent_dim == " +
                          std::to_string(data::kEmbedDim));

    int excluded = 0;
    const std::vector<data::MotionClip> usable = embedded_clips(clips, &excluded);
    if (usable.empty()) throw DataError("train_sparse_encoder: no clips carry embeddings");
    const data::WindowedDataset ws = data::make_windows(usable, cfg.arch.T, cfg.window_stride);
    if (ws.windows.empty())
        throw DataError("train_sparse_encoder: no windows of length " +
                        std::to_string(cfg.arch.T));

    int start_step = 0;
    const bool resuming = !cfg.resume_from.empty();
    SparseMotionEncoder enc = resuming ? SparseMotionEncoder::load(cfg.resume_from)
                                       : SparseMotionEncoder(cfg.arch, cfg.seed);
    if (resuming) start_step = nn::ParamStore::read_meta(cfg.resume_from).value("step", 0);

    const std::uint64_t prior_hash_before = prior.store().content_hash();
    TrainLog log(log_path, resuming);
    log.line({{"event", "start"},
              {"windows", ws.windows.size()},
              {"clips_excluded", excluded},
              {"clips_skipped_short", ws.skipped_clips},
              {"lambda_latent", cfg.lambda_latent},
              {"prior_hash", hex64(prior_hash_before)},
              {"start_step", start_step}});

    const nn::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    for (int step = start_step; step < cfg.steps; ++step) {
        Rng rng(mix_seed(cfg.seed, fnv1a64("sparse-step"), static_cast<std::uint64_t>(step)));
        enc.store().zero_grads();
        std::vector<nn::Var> totals;
        double text = 0, image = 0, latent = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const auto idx = rng.uniform_index(ws.windows.size());
            const data::MotionClip w = ws.slice(usable, static_cast<int>(idx));
            const auto raw = sig::extract_sparse_signals(skel, w);
            const sig::SparseMotionSequence seq = sig::augment(raw, w.fps);
            nn::Var m_star = enc.encode_matrix(nn::constant(
                SparseMotionEncoder::canonicalize_origin(SparseMotionEncoder::signal_matrix(seq))));
            Eigen::VectorXd target;
            if (cfg.lambda_latent != 0.0) target = prior.encode_full(w);
            SmLossTerms terms = loss_sm(m_star, *w.text_embedding, *w.image_embedding, target,
                                        cfg.lambda_text, cfg.lambda_image, cfg.lambda_latent);
            totals.push_back(terms.total);
            text += terms.text.value()(0, 0);
            image += terms.image.value()(0, 0);
            if (terms.latent.defined()) latent += terms.latent.value()(0, 0);
        }
        nn::Var loss = mean_of(totals);
        nn::backward(loss);
        enc.store().adam_step(adam);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps)
            log.line({{"step", step},
                      {"loss", loss.value()(0, 0)},
                      {"text", text / cfg.batch},
                      {"image", image / cfg.batch},
                      {"latent", latent / cfg.batch}});
    }
    if (prior.store().content_hash() != prior_hash_before)
        throw DataError("train_sparse_encoder: prior parameters changed during training");
    return enc;
}

}  // namespace mopr::prior
