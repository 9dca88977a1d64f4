#include "mopr/sequence.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "mopr/errors.hpp"
#include "mopr/nn_kinematics.hpp"
#include "mopr/util.hpp"

namespace mopr::seq {

void to_json(nlohmann::json& j, const SeqConfig& c) {
    j = nlohmann::json{{"S", c.S},
                       {"lstm_hidden", c.lstm_hidden},
                       {"n_lstm_layers", c.n_lstm_layers},
                       {"embed_dim", c.embed_dim},
                       {"latent_dim", c.latent_dim},
                       {"lambda_rot", c.lambda_rot},
                       {"lambda_pos", c.lambda_pos},
                       {"lambda_vel", c.lambda_vel},
                       {"lambda_mo", c.lambda_mo},
                       {"vel_mode", c.vel_mode}};
}

void from_json(const nlohmann::json& j, SeqConfig& c) {
    const SeqConfig d;
    c.S = j.value("S", d.S);
    c.lstm_hidden = j.value("lstm_hidden", d.lstm_hidden);
    c.n_lstm_layers = j.value("n_lstm_layers", d.n_lstm_layers);
    c.embed_dim = j.value("embed_dim", d.embed_dim);
    c.latent_dim = j.value("latent_dim", d.latent_dim);
    c.lambda_rot = j.value("lambda_rot", d.lambda_rot);
    c.lambda_pos = j.value("lambda_pos", d.lambda_pos);
    c.lambda_vel = j.value("lambda_vel", d.lambda_vel);
    c.lambda_mo = j.value("lambda_mo", d.lambda_mo);
    c.vel_mode = j.value("vel_mode", d.vel_mode);
}

namespace {

nn::Var one_minus(const nn::Var& x) { return nn::add_const(nn::scale(x, -1.0), 1.0); }

nn::Var zero_scalar() { return nn::constant(Eigen::MatrixXd::Zero(1, 1)); }

void check_vel_mode(const std::string& mode) {
    if (mode != "position" && mode != "rotation")
        throw ConfigError("vel_mode must be 'position' or 'rotation', got '" + mode + "'");
}

}  // namespace

SequenceModel::SequenceModel(kin::SkeletonModel skel, SeqConfig cfg, std::uint64_t seed)
    : skel_(std::move(skel)), cfg_(std::move(cfg)) {
    skel_.validate();
    check_vel_mode(cfg_.vel_mode);
    Rng rng(mix_seed(seed, fnv1a64("sequence-model")));
    nn::build_linear(store_, "seq.embed", cfg_.latent_dim, cfg_.embed_dim, rng);
    nn::build_lstm_stack(store_, "seq.lstm", 54 + cfg_.embed_dim, cfg_.lstm_hidden,
                         cfg_.n_lstm_layers, rng);
    nn::build_linear(store_, "seq.head", cfg_.lstm_hidden, 6 * skel_.n_joints(), rng);
    bind();
}

SequenceModel::SequenceModel(kin::SkeletonModel skel, SeqConfig cfg, nn::ParamStore store)
    : skel_(std::move(skel)), cfg_(std::move(cfg)), store_(std::move(store)) {
    skel_.validate();
    check_vel_mode(cfg_.vel_mode);
    bind();
}

void SequenceModel::bind() {
    embed_ = nn::bind_linear(store_, "seq.embed");
    lstm_ = nn::bind_lstm_stack(store_, "seq.lstm", cfg_.lstm_hidden, cfg_.n_lstm_layers);
    head_ = nn::bind_linear(store_, "seq.head");
}

nn::Var SequenceModel::motion_embedding(const nn::Var& m) const {
    if (m.cols() != cfg_.latent_dim)
        throw ShapeError("motion_embedding: want " + std::to_string(cfg_.latent_dim) +
                         " columns, got " + std::to_string(m.cols()));
    return nn::linear(m, embed_);
}

nn::Var SequenceModel::predict_pose(const Eigen::MatrixXd& x_norm, const nn::Var& embeds) const {
    if (x_norm.rows() != cfg_.S || x_norm.cols() != 54)
        throw ShapeError("predict_pose: want " + std::to_string(cfg_.S) + " x 54 signals, got " +
                         std::to_string(x_norm.rows()) + " x " + std::to_string(x_norm.cols()));
    if (embeds.rows() != cfg_.S || embeds.cols() != cfg_.embed_dim)
        throw ShapeError("predict_pose: want " + std::to_string(cfg_.S) + " x " +
                         std::to_string(cfg_.embed_dim) + " embeddings, got " +
                         std::to_string(embeds.rows()) + " x " + std::to_string(embeds.cols()));
    nn::Var in = nn::concat_cols({nn::constant(x_norm), embeds});
    nn::LstmResult r = nn::lstm_stack(in, lstm_);
    return nn::linear(r.last_hidden, head_);
}

void SequenceModel::save(const std::string& path, const nlohmann::json& extra_meta) const {
    nlohmann::json meta;
    meta["kind"] = "sequence_model";
    meta["config"] = cfg_;
    meta["skeleton"] = kin::skeleton_to_json(skel_);
    for (const auto& [key, value] : extra_meta.items()) meta[key] = value;
    store_.save(path, meta);
}

SequenceModel SequenceModel::load(const std::string& path) {
    nlohmann::json meta;
    nn::ParamStore store = nn::ParamStore::load(path, &meta);
    if (meta.value("kind", "") != "sequence_model")
        throw ConfigError(path + ": checkpoint kind '" + meta.value("kind", "") +
                          "', want 'sequence_model'");
    SeqConfig cfg = meta.at("config").get<SeqConfig>();
    kin::SkeletonModel skel = kin::skeleton_from_json(meta.at("skeleton"));
    return SequenceModel(std::move(skel), std::move(cfg), std::move(store));
}

Eigen::VectorXd feature_row(const std::optional<sig::SparseSignalFrame>& prev,
                            const sig::SparseSignalFrame& curr, double fps) {
    std::vector<sig::SparseSignalFrame> frames;
    if (prev) frames.push_back(*prev);
    frames.push_back(curr);
    const sig::SparseMotionSequence aug = sig::augment(frames, fps);
    sig::SparseMotionSequence one;
    one.fps = fps;
    one.frames = {aug.frames.back()};
    return sig::normalize_horizontal(one).frames[0].x54;
}

Eigen::MatrixXd normalized_feature_rows(const std::vector<sig::SparseSignalFrame>& raw,
                                        double fps) {
    if (raw.empty()) throw ShapeError("normalized_feature_rows: empty stream");
    Eigen::MatrixXd out(static_cast<int>(raw.size()), 54);
    std::optional<sig::SparseSignalFrame> prev;
    for (std::size_t t = 0; t < raw.size(); ++t) {
        out.row(static_cast<int>(t)) = feature_row(prev, raw[t], fps).transpose();
        prev = raw[t];
    }
    return out;
}

Eigen::VectorXd latent_for_window(const prior::SparseMotionEncoder& enc,
                                  const std::vector<sig::SparseSignalFrame>& window,
                                  double fps) {
    return enc.encode_sparse(sig::augment(window, fps));
}

Eigen::MatrixXd window_latents(const prior::SparseMotionEncoder& enc,
                               const std::vector<sig::SparseSignalFrame>& raw, double fps) {
    if (raw.empty()) throw ShapeError("window_latents: empty stream");
    const int T = enc.config().T;
    const int n = static_cast<int>(raw.size());
    Eigen::MatrixXd out(n, enc.config().latent_dim);
    std::vector<sig::SparseSignalFrame> window(static_cast<std::size_t>(T));
    for (int t = 0; t < n; ++t) {
        for (int k = 0; k < T; ++k) window[k] = raw[std::max(0, t - T + 1 + k)];
        out.row(t) = latent_for_window(enc, window, fps).transpose();
    }
    return out;
}

const Eigen::MatrixXd& LatentCache::at(std::uint64_t clip_hash) const {
    const auto it = rows.find(clip_hash);
    if (it == rows.end())
        throw DataError("latent cache has no rows for clip " + hex64(clip_hash));
    return it->second;
}

LatentCache load_latent_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open latent cache: " + path);
    std::string magic, header_line, data_line;
    std::getline(in, magic);
    if (magic.rfind("MOPRLAT", 0) != 0) throw ParseError(path + ": not a latent cache file");
    if (magic != "MOPRLAT 1") throw VersionError(path + ": unsupported version '" + magic + "'");
    std::getline(in, header_line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad header: " + e.what());
    }
    std::getline(in, data_line);
    if (data_line != "data") throw ParseError(path + ": missing data marker");

    LatentCache cache;
    try {
        cache.encoder_hash = parse_hex64(header.at("encoder").get<std::string>());
        cache.latent_dim = header.at("latent_dim").get<int>();
        for (const auto& entry : header.at("clips")) {
            const std::uint64_t key = parse_hex64(entry.at("hash").get<std::string>());
            const int n = entry.at("frames").get<int>();
            if (n < 1 || cache.latent_dim < 1) throw ParseError(path + ": bad clip entry");
            Eigen::MatrixXd m(n, cache.latent_dim);
            for (int t = 0; t < n; ++t)
                for (int c = 0; c < cache.latent_dim; ++c) {
                    double v;
                    in.read(reinterpret_cast<char*>(&v), sizeof(v));
                    m(t, c) = v;
                }
            if (!in) throw ParseError(path + ": truncated payload");
            cache.rows[key] = std::move(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad header: " + e.what());
    }
    return cache;
}

void save_latent_cache(const LatentCache& cache, const std::string& path) {
    nlohmann::json header;
    header["encoder"] = hex64(cache.encoder_hash);
    header["latent_dim"] = cache.latent_dim;
    header["clips"] = nlohmann::json::array();
    for (const auto& [key, m] : cache.rows)
        header["clips"].push_back(
            {{"hash", hex64(key)}, {"frames", static_cast<int>(m.rows())}});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write latent cache: " + path);
    out << "MOPRLAT 1\n" << header.dump() << "\ndata\n";
    for (const auto& [key, m] : cache.rows)
        for (int t = 0; t < m.rows(); ++t)
            for (int c = 0; c < m.cols(); ++c) {
                const double v = m(t, c);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    if (!out) throw DataError("failed writing latent cache: " + path);
}

LatentCache build_or_load_latent_cache(const std::string& path,
                                       const prior::SparseMotionEncoder& enc,
                                       const kin::SkeletonModel& skel,
                                       const std::vector<data::MotionClip>& clips) {
    LatentCache cache;
    cache.encoder_hash = enc.store().content_hash();
    cache.latent_dim = enc.config().latent_dim;
    if (!path.empty() && std::filesystem::exists(path)) {
        LatentCache disk = load_latent_cache(path);
        if (disk.encoder_hash == cache.encoder_hash && disk.latent_dim == cache.latent_dim)
            cache.rows = std::move(disk.rows);
    }
    bool dirty = false;
    for (const auto& clip : clips) {
        const std::uint64_t key = data::content_hash(clip);
        const auto it = cache.rows.find(key);
        if (it != cache.rows.end() && it->second.rows() == clip.n_frames()) continue;
        const auto raw = sig::extract_sparse_signals(skel, clip);
        cache.rows[key] = window_latents(enc, raw, clip.fps);
        dirty = true;
    }
    if (!path.empty() && dirty) save_latent_cache(cache, path);
    return cache;
}

SeqLossTerms loss_seq(const kin::SkeletonModel& skel, const nn::Var& pred_rot,
                      const data::MotionClip& gt_segment,
                      const prior::FullMotionPrior* mo_prior, double lambda_rot,
                      double lambda_pos, double lambda_vel, double lambda_mo,
                      const std::string& vel_mode) {
    check_vel_mode(vel_mode);
    const int T_seg = static_cast<int>(pred_rot.rows());
    const int J = skel.n_joints();
    if (gt_segment.n_frames() != T_seg || gt_segment.n_joints() != J)
        throw ShapeError("loss_seq: prediction is " + std::to_string(T_seg) + " x " +
                         std::to_string(pred_rot.cols()) + ", ground truth " +
                         std::to_string(gt_segment.n_frames()) + " frames x " +
                         std::to_string(gt_segment.n_joints()) + " joints");
    if (pred_rot.cols() != 6 * J)
        throw ShapeError("loss_seq: want " + std::to_string(6 * J) + " rotation columns");

    SeqLossTerms t;
    nn::Var gt_rot = nn::constant(prior::rot_block(gt_segment));
    t.rot = nn::mse(pred_rot, gt_rot);
    nn::Var pred_pos = nn::fk_positions(skel, pred_rot);
    nn::Var gt_pos = nn::constant(prior::root_relative_positions(skel, gt_segment));
    t.pos = nn::mse(pred_pos, gt_pos);

    if (T_seg >= 2) {
        const auto deltas = [T_seg](const nn::Var& x) {
            return nn::sub(nn::slice_rows(x, 1, T_seg), nn::slice_rows(x, 0, T_seg - 1));
        };
        if (vel_mode == "position")
            t.vel = nn::mse(deltas(pred_pos), deltas(gt_pos));
        else
            t.vel = nn::mse(deltas(pred_rot), deltas(gt_rot));
    } else {
        t.vel = zero_scalar();
    }

    if (lambda_mo != 0.0) {
        if (mo_prior == nullptr)
            throw MissingCheckpoint("loss_seq: motion term needs a full motion prior");
        const int T_prior = mo_prior->config().T;
        if (T_seg < T_prior)
            throw InsufficientContext("loss_seq: motion term needs " +
                                      std::to_string(T_prior) +
                                      " consecutive predictions, got " + std::to_string(T_seg));
        if (T_seg > T_prior)
            throw ShapeError("loss_seq: " + std::to_string(T_seg) +
                             " predictions exceed the prior window " + std::to_string(T_prior));
        nn::Var m_hat = mo_prior->encode_positions(pred_pos);
        const Eigen::VectorXd m_gt = mo_prior->encode_full(gt_segment);
        t.mo = one_minus(nn::cosine(m_hat, nn::constant(m_gt.transpose())));
    } else {
        t.mo = zero_scalar();
    }

    t.total = nn::add(nn::add(nn::scale(t.rot, lambda_rot), nn::scale(t.pos, lambda_pos)),
                      nn::scale(t.vel, lambda_vel));
    if (lambda_mo != 0.0) t.total = nn::add(t.total, nn::scale(t.mo, lambda_mo));
    return t;
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

nn::Var mean_of(const std::vector<nn::Var>& terms) {
    nn::Var sum = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) sum = nn::add(sum, terms[i]);
    return nn::scale(sum, 1.0 / static_cast<double>(terms.size()));
}

std::vector<kin::Rot6d> decode_pose_row(const Eigen::MatrixXd& row, int n_joints) {
    std::vector<kin::Rot6d> rots(static_cast<std::size_t>(n_joints));
    for (int j = 0; j < n_joints; ++j) rots[j] = row.block<1, 6>(0, 6 * j).transpose();
    return rots;
}

Eigen::Vector3d head_aligned_root(const kin::SkeletonModel& skel,
                                  const std::vector<kin::Rot6d>& rots,
                                  const Eigen::Vector3d& tracked_head) {
    const kin::FullPose pose{rots, Eigen::Vector3d::Zero()};
    const kin::FkResult fk = kin::forward_kinematics(skel, pose);
    return tracked_head - fk.positions[skel.head];
}

}  // namespace

SequenceModel train_sequence_model(const kin::SkeletonModel& skel,
                                   const std::vector<data::MotionClip>& clips,
                                   const prior::SparseMotionEncoder* sparse_enc,
                                   const prior::FullMotionPrior* mo_prior,
                                   const SeqTrainConfig& cfg, const std::string& log_path) {
    if (cfg.ablation != "none" && cfg.ablation != "no_motion_loss" &&
        cfg.ablation != "no_motion_prior")
        throw ConfigError("unknown ablation '" + cfg.ablation + "'");
    const bool use_embed = cfg.ablation != "no_motion_prior";
    const bool use_mo = cfg.ablation == "none";
    if (use_embed && sparse_enc == nullptr)
        throw MissingCheckpoint("sequence training needs a sparse motion encoder");
    if (use_mo && mo_prior == nullptr)
        throw MissingCheckpoint("sequence training needs a full motion prior");
    if (use_mo && cfg.segment_len != mo_prior->config().T)
        throw ConfigError("segment_len " + std::to_string(cfg.segment_len) +
                          " must equal the motion prior window " +
                          std::to_string(mo_prior->config().T));
    if (use_embed && sparse_enc->config().latent_dim != cfg.arch.latent_dim)
        throw ConfigError("sequence latent_dim differs from the sparse encoder's");
    if (cfg.segment_len < 1) throw ConfigError("segment_len must be >= 1");

    std::vector<data::MotionClip> eligible;
    int skipped = 0;
    for (const auto& c : clips) {
        if (c.n_frames() >= cfg.segment_len && c.n_joints() == skel.n_joints())
            eligible.push_back(c);
        else
            ++skipped;
    }
    if (eligible.empty())
        throw DataError("train_sequence_model: no clips with >= " +
                        std::to_string(cfg.segment_len) + " frames");

    const std::uint64_t sparse_hash = use_embed ? sparse_enc->store().content_hash() : 0;
    const std::uint64_t prior_hash = use_mo ? mo_prior->store().content_hash() : 0;

    LatentCache cache;
    if (use_embed) cache = build_or_load_latent_cache(cfg.latent_cache_path, *sparse_enc, skel,
                                                      eligible);
    std::vector<Eigen::MatrixXd> x_rows(eligible.size());
    std::vector<std::uint64_t> clip_keys(eligible.size());
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const auto raw = sig::extract_sparse_signals(skel, eligible[i]);
        x_rows[i] = normalized_feature_rows(raw, eligible[i].fps);
        clip_keys[i] = data::content_hash(eligible[i]);
    }

    int start_step = 0;
    const bool resuming = !cfg.resume_from.empty();
    SequenceModel model = resuming ? SequenceModel::load(cfg.resume_from)
                                   : SequenceModel(skel, cfg.arch, cfg.seed);
    if (resuming) {
        start_step = nn::ParamStore::read_meta(cfg.resume_from).value("step", 0);
        if (nlohmann::json(model.config()) != nlohmann::json(cfg.arch))
            throw ConfigError("train_sequence_model: resume config differs from checkpoint");
    }

    TrainLog log(log_path, resuming);
    log.line({{"event", "start"},
              {"clips", eligible.size()},
              {"clips_skipped", skipped},
              {"ablation", cfg.ablation},
              {"sparse_hash", hex64(sparse_hash)},
              {"prior_hash", hex64(prior_hash)},
              {"start_step", start_step}});

    const int S = cfg.arch.S;
    const int seg = cfg.segment_len;
    const int W = seg + S - 1;
    const nn::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    for (int step = start_step; step < cfg.steps; ++step) {
        Rng rng(mix_seed(cfg.seed, fnv1a64("seq-step"), static_cast<std::uint64_t>(step)));
        model.store().zero_grads();
        std::vector<nn::Var> totals;
        double rot = 0, pos = 0, vel = 0, mo = 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const auto ci = rng.uniform_index(eligible.size());
            const data::MotionClip& clip = eligible[ci];
            const int n = clip.n_frames();
            const int a =
                n == seg ? 0 : static_cast<int>(rng.uniform_index(
                                   static_cast<std::size_t>(n - seg + 1)));

            Eigen::MatrixXd xw(W, 54);
            for (int k = 0; k < W; ++k) xw.row(k) = x_rows[ci].row(std::max(0, a - S + 1 + k));
            nn::Var embeds;
            if (use_embed) {
                const Eigen::MatrixXd& lat = cache.at(clip_keys[ci]);
                Eigen::MatrixXd lw(W, cfg.arch.latent_dim);
                for (int k = 0; k < W; ++k) lw.row(k) = lat.row(std::max(0, a - S + 1 + k));
                embeds = model.motion_embedding(nn::constant(std::move(lw)));
            } else {
                embeds = nn::constant(Eigen::MatrixXd::Zero(W, cfg.arch.embed_dim));
            }

            std::vector<nn::Var> preds;
            preds.reserve(static_cast<std::size_t>(seg));
            for (int u = 0; u < seg; ++u)
                preds.push_back(
                    model.predict_pose(xw.middleRows(u, S), nn::slice_rows(embeds, u, u + S)));
            nn::Var pred_rot = nn::concat_rows(preds);
            const data::MotionClip gt_seg = data::slice_clip(clip, a, seg);
            SeqLossTerms lt =
                loss_seq(skel, pred_rot, gt_seg, use_mo ? mo_prior : nullptr,
                         cfg.arch.lambda_rot, cfg.arch.lambda_pos, cfg.arch.lambda_vel,
                         use_mo ? cfg.arch.lambda_mo : 0.0, cfg.arch.vel_mode);
            totals.push_back(lt.total);
            rot += lt.rot.value()(0, 0);
            pos += lt.pos.value()(0, 0);
            vel += lt.vel.value()(0, 0);
            mo += lt.mo.value()(0, 0);
        }
        nn::Var loss = mean_of(totals);
        nn::backward(loss);
        model.store().adam_step(adam);
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps)
            log.line({{"step", step},
                      {"loss", loss.value()(0, 0)},
                      {"rot", rot / cfg.batch},
                      {"pos", pos / cfg.batch},
                      {"vel", vel / cfg.batch},
                      {"mo", mo / cfg.batch}});
    }
    if (use_embed && sparse_enc->store().content_hash() != sparse_hash)
        throw DataError("train_sequence_model: sparse encoder changed during training");
    if (use_mo && mo_prior->store().content_hash() != prior_hash)
        throw DataError("train_sequence_model: motion prior changed during training");
    return model;
}

data::MotionClip infer_motion(const SequenceModel& model,
                              const prior::SparseMotionEncoder* enc,
                              const std::vector<sig::SparseSignalFrame>& raw, double fps) {
    if (raw.empty()) throw ShapeError("infer_motion: empty stream");
    const kin::SkeletonModel& skel = model.skeleton();
    if (!skel.has_tracked_joints())
        throw DataError("infer_motion: skeleton lacks tracked joints");
    if (enc != nullptr && enc->config().latent_dim != model.config().latent_dim)
        throw ConfigError("infer_motion: encoder latent_dim differs from the model's");
    const int n = static_cast<int>(raw.size());
    const int S = model.config().S;
    const int J = skel.n_joints();

    const Eigen::MatrixXd x = normalized_feature_rows(raw, fps);
    // Embeddings row-by-row so the arithmetic matches StreamingInference exactly.
    Eigen::MatrixXd e(n, model.config().embed_dim);
    if (enc != nullptr) {
        const int T = enc->config().T;
        std::vector<sig::SparseSignalFrame> window(static_cast<std::size_t>(T));
        for (int t = 0; t < n; ++t) {
            for (int k = 0; k < T; ++k) window[k] = raw[std::max(0, t - T + 1 + k)];
            const Eigen::VectorXd lat = latent_for_window(*enc, window, fps);
            e.row(t) = model.motion_embedding(nn::constant(lat.transpose())).value().row(0);
        }
    } else {
        e.setZero();
    }

    data::MotionClip out;
    out.fps = fps;
    out.skeleton_hash = skel.hash();
    out.local_rot.resize(static_cast<std::size_t>(n));
    out.root_translation.resize(static_cast<std::size_t>(n));
    Eigen::MatrixXd xw(S, 54);
    Eigen::MatrixXd ew(S, model.config().embed_dim);
    for (int t = 0; t < n; ++t) {
        for (int k = 0; k < S; ++k) {
            const int idx = std::max(0, t - S + 1 + k);
            xw.row(k) = x.row(idx);
            ew.row(k) = e.row(idx);
        }
        const Eigen::MatrixXd pose_row = model.predict_pose(xw, nn::constant(ew)).value();
        out.local_rot[t] = decode_pose_row(pose_row, J);
        out.root_translation[t] = head_aligned_root(skel, out.local_rot[t], raw[t].g3[0]);
    }
    return out;
}

StreamingInference::StreamingInference(const SequenceModel& model,
                                       const prior::SparseMotionEncoder* enc, double fps)
    : model_(model), enc_(enc), fps_(fps) {
    if (!model_.skeleton().has_tracked_joints())
        throw DataError("StreamingInference: skeleton lacks tracked joints");
    if (enc_ != nullptr && enc_->config().latent_dim != model_.config().latent_dim)
        throw ConfigError("StreamingInference: encoder latent_dim differs from the model's");
}

kin::FullPose StreamingInference::push(const sig::SparseSignalFrame& frame) {
    const int S = model_.config().S;
    const int embed_dim = model_.config().embed_dim;

    x_rows_.push_back(feature_row(prev_, frame, fps_));
    if (static_cast<int>(x_rows_.size()) > S) x_rows_.pop_front();

    Eigen::VectorXd e_row;
    if (enc_ != nullptr) {
        const int T = enc_->config().T;
        raw_win_.push_back(frame);
        if (static_cast<int>(raw_win_.size()) > T) raw_win_.pop_front();
        std::vector<sig::SparseSignalFrame> window;
        window.reserve(static_cast<std::size_t>(T));
        for (int k = static_cast<int>(raw_win_.size()); k < T; ++k)
            window.push_back(raw_win_.front());
        for (const auto& r : raw_win_) window.push_back(r);
        const Eigen::VectorXd lat = latent_for_window(*enc_, window, fps_);
        e_row = model_.motion_embedding(nn::constant(lat.transpose()))
                    .value()
                    .row(0)
                    .transpose();
    } else {
        e_row = Eigen::VectorXd::Zero(embed_dim);
    }
    e_rows_.push_back(e_row);
    if (static_cast<int>(e_rows_.size()) > S) e_rows_.pop_front();

    Eigen::MatrixXd xw(S, 54);
    Eigen::MatrixXd ew(S, embed_dim);
    const int have = static_cast<int>(x_rows_.size());
    for (int k = 0; k < S; ++k) {
        const int src = std::max(0, k - (S - have));
        xw.row(k) = x_rows_[static_cast<std::size_t>(src)].transpose();
        ew.row(k) = e_rows_[static_cast<std::size_t>(src)].transpose();
    }

    const Eigen::MatrixXd pose_row = model_.predict_pose(xw, nn::constant(ew)).value();
    kin::FullPose pose;
    pose.local_rot = decode_pose_row(pose_row, model_.skeleton().n_joints());
    pose.root_translation =
        head_aligned_root(model_.skeleton(), pose.local_rot, frame.g3[0]);
    prev_ = frame;
    return pose;
}

}  // namespace mopr::seq
