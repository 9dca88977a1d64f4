#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mopr/embedding_table.hpp"
#include "mopr/errors.hpp"
#include "mopr/evaluate.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/prior.hpp"
#include "mopr/sequence.hpp"
#include "mopr/signals.hpp"
#include "mopr/skeleton.hpp"
#include "mopr/synth.hpp"
#include "mopr/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string mode = "paper";
    std::string ablation;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mopr::ConfigError("cannot open config: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw mopr::ConfigError(path + ": " + e.what());
    }
}

// Paths resolve against the working directory first, then MOPR_DATA_ROOT.
std::string resolve_path(const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || fs::exists(p)) return p;
    if (const char* root = std::getenv("MOPR_DATA_ROOT")) {
        const fs::path candidate = fs::path(root) / p;
        if (fs::exists(candidate)) return candidate.string();
    }
    return p;
}

std::string require_str(const json& cfg, const std::string& key) {
    if (!cfg.contains(key))
        throw mopr::ConfigError("config is missing required key '" + key + "'");
    return cfg.at(key).get<std::string>();
}

fs::path prepare_out_dir(const std::string& out) {
    if (out.empty()) throw mopr::ConfigError("--out is required");
    fs::create_directories(out);
    return fs::path(out);
}

void write_snapshot(const fs::path& out_dir, const std::string& command, const json& cfg,
                    std::uint64_t seed, const CommonArgs& args) {
    json snap = cfg;
    snap["command"] = command;
    snap["seed"] = seed;
    if (!args.mode.empty()) snap["mode"] = args.mode;
    if (!args.ablation.empty()) snap["ablation"] = args.ablation;
    std::ofstream f(out_dir / "config.json", std::ios::trunc);
    if (!f) throw mopr::DataError("cannot write config snapshot in " + out_dir.string());
    f << snap.dump(2) << "\n";
}

std::vector<mopr::data::MotionClip> load_clips(const std::string& data_path) {
    const std::string resolved = resolve_path(data_path);
    std::vector<mopr::data::MotionClip> clips;
    if (fs::is_directory(resolved)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(resolved))
            if (entry.is_regular_file() && entry.path().extension() == ".mclip")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) clips.push_back(mopr::data::load_motion(f.string()));
    } else if (fs::exists(resolved)) {
        clips.push_back(mopr::data::load_motion(resolved));
    }
    if (clips.empty()) throw mopr::DataError("no .mclip files under " + resolved);
    return clips;
}

mopr::kin::SkeletonModel load_canonical_skeleton(const json& cfg) {
    const std::string path = resolve_path(require_str(cfg, "skeleton"));
    mopr::kin::SkeletonModel skel = mopr::kin::load_skeleton(path);
    skel.validate(true);
    return skel;
}

std::uint64_t pick_seed(const json& cfg, const CommonArgs& args, std::uint64_t fallback) {
    if (args.seed) return *args.seed;
    return cfg.value("seed", fallback);
}

std::string normalize_ablation(const std::string& flag) {
    if (flag == "no-motion-prior") return "no_motion_prior";
    if (flag == "no-motion-loss") return "no_motion_loss";
    if (flag.empty() || flag == "none") return "none";
    throw mopr::ConfigError("unknown ablation '" + flag + "'");
}

void cmd_synth(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);
    const std::uint64_t seed = pick_seed(cfg, args, 1);

    mopr::kin::SkeletonModel skel = load_canonical_skeleton(cfg);
    mopr::data::SynthConfig sc;
    sc.classes = cfg.value("classes", std::vector<std::string>{});
    sc.clips_per_class = cfg.value("clips_per_class", sc.clips_per_class);
    sc.n_frames = cfg.value("n_frames", sc.n_frames);
    sc.fps = cfg.value("fps", sc.fps);
    sc.start_offset_range = cfg.value("start_offset_range", sc.start_offset_range);
    sc.validate();

    const std::vector<std::string> labels =
        sc.classes.empty() ? mopr::data::synth_classes() : sc.classes;
    const std::uint64_t table_seed = cfg.value("table_seed", seed);
    const mopr::data::EmbeddingTable table = mopr::data::build_embedding_table(labels, table_seed);

    const std::vector<mopr::data::MotionClip> clips =
        mopr::data::synth_generate(skel, sc, table, seed);
    const fs::path clip_dir = out / "clips";
    fs::create_directories(clip_dir);
    for (std::size_t i = 0; i < clips.size(); ++i) {
        std::ostringstream name;
        name << std::setw(4) << std::setfill('0') << i << "_" << clips[i].action_label
             << ".mclip";
        mopr::data::save_motion(clips[i], (clip_dir / name.str()).string());
    }
    mopr::data::save_embedding_table(table, (out / "embeddings.json").string());
    write_snapshot(out, "synth", cfg, seed, args);
    std::cout << json{{"clips", clips.size()}, {"out", out.string()}}.dump() << "\n";
}

void cmd_train_prior(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);

    mopr::kin::SkeletonModel skel = load_canonical_skeleton(cfg);
    const auto clips = load_clips(require_str(cfg, "data"));

    mopr::prior::PriorTrainConfig tc;
    tc.arch = cfg.value("arch", json::object()).get<mopr::prior::PriorConfig>();
    tc.steps = cfg.value("steps", tc.steps);
    tc.batch = cfg.value("batch", tc.batch);
    tc.lr = cfg.value("lr", tc.lr);
    tc.window_stride = cfg.value("window_stride", tc.window_stride);
    tc.log_every = cfg.value("log_every", tc.log_every);
    tc.seed = pick_seed(cfg, args, tc.seed);
    tc.resume_from = cfg.value("resume_from", "");

    mopr::prior::FullMotionPrior prior =
        mopr::prior::train_full_prior(skel, clips, tc, (out / "train_log.jsonl").string());
    prior.save((out / "prior.ckpt").string(), {{"step", tc.steps}, {"seed", tc.seed}});
    write_snapshot(out, "train-prior", cfg, tc.seed, args);
    std::cout << json{{"checkpoint", (out / "prior.ckpt").string()},
                      {"params_hash", mopr::hex64(prior.store().content_hash())}}
                     .dump()
              << "\n";
}

void cmd_train_sparse(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);
    if (args.mode != "paper" && args.mode != "extended")
        throw mopr::ConfigError("--mode must be 'paper' or 'extended'");

    mopr::kin::SkeletonModel skel = load_canonical_skeleton(cfg);
    const auto clips = load_clips(require_str(cfg, "data"));
    const mopr::prior::FullMotionPrior prior =
        mopr::prior::FullMotionPrior::load(resolve_path(require_str(cfg, "prior")));

    mopr::prior::SparseTrainConfig tc;
    tc.arch = cfg.contains("arch") ? cfg.at("arch").get<mopr::prior::PriorConfig>()
                                   : prior.config();
    tc.steps = cfg.value("steps", tc.steps);
    tc.batch = cfg.value("batch", tc.batch);
    tc.lr = cfg.value("lr", tc.lr);
    tc.window_stride = cfg.value("window_stride", tc.window_stride);
    tc.log_every = cfg.value("log_every", tc.log_every);
    tc.seed = pick_seed(cfg, args, tc.seed);
    tc.lambda_text = cfg.value("lambda_text", tc.lambda_text);
    tc.lambda_image = cfg.value("lambda_image", tc.lambda_image);
    tc.lambda_latent = args.mode == "extended" ? 1.0 : 0.0;
    tc.lambda_latent = cfg.value("lambda_latent", tc.lambda_latent);
    tc.resume_from = cfg.value("resume_from", "");

    mopr::prior::SparseMotionEncoder enc = mopr::prior::train_sparse_encoder(
        skel, clips, prior, tc, (out / "train_log.jsonl").string());
    enc.save((out / "sparse.ckpt").string(),
             {{"step", tc.steps},
              {"seed", tc.seed},
              {"mode", args.mode},
              {"prior_hash", mopr::hex64(prior.store().content_hash())}});
    write_snapshot(out, "train-sparse", cfg, tc.seed, args);
    std::cout << json{{"checkpoint", (out / "sparse.ckpt").string()},
                      {"params_hash", mopr::hex64(enc.store().content_hash())}}
                     .dump()
              << "\n";
}

void cmd_train_seq(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);

    mopr::kin::SkeletonModel skel = load_canonical_skeleton(cfg);
    const auto clips = load_clips(require_str(cfg, "data"));

    mopr::seq::SeqTrainConfig tc;
    tc.arch = cfg.value("arch", json::object()).get<mopr::seq::SeqConfig>();
    tc.steps = cfg.value("steps", tc.steps);
    tc.batch = cfg.value("batch", tc.batch);
    tc.lr = cfg.value("lr", tc.lr);
    tc.segment_len = cfg.value("segment_len", tc.segment_len);
    tc.log_every = cfg.value("log_every", tc.log_every);
    tc.seed = pick_seed(cfg, args, tc.seed);
    tc.ablation = normalize_ablation(
        !args.ablation.empty() ? args.ablation : cfg.value("ablation", "none"));
    tc.resume_from = cfg.value("resume_from", "");
    tc.latent_cache_path = cfg.value("latent_cache", (out / "latents.cache").string());

    const bool use_embed = tc.ablation != "no_motion_prior";
    const bool use_mo = tc.ablation == "none";
    std::optional<mopr::prior::SparseMotionEncoder> enc;
    std::optional<mopr::prior::FullMotionPrior> prior;
    if (use_embed) {
        if (!cfg.contains("sparse"))
            throw mopr::MissingCheckpoint("config has no 'sparse' checkpoint path");
        enc = mopr::prior::SparseMotionEncoder::load(resolve_path(cfg.at("sparse").get<std::string>()));
    }
    if (use_mo) {
        if (!cfg.contains("prior"))
            throw mopr::MissingCheckpoint("config has no 'prior' checkpoint path");
        prior = mopr::prior::FullMotionPrior::load(resolve_path(cfg.at("prior").get<std::string>()));
    }

    mopr::seq::SequenceModel model = mopr::seq::train_sequence_model(
        skel, clips, enc ? &*enc : nullptr, prior ? &*prior : nullptr, tc,
        (out / "train_log.jsonl").string());
    json meta = {{"step", tc.steps}, {"seed", tc.seed}, {"ablation", tc.ablation}};
    if (enc) meta["sparse_hash"] = mopr::hex64(enc->store().content_hash());
    if (prior) meta["prior_hash"] = mopr::hex64(prior->store().content_hash());
    model.save((out / "seq.ckpt").string(), meta);
    write_snapshot(out, "train-seq", cfg, tc.seed, args);
    std::cout << json{{"checkpoint", (out / "seq.ckpt").string()},
                      {"params_hash", mopr::hex64(model.store().content_hash())}}
                     .dump()
              << "\n";
}

// The sparse encoder is needed unless the checkpoint was trained with the
// no-motion-prior ablation; its meta records that.
std::optional<mopr::prior::SparseMotionEncoder> load_encoder_for(const json& cfg,
                                                                 const std::string& model_path) {
    const json meta = mopr::nn::ParamStore::read_meta(model_path);
    if (meta.value("ablation", "none") == "no_motion_prior") return std::nullopt;
    if (!cfg.contains("sparse"))
        throw mopr::MissingCheckpoint("config has no 'sparse' checkpoint path");
    return mopr::prior::SparseMotionEncoder::load(resolve_path(cfg.at("sparse").get<std::string>()));
}

void cmd_infer(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);

    const std::string model_path = resolve_path(require_str(cfg, "model"));
    const mopr::seq::SequenceModel model = mopr::seq::SequenceModel::load(model_path);
    const auto enc = load_encoder_for(cfg, model_path);
    const auto clips = load_clips(require_str(cfg, "input"));
    const bool write_csv = cfg.value("csv", false);

    const mopr::kin::SkeletonModel& skel = model.skeleton();
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const auto raw = mopr::sig::extract_sparse_signals(skel, clips[i]);
        mopr::data::MotionClip pred =
            mopr::seq::infer_motion(model, enc ? &*enc : nullptr, raw, clips[i].fps);
        pred.action_label = clips[i].action_label;
        std::ostringstream name;
        name << "pred_" << std::setw(4) << std::setfill('0') << i;
        mopr::data::save_motion(pred, (out / (name.str() + ".mclip")).string());
        if (write_csv) {
            std::vector<std::vector<Eigen::Vector3d>> pos(
                static_cast<std::size_t>(pred.n_frames()));
            for (int t = 0; t < pred.n_frames(); ++t)
                pos[static_cast<std::size_t>(t)] =
                    mopr::kin::forward_kinematics(skel, pred.pose(t)).positions;
            mopr::data::save_positions_csv((out / (name.str() + ".csv")).string(), pos);
        }
    }
    write_snapshot(out, "infer", cfg, pick_seed(cfg, args, 0), args);
    std::cout << json{{"predictions", clips.size()}, {"out", out.string()}}.dump() << "\n";
}

void cmd_eval(const CommonArgs& args) {
    const json cfg = load_config(args.config_path);
    const fs::path out = prepare_out_dir(args.out_dir);

    const auto clips = load_clips(require_str(cfg, "data"));
    const std::string model_path = resolve_path(require_str(cfg, "model"));
    const mopr::seq::SequenceModel model = mopr::seq::SequenceModel::load(model_path);
    const auto enc = load_encoder_for(cfg, model_path);
    const mopr::kin::SkeletonModel& skel = model.skeleton();
    const mopr::prior::FullMotionPrior eval_prior =
        mopr::prior::FullMotionPrior::load(resolve_path(require_str(cfg, "eval_prior")));

    mopr::eval::EvalOptions opts;
    opts.window_stride = cfg.value("window_stride", opts.window_stride);
    if (cfg.contains("train_prior")) {
        const mopr::prior::FullMotionPrior train_prior =
            mopr::prior::FullMotionPrior::load(resolve_path(cfg.at("train_prior").get<std::string>()));
        opts.train_prior_hash = train_prior.store().content_hash();
    }

    const auto make_predictor = [&skel](const mopr::seq::SequenceModel& m,
                                        const mopr::prior::SparseMotionEncoder* e) {
        return [&skel, &m, e](const mopr::data::MotionClip& gt) {
            const auto raw = mopr::sig::extract_sparse_signals(skel, gt);
            return mopr::seq::infer_motion(m, e, raw, gt.fps);
        };
    };

    std::optional<mopr::seq::SequenceModel> base_model;
    std::optional<mopr::prior::SparseMotionEncoder> base_enc;
    if (cfg.contains("baseline")) {
        const json& b = cfg.at("baseline");
        const std::string base_path = resolve_path(require_str(b, "model"));
        base_model = mopr::seq::SequenceModel::load(base_path);
        base_enc = load_encoder_for(b, base_path);
        opts.baseline = make_predictor(*base_model, base_enc ? &*base_enc : nullptr);
    }

    const mopr::eval::EvalReport report = mopr::eval::evaluate_dataset(
        skel, clips, make_predictor(model, enc ? &*enc : nullptr), eval_prior, opts);
    mopr::eval::save_report_json(report, (out / "report.json").string());
    mopr::eval::save_report_csv(report, (out / "report.csv").string());
    write_snapshot(out, "eval", cfg, pick_seed(cfg, args, 0), args);
    std::cout << mopr::eval::report_to_json(report)["metrics"].dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-body motion reconstruction from head and hand tracking"};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&args](CLI::App* sub, bool with_mode = false,
                                    bool with_ablation = false) {
        sub->add_option("--config", args.config_path, "JSON config path")->required();
        sub->add_option("--out", args.out_dir, "output run directory")->required();
        sub->add_option("--seed", args.seed, "seed override");
        if (with_mode)
            sub->add_option("--mode", args.mode, "sparse loss mode: paper | extended");
        if (with_ablation)
            sub->add_option("--ablation", args.ablation,
                            "no-motion-prior | no-motion-loss");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate labeled synthetic motion clips");
    add_common(synth);
    CLI::App* tp = app.add_subcommand("train-prior", "train a full motion prior");
    add_common(tp);
    CLI::App* ts = app.add_subcommand("train-sparse", "train the sparse motion encoder");
    add_common(ts, true);
    CLI::App* tq = app.add_subcommand("train-seq", "train the LSTM sequence model");
    add_common(tq, false, true);
    CLI::App* inf = app.add_subcommand("infer", "reconstruct motion from sparse signals");
    add_common(inf);
    CLI::App* ev = app.add_subcommand("eval", "run the metric suite on a test set");
    add_common(ev);

    try {
        app.parse(argc, argv);
        if (synth->parsed()) cmd_synth(args);
        if (tp->parsed()) cmd_train_prior(args);
        if (ts->parsed()) cmd_train_sparse(args);
        if (tq->parsed()) cmd_train_seq(args);
        if (inf->parsed()) cmd_infer(args);
        if (ev->parsed()) cmd_eval(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const mopr::Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << std::endl;
        return 2;
    }
    return 0;
}
