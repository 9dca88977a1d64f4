#include "mopr/synth.hpp"

#include <algorithm>
#include <cmath>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::data {

namespace {

constexpr double kTau = 6.283185307179586;

// canonical joint indices
constexpr int kHipL = 1, kHipR = 2, kSpine0 = 3, kKneeL = 4, kKneeR = 5, kSpine1 = 6;
constexpr int kSpine2 = 9, kShoulderL = 16, kShoulderR = 17, kElbowL = 18;

using kin::Rotation;

// smooth burst in [0, 1): sin^2 ramp over the first `width` of each period
double burst(double t, double period, double width) {
    const double u = std::fmod(t, period);
    if (u >= width) return 0.0;
    const double s = std::sin(kTau / 2.0 * u / width);
    return s * s;
}

}  // namespace

const std::vector<std::string>& synth_classes() {
    static const std::vector<std::string> classes = {"walk", "squat", "wave", "kick", "idle"};
    return classes;
}

void SynthConfig::validate() const {
    const auto& known = synth_classes();
    for (const auto& c : classes)
        if (std::find(known.begin(), known.end(), c) == known.end())
            throw ConfigError("synth: unknown class '" + c + "'");
    if (clips_per_class < 1) throw ConfigError("synth: clips_per_class must be >= 1");
    if (n_frames < 2) throw ConfigError("synth: n_frames must be >= 2");
    if (fps <= 0.0) throw ConfigError("synth: fps must be positive");
    if (start_offset_range < 0.0) throw ConfigError("synth: start_offset_range must be >= 0");
}

std::vector<MotionClip> synth_generate(const kin::SkeletonModel& skel, const SynthConfig& cfg,
                                       const EmbeddingTable& table, std::uint64_t seed) {
    cfg.validate();
    skel.validate(/*canonical=*/true);
    const std::vector<std::string>& classes = cfg.classes.empty() ? synth_classes() : cfg.classes;
    const int nj = skel.n_joints();

    std::vector<MotionClip> out;
    out.reserve(classes.size() * cfg.clips_per_class);

    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const std::string& label = classes[ci];
        const LabelEmbedding& emb = table.at(label);
        for (int k = 0; k < cfg.clips_per_class; ++k) {
            Rng rng(mix_seed(seed, ci, static_cast<std::uint64_t>(k)));

            const double sway_amp = rng.uniform(0.005, 0.012);
            const double sway_freq = rng.uniform(0.25, 0.5);
            const double sway_phase = rng.uniform(0.0, kTau);
            const double ox = rng.uniform(-cfg.start_offset_range, cfg.start_offset_range);
            const double oz = rng.uniform(-cfg.start_offset_range, cfg.start_offset_range);

            // class parameters, drawn per clip
            const double freq = label == "walk"    ? rng.uniform(0.8, 1.1)
                                : label == "squat" ? rng.uniform(0.35, 0.5)
                                : label == "wave"  ? rng.uniform(1.5, 2.5)
                                                   : rng.uniform(0.6, 0.9);
            const double amp_a = label == "walk"    ? rng.uniform(0.4, 0.6)    // hip swing
                                 : label == "squat" ? rng.uniform(1.4, 1.7)    // knee flex
                                 : label == "wave"  ? rng.uniform(1.1, 1.4)    // arm raise
                                 : label == "kick"  ? rng.uniform(1.0, 1.3)    // hip thrust
                                                    : 0.0;
            const double amp_b = label == "walk"    ? rng.uniform(0.5, 0.8)    // knee lift
                                 : label == "squat" ? rng.uniform(0.9, 1.2)    // hip flex
                                 : label == "wave"  ? rng.uniform(0.25, 0.4)   // elbow wag
                                 : label == "kick"  ? rng.uniform(0.8, 1.2)    // knee snap
                                                    : 0.0;
            const double walk_speed = rng.uniform(0.8, 1.2);
            const double kick_period = rng.uniform(1.2, 1.8);

            MotionClip clip;
            clip.fps = cfg.fps;
            clip.action_label = label;
            clip.text_embedding = emb.text;
            clip.image_embedding = emb.image;
            clip.skeleton_hash = skel.hash();
            clip.local_rot.resize(cfg.n_frames);
            clip.root_translation.resize(cfg.n_frames);

            const Eigen::Vector3d ax = Eigen::Vector3d::UnitX();
            const Eigen::Vector3d az = Eigen::Vector3d::UnitZ();

            for (int f = 0; f < cfg.n_frames; ++f) {
                const double t = f / cfg.fps;
                std::vector<double> angle_x(nj, 0.0);
                std::vector<double> angle_z(nj, 0.0);
                Eigen::Vector3d root(ox, 0.0, oz);

                const double sway = sway_amp * std::sin(kTau * sway_freq * t + sway_phase);
                angle_x[kSpine0] += sway;
                angle_x[kSpine1] += sway * 0.7;
                angle_x[kSpine2] += sway * 0.5;
                angle_x[kKneeL] += 0.002 * std::sin(kTau * sway_freq * t);
                angle_x[kKneeR] -= 0.002 * std::sin(kTau * sway_freq * t);

                if (label == "walk") {
                    const double s = std::sin(kTau * freq * t);
                    angle_x[kHipL] += amp_a * s;
                    angle_x[kHipR] -= amp_a * s;
                    angle_x[kKneeL] += amp_b * 0.5 * (1.0 - std::cos(kTau * freq * t));
                    angle_x[kKneeR] += amp_b * 0.5 * (1.0 + std::cos(kTau * freq * t));
                    angle_x[kShoulderL] -= 0.2 * s;
                    angle_x[kShoulderR] += 0.2 * s;
                    root.y() += 0.02 * std::sin(2.0 * kTau * freq * t);
                    root.z() += walk_speed * t;
                } else if (label == "squat") {
                    const double phase = 0.5 * (1.0 - std::cos(kTau * freq * t));
                    angle_x[kKneeL] += amp_a * phase;
                    angle_x[kKneeR] += amp_a * phase;
                    angle_x[kHipL] -= amp_b * phase;
                    angle_x[kHipR] -= amp_b * phase;
                    angle_x[kSpine0] += 0.3 * phase;
                    root.y() -= 0.35 * phase;
                } else if (label == "wave") {
                    const double raise = amp_a * std::min(1.0, 2.0 * t);
                    angle_z[kShoulderL] += raise;
                    angle_z[kElbowL] += 0.4 + amp_b * std::sin(kTau * freq * t);
                } else if (label == "kick") {
                    const double kphase = burst(t, kick_period, 0.4);
                    angle_x[kHipR] -= amp_a * kphase;
                    angle_x[kKneeR] += amp_b * kphase;
                    angle_x[kShoulderL] += 0.15 * std::sin(kTau * freq * t);
                    angle_x[kShoulderR] -= 0.15 * std::sin(kTau * freq * t);
                }

                clip.local_rot[f].resize(nj);
                for (int j = 0; j < nj; ++j) {
                    Rotation r = Rotation::from_axis_angle(ax * angle_x[j]);
                    if (angle_z[j] != 0.0)
                        r = Rotation::from_axis_angle(az * angle_z[j]) * r;
                    clip.local_rot[f][j] = kin::rot6d_encode(r);
                }
                clip.root_translation[f] = root;
            }
            out.push_back(std::move(clip));
        }
    }
    return out;
}

}  // namespace mopr::data
