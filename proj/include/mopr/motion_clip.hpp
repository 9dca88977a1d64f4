#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mopr/skeleton.hpp"

namespace mopr::data {

inline constexpr int kEmbedDim = 512;

// A motion clip: per-frame local joint rotations plus root translation, with
// optional action label and unit-norm label embeddings.
struct MotionClip {
    double fps = 30.0;
    std::vector<std::vector<kin::Rot6d>> local_rot;  // [frame][joint]
    std::vector<Eigen::Vector3d> root_translation;   // [frame]
    std::string action_label;                        // empty = unlabeled
    std::optional<Eigen::VectorXd> text_embedding;
    std::optional<Eigen::VectorXd> image_embedding;
    std::uint64_t skeleton_hash = 0;

    int n_frames() const { return static_cast<int>(local_rot.size()); }
    int n_joints() const { return local_rot.empty() ? 0 : static_cast<int>(local_rot[0].size()); }
    kin::FullPose pose(int frame) const {
        return kin::FullPose{local_rot[frame], root_translation[frame]};
    }
    void validate() const;
};

// Hash over all clip content (frames, label, embeddings); identifies a clip
// across processes, e.g. as a latent-cache key.
std::uint64_t content_hash(const MotionClip& clip);

// Versioned two-part file: text header, then little-endian f32 payload.
// See docs/formats.md for the byte-exact layout.
MotionClip load_motion(const std::string& path);
void save_motion(const MotionClip& clip, const std::string& path);

// Integer-stride decimation, stride = round(fps / target_fps). No interpolation.
MotionClip downsample(const MotionClip& clip, double target_fps = 30.0);

// Contiguous sub-clip [start, start + len). Label and embeddings carry over.
MotionClip slice_clip(const MotionClip& clip, int start, int len);

struct WindowRef {
    int clip_index = 0;
    int start = 0;
};

struct WindowedDataset {
    int T = 60;
    std::vector<WindowRef> windows;
    int skipped_clips = 0;

    MotionClip slice(const std::vector<MotionClip>& clips, int window_index) const;
};

// Every length-T slice starting at multiples of stride, per clip. Clips
// shorter than T are skipped and counted.
WindowedDataset make_windows(const std::vector<MotionClip>& clips, int T, int stride);

// Per-frame global joint positions as CSV (frame, joint, x, y, z). Plotting aid.
void save_positions_csv(const std::string& path,
                        const std::vector<std::vector<Eigen::Vector3d>>& positions);

}  // namespace mopr::data
