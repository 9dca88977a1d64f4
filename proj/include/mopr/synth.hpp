#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mopr/embedding_table.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/skeleton.hpp"

namespace mopr::data {

// The five generated action classes.
const std::vector<std::string>& synth_classes();

struct SynthConfig {
    std::vector<std::string> classes;  // empty = all known classes
    int clips_per_class = 10;
    int n_frames = 180;
    double fps = 30.0;
    double start_offset_range = 0.5;  // uniform xz spawn offset, meters

    void validate() const;  // throws ConfigError
};

// Deterministic periodic motions on the canonical skeleton. Each clip carries
// its action label and that label's embeddings from the table.
std::vector<MotionClip> synth_generate(const kin::SkeletonModel& skel, const SynthConfig& cfg,
                                       const EmbeddingTable& table, std::uint64_t seed);

}  // namespace mopr::data
