#include "mopr/motion_clip.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::data {

namespace {

constexpr const char* kMagic = "MOPRMOTION";
constexpr int kVersion = 1;
constexpr double kUnitNormTol = 1e-6;

void check_embedding(const std::optional<Eigen::VectorXd>& e, const char* which) {
    if (!e) return;
    if (e->size() != kEmbedDim)
        throw DataError(std::string(which) + " embedding has " + std::to_string(e->size()) +
                        " dims, want " + std::to_string(kEmbedDim));
    if (std::abs(e->norm() - 1.0) > kUnitNormTol)
        throw DataError(std::string(which) + " embedding not unit norm: " +
                        std::to_string(e->norm()));
}

void write_f32(std::ostream& out, const std::vector<float>& buf) {
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<float> read_f32(std::istream& in, std::size_t count, std::size_t& offset) {
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
        throw ParseError("motion payload truncated at byte offset " +
                         std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    offset += count * sizeof(float);
    return buf;
}

}  // namespace

void MotionClip::validate() const {
    if (n_frames() < 1) throw DataError("motion clip has no frames");
    if (fps <= 0.0) throw DataError("motion clip fps must be positive");
    if (root_translation.size() != local_rot.size())
        throw DataError("motion clip: translation count != frame count");
    const std::size_t nj = local_rot[0].size();
    if (nj == 0) throw DataError("motion clip has no joints");
    for (std::size_t f = 0; f < local_rot.size(); ++f) {
        if (local_rot[f].size() != nj)
            throw DataError("motion clip: frame " + std::to_string(f) +
                            " joint count mismatch");
        for (std::size_t j = 0; j < nj; ++j) kin::rot6d_decode(local_rot[f][j]);
    }
    check_embedding(text_embedding, "text");
    check_embedding(image_embedding, "image");
}

void save_motion(const MotionClip& clip, const std::string& path) {
    clip.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write motion file: " + path);
    out << kMagic << " " << kVersion << "\n";
    out << "fps " << std::setprecision(17) << clip.fps << "\n";
    out << "frames " << clip.n_frames() << "\n";
    out << "joints " << clip.n_joints() << "\n";
    out << "skeleton " << hex64(clip.skeleton_hash) << "\n";
    if (!clip.action_label.empty()) out << "label " << clip.action_label << "\n";
    out << "embeddings";
    if (clip.text_embedding) out << " text";
    if (clip.image_embedding) out << " image";
    if (!clip.text_embedding && !clip.image_embedding) out << " none";
    out << "\n";
    out << "data\n";

    std::vector<float> buf;
    auto push_vec = [&buf](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) buf.push_back(static_cast<float>(v[i]));
    };
    if (clip.text_embedding) push_vec(*clip.text_embedding);
    if (clip.image_embedding) push_vec(*clip.image_embedding);
    for (int f = 0; f < clip.n_frames(); ++f) {
        for (const auto& r : clip.local_rot[f])
            for (int i = 0; i < 6; ++i) buf.push_back(static_cast<float>(r[i]));
        for (int i = 0; i < 3; ++i)
            buf.push_back(static_cast<float>(clip.root_translation[f][i]));
    }
    write_f32(out, buf);
    if (!out) throw DataError("write failed: " + path);
}

MotionClip load_motion(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open motion file: " + path);

    MotionClip clip;
    int frames = -1, joints = -1;
    bool has_text = false, has_image = false;
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) throw ParseError("empty motion file: " + path);
    ++line_no;
    {
        std::istringstream ls(line);
        std::string magic;
        int version = -1;
        ls >> magic >> version;
        if (magic != kMagic) throw ParseError(path + ":1: not a motion file");
        if (version != kVersion)
            throw VersionError(path + ": motion format version " + std::to_string(version) +
                               " unsupported (want " + std::to_string(kVersion) + ")");
    }

    bool saw_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line == "data") {
            saw_data = true;
            break;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        const std::string where = path + ":" + std::to_string(line_no) + ": ";
        if (key == "fps") {
            if (!(ls >> clip.fps)) throw ParseError(where + "bad fps");
        } else if (key == "frames") {
            if (!(ls >> frames)) throw ParseError(where + "bad frame count");
        } else if (key == "joints") {
            if (!(ls >> joints)) throw ParseError(where + "bad joint count");
        } else if (key == "skeleton") {
            std::string hex;
            if (!(ls >> hex)) throw ParseError(where + "bad skeleton hash");
            clip.skeleton_hash = parse_hex64(hex);
        } else if (key == "label") {
            if (!(ls >> clip.action_label)) throw ParseError(where + "bad label");
        } else if (key == "embeddings") {
            std::string tok;
            while (ls >> tok) {
                if (tok == "text") has_text = true;
                else if (tok == "image") has_image = true;
                else if (tok != "none") throw ParseError(where + "unknown embedding '" + tok + "'");
            }
        } else {
            throw ParseError(where + "unknown header key '" + key + "'");
        }
    }
    if (!saw_data) throw ParseError(path + ": missing data marker");
    if (frames < 1)
        throw ParseError(path + ": frame count " + std::to_string(frames) + " (want >= 1)");
    if (joints < 1)
        throw ParseError(path + ": joint count " + std::to_string(joints) + " (want >= 1)");

    std::size_t offset = 0;
    auto take_embedding = [&](bool present) -> std::optional<Eigen::VectorXd> {
        if (!present) return std::nullopt;
        auto raw = read_f32(in, kEmbedDim, offset);
        Eigen::VectorXd v(kEmbedDim);
        for (int i = 0; i < kEmbedDim; ++i) v[i] = raw[i];
        return v;
    };
    clip.text_embedding = take_embedding(has_text);
    clip.image_embedding = take_embedding(has_image);

    const std::size_t per_frame = static_cast<std::size_t>(joints) * 6 + 3;
    auto raw = read_f32(in, static_cast<std::size_t>(frames) * per_frame, offset);
    clip.local_rot.resize(frames);
    clip.root_translation.resize(frames);
    std::size_t k = 0;
    for (int f = 0; f < frames; ++f) {
        clip.local_rot[f].resize(joints);
        for (int j = 0; j < joints; ++j)
            for (int i = 0; i < 6; ++i) clip.local_rot[f][j][i] = raw[k++];
        for (int i = 0; i < 3; ++i) clip.root_translation[f][i] = raw[k++];
    }

    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        throw ParseError(path + ": trailing bytes after payload (offset " +
                         std::to_string(offset) + ")");

    try {
        clip.validate();
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return clip;
}

MotionClip downsample(const MotionClip& clip, double target_fps) {
    if (clip.fps < target_fps)
        throw InvalidFps("downsample: clip fps " + std::to_string(clip.fps) +
                         " below target " + std::to_string(target_fps));
    const int stride = static_cast<int>(std::lround(clip.fps / target_fps));
    if (stride <= 1) return clip;
    MotionClip out = clip;
    out.fps = clip.fps / stride;
    out.local_rot.clear();
    out.root_translation.clear();
    for (int f = 0; f < clip.n_frames(); f += stride) {
        out.local_rot.push_back(clip.local_rot[f]);
        out.root_translation.push_back(clip.root_translation[f]);
    }
    return out;
}

MotionClip slice_clip(const MotionClip& clip, int start, int len) {
    if (start < 0 || len < 1 || start + len > clip.n_frames())
        throw ShapeError("slice_clip: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         std::to_string(clip.n_frames()) + " frames");
    MotionClip out = clip;
    out.local_rot.assign(clip.local_rot.begin() + start, clip.local_rot.begin() + start + len);
    out.root_translation.assign(clip.root_translation.begin() + start,
                                clip.root_translation.begin() + start + len);
    return out;
}

MotionClip WindowedDataset::slice(const std::vector<MotionClip>& clips, int window_index) const {
    const WindowRef& w = windows.at(window_index);
    return slice_clip(clips.at(w.clip_index), w.start, T);
}

std::uint64_t content_hash(const MotionClip& clip) {
    std::uint64_t h = fnv1a64("clip-v1");
    h = fnv1a64(&clip.fps, sizeof(clip.fps), h);
    for (const auto& frame : clip.local_rot)
        for (const auto& r : frame) h = fnv1a64(r.data(), sizeof(double) * 6, h);
    for (const auto& t : clip.root_translation) h = fnv1a64(t.data(), sizeof(double) * 3, h);
    h = fnv1a64(clip.action_label, h);
    if (clip.text_embedding)
        h = fnv1a64(clip.text_embedding->data(),
                    sizeof(double) * static_cast<std::size_t>(clip.text_embedding->size()), h);
    if (clip.image_embedding)
        h = fnv1a64(clip.image_embedding->data(),
                    sizeof(double) * static_cast<std::size_t>(clip.image_embedding->size()), h);
    return h;
}

WindowedDataset make_windows(const std::vector<MotionClip>& clips, int T, int stride) {
    if (T < 1 || stride < 1)
        throw ConfigError("make_windows: T and stride must be >= 1");
    WindowedDataset out;
    out.T = T;
    for (int c = 0; c < static_cast<int>(clips.size()); ++c) {
        const int n = clips[c].n_frames();
        if (n < T) {
            ++out.skipped_clips;
            continue;
        }
        for (int s = 0; s + T <= n; s += stride) out.windows.push_back({c, s});
    }
    return out;
}

void save_positions_csv(const std::string& path,
                        const std::vector<std::vector<Eigen::Vector3d>>& positions) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write csv: " + path);
    out << "frame,joint,x,y,z\n";
    for (std::size_t f = 0; f < positions.size(); ++f)
        for (std::size_t j = 0; j < positions[f].size(); ++j) {
            const auto& p = positions[f][j];
            out << f << "," << j << "," << p.x() << "," << p.y() << "," << p.z() << "\n";
        }
}

}  // namespace mopr::data
