#include "mopr/skeleton.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::kin {

void SkeletonModel::validate(bool canonical) const {
    const int n = n_joints();
    if (n < 1) throw DataError("skeleton: no joints");
    if (static_cast<int>(offsets.size()) != n)
        throw DataError("skeleton: offsets count " + std::to_string(offsets.size()) +
                        " != parents count " + std::to_string(n));
    if (parents[0] != -1) throw DataError("skeleton: joint 0 must have parent -1");
    for (int j = 1; j < n; ++j) {
        if (parents[j] < 0 || parents[j] >= j)
            throw DataError("skeleton: parent of joint " + std::to_string(j) +
                            " is " + std::to_string(parents[j]) +
                            "; parents must precede children");
    }
    std::set<int> legs(leg_joints.begin(), leg_joints.end());
    if (legs.size() != leg_joints.size()) throw DataError("skeleton: duplicate leg joints");
    for (int j : leg_joints)
        if (j < 0 || j >= n) throw DataError("skeleton: leg joint out of range");
    for (int j : {head, lhand, rhand})
        if (j >= n) throw DataError("skeleton: tracked joint out of range");
    if (canonical) {
        if (n != 22) throw DataError("canonical skeleton must have 22 joints, got " +
                                     std::to_string(n));
        if (!has_tracked_joints()) throw DataError("canonical skeleton: tracked joints missing");
        if (static_cast<int>(legs.size()) < 6)
            throw DataError("canonical skeleton: leg set must have >= 6 joints");
        for (int j : {head, lhand, rhand})
            if (legs.count(j))
                throw DataError("canonical skeleton: leg set overlaps tracked joints");
    }
}

std::uint64_t SkeletonModel::hash() const {
    std::uint64_t h = fnv1a64("skeleton-v1");
    h = fnv1a64(parents.data(), parents.size() * sizeof(int), h);
    for (const auto& o : offsets) h = fnv1a64(o.data(), 3 * sizeof(double), h);
    h = fnv1a64(leg_joints.data(), leg_joints.size() * sizeof(int), h);
    int tracked[3] = {head, lhand, rhand};
    h = fnv1a64(tracked, sizeof(tracked), h);
    return h;
}

nlohmann::json skeleton_to_json(const SkeletonModel& skel) {
    nlohmann::json j;
    j["version"] = 1;
    j["parents"] = skel.parents;
    auto offsets = nlohmann::json::array();
    for (const auto& o : skel.offsets) offsets.push_back({o.x(), o.y(), o.z()});
    j["offsets"] = offsets;
    j["leg_joints"] = skel.leg_joints;
    j["tracked_joints"] = {{"head", skel.head}, {"lhand", skel.lhand}, {"rhand", skel.rhand}};
    return j;
}

SkeletonModel skeleton_from_json(const nlohmann::json& j) {
    if (j.value("version", 0) != 1)
        throw VersionError("skeleton version " + std::to_string(j.value("version", 0)) +
                           " unsupported (want 1)");
    SkeletonModel s;
    try {
        s.parents = j.at("parents").get<std::vector<int>>();
        for (const auto& row : j.at("offsets")) {
            if (row.size() != 3) throw ParseError("skeleton offsets: row must have 3 entries");
            s.offsets.emplace_back(row[0].get<double>(), row[1].get<double>(),
                                   row[2].get<double>());
        }
        s.leg_joints = j.at("leg_joints").get<std::vector<int>>();
        const auto& t = j.at("tracked_joints");
        s.head = t.at("head").get<int>();
        s.lhand = t.at("lhand").get<int>();
        s.rhand = t.at("rhand").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("skeleton json: " + std::string(e.what()));
    }
    s.validate(/*canonical=*/s.n_joints() == 22);
    return s;
}

SkeletonModel load_skeleton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open skeleton file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("skeleton json: " + std::string(e.what()));
    }
    return skeleton_from_json(j);
}

void save_skeleton(const SkeletonModel& skel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write skeleton file: " + path);
    out << skeleton_to_json(skel).dump(2) << "\n";
}

FkResult forward_kinematics(const SkeletonModel& skel, const FullPose& pose) {
    const int n = skel.n_joints();
    if (static_cast<int>(pose.local_rot.size()) != n)
        throw ShapeError("forward_kinematics: pose has " +
                         std::to_string(pose.local_rot.size()) + " rotations, skeleton has " +
                         std::to_string(n) + " joints");
    FkResult out;
    out.positions.resize(n);
    out.rotations.resize(n);
    out.rotations[0] = rot6d_decode(pose.local_rot[0]);
    out.positions[0] = pose.root_translation;
    for (int j = 1; j < n; ++j) {
        const int p = skel.parents[j];
        Rotation local = rot6d_decode(pose.local_rot[j]);
        out.rotations[j] = out.rotations[p] * local;
        out.positions[j] = out.positions[p] + out.rotations[p] * skel.offsets[j];
    }
    return out;
}

}  // namespace mopr::kin
