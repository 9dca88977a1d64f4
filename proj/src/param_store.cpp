#include "mopr/param_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mopr/errors.hpp"
#include "mopr/util.hpp"

namespace mopr::nn {

namespace {
constexpr const char* kMagic = "MOPRCKPT";
constexpr int kVersion = 1;
}  // namespace

NodePtr ParamStore::create(const std::string& name, Eigen::MatrixXd init) {
    if (params_.count(name)) throw ConfigError("param '" + name + "' already exists");
    auto node = std::make_shared<Node>(std::move(init), true);
    ParamState st;
    st.m = Eigen::MatrixXd::Zero(node->value.rows(), node->value.cols());
    st.v = st.m;
    params_[name] = node;
    state_[name] = std::move(st);
    return node;
}

NodePtr ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw UnknownParam("no parameter named '" + name + "'");
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, node] : params_) out.push_back(name);
    return out;
}

void ParamStore::zero_grads() {
    for (auto& [name, node] : params_) {
        if (frozen_.count(name)) continue;
        node->grad = Eigen::MatrixXd::Zero(node->value.rows(), node->value.cols());
    }
}

void ParamStore::adam_step(const AdamConfig& cfg) {
    for (auto& [name, node] : params_) {
        if (frozen_.count(name)) continue;
        if (node->grad.size() == 0)
            throw MissingGrad("parameter '" + name + "' has no gradient");
        ParamState& st = state_[name];
        ++st.steps;
        st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * node->grad;
        st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * node->grad.cwiseProduct(node->grad);
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.steps));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.steps));
        node->value.array() -= cfg.lr * (st.m.array() / bc1) /
                               ((st.v.array() / bc2).sqrt() + cfg.eps);
    }
}

void ParamStore::freeze(const std::vector<std::string>& names) {
    for (const auto& name : names) {
        auto node = at(name);
        frozen_.insert(name);
        node->requires_grad = false;
        node->grad.resize(0, 0);
    }
}

void ParamStore::unfreeze(const std::vector<std::string>& names) {
    for (const auto& name : names) {
        auto node = at(name);
        frozen_.erase(name);
        node->requires_grad = true;
    }
}

void ParamStore::freeze_prefix(const std::string& prefix) {
    std::vector<std::string> hit;
    for (const auto& [name, node] : params_)
        if (name.rfind(prefix, 0) == 0) hit.push_back(name);
    if (hit.empty()) throw UnknownParam("no parameters with prefix '" + prefix + "'");
    freeze(hit);
}

std::uint64_t ParamStore::content_hash(const std::string& prefix) const {
    std::uint64_t h = fnv1a64("params-v1");
    for (const auto& [name, node] : params_) {
        if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
        h = fnv1a64(name, h);
        h = fnv1a64(node->value.data(),
                    static_cast<std::size_t>(node->value.size()) * sizeof(double), h);
    }
    return h;
}

const ParamState& ParamStore::state(const std::string& name) const {
    auto it = state_.find(name);
    if (it == state_.end()) throw UnknownParam("no parameter named '" + name + "'");
    return it->second;
}

void ParamStore::save(const std::string& path, const nlohmann::json& meta) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    nlohmann::json header;
    header["meta"] = meta;
    auto plist = nlohmann::json::array();
    for (const auto& [name, node] : params_) {
        plist.push_back({{"name", name},
                         {"rows", node->value.rows()},
                         {"cols", node->value.cols()},
                         {"steps", state_.at(name).steps},
                         {"frozen", frozen_.count(name) != 0}});
    }
    header["params"] = plist;
    out << kMagic << " " << kVersion << "\n" << header.dump() << "\ndata\n";
    auto dump = [&out](const Eigen::MatrixXd& m) {
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(m.size() * sizeof(double)));
    };
    for (const auto& [name, node] : params_) {
        const ParamState& st = state_.at(name);
        dump(node->value);
        dump(st.m);
        dump(st.v);
    }
    if (!out) throw DataError("checkpoint write failed: " + path);
}

namespace {

nlohmann::json read_header(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty checkpoint: " + path);
    {
        std::istringstream ls(line);
        std::string magic;
        int version = -1;
        ls >> magic >> version;
        if (magic != kMagic) throw ParseError(path + ": not a checkpoint file");
        if (version != kVersion)
            throw VersionError(path + ": checkpoint version " + std::to_string(version) +
                               " unsupported (want " + std::to_string(kVersion) + ")");
    }
    if (!std::getline(in, line)) throw ParseError(path + ": missing header json");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": header json: " + e.what());
    }
    if (!std::getline(in, line) || line != "data")
        throw ParseError(path + ": missing data marker");
    return header;
}

}  // namespace

ParamStore ParamStore::load(const std::string& path, nlohmann::json* meta_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);
    nlohmann::json header = read_header(in, path);
    if (meta_out) *meta_out = header.value("meta", nlohmann::json::object());

    ParamStore store;
    std::vector<std::string> to_freeze;
    auto slurp = [&in, &path](Eigen::MatrixXd& m) {
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(m.size() * sizeof(double)))
            throw ParseError(path + ": checkpoint payload truncated");
    };
    try {
        for (const auto& p : header.at("params")) {
            const auto name = p.at("name").get<std::string>();
            const auto rows = p.at("rows").get<Eigen::Index>();
            const auto cols = p.at("cols").get<Eigen::Index>();
            Eigen::MatrixXd value(rows, cols);
            slurp(value);
            auto node = store.create(name, std::move(value));
            ParamState& st = store.state_[name];
            st.steps = p.at("steps").get<std::int64_t>();
            slurp(st.m);
            slurp(st.v);
            if (p.value("frozen", false)) to_freeze.push_back(name);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": header json: " + e.what());
    }
    if (!to_freeze.empty()) store.freeze(to_freeze);
    return store;
}

nlohmann::json ParamStore::read_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingCheckpoint("cannot open checkpoint: " + path);
    return read_header(in, path).value("meta", nlohmann::json::object());
}

}  // namespace mopr::nn
