#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mopr/tensor.hpp"

namespace mopr::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct ParamState {
    Eigen::MatrixXd m, v;
    std::int64_t steps = 0;
};

// Named parameter tensors plus per-parameter Adam state. Frozen parameters
// receive no updates, accumulate no gradients, and keep their optimizer state.
class ParamStore {
public:
    NodePtr create(const std::string& name, Eigen::MatrixXd init);
    NodePtr at(const std::string& name) const;  // throws UnknownParam
    bool has(const std::string& name) const { return params_.count(name) != 0; }
    std::vector<std::string> names() const;
    std::size_t size() const { return params_.size(); }

    void zero_grads();
    void adam_step(const AdamConfig& cfg = {});  // throws MissingGrad

    void freeze(const std::vector<std::string>& names);
    void unfreeze(const std::vector<std::string>& names);
    void freeze_prefix(const std::string& prefix);
    bool is_frozen(const std::string& name) const { return frozen_.count(name) != 0; }

    // hash of parameter values (names included), optimizer state excluded
    std::uint64_t content_hash(const std::string& prefix = "") const;

    const ParamState& state(const std::string& name) const;

    void save(const std::string& path, const nlohmann::json& meta) const;
    static ParamStore load(const std::string& path, nlohmann::json* meta_out = nullptr);

    // header-only peek, for hash/config checks without loading tensors
    static nlohmann::json read_meta(const std::string& path);

private:
    std::map<std::string, NodePtr> params_;
    std::map<std::string, ParamState> state_;
    std::set<std::string> frozen_;
};

}  // namespace mopr::nn
