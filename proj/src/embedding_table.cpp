#include "mopr/embedding_table.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mopr/errors.hpp"
#include "mopr/motion_clip.hpp"
#include "mopr/util.hpp"

namespace mopr::data {

namespace {

Eigen::VectorXd unit_gaussian(Rng& rng) {
    Eigen::VectorXd v(kEmbedDim);
    for (int i = 0; i < kEmbedDim; ++i) v[i] = rng.gaussian();
    return v / v.norm();
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::map<std::string, LabelEmbedding> entries)
    : entries_(std::move(entries)) {
    for (const auto& [label, e] : entries_) {
        if (e.text.size() != kEmbedDim || e.image.size() != kEmbedDim)
            throw DataError("embedding table: '" + label + "' has wrong dims");
        if (std::abs(e.text.norm() - 1.0) > 1e-6 || std::abs(e.image.norm() - 1.0) > 1e-6)
            throw DataError("embedding table: '" + label + "' not unit norm");
    }
    for (auto a = entries_.begin(); a != entries_.end(); ++a)
        for (auto b = std::next(a); b != entries_.end(); ++b)
            if (a->second.text.dot(b->second.text) >= 0.99)
                throw DataError("embedding table: '" + a->first + "' and '" + b->first +
                                "' nearly collinear");
}

const LabelEmbedding* EmbeddingTable::find(const std::string& label) const {
    auto it = entries_.find(label);
    return it == entries_.end() ? nullptr : &it->second;
}

const LabelEmbedding& EmbeddingTable::at(const std::string& label) const {
    const LabelEmbedding* e = find(label);
    if (!e) throw DataError("embedding table: no entry for label '" + label + "'");
    return *e;
}

EmbeddingTable build_embedding_table(const std::vector<std::string>& labels,
                                     std::uint64_t seed) {
    if (labels.empty()) throw ConfigError("build_embedding_table: need at least one label");
    std::map<std::string, LabelEmbedding> entries;
    std::vector<Eigen::VectorXd> texts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& label = labels[i];
        if (entries.count(label)) continue;
        Eigen::VectorXd text;
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt >= 64)
                throw DataError("build_embedding_table: cannot separate label '" + label + "'");
            Rng rng(mix_seed(seed, fnv1a64(label), attempt));
            text = unit_gaussian(rng);
            bool separated = true;
            for (const auto& other : texts)
                if (text.dot(other) >= 0.5) separated = false;
            if (separated) break;
        }
        Rng rng(mix_seed(seed, fnv1a64(label), 1u << 20));
        Eigen::VectorXd image = text + 0.2 * unit_gaussian(rng);
        image /= image.norm();
        texts.push_back(text);
        entries[label] = LabelEmbedding{std::move(text), std::move(image)};
    }
    return EmbeddingTable(std::move(entries));
}

EmbeddingTable load_embedding_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open embedding table: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("embedding table json: " + std::string(e.what()));
    }
    if (j.value("version", 0) != 1)
        throw VersionError("embedding table version " + std::to_string(j.value("version", 0)) +
                           " unsupported (want 1)");
    std::map<std::string, LabelEmbedding> entries;
    try {
        for (const auto& [label, e] : j.at("entries").items()) {
            auto text = e.at("text").get<std::vector<double>>();
            auto image = e.at("image").get<std::vector<double>>();
            LabelEmbedding le;
            le.text = Eigen::Map<Eigen::VectorXd>(text.data(), text.size());
            le.image = Eigen::Map<Eigen::VectorXd>(image.data(), image.size());
            entries[label] = std::move(le);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("embedding table json: " + std::string(e.what()));
    }
    return EmbeddingTable(std::move(entries));
}

void save_embedding_table(const EmbeddingTable& table, const std::string& path) {
    nlohmann::json entries;
    for (const auto& [label, e] : table.entries()) {
        entries[label] = {
            {"text", std::vector<double>(e.text.data(), e.text.data() + e.text.size())},
            {"image", std::vector<double>(e.image.data(), e.image.data() + e.image.size())},
        };
    }
    nlohmann::json j = {{"version", 1}, {"entries", entries}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding table: " + path);
    out << j.dump() << "\n";
}

}  // namespace mopr::data
