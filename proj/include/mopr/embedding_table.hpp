#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mopr::data {

struct LabelEmbedding {
    Eigen::VectorXd text;   // 512, unit norm
    Eigen::VectorXd image;  // 512, unit norm
};

// Immutable label -> (text, image) embedding map standing in for externally
// computed language/vision projections. Same-label text/image cosine >= 0.9,
// distinct labels well separated.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::map<std::string, LabelEmbedding> entries);

    const LabelEmbedding* find(const std::string& label) const;
    const LabelEmbedding& at(const std::string& label) const;  // throws DataError
    const std::map<std::string, LabelEmbedding>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, LabelEmbedding> entries_;
};

EmbeddingTable build_embedding_table(const std::vector<std::string>& labels, std::uint64_t seed);

EmbeddingTable load_embedding_table(const std::string& path);
void save_embedding_table(const EmbeddingTable& table, const std::string& path);

}  // namespace mopr::data
