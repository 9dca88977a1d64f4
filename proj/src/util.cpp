#include "mopr/util.hpp"

#include <cmath>
#include <cstdio>

#include "mopr/errors.hpp"

namespace mopr {

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    if (s.empty() || s.size() > 16) throw ParseError("bad hex64 value: '" + s + "'");
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
        else throw ParseError("bad hex digit in '" + s + "'");
    }
    return v;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling to avoid modulo bias.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

Eigen::MatrixXd Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stddev * gaussian();
    return m;
}

Eigen::MatrixXd Rng::uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
}

}  // namespace mopr
