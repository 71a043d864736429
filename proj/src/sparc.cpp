#include "tlmp/sparc.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace tlmp::sparc {

Codebook build_codebook(std::uint64_t seed, int n, int j_blocks, int l_bits) {
    if (n < 1 || j_blocks < 1 || l_bits < 1)
        throw std::invalid_argument("build_codebook: dimensions must be >= 1");
    Codebook cb;
    cb.seed = seed;
    cb.n = n;
    cb.j_blocks = j_blocks;
    cb.l_bits = l_bits;
    const double sd = std::sqrt(1.0 / (static_cast<double>(n) * j_blocks));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sd);
    cb.a.resize(n, cb.width());
    for (int c = 0; c < cb.a.cols(); ++c)
        for (int r = 0; r < n; ++r) cb.a(r, c) = gauss(rng);
    cb.fro_sq = cb.a.squaredNorm();
    return cb;
}

BlockIndices split_message(const MessageBits& bits, int j_blocks, int l_bits) {
    if (static_cast<int>(bits.size()) != j_blocks * l_bits)
        throw std::invalid_argument(
            "split_message: bit length " + std::to_string(bits.size()) +
            " != J*L = " + std::to_string(j_blocks * l_bits));
    BlockIndices idx(j_blocks);
    for (int j = 0; j < j_blocks; ++j) {
        std::uint32_t v = 0;
        for (int b = 0; b < l_bits; ++b)
            v = (v << 1) | (bits[j * l_bits + b] ? 1u : 0u);
        idx[j] = v;
    }
    return idx;
}

MessageBits assemble_message(const BlockIndices& idx, int l_bits) {
    const std::uint32_t limit = 1u << l_bits;
    MessageBits bits(idx.size() * l_bits);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= limit)
            throw std::out_of_range("assemble_message: index " +
                                    std::to_string(idx[j]) + " >= 2^L");
        for (int b = 0; b < l_bits; ++b)
            bits[j * l_bits + b] =
                static_cast<std::uint8_t>((idx[j] >> (l_bits - 1 - b)) & 1u);
    }
    return bits;
}

Eigen::VectorXd sparse_embed(const BlockIndices& idx, int l_bits) {
    const int section = 1 << l_bits;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(idx.size()) * section);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= static_cast<std::uint32_t>(section))
            throw std::out_of_range("sparse_embed: index out of range");
        x(static_cast<Eigen::Index>(j) * section + idx[j]) = 1.0;
    }
    return x;
}

Eigen::VectorXd encode(const Codebook& cb, const BlockIndices& idx) {
    if (static_cast<int>(idx.size()) != cb.j_blocks)
        throw std::invalid_argument("encode: expected J block indices");
    const int section = cb.section_size();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(cb.n);
    for (int j = 0; j < cb.j_blocks; ++j) {
        if (idx[j] >= static_cast<std::uint32_t>(section))
            throw std::out_of_range("encode: index out of range");
        r += cb.a.col(static_cast<Eigen::Index>(j) * section + idx[j]);
    }
    return r;
}

BlockIndices hard_decision(const Eigen::VectorXd& x_hat, int j_blocks,
                           int l_bits) {
    const int section = 1 << l_bits;
    if (j_blocks < 1 || x_hat.size() != static_cast<Eigen::Index>(j_blocks) * section)
        throw std::invalid_argument("hard_decision: bad block layout");
    BlockIndices idx(j_blocks);
    for (int j = 0; j < j_blocks; ++j) {
        int best = 0;
        double best_v = x_hat(static_cast<Eigen::Index>(j) * section);
        for (int l = 1; l < section; ++l) {
            const double v = x_hat(static_cast<Eigen::Index>(j) * section + l);
            if (v > best_v) {
                best_v = v;
                best = l;
            }
        }
        idx[j] = static_cast<std::uint32_t>(best);
    }
    return idx;
}

double per_user_error(const std::vector<MessageBits>& sent,
                      const std::vector<MessageBits>& decoded) {
    if (sent.empty()) return 0.0;
    std::set<MessageBits> pool(decoded.begin(), decoded.end());
    std::size_t missed = 0;
    for (const auto& m : sent)
        if (pool.find(m) == pool.end()) ++missed;
    return static_cast<double>(missed) / static_cast<double>(sent.size());
}

}  // namespace tlmp::sparc
