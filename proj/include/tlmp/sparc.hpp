#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tlmp::sparc {

/// Ordered B-bit payload, one entry per bit (0/1).
using MessageBits = std::vector<std::uint8_t>;

/// One index per L-bit block, each in [0, 2^L).
using BlockIndices = std::vector<std::uint32_t>;

/// Common SPARC dictionary A = (A_1|...|A_J), N x J*2^L, entries i.i.d.
/// N(0, 1/(N*J)) so every codeword has unit expected power. Immutable after
/// construction and shareable across threads.
struct Codebook {
    Eigen::MatrixXd a;       // N x (J*2^L)
    std::uint64_t seed = 0;
    int n = 0;
    int j_blocks = 0;
    int l_bits = 0;
    double fro_sq = 0.0;     // cached ||A||_F^2

    int section_size() const { return 1 << l_bits; }
    int width() const { return j_blocks * section_size(); }
};

Codebook build_codebook(std::uint64_t seed, int n, int j_blocks, int l_bits);

/// Big-endian split of a J*L bit message into J block indices.
BlockIndices split_message(const MessageBits& bits, int j_blocks, int l_bits);

/// Inverse of split_message: concatenated L-bit big-endian encodings.
MessageBits assemble_message(const BlockIndices& idx, int l_bits);

/// One-hot stacking: 1 at position j*2^L + idx[j] for each block j.
Eigen::VectorXd sparse_embed(const BlockIndices& idx, int l_bits);

/// Codeword r = A * sparse_embed(idx), computed by column selection.
Eigen::VectorXd encode(const Codebook& cb, const BlockIndices& idx);

/// Per-block argmax over a stacked posterior-mean vector; ties break toward
/// the lowest index so decoding is deterministic.
BlockIndices hard_decision(const Eigen::VectorXd& x_hat, int j_blocks,
                           int l_bits);

/// Eq.-style per-user error: fraction of sent messages missing from the
/// decoded list, with set semantics (duplicates in `decoded` count once).
double per_user_error(const std::vector<MessageBits>& sent,
                      const std::vector<MessageBits>& decoded);

}  // namespace tlmp::sparc
