#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kabp/ldpc_graph.hpp"

// Reweighted belief-propagation decode engine. Standard BP, URW-BP, CKAR-BP
// and EKAR-BP all run through the same engine and differ only in the
// reweighting vector rho supplied.
//
// Conventions (fixed for the whole library):
//   - LLR sign: lambda = log P(x=0)/P(x=1); BPSK maps bit 0 -> +1.
//   - All LLRs are clipped to +-kLlrClip; tanh products are capped at
//     +-(1 - kTanhCapEps) before atanh.
//   - Check-node products run over neighbors in ascending variable order
//     with the target skipped, so independent implementations of the same
//     rules agree bit-for-bit.

namespace kabp {

inline constexpr double kLlrClip = 50.0;
inline constexpr double kTanhCapEps = 1e-15;

inline double clip_llr(double v) {
    if (v > kLlrClip) return kLlrClip;
    if (v < -kLlrClip) return -kLlrClip;
    return v;
}

/// One factor appearance probability per check node, each in (0, 1].
struct ReweightVector {
    std::vector<double> rho;

    static ReweightVector ones(int M) {
        return ReweightVector{std::vector<double>(M, 1.0)};
    }
    static ReweightVector constant(int M, double value) {
        return ReweightVector{std::vector<double>(M, value)};
    }

    int size() const { return static_cast<int>(rho.size()); }
    /// Throws unless every entry lies in (0, 1] and the length equals M.
    void validate(int M) const;
};

/// Signed LLRs; positive favors bit 0.
using LlrSequence = std::vector<double>;

struct DecodeResult {
    std::vector<std::uint8_t> hard_bits;
    LlrSequence beliefs;
    int iterations_used = 0;
    bool converged = false;
};

// Single-edge update rules, exposed for direct evaluation in tests and for
// the subgraph optimizer. `incoming` pairs are (neighbor id, message).

/// Psi_{ji} = lambda_in + sum_{i' != target} rho_{i'} Lambda_{i'j}
///          - (1 - rho_target) Lambda_{target,j}
double variable_to_check(double lambda_in,
                         const std::vector<std::pair<int, double>>& incoming,
                         const ReweightVector& rho, int target_check);

/// Lambda_{ij} = 2 atanh( prod_{j' != target} tanh(Psi_{j'i}/2) )
double check_to_variable(const std::vector<std::pair<int, double>>& incoming,
                         int target_var);

/// b(x_j) = lambda_in + sum_i rho_i Lambda_{ij}
double compute_belief(double lambda_in,
                      const std::vector<std::pair<int, double>>& incoming,
                      const ReweightVector& rho);

/// Flooding-schedule decoder over a fixed Tanner graph. A decoder instance
/// is single-threaded; many instances over the same immutable graph may run
/// concurrently.
class RwDecoder {
  public:
    explicit RwDecoder(const ParityCheckMatrix& H);

    const ParityCheckMatrix& graph() const { return *H_; }
    int edge_count() const { return static_cast<int>(edge_check_.size()); }
    /// Edge e connects check edge_check(e) with variable edge_var(e).
    int edge_check(int e) const { return edge_check_[e]; }
    int edge_var(int e) const { return edge_var_[e]; }

    /// Full decode: iterate check pass, variable pass, belief and syndrome
    /// test until the syndrome is zero or max_iters is reached.
    DecodeResult decode(const ReweightVector& rho, const LlrSequence& llr_in,
                        int max_iters);

    // Stepping interface (used by the offline rho optimizer and by the
    // message-level equivalence tests).
    void start(const ReweightVector& rho, const LlrSequence& llr_in);
    /// One flooding iteration; returns the largest absolute message change.
    double iterate();
    const std::vector<double>& psi() const { return psi_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const LlrSequence& beliefs() const { return belief_; }
    std::vector<std::uint8_t> hard_decision() const;
    bool syndrome_ok() const;

  private:
    void check_pass();
    double variable_pass();

    const ParityCheckMatrix* H_;
    std::vector<int> edge_check_, edge_var_;
    std::vector<std::vector<int>> check_edges_, var_edges_;  // ascending order
    std::vector<double> psi_, lambda_, tanh_buf_;
    LlrSequence llr_in_, belief_;
    std::vector<double> rho_store_;  // owned copy; rho_ points into it
    const double* rho_ = nullptr;
};

/// lambda_2 = belief - decoder input, clipped; the decoder's contribution to
/// the next detection pass.
LlrSequence extrinsic_output(const DecodeResult& result, const LlrSequence& llr_in);

}  // namespace kabp
