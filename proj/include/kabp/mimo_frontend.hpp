#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "kabp/rng.hpp"
#include "kabp/rw_decoder.hpp"

// Spatial-multiplexing front end: flat-fading channel simulation and the
// soft-in/soft-out PIC-MMSE detector. Everything here is per channel use;
// frame assembly lives in the iterative engine.

namespace kabp {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

// Dense row-major complex matrix. Just enough algebra for the detector.
struct CMat {
    int rows = 0;
    int cols = 0;
    std::vector<Complex> a;

    CMat() = default;
    CMat(int r, int c)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

    Complex& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    const Complex& at(int r, int c) const {
        return a[static_cast<std::size_t>(r) * cols + c];
    }
    CVec col(int c) const;

    static CMat identity(int n);
};

// One flat-fading channel use: r = C s + n. The receiver is assumed to know
// C exactly.
struct ChannelRealization {
    CMat C;           // N_R x N_T
    double N0 = 1.0;  // complex noise power per receive dimension
    double Es = 1.0;  // per-symbol transmit energy

    int n_rx() const { return C.rows; }
    int n_tx() const { return C.cols; }
    void validate() const;  // N_R >= N_T, N0 > 0
};

// Bit-labelled constellation with unit average energy. plus_sets[j] holds
// the symbols whose bit j is 0 (the positive component under the Gray map);
// they form the numerator of the bit LLR ratio, matching the convention
// that positive LLRs favour bit 0 everywhere in this library.
struct ModulationMap {
    CVec constellation;
    std::vector<std::vector<int>> bit_labels;  // per symbol, m entries of 0/1
    std::vector<std::vector<int>> plus_sets;   // per bit position, bit == 0
    std::vector<std::vector<int>> minus_sets;  // per bit position, bit == 1
    std::vector<int> label_lookup;             // packed label -> symbol index

    int bits_per_symbol() const {
        return bit_labels.empty() ? 0 : static_cast<int>(bit_labels.front().size());
    }
    int size() const { return static_cast<int>(constellation.size()); }
    void validate() const;

    static ModulationMap qpsk_gray();
};

// Decoder-fed per-stream statistics for one channel use.
struct SoftSymbolStats {
    CVec y_hat;                   // soft symbol estimate per stream
    std::vector<double> err_var;  // Es - |y_hat|^2 per stream

    static SoftSymbolStats uninformative(int n_streams, double Es);
};

struct SoftSymbol {
    Complex y_hat;
    double err_var;
};

// MMSE filter for one stream after interference cancellation.
struct MmseFilter {
    CVec w;          // length N_R
    double mu;       // w^H c_k; real for the Hermitian system solved here
    double eff_var;  // Es * mu * (1 - mu)
};

// Frame-level detector product, assembled by the iterative engine.
struct DetectorOutput {
    LlrSequence llr1;              // extrinsic LLR per coded bit
    std::vector<double> eff_gain;  // mu per stream, last channel use
    std::vector<double> eff_var;
};

// I.i.d. circularly-symmetric complex Gaussian entries of unit variance,
// deterministic in the seed. N0/Es are left at their defaults for the
// caller to overwrite.
ChannelRealization sample_channel(int n_rx, int n_tx, std::uint64_t seed);

// Gray-maps bits onto constellation symbols. Length must divide m.
CVec modulate(const std::vector<int>& bits, const ModulationMap& map);

// r = C s + n with n circular complex Gaussian of per-dimension power N0.
CVec transmit(const ChannelRealization& chan, const CVec& s, Rng& rng);

// Soft symbol statistics from the m a-priori LLRs of one symbol. Uniform
// priors give y_hat = 0 and err_var = Es.
SoftSymbol soft_symbol(const std::vector<double>& bit_llrs,
                       const ModulationMap& map, double Es);

// Removes the soft estimates of every stream but k from r.
CVec pic_cancel(const CVec& r, const CMat& C, const SoftSymbolStats& stats,
                int k);

// MMSE filter for stream k given the residual interference variances. The
// stream under detection carries no prior, so its diagonal entry is Es.
// Throws if the regularized system is singular or the solve residual
// exceeds 1e-10 relative.
MmseFilter mmse_filter(const CMat& C, const SoftSymbolStats& stats, int k,
                       double Es, double N0);

// Extrinsic LLRs for the m bits of one filtered stream output. The
// likelihood is Gaussian with mean mu*a and variance eff_var; the prior of
// bit j itself is excluded from bit j's output. Results are clipped.
std::vector<double> bit_llr(Complex y, double mu, double eff_var,
                            const std::vector<double>& apriori,
                            const ModulationMap& map);

}  // namespace kabp
