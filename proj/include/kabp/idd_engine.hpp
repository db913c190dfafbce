#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kabp/ldpc_graph.hpp"
#include "kabp/mimo_frontend.hpp"
#include "kabp/rw_decoder.hpp"

// One frame end to end: encode, interleave, modulate, channel, then the
// outer loop of detection and decoding with extrinsic exchange in both
// directions. Engines are cheap per-frame workers over a shared code.

namespace kabp {

enum class DecoderKind { standard, urw, ckar, ekar };

DecoderKind parse_decoder_kind(const std::string& name);
std::string decoder_kind_name(DecoderKind kind);

struct IddConfig {
    int outer_iters = 3;
    int inner_iters = 30;
    DecoderKind decoder = DecoderKind::standard;
    ReweightVector rho;  // ignored for the standard decoder
    std::uint64_t interleaver_seed = 1;
    bool quasi_static = false;  // one channel per codeword instead of per use
    int n_rx = 4;
    int n_tx = 4;
    bool feedback = true;  // ablation hook: false forces zero detector priors
};

struct FrameResult {
    std::vector<long> bit_errors;            // per outer iteration, info bits
    std::vector<std::uint8_t> frame_error;   // bit_errors > 0, per iteration
    std::vector<std::uint8_t> decoder_converged;
    int K = 0;
};

// Seeded uniform random bit permutation over the codeword.
class Interleaver {
  public:
    Interleaver(int n, std::uint64_t seed);

    int size() const { return static_cast<int>(perm_.size()); }
    const std::vector<int>& permutation() const { return perm_; }

    template <typename T>
    std::vector<T> forward(const std::vector<T>& x) const {
        check_size(x.size());
        std::vector<T> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[perm_[i]];
        return out;
    }

    template <typename T>
    std::vector<T> inverse(const std::vector<T>& x) const {
        check_size(x.size());
        std::vector<T> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[perm_[i]] = x[i];
        return out;
    }

  private:
    void check_size(std::size_t got) const;
    std::vector<int> perm_;
};

class IddEngine {
  public:
    // The matrix and encoder must outlive the engine.
    IddEngine(const ParityCheckMatrix& H, const Encoder& enc, IddConfig cfg);

    // Inner decoder stage, replaceable for cross-implementation checks.
    using DecodeFn = std::function<DecodeResult(const LlrSequence& llr_in)>;

    FrameResult run_frame(double ebn0_db, std::uint64_t seed);
    FrameResult run_frame_with(double ebn0_db, std::uint64_t seed,
                               const DecodeFn& decode);

    // N0 for the configured rate and modulation at the given Eb/N0.
    double noise_power(double ebn0_db) const;

    const IddConfig& config() const { return cfg_; }

  private:
    const ParityCheckMatrix& H_;
    const Encoder& enc_;
    IddConfig cfg_;
    ModulationMap map_;
    Interleaver pi_;
    RwDecoder dec_;
    ReweightVector rho_eff_;
};

}  // namespace kabp
