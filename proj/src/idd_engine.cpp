#include "kabp/idd_engine.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kabp/rng.hpp"

namespace kabp {

DecoderKind parse_decoder_kind(const std::string& name) {
    if (name == "standard") return DecoderKind::standard;
    if (name == "urw") return DecoderKind::urw;
    if (name == "ckar") return DecoderKind::ckar;
    if (name == "ekar") return DecoderKind::ekar;
    throw std::invalid_argument("unknown decoder kind: " + name);
}

std::string decoder_kind_name(DecoderKind kind) {
    switch (kind) {
        case DecoderKind::standard: return "standard";
        case DecoderKind::urw: return "urw";
        case DecoderKind::ckar: return "ckar";
        case DecoderKind::ekar: return "ekar";
    }
    throw std::invalid_argument("unknown decoder kind");
}

Interleaver::Interleaver(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("interleaver needs a positive length");
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm_[i], perm_[j]);
    }
}

void Interleaver::check_size(std::size_t got) const {
    if (got != perm_.size())
        throw std::invalid_argument("sequence length does not match interleaver");
}

IddEngine::IddEngine(const ParityCheckMatrix& H, const Encoder& enc,
                     IddConfig cfg)
    : H_(H),
      enc_(enc),
      cfg_(std::move(cfg)),
      map_(ModulationMap::qpsk_gray()),
      pi_(H.N, cfg_.interleaver_seed),
      dec_(H),
      rho_eff_(ReweightVector::ones(H.M)) {
    if (cfg_.outer_iters < 1 || cfg_.inner_iters < 1)
        throw std::invalid_argument("iteration counts must be positive");
    if (cfg_.n_rx < cfg_.n_tx || cfg_.n_tx < 1)
        throw std::invalid_argument("antenna setup needs N_R >= N_T >= 1");
    const int use_bits = map_.bits_per_symbol() * cfg_.n_tx;
    if (H.N % use_bits != 0)
        throw std::invalid_argument(
            "codeword length must fill a whole number of channel uses");
    if (cfg_.decoder != DecoderKind::standard) {
        cfg_.rho.validate(H.M);
        rho_eff_ = cfg_.rho;
    }
    if (enc_.n() != H.N) throw std::invalid_argument("encoder does not match code");
}

double IddEngine::noise_power(double ebn0_db) const {
    const double rate = static_cast<double>(enc_.k()) / enc_.n();
    const double m = map_.bits_per_symbol();
    return 1.0 / (rate * m * std::pow(10.0, ebn0_db / 10.0));
}

FrameResult IddEngine::run_frame(double ebn0_db, std::uint64_t seed) {
    return run_frame_with(ebn0_db, seed, [this](const LlrSequence& llr_in) {
        return dec_.decode(rho_eff_, llr_in, cfg_.inner_iters);
    });
}

FrameResult IddEngine::run_frame_with(double ebn0_db, std::uint64_t seed,
                                      const DecodeFn& decode) {
    const int N = H_.N;
    const int m = map_.bits_per_symbol();
    const int nt = cfg_.n_tx;
    const int use_bits = m * nt;
    const int uses = N / use_bits;
    const double N0 = noise_power(ebn0_db);
    const double Es = 1.0;

    Rng rng(seed);

    std::vector<std::uint8_t> info(enc_.k());
    for (auto& b : info) b = rng.coin() ? 1 : 0;
    const auto word = enc_.encode(info);

    std::vector<int> tx_bits(N);
    {
        std::vector<std::uint8_t> perm = pi_.forward(word);
        for (int i = 0; i < N; ++i) tx_bits[i] = perm[i];
    }

    // Channel draws come after the data bits in one fixed stream order so a
    // frame is reproducible from its seed alone.
    std::vector<ChannelRealization> chans;
    chans.reserve(cfg_.quasi_static ? 1 : uses);
    const double h = std::sqrt(0.5);
    const int draws = cfg_.quasi_static ? 1 : uses;
    for (int u = 0; u < draws; ++u) {
        ChannelRealization chan;
        chan.C = CMat(cfg_.n_rx, nt);
        for (int r = 0; r < cfg_.n_rx; ++r)
            for (int c = 0; c < nt; ++c) {
                const double re = rng.gaussian() * h;
                const double im = rng.gaussian() * h;
                chan.C.at(r, c) = Complex{re, im};
            }
        chan.N0 = N0;
        chans.push_back(std::move(chan));
    }

    std::vector<CVec> received(uses);
    for (int u = 0; u < uses; ++u) {
        const auto& chan = chans[cfg_.quasi_static ? 0 : u];
        CVec s(nt);
        for (int q = 0; q < nt; ++q) {
            const int base = u * use_bits + q * m;
            int packed = 0;
            for (int j = 0; j < m; ++j) packed = (packed << 1) | tx_bits[base + j];
            s[q] = map_.constellation[map_.label_lookup[packed]];
        }
        received[u] = transmit(chan, s, rng);
    }

    FrameResult result;
    result.K = enc_.k();

    LlrSequence prior_tx(N, 0.0);  // detector priors, transmit order
    std::vector<double> sym_prior(m);
    for (int outer = 0; outer < cfg_.outer_iters; ++outer) {
        LlrSequence lambda1_tx(N);
        for (int u = 0; u < uses; ++u) {
            const auto& chan = chans[cfg_.quasi_static ? 0 : u];
            SoftSymbolStats stats;
            stats.y_hat.resize(nt);
            stats.err_var.resize(nt);
            for (int q = 0; q < nt; ++q) {
                const int base = u * use_bits + q * m;
                for (int j = 0; j < m; ++j) sym_prior[j] = prior_tx[base + j];
                const auto ss = soft_symbol(sym_prior, map_, Es);
                stats.y_hat[q] = ss.y_hat;
                stats.err_var[q] = ss.err_var;
            }
            for (int k = 0; k < nt; ++k) {
                const auto hat = pic_cancel(received[u], chan.C, stats, k);
                const auto fl = mmse_filter(chan.C, stats, k, Es, N0);
                Complex y{0.0, 0.0};
                for (int i = 0; i < cfg_.n_rx; ++i)
                    y += std::conj(fl.w[i]) * hat[i];
                const int base = u * use_bits + k * m;
                for (int j = 0; j < m; ++j) sym_prior[j] = prior_tx[base + j];
                const auto lam = bit_llr(y, fl.mu, fl.eff_var, sym_prior, map_);
                for (int j = 0; j < m; ++j) lambda1_tx[base + j] = lam[j];
            }
        }

        const LlrSequence llr_in = pi_.inverse(lambda1_tx);
        const DecodeResult dec = decode(llr_in);

        const auto got = enc_.extract_info(dec.hard_bits);
        long errors = 0;
        for (int i = 0; i < result.K; ++i) errors += got[i] != info[i];
        result.bit_errors.push_back(errors);
        result.frame_error.push_back(errors > 0 ? 1 : 0);
        result.decoder_converged.push_back(dec.converged ? 1 : 0);

        if (outer + 1 < cfg_.outer_iters && cfg_.feedback) {
            const LlrSequence lambda2 = extrinsic_output(dec, llr_in);
            prior_tx = pi_.forward(lambda2);
        }
    }
    return result;
}

}  // namespace kabp
