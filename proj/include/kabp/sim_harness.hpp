#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kabp/idd_engine.hpp"
#include "kabp/ldpc_graph.hpp"
#include "kabp/rw_decoder.hpp"

namespace kabp {

// Batch-synchronous sweep configuration.  Parsed from a flat key-value file;
// every field has a usable default except the SNR grid (required for sweeps).
struct SimConfig {
    // Code: either PEG-construct from (n, m, degree, code_seed) or load `alist`.
    int n = 1000;
    int m = 500;
    int degree = 3;
    int tier_cap = 0;  // PEG lookahead horizon; 0 = unlimited
    std::uint64_t code_seed = 1;
    std::string alist;  // when nonempty, overrides the constructed code

    std::vector<std::string> decoders{"standard"};
    // decoder name -> rho file path.  ekar always needs one; urw/ckar fall
    // back to their closed-form/census designs when no file is given.
    std::map<std::string, std::string> rho_files;

    std::vector<double> snr_db;
    long min_frame_errors = 200;
    long max_frames = 100000;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string out;

    int outer_iters = 3;
    int inner_iters = 30;
    int n_rx = 4;
    int n_tx = 4;
    std::uint64_t interleaver_seed = 1;
    bool quasi_static = false;

    std::vector<double> exit_grid;  // empty -> 0.0, 0.1, ..., 1.0
    double exit_ebn0_db = 4.0;
    int exit_words = 10;

    void validate_sweep() const;  // throws std::invalid_argument
    void validate_exit() const;
};

SimConfig parse_sim_config(std::istream& in);
SimConfig parse_sim_config_file(const std::string& path);

struct BerRecord {
    double snr_db = 0.0;
    std::string decoder;
    int outer_iter = 1;  // 1-based
    long frames = 0;
    long bit_errors = 0;
    long frame_errors = 0;
    double ber = 0.0;  // bit_errors / (frames * K)
    double fer = 0.0;  // frame_errors / frames
};

// Rho vectors resolved per decoder name, plus bookkeeping for the manifest.
struct RhoSource {
    ReweightVector rho;
    std::uint64_t hash = 0;  // FNV-1a over the weight values
    std::string origin;      // "builtin", "closed-form", "census", or file path
};

std::uint64_t rho_hash(const ReweightVector& rho);

// Resolves the weight vector for `name` ("standard", "urw", "ckar", "ekar"):
// file if configured (code-hash checked against H), else the built-in design.
// ekar has no built-in fallback; a missing file is a config error.
RhoSource resolve_rho(const std::string& name, const ParityCheckMatrix& H,
                      const SimConfig& cfg);

// Runs the sweep: every (snr, decoder) pair simulated in deterministic
// batches until the slowest outer iteration has accumulated
// `min_frame_errors` frame errors or `max_frames` frames have been spent.
// Frame f uses seed mix(master_seed, f) regardless of worker count, and
// batch boundaries are worker-independent, so the output is too.
// Returns one record per (snr, decoder, outer iteration), snr-major.
std::vector<BerRecord> ber_sweep(const ParityCheckMatrix& H,
                                 const Encoder& enc, const SimConfig& cfg);

void write_ber_csv(std::ostream& out, const std::vector<BerRecord>& records);

// JSON run manifest: config echo, seeds, code hash, rho hashes, wall time.
void write_manifest(const std::string& path, const SimConfig& cfg,
                    std::uint64_t code_hash_value,
                    const std::map<std::string, RhoSource>& rho_sources,
                    double wall_seconds, std::size_t record_count);

// --- mutual information and EXIT curves ---

// 1 - mean log2(1 + exp(-llr * x)) with x = +1 for bit 0, -1 for bit 1,
// clamped to [0, 1].  Sizes must match and be nonzero.
double mutual_info_estimate(const LlrSequence& llrs,
                            const std::vector<std::uint8_t>& bits);

// Mutual information of a consistent-Gaussian LLR N(sigma^2/2, sigma^2)
// against its BPSK input; monotone, J(0) = 0, J(inf) = 1.  Quadrature.
double j_function(double sigma);

// Inverse of j_function by bisection.  Arguments outside (0, 1) map to the
// endpoints; values above j_function(kJSigmaMax) saturate at kJSigmaMax.
double j_inverse(double mutual_info);

inline constexpr double kJSigmaMax = 40.0;

struct ExitCurve {
    std::string role;    // "detector" or "decoder"
    std::string name;    // decoder name, or modulation label for detectors
    double context_db = 0.0;  // Eb/N0 the curve was measured at (detector)
    std::vector<std::pair<double, double>> points;  // (I_A, I_E), I_A ascending
};

// Decoder transfer: consistent-Gaussian priors of mutual information I_A in,
// extrinsic mutual information out, `words` random codewords per grid point.
ExitCurve exit_decoder_curve(const ParityCheckMatrix& H, const Encoder& enc,
                             const ReweightVector& rho, const std::string& name,
                             int inner_iters, const std::vector<double>& grid,
                             int words, std::uint64_t seed);

// Detector transfer at a fixed Eb/N0: priors with mutual information I_A
// drive soft-symbol cancellation over random channels; I_E is measured on
// the extrinsic detector output.
ExitCurve exit_detector_curve(const ParityCheckMatrix& H, const Encoder& enc,
                              const SimConfig& cfg, const std::vector<double>& grid,
                              std::uint64_t seed);

void write_exit_csv(std::ostream& out, const std::vector<ExitCurve>& curves);

}  // namespace kabp
