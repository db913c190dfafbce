#include "kabp/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "kabp/mimo_frontend.hpp"
#include "kabp/rho_designer.hpp"
#include "kabp/rng.hpp"

namespace kabp {

namespace {

constexpr long kSweepBatch = 256;  // frames per stop-rule check, fixed so the
                                   // simulated frame set ignores worker count

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(v);
    while (std::getline(ss, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

long to_long(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long r = 0;
    try {
        r = std::stol(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
    return r;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long r = 0;
    try {
        r = std::stoull(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw std::invalid_argument("config key '" + key + "': bad integer '" + v + "'");
    return static_cast<std::uint64_t>(r);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double r = 0.0;
    try {
        r = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size() || !std::isfinite(r))
        throw std::invalid_argument("config key '" + key + "': bad number '" + v + "'");
    return r;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "0" || v == "false") return false;
    if (v == "1" || v == "true") return true;
    throw std::invalid_argument("config key '" + key + "': bad flag '" + v + "'");
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
    return out;
}

std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_hex(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

constexpr double kInvLn2 = 1.4426950408889634074;

// log2(1 + e^t) without overflow for large positive t.
double log2_1p_exp(double t) {
    if (t > 0.0) return t * kInvLn2 + std::log1p(std::exp(-t)) * kInvLn2;
    return std::log1p(std::exp(t)) * kInvLn2;
}

void check_rho_fits(const ReweightVector& rho, int M, const std::string& what) {
    try {
        rho.validate(M);
    } catch (const std::exception& e) {
        throw std::invalid_argument(what + ": " + e.what());
    }
}

}  // namespace

SimConfig parse_sim_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");

        if (key == "n") cfg.n = static_cast<int>(to_long(key, val));
        else if (key == "m") cfg.m = static_cast<int>(to_long(key, val));
        else if (key == "degree") cfg.degree = static_cast<int>(to_long(key, val));
        else if (key == "tier_cap") cfg.tier_cap = static_cast<int>(to_long(key, val));
        else if (key == "code_seed") cfg.code_seed = to_u64(key, val);
        else if (key == "alist") cfg.alist = val;
        else if (key == "decoders") cfg.decoders = split_list(val);
        else if (key.rfind("rho_", 0) == 0) cfg.rho_files[key.substr(4)] = val;
        else if (key == "snr_db") cfg.snr_db = to_double_list(key, val);
        else if (key == "min_frame_errors") cfg.min_frame_errors = to_long(key, val);
        else if (key == "max_frames") cfg.max_frames = to_long(key, val);
        else if (key == "seed") cfg.master_seed = to_u64(key, val);
        else if (key == "workers") cfg.workers = static_cast<int>(to_long(key, val));
        else if (key == "out") cfg.out = val;
        else if (key == "outer_iters") cfg.outer_iters = static_cast<int>(to_long(key, val));
        else if (key == "inner_iters") cfg.inner_iters = static_cast<int>(to_long(key, val));
        else if (key == "n_rx") cfg.n_rx = static_cast<int>(to_long(key, val));
        else if (key == "n_tx") cfg.n_tx = static_cast<int>(to_long(key, val));
        else if (key == "interleaver_seed") cfg.interleaver_seed = to_u64(key, val);
        else if (key == "quasi_static") cfg.quasi_static = to_bool(key, val);
        else if (key == "exit_grid") cfg.exit_grid = to_double_list(key, val);
        else if (key == "exit_ebn0_db") cfg.exit_ebn0_db = to_double(key, val);
        else if (key == "exit_words") cfg.exit_words = static_cast<int>(to_long(key, val));
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
    }
    return cfg;
}

SimConfig parse_sim_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    return parse_sim_config(in);
}

namespace {

void validate_common(const SimConfig& cfg) {
    if (cfg.decoders.empty())
        throw std::invalid_argument("config: decoder list is empty");
    for (std::size_t i = 0; i < cfg.decoders.size(); ++i) {
        parse_decoder_kind(cfg.decoders[i]);  // throws on unknown names
        for (std::size_t j = i + 1; j < cfg.decoders.size(); ++j)
            if (cfg.decoders[i] == cfg.decoders[j])
                throw std::invalid_argument("config: duplicate decoder '" +
                                            cfg.decoders[i] + "'");
    }
    if (cfg.outer_iters < 1 || cfg.inner_iters < 1)
        throw std::invalid_argument("config: iteration counts must be positive");
    if (cfg.n_tx < 1 || cfg.n_rx < cfg.n_tx)
        throw std::invalid_argument("config: need n_rx >= n_tx >= 1");
}

}  // namespace

void SimConfig::validate_sweep() const {
    validate_common(*this);
    if (snr_db.empty())
        throw std::invalid_argument("config: snr_db grid is empty");
    if (min_frame_errors < 1)
        throw std::invalid_argument("config: min_frame_errors must be positive");
    if (max_frames < 1)
        throw std::invalid_argument("config: max_frames must be positive");
    if (workers < 1)
        throw std::invalid_argument("config: workers must be positive");
}

void SimConfig::validate_exit() const {
    validate_common(*this);
    if (exit_words < 1)
        throw std::invalid_argument("config: exit_words must be positive");
    for (double v : exit_grid)
        if (!(v >= 0.0) || v > 1.0)
            throw std::invalid_argument("config: exit_grid values must lie in [0, 1]");
}

std::uint64_t rho_hash(const ReweightVector& rho) {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : rho.rho) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

RhoSource resolve_rho(const std::string& name, const ParityCheckMatrix& H,
                      const SimConfig& cfg) {
    const DecoderKind kind = parse_decoder_kind(name);
    auto it = cfg.rho_files.find(name);
    RhoSource src;
    if (it != cfg.rho_files.end()) {
        if (kind == DecoderKind::standard)
            throw std::invalid_argument("config: the standard decoder takes no rho file");
        RhoFile file = read_rho_file(it->second);
        if (file.code_hash != code_hash(H))
            throw std::invalid_argument("rho file '" + it->second +
                                        "' was designed for a different code");
        check_rho_fits(file.rho, H.M, "rho file '" + it->second + "'");
        src.rho = std::move(file.rho);
        src.origin = it->second;
    } else {
        switch (kind) {
            case DecoderKind::standard:
                src.rho = ReweightVector::ones(H.M);
                src.origin = "builtin";
                break;
            case DecoderKind::urw:
                src.rho = urw_rho(H);
                src.origin = "closed-form";
                break;
            case DecoderKind::ckar:
                src.rho = ckar_rho(count_girth_cycles(H), H);
                src.origin = "census";
                break;
            case DecoderKind::ekar:
                throw std::invalid_argument(
                    "config: ekar needs a designed weight file (rho_ekar = <path>)");
        }
    }
    src.hash = rho_hash(src.rho);
    return src;
}

namespace {

struct Tally {
    std::vector<long> bit_errors;
    std::vector<long> frame_errors;
    explicit Tally(int outers) : bit_errors(outers, 0), frame_errors(outers, 0) {}
    void add(const FrameResult& r) {
        for (std::size_t t = 0; t < bit_errors.size(); ++t) {
            bit_errors[t] += r.bit_errors[t];
            frame_errors[t] += r.frame_error[t];
        }
    }
    void add(const Tally& other) {
        for (std::size_t t = 0; t < bit_errors.size(); ++t) {
            bit_errors[t] += other.bit_errors[t];
            frame_errors[t] += other.frame_errors[t];
        }
    }
};

}  // namespace

std::vector<BerRecord> ber_sweep(const ParityCheckMatrix& H, const Encoder& enc,
                                 const SimConfig& cfg) {
    cfg.validate_sweep();
    std::map<std::string, RhoSource> sources;
    for (const auto& name : cfg.decoders) sources.emplace(name, resolve_rho(name, H, cfg));

    const int T = cfg.outer_iters;
    const int W = cfg.workers;
    const long K = enc.k();
    std::vector<BerRecord> records;
    records.reserve(cfg.snr_db.size() * cfg.decoders.size() *
                    static_cast<std::size_t>(T));

    for (double snr : cfg.snr_db) {
        for (const auto& name : cfg.decoders) {
            IddConfig icfg;
            icfg.outer_iters = T;
            icfg.inner_iters = cfg.inner_iters;
            icfg.decoder = parse_decoder_kind(name);
            icfg.rho = sources.at(name).rho;
            icfg.interleaver_seed = cfg.interleaver_seed;
            icfg.quasi_static = cfg.quasi_static;
            icfg.n_rx = cfg.n_rx;
            icfg.n_tx = cfg.n_tx;

            std::vector<std::unique_ptr<IddEngine>> engines;
            engines.reserve(W);
            for (int w = 0; w < W; ++w)
                engines.push_back(std::make_unique<IddEngine>(H, enc, icfg));

            Tally total(T);
            long frames = 0;
            while (true) {
                const long batch = std::min<long>(kSweepBatch, cfg.max_frames - frames);
                if (batch <= 0) break;
                const long chunk = (batch + W - 1) / W;
                std::vector<Tally> local(W, Tally(T));
                std::vector<std::exception_ptr> errors(W);
                auto work = [&](int w) {
                    const long begin = frames + w * chunk;
                    const long end = std::min(frames + batch, begin + chunk);
                    try {
                        for (long f = begin; f < end; ++f) {
                            const auto r = engines[w]->run_frame(
                                snr, mix_seed(cfg.master_seed,
                                              static_cast<std::uint64_t>(f)));
                            local[w].add(r);
                        }
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                };
                if (W == 1) {
                    work(0);
                } else {
                    std::vector<std::thread> pool;
                    pool.reserve(W);
                    for (int w = 0; w < W; ++w) pool.emplace_back(work, w);
                    for (auto& th : pool) th.join();
                }
                for (int w = 0; w < W; ++w)
                    if (errors[w]) std::rethrow_exception(errors[w]);
                for (int w = 0; w < W; ++w) total.add(local[w]);
                frames += batch;
                const long slowest =
                    *std::min_element(total.frame_errors.begin(),
                                      total.frame_errors.end());
                if (slowest >= cfg.min_frame_errors) break;
            }

            for (int t = 0; t < T; ++t) {
                BerRecord rec;
                rec.snr_db = snr;
                rec.decoder = name;
                rec.outer_iter = t + 1;
                rec.frames = frames;
                rec.bit_errors = total.bit_errors[t];
                rec.frame_errors = total.frame_errors[t];
                rec.ber = frames > 0
                              ? static_cast<double>(rec.bit_errors) /
                                    (static_cast<double>(frames) * static_cast<double>(K))
                              : 0.0;
                rec.fer = frames > 0 ? static_cast<double>(rec.frame_errors) /
                                           static_cast<double>(frames)
                                     : 0.0;
                records.push_back(std::move(rec));
            }
        }
    }
    return records;
}

void write_ber_csv(std::ostream& out, const std::vector<BerRecord>& records) {
    out << "snr_db,decoder,outer_iter,frames,bit_errors,frame_errors,ber,fer\n";
    char num[48];
    for (const auto& r : records) {
        out << fmt_g(r.snr_db) << ',' << r.decoder << ',' << r.outer_iter << ','
            << r.frames << ',' << r.bit_errors << ',' << r.frame_errors << ',';
        std::snprintf(num, sizeof num, "%.8e", r.ber);
        out << num << ',';
        std::snprintf(num, sizeof num, "%.8e", r.fer);
        out << num << '\n';
    }
}

void write_manifest(const std::string& path, const SimConfig& cfg,
                    std::uint64_t code_hash_value,
                    const std::map<std::string, RhoSource>& rho_sources,
                    double wall_seconds, std::size_t record_count) {
    nlohmann::json config;
    config["n"] = cfg.n;
    config["m"] = cfg.m;
    config["degree"] = cfg.degree;
    config["tier_cap"] = cfg.tier_cap;
    config["code_seed"] = cfg.code_seed;
    config["alist"] = cfg.alist;
    config["decoders"] = cfg.decoders;
    config["snr_db"] = cfg.snr_db;
    config["min_frame_errors"] = cfg.min_frame_errors;
    config["max_frames"] = cfg.max_frames;
    config["seed"] = cfg.master_seed;
    config["workers"] = cfg.workers;
    config["outer_iters"] = cfg.outer_iters;
    config["inner_iters"] = cfg.inner_iters;
    config["n_rx"] = cfg.n_rx;
    config["n_tx"] = cfg.n_tx;
    config["interleaver_seed"] = cfg.interleaver_seed;
    config["quasi_static"] = cfg.quasi_static;

    const std::string dumped = config.dump();
    std::uint64_t digest = 1469598103934665603ull;
    for (unsigned char c : dumped) {
        digest ^= c;
        digest *= 1099511628211ull;
    }

    nlohmann::json j;
    j["config"] = config;
    j["config_digest"] = fmt_hex(digest);
    j["code_hash"] = fmt_hex(code_hash_value);
    nlohmann::json rhos = nlohmann::json::object();
    for (const auto& [name, src] : rho_sources) {
        rhos[name] = {{"hash", fmt_hex(src.hash) }, {"origin", src.origin}};
    }
    j["rho"] = rhos;
    j["records"] = record_count;
    j["wall_seconds"] = wall_seconds;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

double mutual_info_estimate(const LlrSequence& llrs,
                            const std::vector<std::uint8_t>& bits) {
    if (llrs.empty() || llrs.size() != bits.size())
        throw std::invalid_argument("mutual information needs matching nonempty inputs");
    double loss = 0.0;
    for (std::size_t i = 0; i < llrs.size(); ++i) {
        const double x = bits[i] ? -1.0 : 1.0;
        loss += log2_1p_exp(-llrs[i] * x);
    }
    const double mi = 1.0 - loss / static_cast<double>(llrs.size());
    return std::min(1.0, std::max(0.0, mi));
}

double j_function(double sigma) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("j_function: sigma must be >= 0");
    if (sigma < 1e-6) return 0.0;
    const double mu = 0.5 * sigma * sigma;
    const double lo = mu - 10.0 * sigma;
    const double hi = mu + 10.0 * sigma;
    const int n = 2000;  // Simpson panels (even)
    const double step = (hi - lo) / n;
    constexpr double kTwoPi = 6.283185307179586477;
    const double norm = 1.0 / (sigma * std::sqrt(kTwoPi));
    auto f = [&](double z) {
        const double d = (z - mu) / sigma;
        return norm * std::exp(-0.5 * d * d) * log2_1p_exp(-z);
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * step) * (i % 2 ? 4.0 : 2.0);
    const double integral = acc * step / 3.0;
    return std::min(1.0, std::max(0.0, 1.0 - integral));
}

double j_inverse(double mutual_info) {
    if (mutual_info <= 0.0) return 0.0;
    if (mutual_info >= j_function(kJSigmaMax)) return kJSigmaMax;
    double lo = 0.0, hi = kJSigmaMax;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (j_function(mid) < mutual_info) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

std::vector<double> sorted_grid(std::vector<double> grid) {
    if (grid.empty())
        for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    for (double v : grid)
        if (!(v >= 0.0) || v > 1.0)
            throw std::invalid_argument("exit grid values must lie in [0, 1]");
    std::sort(grid.begin(), grid.end());
    return grid;
}

// Consistent-Gaussian a-priori LLR for BPSK value x, clipped like every
// other LLR in the pipeline.
double gaussian_prior(double x, double sigma, Rng& rng) {
    return clip_llr(x * 0.5 * sigma * sigma + sigma * rng.gaussian());
}

}  // namespace

ExitCurve exit_decoder_curve(const ParityCheckMatrix& H, const Encoder& enc,
                             const ReweightVector& rho, const std::string& name,
                             int inner_iters, const std::vector<double>& grid,
                             int words, std::uint64_t seed) {
    if (inner_iters < 1 || words < 1)
        throw std::invalid_argument("exit_decoder_curve: counts must be positive");
    check_rho_fits(rho, H.M, "exit_decoder_curve");
    const auto ia_grid = sorted_grid(grid);
    const int N = H.N;
    const int Kinfo = enc.k();
    RwDecoder dec(H);

    ExitCurve curve;
    curve.role = "decoder";
    curve.name = name;
    curve.context_db = 0.0;

    std::vector<std::uint8_t> info(Kinfo);
    LlrSequence priors(N);
    std::vector<double> ext(N);
    for (std::size_t g = 0; g < ia_grid.size(); ++g) {
        const double sigma = j_inverse(ia_grid[g]);
        Rng rng(mix_seed(seed, g));
        double loss = 0.0;
        long count = 0;
        for (int w = 0; w < words; ++w) {
            for (int i = 0; i < Kinfo; ++i) info[i] = rng.coin() ? 1 : 0;
            const auto word = enc.encode(info);
            for (int i = 0; i < N; ++i)
                priors[i] = gaussian_prior(word[i] ? -1.0 : 1.0, sigma, rng);
            // Step the decoder by hand: the transfer is measured on the
            // check-side aggregate, which needs at least one message pass
            // even when the syndrome pre-check would already accept.
            dec.start(rho, priors);
            for (int it = 0; it < inner_iters; ++it) {
                dec.iterate();
                if (dec.syndrome_ok()) break;
            }
            const auto& lam = dec.lambda();
            std::fill(ext.begin(), ext.end(), 0.0);
            for (int e = 0; e < dec.edge_count(); ++e)
                ext[dec.edge_var(e)] += rho.rho[dec.edge_check(e)] * lam[e];
            for (int i = 0; i < N; ++i) {
                const double x = word[i] ? -1.0 : 1.0;
                loss += log2_1p_exp(-ext[i] * x);
            }
            count += N;
        }
        const double ie =
            std::min(1.0, std::max(0.0, 1.0 - loss / static_cast<double>(count)));
        curve.points.emplace_back(ia_grid[g], ie);
    }
    return curve;
}

ExitCurve exit_detector_curve(const ParityCheckMatrix& H, const Encoder& enc,
                              const SimConfig& cfg, const std::vector<double>& grid,
                              std::uint64_t seed) {
    cfg.validate_exit();
    const auto ia_grid = sorted_grid(grid);
    const ModulationMap map = ModulationMap::qpsk_gray();
    const int m = map.bits_per_symbol();
    const int nt = cfg.n_tx;
    const int N = H.N;
    const int use_bits = m * nt;
    if (N % use_bits != 0)
        throw std::invalid_argument(
            "exit_detector_curve: block length must divide into channel uses");
    const int uses = N / use_bits;
    const double Es = 1.0;
    const double rate = static_cast<double>(enc.k()) / static_cast<double>(N);
    const double N0 =
        1.0 / (rate * m * std::pow(10.0, cfg.exit_ebn0_db / 10.0));

    ExitCurve curve;
    curve.role = "detector";
    curve.name = "qpsk";
    curve.context_db = cfg.exit_ebn0_db;

    std::vector<std::uint8_t> bits(N);
    LlrSequence priors(N);
    std::vector<double> sym_prior(m);
    const double h = std::sqrt(0.5);
    for (std::size_t g = 0; g < ia_grid.size(); ++g) {
        const double sigma = j_inverse(ia_grid[g]);
        Rng rng(mix_seed(seed, 0x0de7ec70u + g));
        double loss = 0.0;
        long count = 0;
        for (int w = 0; w < cfg.exit_words; ++w) {
            for (int i = 0; i < N; ++i) bits[i] = rng.coin() ? 1 : 0;
            for (int i = 0; i < N; ++i)
                priors[i] = gaussian_prior(bits[i] ? -1.0 : 1.0, sigma, rng);
            for (int u = 0; u < uses; ++u) {
                ChannelRealization chan;
                chan.C = CMat(cfg.n_rx, nt);
                for (int r = 0; r < cfg.n_rx; ++r)
                    for (int c = 0; c < nt; ++c)
                        chan.C.at(r, c) =
                            Complex{rng.gaussian() * h, rng.gaussian() * h};
                chan.N0 = N0;
                CVec s(nt);
                for (int q = 0; q < nt; ++q) {
                    const int base = u * use_bits + q * m;
                    int packed = 0;
                    for (int j = 0; j < m; ++j) packed = (packed << 1) | bits[base + j];
                    s[q] = map.constellation[map.label_lookup[packed]];
                }
                const CVec r = transmit(chan, s, rng);
                SoftSymbolStats stats;
                stats.y_hat.resize(nt);
                stats.err_var.resize(nt);
                for (int q = 0; q < nt; ++q) {
                    const int base = u * use_bits + q * m;
                    for (int j = 0; j < m; ++j) sym_prior[j] = priors[base + j];
                    const auto ss = soft_symbol(sym_prior, map, Es);
                    stats.y_hat[q] = ss.y_hat;
                    stats.err_var[q] = ss.err_var;
                }
                for (int k = 0; k < nt; ++k) {
                    const auto hat = pic_cancel(r, chan.C, stats, k);
                    const auto fl = mmse_filter(chan.C, stats, k, Es, N0);
                    Complex y{0.0, 0.0};
                    for (int i = 0; i < cfg.n_rx; ++i) y += std::conj(fl.w[i]) * hat[i];
                    const int base = u * use_bits + k * m;
                    for (int j = 0; j < m; ++j) sym_prior[j] = priors[base + j];
                    const auto lam = bit_llr(y, fl.mu, fl.eff_var, sym_prior, map);
                    for (int j = 0; j < m; ++j) {
                        const double x = bits[base + j] ? -1.0 : 1.0;
                        loss += log2_1p_exp(-lam[j] * x);
                    }
                    count += m;
                }
            }
        }
        const double ie =
            std::min(1.0, std::max(0.0, 1.0 - loss / static_cast<double>(count)));
        curve.points.emplace_back(ia_grid[g], ie);
    }
    return curve;
}

void write_exit_csv(std::ostream& out, const std::vector<ExitCurve>& curves) {
    out << "role,name,context_db,i_a,i_e\n";
    for (const auto& c : curves)
        for (const auto& [ia, ie] : c.points)
            out << c.role << ',' << c.name << ',' << fmt_g(c.context_db) << ','
                << fmt_g(ia) << ',' << fmt_g(ie) << '\n';
}

}  // namespace kabp
