#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "kabp/rho_designer.hpp"
#include "kabp/rng.hpp"
#include "kabp/sim_harness.hpp"

using namespace kabp;

namespace {

struct SmallSetup {
    ParityCheckMatrix H;
    Encoder enc;
};

SmallSetup small_setup(int n = 48, int m = 24, std::uint64_t seed = 2) {
    ParityCheckMatrix H = peg_construct(n, m, std::vector<int>(n, 3), seed);
    Encoder enc = build_encoder(H);
    return SmallSetup{std::move(H), std::move(enc)};
}

SimConfig small_sweep_config() {
    SimConfig cfg;
    cfg.n = 48;
    cfg.m = 24;
    cfg.decoders = {"standard"};
    cfg.snr_db = {2.0, 4.0};
    cfg.min_frame_errors = 8;
    cfg.max_frames = 200;
    cfg.master_seed = 7;
    cfg.outer_iters = 2;
    cfg.inner_iters = 10;
    cfg.n_rx = 2;
    cfg.n_tx = 2;
    return cfg;
}

std::string csv_for(const std::vector<BerRecord>& records) {
    std::ostringstream os;
    write_ber_csv(os, records);
    return os.str();
}

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream in(
        "# sweep setup\n"
        "n = 96\n"
        "m = 48\n"
        "degree = 3\n"
        "code_seed = 11\n"
        "decoders = standard, urw, ekar\n"
        "rho_ekar = designs/ekar.rho\n"
        "snr_db = 1.0, 1.5, 2.0\n"
        "min_frame_errors = 50   # inline comment\n"
        "max_frames = 5000\n"
        "seed = 42\n"
        "workers = 4\n"
        "out = sweep.csv\n"
        "outer_iters = 2\n"
        "inner_iters = 20\n"
        "n_rx = 2\n"
        "n_tx = 2\n"
        "quasi_static = 1\n"
        "exit_ebn0_db = 3.5\n"
        "\n");
    const SimConfig cfg = parse_sim_config(in);
    CHECK(cfg.n == 96);
    CHECK(cfg.m == 48);
    CHECK(cfg.code_seed == 11);
    REQUIRE(cfg.decoders.size() == 3);
    CHECK(cfg.decoders[1] == "urw");
    REQUIRE(cfg.rho_files.count("ekar") == 1);
    CHECK(cfg.rho_files.at("ekar") == "designs/ekar.rho");
    REQUIRE(cfg.snr_db.size() == 3);
    CHECK(cfg.snr_db[2] == doctest::Approx(2.0));
    CHECK(cfg.min_frame_errors == 50);
    CHECK(cfg.max_frames == 5000);
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.workers == 4);
    CHECK(cfg.out == "sweep.csv");
    CHECK(cfg.quasi_static);
    CHECK(cfg.exit_ebn0_db == doctest::Approx(3.5));
    cfg.validate_sweep();  // must not throw

    std::istringstream empty("");
    const SimConfig defaults = parse_sim_config(empty);
    CHECK(defaults.n == 1000);
    CHECK(defaults.workers == 1);
    CHECK(defaults.decoders == std::vector<std::string>{"standard"});

    std::istringstream bad_key("frobnicate = 1\n");
    CHECK_THROWS_AS(parse_sim_config(bad_key), std::invalid_argument);
    std::istringstream bad_int("n = twelve\n");
    CHECK_THROWS_AS(parse_sim_config(bad_int), std::invalid_argument);
    std::istringstream no_eq("n 12\n");
    CHECK_THROWS_AS(parse_sim_config(no_eq), std::invalid_argument);
    std::istringstream bad_flag("quasi_static = maybe\n");
    CHECK_THROWS_AS(parse_sim_config(bad_flag), std::invalid_argument);
}

TEST_CASE("config validation") {
    SimConfig cfg = small_sweep_config();
    cfg.validate_sweep();

    SimConfig no_snr = cfg;
    no_snr.snr_db.clear();
    CHECK_THROWS_AS(no_snr.validate_sweep(), std::invalid_argument);

    SimConfig dup = cfg;
    dup.decoders = {"standard", "standard"};
    CHECK_THROWS_AS(dup.validate_sweep(), std::invalid_argument);

    SimConfig unknown = cfg;
    unknown.decoders = {"turbo"};
    CHECK_THROWS_AS(unknown.validate_sweep(), std::invalid_argument);

    SimConfig bad_workers = cfg;
    bad_workers.workers = 0;
    CHECK_THROWS_AS(bad_workers.validate_sweep(), std::invalid_argument);

    SimConfig bad_stop = cfg;
    bad_stop.min_frame_errors = 0;
    CHECK_THROWS_AS(bad_stop.validate_sweep(), std::invalid_argument);

    SimConfig bad_grid = cfg;
    bad_grid.exit_grid = {0.5, 1.5};
    CHECK_THROWS_AS(bad_grid.validate_exit(), std::invalid_argument);
}

TEST_CASE("j function") {
    CHECK(j_function(0.0) == 0.0);
    CHECK(j_function(1e-9) == 0.0);

    // Strictly increasing on a coarse grid, limits correct.
    double prev = 0.0;
    for (double sigma : {0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
        const double v = j_function(sigma);
        CHECK(v > prev);
        CHECK(v < 1.0);
        prev = v;
    }
    CHECK(j_function(kJSigmaMax) == doctest::Approx(1.0).epsilon(1e-9));

    // Inverse round-trips through the quadrature.
    for (double i : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double sigma = j_inverse(i);
        CHECK(j_function(sigma) == doctest::Approx(i).epsilon(1e-7));
    }
    CHECK(j_inverse(0.0) == 0.0);
    CHECK(j_inverse(-1.0) == 0.0);
    CHECK(j_inverse(1.0) == kJSigmaMax);
}

TEST_CASE("mutual information estimate") {
    // All-zero LLRs carry no information: exactly 1 - log2(2) = 0.
    LlrSequence zero(100, 0.0);
    std::vector<std::uint8_t> bits(100, 0);
    CHECK(mutual_info_estimate(zero, bits) == 0.0);

    // Saturated, correct-sign LLRs are certainty.
    LlrSequence sat(64);
    std::vector<std::uint8_t> mixed(64);
    for (int i = 0; i < 64; ++i) {
        mixed[i] = (i % 2) ? 1 : 0;
        sat[i] = mixed[i] ? -kLlrClip : kLlrClip;
    }
    CHECK(mutual_info_estimate(sat, mixed) == doctest::Approx(1.0).epsilon(1e-12));

    // Saturated wrong-sign LLRs clamp at zero.
    for (int i = 0; i < 64; ++i) sat[i] = -sat[i];
    CHECK(mutual_info_estimate(sat, mixed) == 0.0);

    CHECK_THROWS_AS(mutual_info_estimate({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(mutual_info_estimate({1.0}, {0, 1}), std::invalid_argument);

    // Consistent-Gaussian samples at sigma = 2 reproduce the quadrature value.
    const double sigma = 2.0;
    Rng rng(99);
    const int n = 200000;
    LlrSequence llrs(n);
    std::vector<std::uint8_t> b(n);
    for (int i = 0; i < n; ++i) {
        b[i] = rng.coin() ? 1 : 0;
        const double x = b[i] ? -1.0 : 1.0;
        llrs[i] = x * 0.5 * sigma * sigma + sigma * rng.gaussian();
    }
    CHECK(mutual_info_estimate(llrs, b) ==
          doctest::Approx(j_function(sigma)).epsilon(0.01));
}

TEST_CASE("rho resolution") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();

    const auto std_src = resolve_rho("standard", s.H, cfg);
    CHECK(std_src.origin == "builtin");
    for (double v : std_src.rho.rho) CHECK(v == 1.0);

    const auto urw_src = resolve_rho("urw", s.H, cfg);
    CHECK(urw_src.origin == "closed-form");
    CHECK(urw_src.rho.rho == urw_rho(s.H).rho);
    CHECK(urw_src.hash == rho_hash(urw_rho(s.H)));

    const auto ckar_src = resolve_rho("ckar", s.H, cfg);
    CHECK(ckar_src.origin == "census");
    CHECK(ckar_src.rho.rho == ckar_rho(count_girth_cycles(s.H), s.H).rho);

    // ekar must come from a designed file.
    CHECK_THROWS_AS(resolve_rho("ekar", s.H, cfg), std::invalid_argument);

    // File round-trip, including the code-hash guard.
    const std::string path = "test_rho_resolution.rho";
    write_rho_file(path, urw_rho(s.H), code_hash(s.H), "urw", "test");
    cfg.rho_files["ekar"] = path;
    const auto file_src = resolve_rho("ekar", s.H, cfg);
    CHECK(file_src.origin == path);
    CHECK(file_src.rho.rho == urw_rho(s.H).rho);

    auto other = small_setup(48, 24, 9);
    CHECK_THROWS_AS(resolve_rho("ekar", other.H, cfg), std::invalid_argument);

    cfg.rho_files["standard"] = path;
    CHECK_THROWS_AS(resolve_rho("standard", s.H, cfg), std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("ber sweep is worker-count independent") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();

    cfg.workers = 1;
    const auto one = ber_sweep(s.H, s.enc, cfg);
    cfg.workers = 3;
    const auto three = ber_sweep(s.H, s.enc, cfg);
    cfg.workers = 8;
    const auto eight = ber_sweep(s.H, s.enc, cfg);

    REQUIRE(one.size() == cfg.snr_db.size() * cfg.outer_iters);
    REQUIRE(three.size() == one.size());
    REQUIRE(eight.size() == one.size());
    const std::string csv1 = csv_for(one);
    CHECK(csv1 == csv_for(three));
    CHECK(csv1 == csv_for(eight));

    // Something was actually simulated at the noisier point.
    CHECK(one[0].frames > 0);
    CHECK(one[0].bit_errors > 0);
}

TEST_CASE("ber sweep record semantics") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();
    cfg.decoders = {"standard", "urw"};
    cfg.snr_db = {2.0};
    cfg.min_frame_errors = 5;
    cfg.max_frames = 120;
    const auto recs = ber_sweep(s.H, s.enc, cfg);
    REQUIRE(recs.size() == 2 * cfg.outer_iters);

    // snr-major, decoder order as configured, outer ascending.
    CHECK(recs[0].decoder == "standard");
    CHECK(recs[0].outer_iter == 1);
    CHECK(recs[1].decoder == "standard");
    CHECK(recs[1].outer_iter == 2);
    CHECK(recs[2].decoder == "urw");

    const long K = s.enc.k();
    for (const auto& r : recs) {
        CHECK(r.frames >= 1);
        CHECK(r.frames <= cfg.max_frames);
        CHECK(r.bit_errors <= r.frames * K);
        CHECK(r.frame_errors <= r.frames);
        CHECK(r.ber == doctest::Approx(static_cast<double>(r.bit_errors) /
                                       (static_cast<double>(r.frames) * K)));
        CHECK(r.fer == doctest::Approx(static_cast<double>(r.frame_errors) /
                                       static_cast<double>(r.frames)));
    }

    // Both decoders saw identical frame seeds, so frame counts follow the
    // same batch grid.
    CHECK(recs[0].frames % 120 == 0);
}

TEST_CASE("ber sweep stop rule") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();
    cfg.snr_db = {300.0};  // noiseless: no errors, must run out the budget
    cfg.max_frames = 100;
    const auto recs = ber_sweep(s.H, s.enc, cfg);
    for (const auto& r : recs) {
        CHECK(r.frames == 100);
        CHECK(r.bit_errors == 0);
        CHECK(r.frame_errors == 0);
        CHECK(r.ber == 0.0);
        CHECK(r.fer == 0.0);
    }

    // A reachable error target stops before the frame budget.
    cfg.snr_db = {0.0};
    cfg.min_frame_errors = 3;
    cfg.max_frames = 100000;
    const auto low = ber_sweep(s.H, s.enc, cfg);
    CHECK(low[0].frames < cfg.max_frames);
    for (const auto& r : low) CHECK(r.frame_errors >= 3);
}

TEST_CASE("ber csv format") {
    std::vector<BerRecord> recs(1);
    recs[0].snr_db = 2.5;
    recs[0].decoder = "urw";
    recs[0].outer_iter = 3;
    recs[0].frames = 1000;
    recs[0].bit_errors = 123;
    recs[0].frame_errors = 45;
    recs[0].ber = 123.0 / (1000.0 * 24.0);
    recs[0].fer = 0.045;
    std::ostringstream os;
    write_ber_csv(os, recs);
    std::istringstream in(os.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "snr_db,decoder,outer_iter,frames,bit_errors,frame_errors,ber,fer");
    REQUIRE(std::getline(in, line));
    CHECK(line.rfind("2.5,urw,3,1000,123,45,", 0) == 0);
    CHECK(!std::getline(in, line));
}

TEST_CASE("run manifest") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();
    cfg.decoders = {"standard", "urw"};
    std::map<std::string, RhoSource> sources;
    for (const auto& name : cfg.decoders)
        sources.emplace(name, resolve_rho(name, s.H, cfg));

    const std::string path = "test_manifest.json";
    write_manifest(path, cfg, code_hash(s.H), sources, 1.25, 8);
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    CHECK(j.at("config").at("n") == 48);
    CHECK(j.at("config").at("decoders").size() == 2);
    CHECK(j.at("config_digest").get<std::string>().size() == 16);
    CHECK(j.at("code_hash").get<std::string>().size() == 16);
    CHECK(j.at("rho").at("urw").at("origin") == "closed-form");
    CHECK(j.at("records") == 8);
    CHECK(j.at("wall_seconds").get<double>() == doctest::Approx(1.25));

    // Same config gives the same digest; a different one does not.
    write_manifest(path, cfg, code_hash(s.H), sources, 9.0, 8);
    std::ifstream in2(path);
    nlohmann::json j2;
    in2 >> j2;
    CHECK(j2.at("config_digest") == j.at("config_digest"));
    SimConfig other = cfg;
    other.master_seed += 1;
    write_manifest(path, other, code_hash(s.H), sources, 9.0, 8);
    std::ifstream in3(path);
    nlohmann::json j3;
    in3 >> j3;
    CHECK(j3.at("config_digest") != j.at("config_digest"));
    std::remove(path.c_str());
}

TEST_CASE("decoder exit curve") {
    auto s = small_setup(96, 48, 3);
    const auto rho = ReweightVector::ones(s.H.M);
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto curve =
        exit_decoder_curve(s.H, s.enc, rho, "standard", 10, grid, 110, 5);

    CHECK(curve.role == "decoder");
    CHECK(curve.name == "standard");
    REQUIRE(curve.points.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(curve.points[i].first == doctest::Approx(grid[i]));

    // Endpoints are exact: no prior information in, none out; saturated
    // priors in, certainty out.
    CHECK(curve.points.front().second == 0.0);
    CHECK(curve.points.back().second == 1.0);

    // Monotone within ensemble noise, and clearly increasing over the range.
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].second >= curve.points[i - 1].second - 0.03);
    CHECK(curve.points[2].second > curve.points[0].second);

    CHECK_THROWS_AS(exit_decoder_curve(s.H, s.enc, rho, "standard", 0, grid, 10, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(exit_decoder_curve(s.H, s.enc, ReweightVector::ones(3),
                                       "standard", 10, grid, 10, 5),
                    std::invalid_argument);
}

TEST_CASE("detector exit curve") {
    auto s = small_setup();
    SimConfig cfg = small_sweep_config();
    cfg.exit_ebn0_db = 4.0;
    cfg.exit_words = 60;
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto curve = exit_detector_curve(s.H, s.enc, cfg, grid, 17);

    CHECK(curve.role == "detector");
    CHECK(curve.context_db == doctest::Approx(4.0));
    REQUIRE(curve.points.size() == 3);
    for (const auto& [ia, ie] : curve.points) {
        CHECK(ie >= 0.0);
        CHECK(ie <= 1.0);
    }
    // Better priors help the canceller, but the channel keeps the output
    // strictly uncertain even with perfect priors.
    CHECK(curve.points.back().second > curve.points.front().second);
    CHECK(curve.points.back().second < 1.0);

    // Deterministic in the seed.
    const auto again = exit_detector_curve(s.H, s.enc, cfg, grid, 17);
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        CHECK(curve.points[i].second == again.points[i].second);

    SimConfig bad = cfg;
    bad.n_tx = 5;  // 48 bits do not split into 5-stream uses
    bad.n_rx = 5;
    CHECK_THROWS_AS(exit_detector_curve(s.H, s.enc, bad, grid, 17),
                    std::invalid_argument);
}

TEST_CASE("exit csv format") {
    ExitCurve c;
    c.role = "decoder";
    c.name = "urw";
    c.context_db = 0.0;
    c.points = {{0.0, 0.0}, {0.5, 0.625}, {1.0, 1.0}};
    std::ostringstream os;
    write_exit_csv(os, {c});
    std::istringstream in(os.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "role,name,context_db,i_a,i_e");
    REQUIRE(std::getline(in, line));
    CHECK(line == "decoder,urw,0,0,0");
    REQUIRE(std::getline(in, line));
    CHECK(line == "decoder,urw,0,0.5,0.625");
}
