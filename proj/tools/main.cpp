// Command-line driver: code construction, weight design, BER sweeps and
// EXIT curves.  Exit status 0 on completed runs, 1 on configuration errors,
// 2 on unexpected runtime failures.
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kabp/idd_engine.hpp"
#include "kabp/ldpc_graph.hpp"
#include "kabp/rho_designer.hpp"
#include "kabp/rw_decoder.hpp"
#include "kabp/sim_harness.hpp"

namespace {

kabp::ParityCheckMatrix load_code(const kabp::SimConfig& cfg) {
    if (!cfg.alist.empty()) return kabp::read_alist_file(cfg.alist);
    return kabp::peg_construct(cfg.n, cfg.m, std::vector<int>(cfg.n, cfg.degree),
                               cfg.code_seed, cfg.tier_cap);
}

double mean_rho(const kabp::ReweightVector& rho) {
    double s = 0.0;
    for (double v : rho.rho) s += v;
    return rho.rho.empty() ? 0.0 : s / static_cast<double>(rho.rho.size());
}

int run_construct(int n, int m, int degree, std::uint64_t seed, int tier_cap,
                  const std::string& out) {
    const auto H =
        kabp::peg_construct(n, m, std::vector<int>(n, degree), seed, tier_cap);
    kabp::write_alist_file(H, out);
    const auto enc = kabp::build_encoder(H);
    std::printf("code: N=%d M=%d K=%d girth=%d hash=%016llx -> %s\n", H.N, H.M,
                enc.k(), kabp::girth(H),
                static_cast<unsigned long long>(kabp::code_hash(H)), out.c_str());
    return 0;
}

int run_design(const std::string& method, const std::string& code_path,
               const std::string& out, const kabp::EkarConfig& ecfg,
               std::uint64_t seed) {
    const auto H = kabp::read_alist_file(code_path);
    kabp::ReweightVector rho;
    std::string config_note;
    if (method == "urw") {
        rho = kabp::urw_rho(H);
        config_note = "closed-form";
    } else if (method == "ckar") {
        rho = kabp::ckar_rho(kabp::count_girth_cycles(H), H);
        config_note = "girth-cycle census";
    } else if (method == "ekar") {
        const auto res = kabp::ekar_rho(H, ecfg, seed);
        rho = res.rho;
        config_note = ecfg.digest() + " seed=" + std::to_string(seed);
        int nonconverged = 0;
        for (const auto& st : res.states) nonconverged += st.converged ? 0 : 1;
        std::printf("design: %zu subgraphs, %d stopped on the recursion cap\n",
                    res.states.size(), nonconverged);
    } else {
        throw std::invalid_argument("unknown design method: " + method);
    }
    kabp::write_rho_file(out, rho, kabp::code_hash(H), method, config_note);
    std::printf("rho: method=%s M=%d mean=%.6f hash=%016llx -> %s\n",
                method.c_str(), H.M, mean_rho(rho),
                static_cast<unsigned long long>(kabp::rho_hash(rho)), out.c_str());
    return 0;
}

int run_ber(const kabp::SimConfig& cfg) {
    if (cfg.out.empty())
        throw std::invalid_argument("config: no output path (set 'out' or pass --out)");
    const auto H = load_code(cfg);
    const auto enc = kabp::build_encoder(H);

    const auto t0 = std::chrono::steady_clock::now();
    const auto records = kabp::ber_sweep(H, enc, cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream out(cfg.out);
    if (!out) throw std::runtime_error("cannot write " + cfg.out);
    kabp::write_ber_csv(out, records);

    std::map<std::string, kabp::RhoSource> sources;
    for (const auto& name : cfg.decoders)
        sources.emplace(name, kabp::resolve_rho(name, H, cfg));
    kabp::write_manifest(cfg.out + ".manifest.json", cfg, kabp::code_hash(H),
                         sources, wall, records.size());

    long frames = 0;
    for (const auto& r : records)
        if (r.outer_iter == 1) frames += r.frames;
    std::printf("ber: %zu records, %ld frames, %.1fs -> %s\n", records.size(),
                frames, wall, cfg.out.c_str());
    return 0;
}

int run_exit(const kabp::SimConfig& cfg, std::uint64_t seed) {
    if (cfg.out.empty())
        throw std::invalid_argument("config: no output path (set 'out' or pass --out)");
    cfg.validate_exit();
    const auto H = load_code(cfg);
    const auto enc = kabp::build_encoder(H);

    std::vector<kabp::ExitCurve> curves;
    curves.push_back(kabp::exit_detector_curve(H, enc, cfg, cfg.exit_grid, seed));
    for (const auto& name : cfg.decoders) {
        const auto src = kabp::resolve_rho(name, H, cfg);
        curves.push_back(kabp::exit_decoder_curve(H, enc, src.rho, name,
                                                  cfg.inner_iters, cfg.exit_grid,
                                                  cfg.exit_words, seed));
    }
    std::ofstream out(cfg.out);
    if (!out) throw std::runtime_error("cannot write " + cfg.out);
    kabp::write_exit_csv(out, curves);
    std::printf("exit: %zu curves -> %s\n", curves.size(), cfg.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LDPC/MIMO simulation laboratory"};
    app.require_subcommand(1);

    auto* construct = app.add_subcommand("construct", "build a code and write it");
    int c_n = 1000, c_m = 500, c_degree = 3, c_tier_cap = 0;
    std::uint64_t c_seed = 1;
    std::string c_out;
    construct->add_option("--n", c_n, "block length");
    construct->add_option("--m", c_m, "check count");
    construct->add_option("--degree", c_degree, "variable degree");
    construct->add_option("--seed", c_seed, "construction seed");
    construct->add_option("--tier-cap", c_tier_cap,
                          "lookahead horizon in check tiers (0 = unlimited)");
    construct->add_option("--out", c_out, "output file")->required();

    auto* design = app.add_subcommand("design-rho", "design decoder weights");
    std::string d_method, d_code, d_out;
    std::uint64_t d_seed = 1;
    kabp::EkarConfig ecfg;
    design->add_option("--method", d_method, "urw, ckar, or ekar")->required();
    design->add_option("--code", d_code, "code file")->required();
    design->add_option("--out", d_out, "output weight file")->required();
    design->add_option("--seed", d_seed, "design seed");
    design->add_option("--d-max", ecfg.d_max, "expansion depth");
    design->add_option("--subgraphs", ecfg.T, "subgraphs to draw");
    design->add_option("--recursions", ecfg.recursions, "optimizer recursion cap");
    design->add_option("--tol", ecfg.tol, "optimizer gap tolerance");
    design->add_option("--grid", ecfg.grid, "line-search grid");
    design->add_option("--ensemble", ecfg.ensemble_size, "objective ensemble size");
    design->add_option("--design-sigma", ecfg.design_sigma, "design noise sigma");
    design->add_option("--bp-iters", ecfg.bp_iter_cap, "decoder cap inside the objective");
    design->add_option("--rho-floor", ecfg.rho_floor, "smallest admissible weight");
    design->add_flag("--merge-validation", ecfg.merge_by_validation,
                     "merge by validation error instead of objective");

    auto* ber = app.add_subcommand("ber", "run a BER sweep");
    std::string b_config, b_out;
    std::uint64_t b_seed = 0;
    int b_workers = 0;
    ber->add_option("--config", b_config, "sweep config file")->required();
    ber->add_option("--seed", b_seed, "override master seed");
    ber->add_option("--workers", b_workers, "override worker count");
    ber->add_option("--out", b_out, "override output path");

    auto* exit_cmd = app.add_subcommand("exit", "measure EXIT curves");
    std::string x_config, x_out;
    std::uint64_t x_seed = 1;
    exit_cmd->add_option("--config", x_config, "config file")->required();
    exit_cmd->add_option("--seed", x_seed, "measurement seed");
    exit_cmd->add_option("--out", x_out, "override output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (construct->parsed())
            return run_construct(c_n, c_m, c_degree, c_seed, c_tier_cap, c_out);
        if (design->parsed())
            return run_design(d_method, d_code, d_out, ecfg, d_seed);
        if (ber->parsed()) {
            kabp::SimConfig cfg = kabp::parse_sim_config_file(b_config);
            if (ber->count("--seed")) cfg.master_seed = b_seed;
            if (ber->count("--workers")) cfg.workers = b_workers;
            if (!b_out.empty()) cfg.out = b_out;
            return run_ber(cfg);
        }
        if (exit_cmd->parsed()) {
            kabp::SimConfig cfg = kabp::parse_sim_config_file(x_config);
            if (!x_out.empty()) cfg.out = x_out;
            return run_exit(cfg, x_seed);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
