#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kabp/ldpc_graph.hpp"
#include "kabp/rw_decoder.hpp"

// Offline construction of reweighting vectors. Three designers share the
// decode engine:
//   urw:  one constant 2/n_D for every check.
//   ckar: checks on fewer-than-average shortest cycles keep full weight,
//         the rest fall back to the urw constant.
//   ekar: expansion into cycle-poor subgraphs, then per-subgraph
//         conditional-gradient optimization of rho against a mutual-
//         information objective, merged over the cover.

namespace kabp {

ReweightVector urw_rho(const ParityCheckMatrix& H);

ReweightVector ckar_rho(const CycleCensus& census, const ParityCheckMatrix& H);

/// A connected piece of the parent Tanner graph grown from one root check.
/// Local check/variable indices are positions in check_ids/var_ids (both
/// sorted ascending by global id); `local` is the subgraph's own matrix in
/// those local indices.
struct Subgraph {
    int root = 0;
    std::vector<int> check_ids;
    std::vector<int> var_ids;
    std::vector<std::pair<int, int>> edges;  // (global check, global variable)
    ParityCheckMatrix local;
    int local_girth = kInfiniteGirth;

    int local_check(int global_id) const;  // -1 when absent
};

struct SubgraphSet {
    std::vector<Subgraph> subgraphs;
    int requested = 0;  // extra subgraphs beyond this were added for coverage
};

/// Breadth-first expansion from seeded root checks, d_max check layers deep.
/// An edge is skipped when it would close a cycle of length <= the parent
/// girth inside the subgraph, so every subgraph's local girth exceeds the
/// parent's. Checks left with fewer than two local edges are dropped (the
/// decode engine rejects them). Roots are added past T until every check is
/// covered.
SubgraphSet expand_subgraphs(const ParityCheckMatrix& H, int d_max, int T,
                             std::uint64_t seed);

/// Consistent-Gaussian LLR inputs (mean sigma^2/2, variance sigma^2,
/// all-zero codeword), the offline stand-in for detector output.
std::vector<LlrSequence> design_ensemble(int n_vars, int size, double sigma,
                                         std::uint64_t seed);

/// Ensemble average of the converged decode state on one subgraph.
struct SubgraphBeliefs {
    LlrSequence beliefs;         // local variable order
    std::vector<double> psi;     // local engine edge order (check-major)
    std::vector<double> lambda;
    int nonconverged = 0;        // ensemble members that hit the iteration cap
};

SubgraphBeliefs subgraph_beliefs(const Subgraph& sub,
                                 const std::vector<double>& rho_t,
                                 const std::vector<LlrSequence>& ensemble,
                                 int iter_cap, double tol);

/// Per-check mutual information, in nats: KL divergence between the parity-
/// constrained joint implied by the incoming messages and the product of its
/// single-variable marginals, enumerated over the 2^(d-1) even-parity
/// configurations. Refuses local check degree > 20.
std::vector<double> mutual_information(const Subgraph& sub,
                                       const SubgraphBeliefs& state);

/// Vertex of the surrogate polytope: greedy maximum-weight acyclic check
/// subset (union-find over variables), weights descending, ties to the lower
/// local index. Accepted checks get 1, rejected get rho_floor.
std::vector<double> linear_subproblem(const std::vector<double>& info,
                                      const Subgraph& sub, double rho_floor);

struct EkarConfig {
    int d_max = 4;
    int T = 20;
    int recursions = 600;
    double tol = 1e-6;        // stop when upper - lower < tol
    int grid = 10;            // line-search steps over [0, 1]
    int ensemble_size = 32;
    double design_sigma = 2.0;
    int bp_iter_cap = 50;
    double bp_tol = 1e-6;
    double rho_floor = 0.1;
    bool merge_by_validation = false;  // default: lowest final objective wins
    int validation_words = 10;         // only with merge_by_validation
    double validation_sigma = 0.8;

    std::string digest() const;  // one-line summary for rho-file headers
};

/// Grid search for the step size: f(rho_r + a (rho_star - rho_r)) evaluated
/// at a in {0, 1/grid, ..., 1}; smallest minimizing a wins. f at a=0 can be
/// passed in to skip one evaluation; the chosen point's objective and
/// mutual-information vector are returned through the out parameters when
/// non-null.
double line_search_alpha(const Subgraph& sub, const std::vector<double>& rho_r,
                         const std::vector<double>& rho_star,
                         const std::vector<LlrSequence>& ensemble,
                         const EkarConfig& cfg, const double* f_at_zero,
                         const std::vector<double>* info_at_zero,
                         double* f_out, std::vector<double>* info_out);

/// One conditional-gradient run over a subgraph.
struct FapOptimState {
    std::vector<double> rho;     // final iterate, local check order
    double objective = 0.0;      // f at the final iterate
    double lower = 0.0;          // final z
    int recursions = 0;          // recursions actually performed
    bool converged = false;      // gap closed below tol
    int nonconverged_runs = 0;   // decode runs that hit the iteration cap
    std::vector<double> upper_trace;  // f(rho_r) per recursion
    std::vector<double> lower_trace;  // z after the recursion's update
};

FapOptimState optimize_subgraph_rho(const Subgraph& sub, const EkarConfig& cfg,
                                    std::uint64_t seed);

/// Per-check merge over the cover: the covering subgraph with the lowest
/// objective wins, ties to the lower subgraph index.
ReweightVector merge_rho(const SubgraphSet& set,
                         const std::vector<std::vector<double>>& per_subgraph,
                         const std::vector<double>& objectives);

struct EkarResult {
    ReweightVector rho;
    SubgraphSet set;
    std::vector<FapOptimState> states;
    std::vector<double> merge_objectives;
};

/// The full pipeline: expansion, per-subgraph optimization, merge.
EkarResult ekar_rho(const ParityCheckMatrix& H, const EkarConfig& cfg,
                    std::uint64_t seed);

// --- serialization ---

struct RhoFile {
    ReweightVector rho;
    std::uint64_t code_hash = 0;
    std::string designer;
    std::string config;
};

void write_rho(std::ostream& out, const ReweightVector& rho,
               std::uint64_t code_hash, const std::string& designer,
               const std::string& config);
void write_rho_file(const std::string& path, const ReweightVector& rho,
                    std::uint64_t code_hash, const std::string& designer,
                    const std::string& config);
RhoFile read_rho(std::istream& in);
RhoFile read_rho_file(const std::string& path);

}  // namespace kabp
