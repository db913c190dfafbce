#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

// LDPC codes as bipartite Tanner graphs: PEG construction, girth and cycle
// census, systematic encoding, syndrome computation, alist import/export.
// All types are immutable after construction and safe to share across
// concurrent workers.

namespace kabp {

// Girth marker for cycle-free graphs.
inline constexpr int kInfiniteGirth = std::numeric_limits<int>::max();

/// Sparse parity-check matrix held as paired row/column adjacency lists.
/// rows[i] are the variable nodes of check i, cols[j] the check nodes of
/// variable j; both sides sorted ascending and describing the same edge set.
struct ParityCheckMatrix {
    int M = 0;  // check nodes (rows)
    int N = 0;  // variable nodes (columns)
    std::vector<std::vector<int>> rows;
    std::vector<std::vector<int>> cols;

    static ParityCheckMatrix from_rows(int M, int N,
                                       std::vector<std::vector<int>> rows);

    long edge_count() const;
    int max_row_degree() const;
    int max_col_degree() const;

    /// Throws std::invalid_argument on duplicate edges, out-of-range
    /// indices, or row/column inconsistency.
    void validate() const;
};

/// Edge-perspective degree distributions: variable_poly[d] is the fraction
/// of edges incident to degree-d variable nodes (coefficient of x^{d-1}).
struct DegreeProfile {
    std::vector<double> variable_poly;
    std::vector<double> check_poly;
    double mean_variable_degree = 0.0;
    double mean_check_degree = 0.0;
};

/// Girth and the number of shortest cycles through each check node.
struct CycleCensus {
    int girth = kInfiniteGirth;
    std::vector<long> per_check_counts;
    double mu_g = 0.0;
};

// --- construction ---

/// Progressive edge growth: places the edges of each variable node in turn,
/// each time connecting to a check node as far as possible from the node's
/// current tree. Deterministic for a fixed seed; ties between equally good
/// candidates are broken by a seeded draw.
///
/// tier_cap limits the BFS lookahead to that many check tiers (tier t =
/// bipartite distance 2t-1); checks beyond the horizon count as unreached.
/// Connecting at tier t closes a 2t-cycle, so tier_cap = 2 avoids 4-cycles
/// but not 6-cycles, giving the classic girth-6 construction at rate-1/2
/// density. 0 means unlimited lookahead (best achievable girth).
ParityCheckMatrix peg_construct(int N, int M,
                                const std::vector<int>& variable_degrees,
                                std::uint64_t seed, int tier_cap = 0);

// --- inspection ---

DegreeProfile degree_profile(const ParityCheckMatrix& H);

/// n_bar = 1 / integral_0^1 v(x) dx, evaluated from the edge-perspective
/// polynomial coefficients.
double average_connectivity(const DegreeProfile& profile);

/// Harmonic route: for a profile derived from a graph the integral telescopes
/// to N/E, so the connectivity equals the mean variable degree E/N. Exact in
/// floating point whenever E/N is.
double average_connectivity(const ParityCheckMatrix& H);

/// Length of the shortest cycle in the Tanner graph (always even), or
/// kInfiniteGirth for a tree.
int girth(const ParityCheckMatrix& H);

/// Counts the distinct length-g simple cycles through each check node,
/// g being the girth. A cycle contributes once to every check it traverses.
CycleCensus count_girth_cycles(const ParityCheckMatrix& H);

/// Exhaustive enumeration of simple cycles of the given length, returning
/// per-check counts. Test oracle; refuses graphs with N + M > 64.
std::vector<long> dfs_cycle_oracle(const ParityCheckMatrix& H, int length);

// --- encoding ---

/// Systematic encoder derived from H by GF(2) Gauss-Jordan elimination with
/// column pivoting. Holds the column permutation and dense parity rows.
class Encoder {
  public:
    explicit Encoder(const ParityCheckMatrix& H);

    int n() const { return n_; }
    int k() const { return k_; }
    /// Effective rank of H; k = n - rank.
    int rank() const { return rank_; }

    /// Positions of the information bits within the codeword.
    const std::vector<int>& info_positions() const { return info_pos_; }

    std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& info) const;

    /// Reads the information bits back out of a codeword.
    std::vector<std::uint8_t> extract_info(const std::vector<std::uint8_t>& word) const;

  private:
    int n_, k_, rank_;
    std::vector<int> parity_pos_;             // codeword position of parity bit r
    std::vector<int> info_pos_;               // codeword position of info bit i
    std::vector<std::vector<std::uint64_t>> parity_rows_;  // k-bit masks per parity
};

inline Encoder build_encoder(const ParityCheckMatrix& H) { return Encoder(H); }

/// H * bits^T over GF(2). Throws on length mismatch.
std::vector<std::uint8_t> syndrome(const ParityCheckMatrix& H,
                                   const std::vector<std::uint8_t>& bits);

bool syndrome_is_zero(const ParityCheckMatrix& H,
                      const std::vector<std::uint8_t>& bits);

// --- interchange ---

/// alist text format: "N M", max degrees, per-node degree lists, then
/// 1-based adjacency lists zero-padded to the max degree.
void write_alist(const ParityCheckMatrix& H, std::ostream& out);
void write_alist_file(const ParityCheckMatrix& H, const std::string& path);
ParityCheckMatrix read_alist(std::istream& in);
ParityCheckMatrix read_alist_file(const std::string& path);

/// Stable FNV-1a digest of (M, N, edge set); used to tie serialized
/// reweighting vectors to the code they were designed for.
std::uint64_t code_hash(const ParityCheckMatrix& H);

}  // namespace kabp
