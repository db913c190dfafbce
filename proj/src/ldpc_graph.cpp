#include "kabp/ldpc_graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kabp/rng.hpp"

namespace kabp {

ParityCheckMatrix ParityCheckMatrix::from_rows(int M, int N,
                                               std::vector<std::vector<int>> rows) {
    ParityCheckMatrix H;
    H.M = M;
    H.N = N;
    H.rows = std::move(rows);
    if (static_cast<int>(H.rows.size()) != M)
        throw std::invalid_argument("row count does not match M");
    H.cols.assign(N, {});
    for (int i = 0; i < M; ++i) {
        std::sort(H.rows[i].begin(), H.rows[i].end());
        for (int j : H.rows[i]) {
            if (j < 0 || j >= N)
                throw std::invalid_argument("variable index out of range");
            H.cols[j].push_back(i);
        }
    }
    for (auto& c : H.cols) std::sort(c.begin(), c.end());
    H.validate();
    return H;
}

long ParityCheckMatrix::edge_count() const {
    long e = 0;
    for (const auto& r : rows) e += static_cast<long>(r.size());
    return e;
}

int ParityCheckMatrix::max_row_degree() const {
    std::size_t d = 0;
    for (const auto& r : rows) d = std::max(d, r.size());
    return static_cast<int>(d);
}

int ParityCheckMatrix::max_col_degree() const {
    std::size_t d = 0;
    for (const auto& c : cols) d = std::max(d, c.size());
    return static_cast<int>(d);
}

void ParityCheckMatrix::validate() const {
    if (M < 1 || N < 1) throw std::invalid_argument("empty matrix");
    if (static_cast<int>(rows.size()) != M || static_cast<int>(cols.size()) != N)
        throw std::invalid_argument("adjacency size mismatch");
    long e_rows = 0, e_cols = 0;
    for (int i = 0; i < M; ++i) {
        const auto& r = rows[i];
        e_rows += static_cast<long>(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) {
            if (r[t] < 0 || r[t] >= N)
                throw std::invalid_argument("variable index out of range");
            if (t > 0 && r[t] == r[t - 1])
                throw std::invalid_argument("duplicate edge in row");
            if (t > 0 && r[t] < r[t - 1])
                throw std::invalid_argument("row not sorted");
        }
    }
    for (int j = 0; j < N; ++j) {
        const auto& c = cols[j];
        e_cols += static_cast<long>(c.size());
        for (std::size_t t = 0; t < c.size(); ++t) {
            if (c[t] < 0 || c[t] >= M)
                throw std::invalid_argument("check index out of range");
            if (t > 0 && c[t] <= c[t - 1])
                throw std::invalid_argument("column not sorted or duplicate");
            // transpose consistency
            const auto& r = rows[c[t]];
            if (!std::binary_search(r.begin(), r.end(), j))
                throw std::invalid_argument("rows/cols disagree on edge set");
        }
    }
    if (e_rows != e_cols)
        throw std::invalid_argument("rows/cols edge counts differ");
}

// --- PEG construction ---

namespace {

// BFS tree from variable node j over the partial graph. Records the tier of
// every reached check node (tier 1 = direct neighbors). Stops as soon as no
// new check is reached or every check has been seen.
void peg_bfs(const std::vector<std::vector<int>>& cols,
             const std::vector<std::vector<int>>& rows, int M, int j,
             std::vector<int>& check_tier, int& seen_checks, int& max_tier) {
    check_tier.assign(M, -1);
    seen_checks = 0;
    max_tier = 0;
    std::vector<char> var_seen(cols.size(), 0);
    std::vector<int> var_frontier{j};
    var_seen[j] = 1;
    int tier = 0;
    while (!var_frontier.empty() && seen_checks < M) {
        ++tier;
        std::vector<int> new_checks;
        for (int v : var_frontier) {
            for (int c : cols[v]) {
                if (check_tier[c] < 0) {
                    check_tier[c] = tier;
                    new_checks.push_back(c);
                }
            }
        }
        if (new_checks.empty()) break;
        seen_checks += static_cast<int>(new_checks.size());
        max_tier = tier;
        std::vector<int> next_vars;
        for (int c : new_checks) {
            for (int v : rows[c]) {
                if (!var_seen[v]) {
                    var_seen[v] = 1;
                    next_vars.push_back(v);
                }
            }
        }
        var_frontier.swap(next_vars);
    }
}

int pick_min_degree(const std::vector<int>& candidates,
                    const std::vector<int>& check_deg, Rng& rng) {
    int best_deg = std::numeric_limits<int>::max();
    for (int c : candidates) best_deg = std::min(best_deg, check_deg[c]);
    std::vector<int> ties;
    for (int c : candidates)
        if (check_deg[c] == best_deg) ties.push_back(c);
    return ties[rng.bounded(ties.size())];
}

}  // namespace

ParityCheckMatrix peg_construct(int N, int M,
                                const std::vector<int>& variable_degrees,
                                std::uint64_t seed, int tier_cap) {
    if (static_cast<int>(variable_degrees.size()) != N)
        throw std::invalid_argument("degree sequence length must equal N");
    if (tier_cap < 0) throw std::invalid_argument("tier cap must be >= 0");
    long total = 0;
    for (int d : variable_degrees) {
        if (d < 1) throw std::invalid_argument("variable degree must be >= 1");
        if (d > M) throw std::invalid_argument("variable degree exceeds check count");
        total += d;
    }
    if (total > static_cast<long>(N) * M)
        throw std::invalid_argument("infeasible degree sequence");

    Rng rng(seed);
    std::vector<std::vector<int>> rows(M), cols(N);
    std::vector<int> check_deg(M, 0);
    std::vector<int> check_tier;

    for (int j = 0; j < N; ++j) {
        const int dj = variable_degrees[j];
        for (int k = 0; k < dj; ++k) {
            int chosen;
            if (k == 0) {
                std::vector<int> all(M);
                std::iota(all.begin(), all.end(), 0);
                chosen = pick_min_degree(all, check_deg, rng);
            } else {
                int seen = 0, max_tier = 0;
                peg_bfs(cols, rows, M, j, check_tier, seen, max_tier);
                const int horizon = tier_cap > 0 ? tier_cap
                                                 : std::numeric_limits<int>::max();
                std::vector<int> candidates;
                // Beyond the lookahead horizon counts as unreached.
                for (int c = 0; c < M; ++c)
                    if (check_tier[c] < 0 || check_tier[c] > horizon)
                        candidates.push_back(c);
                if (candidates.empty()) {
                    // everything visible: connect at the deepest tier
                    for (int c = 0; c < M; ++c)
                        if (check_tier[c] == max_tier) candidates.push_back(c);
                }
                chosen = pick_min_degree(candidates, check_deg, rng);
            }
            rows[chosen].push_back(j);
            cols[j].push_back(chosen);
            ++check_deg[chosen];
        }
    }
    return ParityCheckMatrix::from_rows(M, N, std::move(rows));
}

// --- degree profiles ---

DegreeProfile degree_profile(const ParityCheckMatrix& H) {
    const double E = static_cast<double>(H.edge_count());
    if (E == 0) throw std::invalid_argument("graph has no edges");
    DegreeProfile p;
    p.variable_poly.assign(H.max_col_degree() + 1, 0.0);
    p.check_poly.assign(H.max_row_degree() + 1, 0.0);
    for (const auto& c : H.cols)
        if (!c.empty()) p.variable_poly[c.size()] += c.size() / E;
    for (const auto& r : H.rows)
        if (!r.empty()) p.check_poly[r.size()] += r.size() / E;
    p.mean_variable_degree = E / H.N;
    p.mean_check_degree = E / H.M;
    return p;
}

double average_connectivity(const DegreeProfile& profile) {
    double integral = 0.0;
    for (std::size_t d = 1; d < profile.variable_poly.size(); ++d)
        integral += profile.variable_poly[d] / static_cast<double>(d);
    if (integral <= 0.0)
        throw std::invalid_argument("zero variable-degree polynomial");
    return 1.0 / integral;
}

double average_connectivity(const ParityCheckMatrix& H) {
    return static_cast<double>(H.edge_count()) / H.N;
}

// --- girth and cycle census ---

// Node ids: checks are 0..M-1, variables M..M+N-1.
namespace {

struct UnifiedGraph {
    int M, N;
    std::vector<std::vector<int>> adj;

    explicit UnifiedGraph(const ParityCheckMatrix& H) : M(H.M), N(H.N) {
        adj.resize(M + N);
        for (int i = 0; i < M; ++i)
            for (int j : H.rows[i]) {
                adj[i].push_back(M + j);
                adj[M + j].push_back(i);
            }
    }
};

}  // namespace

int girth(const ParityCheckMatrix& H) {
    const UnifiedGraph g(H);
    const int V = g.M + g.N;
    int best = kInfiniteGirth;
    std::vector<int> dist(V), parent(V);
    // BFS from every check node; any cycle passes through one.
    for (int root = 0; root < g.M; ++root) {
        std::fill(dist.begin(), dist.end(), -1);
        std::deque<int> q{root};
        dist[root] = 0;
        parent[root] = -1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            if (2 * dist[u] >= best) break;  // cannot improve
            for (int w : g.adj[u]) {
                if (dist[w] < 0) {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    q.push_back(w);
                } else if (w != parent[u]) {
                    best = std::min(best, dist[u] + dist[w] + 1);
                }
            }
        }
    }
    return best;
}

namespace {

// Counts closed walks of exactly `length` edges from `root` that form simple
// cycles; each cycle is traversed in both directions, so callers halve.
long count_cycles_through(const UnifiedGraph& g, int root, int length) {
    std::vector<char> visited(g.adj.size(), 0);
    visited[root] = 1;
    long walks = 0;
    // iterative DFS: stack of (node, next-neighbor-index), path depth implicit
    std::vector<std::pair<int, std::size_t>> stack;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
        auto& [u, it] = stack.back();
        const int depth = static_cast<int>(stack.size()) - 1;  // edges used
        if (depth == length - 1) {
            // one edge left: close back to root if adjacent
            const auto& a = g.adj[u];
            if (std::find(a.begin(), a.end(), root) != a.end()) ++walks;
            visited[u] = 0;
            stack.pop_back();
            continue;
        }
        if (it < g.adj[u].size()) {
            const int w = g.adj[u][it++];
            if (!visited[w]) {
                visited[w] = 1;
                stack.emplace_back(w, 0);
            }
        } else {
            if (u != root) visited[u] = 0;
            stack.pop_back();
        }
    }
    return walks;
}

}  // namespace

CycleCensus count_girth_cycles(const ParityCheckMatrix& H) {
    CycleCensus census;
    census.girth = girth(H);
    census.per_check_counts.assign(H.M, 0);
    if (census.girth == kInfiniteGirth) {
        census.mu_g = 0.0;
        return census;
    }
    const UnifiedGraph g(H);
    long total = 0;
    for (int c = 0; c < H.M; ++c) {
        const long n = count_cycles_through(g, c, census.girth) / 2;
        census.per_check_counts[c] = n;
        total += n;
    }
    census.mu_g = static_cast<double>(total) / H.M;
    return census;
}

std::vector<long> dfs_cycle_oracle(const ParityCheckMatrix& H, int length) {
    if (H.N + H.M > 64)
        throw std::invalid_argument("oracle limited to N + M <= 64");
    if (length < 4 || length % 2 != 0)
        throw std::invalid_argument("cycle length must be even and >= 4");
    const UnifiedGraph g(H);
    const int V = g.M + g.N;
    std::vector<long> counts(H.M, 0);
    std::vector<char> visited(V, 0);
    std::vector<int> path;

    // Enumerate each simple cycle exactly once: the DFS root is the smallest
    // node id on the cycle and the direction is fixed by path[1] < path.back().
    for (int root = 0; root < V; ++root) {
        path.assign(1, root);
        visited[root] = 1;
        std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
        while (!stack.empty()) {
            auto& [u, it] = stack.back();
            const int depth = static_cast<int>(stack.size()) - 1;
            if (depth == length - 1) {
                const auto& a = g.adj[u];
                if (path[1] < u &&
                    std::find(a.begin(), a.end(), root) != a.end()) {
                    for (int node : path)
                        if (node < g.M) ++counts[node];
                }
                visited[u] = 0;
                path.pop_back();
                stack.pop_back();
                continue;
            }
            if (it < g.adj[u].size()) {
                const int w = g.adj[u][it++];
                if (w > root && !visited[w]) {
                    visited[w] = 1;
                    path.push_back(w);
                    stack.emplace_back(w, 0);
                }
            } else {
                if (u != root) {
                    visited[u] = 0;
                    path.pop_back();
                }
                stack.pop_back();
            }
        }
        visited[root] = 0;
    }
    return counts;
}

// --- encoder ---

Encoder::Encoder(const ParityCheckMatrix& H) : n_(H.N) {
    const int M = H.M, N = H.N;
    const int words = (N + 63) / 64;
    std::vector<std::vector<std::uint64_t>> rows(M,
                                                 std::vector<std::uint64_t>(words, 0));
    for (int i = 0; i < M; ++i)
        for (int j : H.rows[i]) rows[i][j >> 6] ^= 1ULL << (j & 63);

    auto get = [&](int r, int c) -> bool {
        return (rows[r][c >> 6] >> (c & 63)) & 1ULL;
    };

    // Gauss-Jordan with column pivoting to reduced form.
    std::vector<int> pivot_col;
    std::vector<char> col_used(N, 0);
    int r = 0;
    for (int step = 0; step < M && r < M; ++step) {
        // find a pivot in row r among unused columns; if the row is void,
        // swap a later row up
        int pc = -1;
        for (int rr = r; rr < M && pc < 0; ++rr) {
            for (int c = 0; c < N; ++c) {
                if (!col_used[c] && get(rr, c)) {
                    if (rr != r) std::swap(rows[rr], rows[r]);
                    pc = c;
                    break;
                }
            }
        }
        if (pc < 0) break;  // remaining rows are dependent
        col_used[pc] = 1;
        pivot_col.push_back(pc);
        for (int rr = 0; rr < M; ++rr) {
            if (rr != r && get(rr, pc)) {
                for (int w = 0; w < words; ++w) rows[rr][w] ^= rows[r][w];
            }
        }
        ++r;
    }
    rank_ = r;
    k_ = N - rank_;
    parity_pos_ = pivot_col;
    info_pos_.clear();
    for (int c = 0; c < N; ++c)
        if (!col_used[c]) info_pos_.push_back(c);

    // parity bit r = sum over info bits present in reduced row r
    const int kwords = (k_ + 63) / 64;
    parity_rows_.assign(rank_, std::vector<std::uint64_t>(kwords, 0));
    std::vector<int> info_index(N, -1);
    for (int i = 0; i < k_; ++i) info_index[info_pos_[i]] = i;
    for (int rr = 0; rr < rank_; ++rr) {
        for (int c = 0; c < N; ++c) {
            if (info_index[c] >= 0 && get(rr, c)) {
                const int b = info_index[c];
                parity_rows_[rr][b >> 6] ^= 1ULL << (b & 63);
            }
        }
    }
}

std::vector<std::uint8_t> Encoder::encode(const std::vector<std::uint8_t>& info) const {
    if (static_cast<int>(info.size()) != k_)
        throw std::invalid_argument("information word length must equal k");
    const int kwords = (k_ + 63) / 64;
    std::vector<std::uint64_t> u(kwords, 0);
    for (int i = 0; i < k_; ++i)
        if (info[i]) u[i >> 6] ^= 1ULL << (i & 63);

    std::vector<std::uint8_t> word(n_, 0);
    for (int i = 0; i < k_; ++i) word[info_pos_[i]] = info[i] & 1;
    for (int r = 0; r < rank_; ++r) {
        std::uint64_t acc = 0;
        for (int w = 0; w < kwords; ++w) acc ^= parity_rows_[r][w] & u[w];
        word[parity_pos_[r]] =
            static_cast<std::uint8_t>(__builtin_popcountll(acc) & 1);
    }
    return word;
}

std::vector<std::uint8_t> Encoder::extract_info(
    const std::vector<std::uint8_t>& word) const {
    if (static_cast<int>(word.size()) != n_)
        throw std::invalid_argument("codeword length must equal n");
    std::vector<std::uint8_t> info(k_);
    for (int i = 0; i < k_; ++i) info[i] = word[info_pos_[i]] & 1;
    return info;
}

std::vector<std::uint8_t> syndrome(const ParityCheckMatrix& H,
                                   const std::vector<std::uint8_t>& bits) {
    if (static_cast<int>(bits.size()) != H.N)
        throw std::invalid_argument("bit sequence length must equal N");
    std::vector<std::uint8_t> s(H.M, 0);
    for (int i = 0; i < H.M; ++i) {
        unsigned acc = 0;
        for (int j : H.rows[i]) acc ^= bits[j];
        s[i] = static_cast<std::uint8_t>(acc & 1);
    }
    return s;
}

bool syndrome_is_zero(const ParityCheckMatrix& H,
                      const std::vector<std::uint8_t>& bits) {
    if (static_cast<int>(bits.size()) != H.N)
        throw std::invalid_argument("bit sequence length must equal N");
    for (int i = 0; i < H.M; ++i) {
        unsigned acc = 0;
        for (int j : H.rows[i]) acc ^= bits[j];
        if (acc & 1) return false;
    }
    return true;
}

// --- alist ---

void write_alist(const ParityCheckMatrix& H, std::ostream& out) {
    const int dv = H.max_col_degree(), dc = H.max_row_degree();
    out << H.N << ' ' << H.M << '\n';
    out << dv << ' ' << dc << '\n';
    for (int j = 0; j < H.N; ++j)
        out << H.cols[j].size() << (j + 1 < H.N ? ' ' : '\n');
    for (int i = 0; i < H.M; ++i)
        out << H.rows[i].size() << (i + 1 < H.M ? ' ' : '\n');
    for (int j = 0; j < H.N; ++j) {
        for (int t = 0; t < dv; ++t) {
            const int v = t < static_cast<int>(H.cols[j].size()) ? H.cols[j][t] + 1 : 0;
            out << v << (t + 1 < dv ? ' ' : '\n');
        }
    }
    for (int i = 0; i < H.M; ++i) {
        for (int t = 0; t < dc; ++t) {
            const int v = t < static_cast<int>(H.rows[i].size()) ? H.rows[i][t] + 1 : 0;
            out << v << (t + 1 < dc ? ' ' : '\n');
        }
    }
}

void write_alist_file(const ParityCheckMatrix& H, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_alist(H, f);
}

ParityCheckMatrix read_alist(std::istream& in) {
    int N, M, dv, dc;
    if (!(in >> N >> M >> dv >> dc))
        throw std::runtime_error("malformed alist header");
    std::vector<int> col_deg(N), row_deg(M);
    for (int j = 0; j < N; ++j) in >> col_deg[j];
    for (int i = 0; i < M; ++i) in >> row_deg[i];
    std::vector<std::vector<int>> rows(M);
    for (int j = 0; j < N; ++j) {
        for (int t = 0; t < dv; ++t) {
            int c;
            if (!(in >> c)) throw std::runtime_error("truncated alist column list");
            if (c > 0) rows[c - 1].push_back(j);
        }
    }
    for (int i = 0; i < M; ++i) {
        for (int t = 0; t < dc; ++t) {
            int v;
            if (!(in >> v)) throw std::runtime_error("truncated alist row list");
            if (v > 0 &&
                std::find(rows[i].begin(), rows[i].end(), v - 1) == rows[i].end())
                throw std::runtime_error("alist row/column lists disagree");
        }
    }
    auto H = ParityCheckMatrix::from_rows(M, N, std::move(rows));
    for (int i = 0; i < M; ++i)
        if (static_cast<int>(H.rows[i].size()) != row_deg[i])
            throw std::runtime_error("alist row degree mismatch");
    for (int j = 0; j < N; ++j)
        if (static_cast<int>(H.cols[j].size()) != col_deg[j])
            throw std::runtime_error("alist column degree mismatch");
    return H;
}

ParityCheckMatrix read_alist_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return read_alist(f);
}

std::uint64_t code_hash(const ParityCheckMatrix& H) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(H.M));
    mix(static_cast<std::uint64_t>(H.N));
    for (const auto& r : H.rows) {
        for (int j : r) mix(static_cast<std::uint64_t>(j));
        mix(~0ULL);
    }
    return h;
}

}  // namespace kabp
