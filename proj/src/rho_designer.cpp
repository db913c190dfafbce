#include "kabp/rho_designer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kabp/rng.hpp"

namespace kabp {

namespace {

double urw_constant(const ParityCheckMatrix& H) {
    double nd = average_connectivity(H);
    if (nd < 2.0) {
        std::cerr << "urw: average connectivity " << nd
                  << " < 2, clamping rho to 1\n";
        return 1.0;
    }
    return 2.0 / nd;
}

}  // namespace

ReweightVector urw_rho(const ParityCheckMatrix& H) {
    H.validate();
    return ReweightVector::constant(H.M, urw_constant(H));
}

ReweightVector ckar_rho(const CycleCensus& census, const ParityCheckMatrix& H) {
    H.validate();
    if (static_cast<int>(census.per_check_counts.size()) != H.M)
        throw std::invalid_argument("census does not match the graph");
    if (census.girth == kInfiniteGirth) return ReweightVector::ones(H.M);
    const double rho_v = urw_constant(H);
    ReweightVector rho = ReweightVector::ones(H.M);
    for (int i = 0; i < H.M; ++i)
        if (!(census.per_check_counts[i] < census.mu_g)) rho.rho[i] = rho_v;
    return rho;
}

int Subgraph::local_check(int global_id) const {
    auto it = std::lower_bound(check_ids.begin(), check_ids.end(), global_id);
    if (it == check_ids.end() || *it != global_id) return -1;
    return static_cast<int>(it - check_ids.begin());
}

namespace {

// Scratch space for growing one subgraph inside the global id space.
struct GrowScratch {
    std::vector<std::vector<int>> cadj;  // check -> local vars (global ids)
    std::vector<char> in_check, in_var;
    std::vector<int> dist;  // BFS workspace over checks [0,M) + vars [M,M+N)
    std::vector<int> stamp;
    int epoch = 0;

    explicit GrowScratch(const ParityCheckMatrix& H)
        : cadj(H.M),
          in_check(H.M, 0),
          in_var(H.N, 0),
          dist(H.M + H.N, 0),
          stamp(H.M + H.N, -1) {}
};

// Shortest path length (in edges) from check c to variable v using only the
// subgraph's edges; INT_MAX when farther than `limit` or unreachable.
int subgraph_distance(const GrowScratch& s, const std::vector<std::vector<int>>& vadj,
                      int M, int c, int v, int limit,
                      std::vector<int>& dist, std::vector<int>& stamp, int epoch) {
    std::deque<int> queue;
    dist[c] = 0;
    stamp[c] = epoch;
    queue.push_back(c);
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        int d = dist[node];
        if (d >= limit) continue;
        if (node < M) {
            for (int w : s.cadj[node]) {
                int id = M + w;
                if (stamp[id] == epoch) continue;
                stamp[id] = epoch;
                dist[id] = d + 1;
                if (w == v) return d + 1;
                queue.push_back(id);
            }
        } else {
            for (int c2 : vadj[node - M]) {
                if (stamp[c2] == epoch) continue;
                stamp[c2] = epoch;
                dist[c2] = d + 1;
                queue.push_back(c2);
            }
        }
    }
    return std::numeric_limits<int>::max();
}

Subgraph grow_subgraph(const ParityCheckMatrix& H, int root, int d_max, int g,
                       GrowScratch& s) {
    // Reject an edge when the cycle it closes is no longer than the parent
    // girth; with an acyclic parent no cycle at all is allowed.
    const int limit = g == kInfiniteGirth ? std::numeric_limits<int>::max() - 1
                                          : g - 1;
    std::vector<int> touched_checks{root}, touched_vars;
    std::vector<std::vector<int>> vadj(H.N);  // var -> checks, placed edges
    s.in_check[root] = 1;
    std::vector<int> frontier{root};
    for (int level = 0; !frontier.empty(); ++level) {
        std::sort(frontier.begin(), frontier.end());
        for (int c : frontier) {
            for (int v : H.rows[c]) {
                if (s.in_var[v]) {
                    ++s.epoch;
                    int d = subgraph_distance(s, vadj, H.M, c, v, limit, s.dist,
                                              s.stamp, s.epoch);
                    if (d <= limit) continue;  // closes a short cycle
                } else {
                    s.in_var[v] = 1;
                    touched_vars.push_back(v);
                }
                s.cadj[c].push_back(v);
                vadj[v].push_back(c);
            }
        }
        if (level == d_max) break;
        std::vector<int> next;
        for (int c : frontier)
            for (int v : s.cadj[c])
                for (int c2 : H.cols[v])
                    if (!s.in_check[c2]) {
                        s.in_check[c2] = 1;
                        touched_checks.push_back(c2);
                        next.push_back(c2);
                    }
        frontier = std::move(next);
    }

    // The decode engine needs check degree >= 2; shed thinner checks and any
    // variables that lose their last edge. Removing degree-<=1 nodes never
    // disconnects the rest.
    Subgraph sub;
    sub.root = root;
    std::vector<int> var_degree(H.N, 0);
    for (int c : touched_checks)
        if (s.cadj[c].size() >= 2)
            for (int v : s.cadj[c]) ++var_degree[v];
    for (int c : touched_checks)
        if (s.cadj[c].size() >= 2) sub.check_ids.push_back(c);
    for (int v : touched_vars)
        if (var_degree[v] > 0) sub.var_ids.push_back(v);
    std::sort(sub.check_ids.begin(), sub.check_ids.end());
    std::sort(sub.var_ids.begin(), sub.var_ids.end());

    std::vector<int> var_local(H.N, -1);
    for (std::size_t l = 0; l < sub.var_ids.size(); ++l)
        var_local[sub.var_ids[l]] = static_cast<int>(l);
    std::vector<std::vector<int>> rows(sub.check_ids.size());
    for (std::size_t l = 0; l < sub.check_ids.size(); ++l) {
        int c = sub.check_ids[l];
        for (int v : s.cadj[c]) {
            rows[l].push_back(var_local[v]);
            sub.edges.emplace_back(c, v);
        }
        std::sort(rows[l].begin(), rows[l].end());
    }
    if (!sub.check_ids.empty()) {
        sub.local = ParityCheckMatrix::from_rows(
            static_cast<int>(sub.check_ids.size()),
            static_cast<int>(sub.var_ids.size()), std::move(rows));
        sub.local_girth = girth(sub.local);
    }

    // Reset scratch for the next root.
    for (int c : touched_checks) {
        s.in_check[c] = 0;
        s.cadj[c].clear();
    }
    for (int v : touched_vars) s.in_var[v] = 0;
    return sub;
}

// Distance from the root set to every check node in the parent graph.
std::vector<int> check_distances(const ParityCheckMatrix& H,
                                 const std::vector<int>& roots) {
    const int inf = std::numeric_limits<int>::max();
    std::vector<int> dist(H.M + H.N, inf);
    std::deque<int> queue;
    for (int r : roots) {
        dist[r] = 0;
        queue.push_back(r);
    }
    while (!queue.empty()) {
        int node = queue.front();
        queue.pop_front();
        if (node < H.M) {
            for (int v : H.rows[node])
                if (dist[H.M + v] == inf) {
                    dist[H.M + v] = dist[node] + 1;
                    queue.push_back(H.M + v);
                }
        } else {
            for (int c : H.cols[node - H.M])
                if (dist[c] == inf) {
                    dist[c] = dist[node] + 1;
                    queue.push_back(c);
                }
        }
    }
    dist.resize(H.M);
    return dist;
}

}  // namespace

SubgraphSet expand_subgraphs(const ParityCheckMatrix& H, int d_max, int T,
                             std::uint64_t seed) {
    H.validate();
    if (d_max < 1) throw std::invalid_argument("d_max must be >= 1");
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    for (const auto& row : H.rows)
        if (row.size() < 2)
            throw std::invalid_argument("expansion requires check degree >= 2");

    const int g = girth(H);
    GrowScratch scratch(H);
    Rng rng(seed);
    SubgraphSet out;
    out.requested = T;
    std::vector<char> covered(H.M, 0), used_root(H.M, 0);
    std::vector<int> roots;

    auto add_root = [&](int root) {
        used_root[root] = 1;
        roots.push_back(root);
        auto sub = grow_subgraph(H, root, d_max, g, scratch);
        for (int c : sub.check_ids) covered[c] = 1;
        out.subgraphs.push_back(std::move(sub));
    };

    auto next_uncovered = [&]() -> int {
        auto dist = check_distances(H, roots);
        int best = -1, best_dist = -1;
        for (int c = 0; c < H.M; ++c)
            if (!covered[c] && dist[c] > best_dist) {
                best = c;
                best_dist = dist[c];
            }
        return best;
    };

    add_root(0);
    for (;;) {
        int uncovered = next_uncovered();
        if (uncovered < 0 && static_cast<int>(out.subgraphs.size()) >= T) break;
        int root;
        if (uncovered >= 0) {
            root = uncovered;
        } else {
            // Coverage holds; fill the remaining quota with seeded draws,
            // avoiding repeat roots while any are left.
            root = static_cast<int>(rng.bounded(H.M));
            for (int attempt = 0; attempt < 4 * H.M && used_root[root]; ++attempt)
                root = static_cast<int>(rng.bounded(H.M));
        }
        add_root(root);
    }
    return out;
}

std::vector<LlrSequence> design_ensemble(int n_vars, int size, double sigma,
                                         std::uint64_t seed) {
    if (size < 1) throw std::invalid_argument("ensemble size must be >= 1");
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    Rng rng(seed);
    std::vector<LlrSequence> out(size);
    const double mean = 0.5 * sigma * sigma;
    for (auto& seq : out) {
        seq.resize(n_vars);
        for (auto& v : seq) v = mean + sigma * rng.gaussian();
    }
    return out;
}

SubgraphBeliefs subgraph_beliefs(const Subgraph& sub,
                                 const std::vector<double>& rho_t,
                                 const std::vector<LlrSequence>& ensemble,
                                 int iter_cap, double tol) {
    if (ensemble.empty()) throw std::invalid_argument("empty ensemble");
    RwDecoder dec(sub.local);
    ReweightVector rho{rho_t};
    SubgraphBeliefs acc;
    acc.beliefs.assign(sub.local.N, 0.0);
    acc.psi.assign(dec.edge_count(), 0.0);
    acc.lambda.assign(dec.edge_count(), 0.0);
    for (const auto& llr : ensemble) {
        dec.start(rho, llr);
        bool settled = false;
        for (int it = 0; it < iter_cap; ++it)
            if (dec.iterate() < tol) {
                settled = true;
                break;
            }
        if (!settled) ++acc.nonconverged;
        for (int e = 0; e < dec.edge_count(); ++e) {
            acc.psi[e] += dec.psi()[e];
            acc.lambda[e] += dec.lambda()[e];
        }
        for (int j = 0; j < sub.local.N; ++j) acc.beliefs[j] += dec.beliefs()[j];
    }
    const double inv = 1.0 / ensemble.size();
    for (auto& v : acc.psi) v *= inv;
    for (auto& v : acc.lambda) v *= inv;
    for (auto& v : acc.beliefs) v *= inv;
    return acc;
}

std::vector<double> mutual_information(const Subgraph& sub,
                                       const SubgraphBeliefs& state) {
    const ParityCheckMatrix& L = sub.local;
    std::vector<double> info(L.M, 0.0);
    std::size_t edge_base = 0;
    for (int l = 0; l < L.M; ++l) {
        const int d = static_cast<int>(L.rows[l].size());
        if (d > 20) throw std::invalid_argument("check degree > 20: enumeration refused");
        // Bernoulli marginals implied by the incoming messages.
        std::vector<double> p1(d);
        for (int k = 0; k < d; ++k)
            p1[k] = 1.0 / (1.0 + std::exp(state.psi[edge_base + k]));
        edge_base += d;

        const std::size_t configs = std::size_t{1} << (d - 1);
        std::vector<double> weight(configs);
        std::vector<std::uint32_t> assign(configs);
        double z = 0.0;
        for (std::size_t mask = 0; mask < configs; ++mask) {
            int parity = 0;
            double w = 1.0;
            for (int k = 0; k < d - 1; ++k) {
                int bit = static_cast<int>((mask >> k) & 1u);
                parity ^= bit;
                w *= bit ? p1[k] : 1.0 - p1[k];
            }
            w *= parity ? p1[d - 1] : 1.0 - p1[d - 1];
            weight[mask] = w;
            assign[mask] = static_cast<std::uint32_t>(mask) |
                           (static_cast<std::uint32_t>(parity) << (d - 1));
            z += w;
        }
        std::vector<double> marginal1(d, 0.0);
        for (std::size_t m = 0; m < configs; ++m) {
            weight[m] /= z;
            for (int k = 0; k < d; ++k)
                if ((assign[m] >> k) & 1u) marginal1[k] += weight[m];
        }
        double kl = 0.0;
        for (std::size_t m = 0; m < configs; ++m) {
            if (weight[m] <= 0.0) continue;
            double prod = 1.0;
            for (int k = 0; k < d; ++k)
                prod *= ((assign[m] >> k) & 1u) ? marginal1[k] : 1.0 - marginal1[k];
            kl += weight[m] * std::log(weight[m] / prod);
        }
        info[l] = kl < 0.0 ? 0.0 : kl;  // analytic KL >= 0; absorb rounding
    }
    return info;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<double> linear_subproblem(const std::vector<double>& info,
                                      const Subgraph& sub, double rho_floor) {
    const ParityCheckMatrix& L = sub.local;
    if (static_cast<int>(info.size()) != L.M)
        throw std::invalid_argument("weight vector does not match the subgraph");
    for (double v : info)
        if (v < 0.0) throw std::invalid_argument("negative weight");

    std::vector<int> order(L.M);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return info[a] > info[b]; });

    UnionFind uf(L.N);
    std::vector<double> rho(L.M, rho_floor);
    std::vector<int> roots;
    for (int l : order) {
        roots.clear();
        bool ok = true;
        for (int v : L.rows[l]) {
            int r = uf.find(v);
            if (std::find(roots.begin(), roots.end(), r) != roots.end()) {
                ok = false;  // two neighbors already connected: a cycle
                break;
            }
            roots.push_back(r);
        }
        if (!ok) continue;
        for (std::size_t k = 1; k < roots.size(); ++k) uf.unite(roots[0], roots[k]);
        rho[l] = 1.0;
    }
    return rho;
}

std::string EkarConfig::digest() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "d_max=%d;T=%d;rec=%d;tol=%g;grid=%d;ens=%d;sigma=%g;cap=%d;"
                  "btol=%g;floor=%g;merge=%s;vw=%d;vsigma=%g",
                  d_max, T, recursions, tol, grid, ensemble_size, design_sigma,
                  bp_iter_cap, bp_tol, rho_floor,
                  merge_by_validation ? "ber" : "obj", validation_words,
                  validation_sigma);
    return buf;
}

namespace {

struct Evaluation {
    double f = 0.0;
    std::vector<double> info;
    int nonconverged = 0;
};

Evaluation evaluate(const Subgraph& sub, const std::vector<double>& rho,
                    const std::vector<LlrSequence>& ensemble,
                    const EkarConfig& cfg) {
    Evaluation ev;
    auto state = subgraph_beliefs(sub, rho, ensemble, cfg.bp_iter_cap, cfg.bp_tol);
    ev.nonconverged = state.nonconverged;
    ev.info = mutual_information(sub, state);
    for (std::size_t l = 0; l < ev.info.size(); ++l) ev.f -= ev.info[l] * rho[l];
    return ev;
}

struct SearchResult {
    double alpha = 0.0;
    Evaluation at_best;
};

SearchResult grid_search(const Subgraph& sub, const std::vector<double>& rho_r,
                         const std::vector<double>& rho_star,
                         const std::vector<LlrSequence>& ensemble,
                         const EkarConfig& cfg, const Evaluation* at_zero) {
    SearchResult best;
    if (at_zero) {
        best.at_best = *at_zero;
    } else {
        best.at_best = evaluate(sub, rho_r, ensemble, cfg);
    }
    if (rho_star == rho_r || cfg.grid < 1) return best;  // degenerate direction
    std::vector<double> cand(rho_r.size());
    for (int k = 1; k <= cfg.grid; ++k) {
        const double alpha = static_cast<double>(k) / cfg.grid;
        for (std::size_t l = 0; l < cand.size(); ++l) {
            double v = rho_r[l] + alpha * (rho_star[l] - rho_r[l]);
            cand[l] = std::min(1.0, std::max(cfg.rho_floor, v));
        }
        Evaluation ev = evaluate(sub, cand, ensemble, cfg);
        if (ev.f < best.at_best.f) {
            best.alpha = alpha;
            best.at_best = std::move(ev);
        }
    }
    return best;
}

}  // namespace

double line_search_alpha(const Subgraph& sub, const std::vector<double>& rho_r,
                         const std::vector<double>& rho_star,
                         const std::vector<LlrSequence>& ensemble,
                         const EkarConfig& cfg, const double* f_at_zero,
                         const std::vector<double>* info_at_zero,
                         double* f_out, std::vector<double>* info_out) {
    const Evaluation* seed = nullptr;
    Evaluation zero;
    if (f_at_zero && info_at_zero) {
        zero.f = *f_at_zero;
        zero.info = *info_at_zero;
        seed = &zero;
    }
    auto res = grid_search(sub, rho_r, rho_star, ensemble, cfg, seed);
    if (f_out) *f_out = res.at_best.f;
    if (info_out) *info_out = std::move(res.at_best.info);
    return res.alpha;
}

FapOptimState optimize_subgraph_rho(const Subgraph& sub, const EkarConfig& cfg,
                                    std::uint64_t seed) {
    if (sub.local.M == 0) throw std::invalid_argument("empty subgraph");
    auto ensemble = design_ensemble(sub.local.N, cfg.ensemble_size,
                                    cfg.design_sigma, seed);

    FapOptimState st;
    // Start at a vertex of the surrogate polytope (uniform-weight greedy) so
    // the very first linearization cannot sit above the objective.
    std::vector<std::vector<double>> atoms;
    atoms.push_back(linear_subproblem(std::vector<double>(sub.local.M, 1.0),
                                      sub, cfg.rho_floor));
    st.rho = atoms.front();
    Evaluation cur = evaluate(sub, st.rho, ensemble, cfg);
    st.nonconverged_runs += cur.nonconverged;
    double z = -std::numeric_limits<double>::infinity();

    for (int r = 0; r < cfg.recursions; ++r) {
        // Linear subproblem: the greedy vertex for the current weights, or a
        // previously visited vertex when one scores better. Keeping past
        // atoms in the comparison guarantees f_lin <= f at this iterate.
        auto dot = [&](const std::vector<double>& v) {
            double s = 0.0;
            for (std::size_t l = 0; l < v.size(); ++l) s += cur.info[l] * v[l];
            return s;
        };
        std::vector<double> greedy = linear_subproblem(cur.info, sub, cfg.rho_floor);
        const std::vector<double>* star = &greedy;
        double best_dot = dot(greedy);
        for (const auto& a : atoms) {
            double v = dot(a);
            if (v > best_dot) {
                best_dot = v;
                star = &a;
            }
        }
        z = std::max(z, -best_dot);
        // Stop before logging: a single descent step can drop f below a z
        // formed at an earlier linearization (I moves with rho), and that
        // crossing always lands inside the stop window. Checking first keeps
        // every recorded recursion at gap >= tol.
        if (cur.f - z < cfg.tol) {
            st.converged = true;
            break;
        }
        ++st.recursions;
        st.upper_trace.push_back(cur.f);
        st.lower_trace.push_back(z);

        auto res = grid_search(sub, st.rho, *star, ensemble, cfg, &cur);
        if (res.alpha > 0.0) {
            for (std::size_t l = 0; l < st.rho.size(); ++l) {
                double v = st.rho[l] + res.alpha * ((*star)[l] - st.rho[l]);
                st.rho[l] = std::min(1.0, std::max(cfg.rho_floor, v));
            }
            if (std::find(atoms.begin(), atoms.end(), *star) == atoms.end())
                atoms.push_back(*star);
        }
        st.nonconverged_runs += res.at_best.nonconverged;
        cur = std::move(res.at_best);
    }
    st.objective = cur.f;
    st.lower = z;
    return st;
}

ReweightVector merge_rho(const SubgraphSet& set,
                         const std::vector<std::vector<double>>& per_subgraph,
                         const std::vector<double>& objectives) {
    if (per_subgraph.size() != set.subgraphs.size() ||
        objectives.size() != set.subgraphs.size())
        throw std::invalid_argument("per-subgraph data does not match the set");
    int M = 0;
    for (const auto& sub : set.subgraphs)
        for (int c : sub.check_ids) M = std::max(M, c + 1);
    ReweightVector out;
    out.rho.assign(M, -1.0);
    std::vector<double> best(M, std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < set.subgraphs.size(); ++t) {
        const auto& sub = set.subgraphs[t];
        for (std::size_t l = 0; l < sub.check_ids.size(); ++l) {
            int c = sub.check_ids[l];
            if (objectives[t] < best[c]) {
                best[c] = objectives[t];
                out.rho[c] = per_subgraph[t][l];
            }
        }
    }
    for (double v : out.rho)
        if (v < 0.0) throw std::logic_error("merge with incomplete coverage");
    return out;
}

namespace {

// Alternative merge key: bit errors on a small all-zero-codeword validation
// set, decoding the full graph with this subgraph's values patched in.
double validation_objective(const ParityCheckMatrix& H, const Subgraph& sub,
                            const std::vector<double>& rho_t,
                            const EkarConfig& cfg, std::uint64_t seed) {
    ReweightVector rho = ReweightVector::ones(H.M);
    for (std::size_t l = 0; l < sub.check_ids.size(); ++l)
        rho.rho[sub.check_ids[l]] = rho_t[l];
    RwDecoder dec(H);
    Rng rng(seed);
    const double sigma = cfg.validation_sigma;
    long errors = 0;
    for (int w = 0; w < cfg.validation_words; ++w) {
        LlrSequence llr(H.N);
        for (auto& v : llr)
            v = 2.0 * (1.0 + sigma * rng.gaussian()) / (sigma * sigma);
        auto res = dec.decode(rho, llr, 30);
        for (auto b : res.hard_bits) errors += b;
    }
    return static_cast<double>(errors) /
           (static_cast<double>(cfg.validation_words) * H.N);
}

}  // namespace

EkarResult ekar_rho(const ParityCheckMatrix& H, const EkarConfig& cfg,
                    std::uint64_t seed) {
    EkarResult out;
    out.set = expand_subgraphs(H, cfg.d_max, cfg.T, mix_seed(seed, 0));
    const std::size_t T = out.set.subgraphs.size();
    out.states.resize(T);
    std::vector<std::vector<double>> rhos(T);
    out.merge_objectives.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        out.states[t] = optimize_subgraph_rho(out.set.subgraphs[t], cfg,
                                              mix_seed(seed, 1 + t));
        rhos[t] = out.states[t].rho;
        out.merge_objectives[t] =
            cfg.merge_by_validation
                ? validation_objective(H, out.set.subgraphs[t], rhos[t], cfg,
                                       mix_seed(seed, 0x5eed0000u + t))
                : out.states[t].objective;
    }
    out.rho = merge_rho(out.set, rhos, out.merge_objectives);
    if (static_cast<int>(out.rho.rho.size()) < H.M)
        out.rho.rho.resize(H.M, 1.0);  // never hit when coverage held
    out.rho.validate(H.M);
    return out;
}

void write_rho(std::ostream& out, const ReweightVector& rho,
               std::uint64_t code_hash, const std::string& designer,
               const std::string& config) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(code_hash));
    out << "# code " << buf << "\n# designer " << designer << "\n# config "
        << config << "\n";
    for (double v : rho.rho) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
    }
}

void write_rho_file(const std::string& path, const ReweightVector& rho,
                    std::uint64_t code_hash, const std::string& designer,
                    const std::string& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_rho(out, rho, code_hash, designer, config);
}

RhoFile read_rho(std::istream& in) {
    RhoFile rf;
    std::string line;
    while (in.good() && in.peek() == '#') {
        std::getline(in, line);
        std::istringstream ls(line);
        std::string hash_mark, key;
        ls >> hash_mark >> key;
        if (key == "code") {
            std::string hex;
            ls >> hex;
            rf.code_hash = std::stoull(hex, nullptr, 16);
        } else if (key == "designer") {
            ls >> rf.designer;
        } else if (key == "config") {
            std::getline(ls, rf.config);
            if (!rf.config.empty() && rf.config.front() == ' ')
                rf.config.erase(rf.config.begin());
        }
    }
    double v;
    while (in >> v) rf.rho.rho.push_back(v);
    if (rf.rho.rho.empty()) throw std::runtime_error("rho file has no values");
    return rf;
}

RhoFile read_rho_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_rho(in);
}

}  // namespace kabp
