#include "kabp/mimo_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kabp {

CVec CMat::col(int c) const {
    CVec out(rows);
    for (int r = 0; r < rows; ++r) out[r] = at(r, c);
    return out;
}

CMat CMat::identity(int n) {
    CMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

void ChannelRealization::validate() const {
    if (C.rows < C.cols || C.cols < 1)
        throw std::invalid_argument("channel needs N_R >= N_T >= 1");
    if (!(N0 > 0.0)) throw std::invalid_argument("noise power must be positive");
    if (!(Es > 0.0)) throw std::invalid_argument("symbol energy must be positive");
}

void ModulationMap::validate() const {
    const int n = size();
    const int m = bits_per_symbol();
    if (n < 2 || m < 1 || n != (1 << m))
        throw std::invalid_argument("constellation size must be 2^m");
    if (bit_labels.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("one label per symbol required");
    double energy = 0.0;
    for (const auto& a : constellation) energy += std::norm(a);
    if (std::abs(energy / n - 1.0) > 1e-12)
        throw std::invalid_argument("constellation must have unit average energy");
    std::vector<int> seen(n, 0);
    for (const auto& label : bit_labels) {
        if (label.size() != static_cast<std::size_t>(m))
            throw std::invalid_argument("label width must be m");
        int packed = 0;
        for (int b : label) {
            if (b != 0 && b != 1) throw std::invalid_argument("labels are bits");
            packed = (packed << 1) | b;
        }
        ++seen[packed];
    }
    for (int c : seen)
        if (c != 1) throw std::invalid_argument("labels must be bijective");
    if (plus_sets.size() != static_cast<std::size_t>(m) ||
        minus_sets.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("per-bit subsets missing");
    for (int j = 0; j < m; ++j)
        if (plus_sets[j].size() + minus_sets[j].size() !=
            static_cast<std::size_t>(n))
            throw std::invalid_argument("per-bit subsets must partition the set");
}

namespace {

ModulationMap finish_map(ModulationMap map) {
    const int n = map.size();
    const int m = map.bits_per_symbol();
    map.plus_sets.assign(m, {});
    map.minus_sets.assign(m, {});
    map.label_lookup.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        int packed = 0;
        for (int j = 0; j < m; ++j) {
            packed = (packed << 1) | map.bit_labels[s][j];
            (map.bit_labels[s][j] == 0 ? map.plus_sets : map.minus_sets)[j]
                .push_back(s);
        }
        map.label_lookup[packed] = s;
    }
    map.validate();
    return map;
}

}  // namespace

ModulationMap ModulationMap::qpsk_gray() {
    const double h = std::sqrt(0.5);
    ModulationMap map;
    map.constellation = {{h, h}, {h, -h}, {-h, h}, {-h, -h}};
    map.bit_labels = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    return finish_map(std::move(map));
}

SoftSymbolStats SoftSymbolStats::uninformative(int n_streams, double Es) {
    SoftSymbolStats st;
    st.y_hat.assign(n_streams, Complex{0.0, 0.0});
    st.err_var.assign(n_streams, Es);
    return st;
}

ChannelRealization sample_channel(int n_rx, int n_tx, std::uint64_t seed) {
    if (n_rx < n_tx || n_tx < 1)
        throw std::invalid_argument("channel needs N_R >= N_T >= 1");
    ChannelRealization chan;
    chan.C = CMat(n_rx, n_tx);
    Rng rng(seed);
    const double h = std::sqrt(0.5);
    for (int r = 0; r < n_rx; ++r)
        for (int c = 0; c < n_tx; ++c) {
            const double re = rng.gaussian() * h;
            const double im = rng.gaussian() * h;
            chan.C.at(r, c) = Complex{re, im};
        }
    return chan;
}

CVec modulate(const std::vector<int>& bits, const ModulationMap& map) {
    const int m = map.bits_per_symbol();
    if (m < 1 || bits.size() % m != 0)
        throw std::invalid_argument("bit count must divide bits per symbol");
    CVec out(bits.size() / m);
    for (std::size_t s = 0; s < out.size(); ++s) {
        int packed = 0;
        for (int j = 0; j < m; ++j) {
            const int b = bits[s * m + j];
            if (b != 0 && b != 1) throw std::invalid_argument("bits are 0/1");
            packed = (packed << 1) | b;
        }
        out[s] = map.constellation[map.label_lookup[packed]];
    }
    return out;
}

CVec transmit(const ChannelRealization& chan, const CVec& s, Rng& rng) {
    if (s.size() != static_cast<std::size_t>(chan.n_tx()))
        throw std::invalid_argument("symbol vector must match N_T");
    const double scale = std::sqrt(chan.N0 * 0.5);
    CVec r(chan.n_rx());
    for (int i = 0; i < chan.n_rx(); ++i) {
        Complex acc{0.0, 0.0};
        for (int q = 0; q < chan.n_tx(); ++q) acc += chan.C.at(i, q) * s[q];
        const double nr = rng.gaussian() * scale;
        const double ni = rng.gaussian() * scale;
        r[i] = acc + Complex{nr, ni};
    }
    return r;
}

SoftSymbol soft_symbol(const std::vector<double>& bit_llrs,
                       const ModulationMap& map, double Es) {
    const int m = map.bits_per_symbol();
    if (bit_llrs.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("one LLR per bit of the symbol required");
    std::vector<double> p0(m);
    for (int j = 0; j < m; ++j) p0[j] = 1.0 / (1.0 + std::exp(-clip_llr(bit_llrs[j])));
    Complex mean{0.0, 0.0};
    for (int s = 0; s < map.size(); ++s) {
        double p = 1.0;
        for (int j = 0; j < m; ++j)
            p *= map.bit_labels[s][j] == 0 ? p0[j] : 1.0 - p0[j];
        mean += p * map.constellation[s];
    }
    SoftSymbol out;
    out.y_hat = std::sqrt(Es) * mean;
    out.err_var = std::min(Es, std::max(0.0, Es - std::norm(out.y_hat)));
    return out;
}

CVec pic_cancel(const CVec& r, const CMat& C, const SoftSymbolStats& stats,
                int k) {
    if (r.size() != static_cast<std::size_t>(C.rows))
        throw std::invalid_argument("received vector must match N_R");
    if (stats.y_hat.size() != static_cast<std::size_t>(C.cols))
        throw std::invalid_argument("soft statistics must cover all streams");
    if (k < 0 || k >= C.cols) throw std::invalid_argument("stream out of range");
    CVec out = r;
    for (int q = 0; q < C.cols; ++q) {
        if (q == k) continue;
        for (int i = 0; i < C.rows; ++i) out[i] -= C.at(i, q) * stats.y_hat[q];
    }
    return out;
}

namespace {

// Gaussian elimination with partial pivoting on the augmented system.
// strict=true additionally rejects a collapsed pivot ratio: a consistent
// rank-deficient system still eliminates cleanly, so without a regularizing
// ridge, singularity shows up there rather than in the residual.
CVec solve_dense(CMat A, CVec b, bool strict) {
    const int n = A.rows;
    double pivot_max = 0.0, pivot_min = std::numeric_limits<double>::infinity();
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::abs(A.at(col, col));
        for (int r = col + 1; r < n; ++r) {
            const double v = std::abs(A.at(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        pivot_max = std::max(pivot_max, best);
        pivot_min = std::min(pivot_min, best);
        if (!(best > 0.0) || !std::isfinite(best) ||
            (strict && pivot_max > 1e14 * pivot_min))
            throw std::runtime_error("filter system is singular");
        if (pivot != col) {
            for (int c = col; c < n; ++c) std::swap(A.at(col, c), A.at(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        for (int r = col + 1; r < n; ++r) {
            const Complex f = A.at(r, col) / A.at(col, col);
            if (f == Complex{0.0, 0.0}) continue;
            A.at(r, col) = 0.0;
            for (int c = col + 1; c < n; ++c) A.at(r, c) -= f * A.at(col, c);
            b[r] -= f * b[col];
        }
    }
    CVec x(n);
    for (int r = n - 1; r >= 0; --r) {
        Complex acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= A.at(r, c) * x[c];
        x[r] = acc / A.at(r, r);
    }
    return x;
}

}  // namespace

MmseFilter mmse_filter(const CMat& C, const SoftSymbolStats& stats, int k,
                       double Es, double N0) {
    if (stats.err_var.size() != static_cast<std::size_t>(C.cols))
        throw std::invalid_argument("soft statistics must cover all streams");
    if (k < 0 || k >= C.cols) throw std::invalid_argument("stream out of range");
    if (!(Es > 0.0)) throw std::invalid_argument("symbol energy must be positive");
    if (N0 < 0.0) throw std::invalid_argument("noise power must be non-negative");

    const int n = C.rows;
    CMat A(n, n);
    for (int q = 0; q < C.cols; ++q) {
        const double lam = q == k ? Es : stats.err_var[q];
        if (lam == 0.0) continue;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                A.at(i, j) += lam * C.at(i, q) * std::conj(C.at(j, q));
    }
    for (int i = 0; i < n; ++i) A.at(i, i) += N0;

    const CVec ck = C.col(k);
    // With N0 > 0 the ridge makes A positive definite; a large pivot spread
    // there is near-singularity the solve handles, not an error.
    const CVec x = solve_dense(A, ck, N0 == 0.0);

    double res2 = 0.0, rhs2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Complex acc = -ck[i];
        for (int j = 0; j < n; ++j) acc += A.at(i, j) * x[j];
        res2 += std::norm(acc);
        rhs2 += std::norm(ck[i]);
    }
    if (!(rhs2 > 0.0)) throw std::runtime_error("stream column is zero");
    if (!(std::sqrt(res2 / rhs2) < 1e-10))
        throw std::runtime_error("filter solve did not reach residual tolerance");

    MmseFilter out;
    out.w.resize(n);
    for (int i = 0; i < n; ++i) out.w[i] = Es * x[i];
    Complex mu{0.0, 0.0};
    for (int i = 0; i < n; ++i) mu += std::conj(out.w[i]) * ck[i];
    out.mu = mu.real();
    // Perfect cancellation at vanishing noise drives mu to 1; keep the
    // variance positive so the LLR stage saturates instead of dividing by 0.
    out.eff_var = std::max(Es * out.mu * (1.0 - out.mu), 1e-30);
    return out;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

}  // namespace

std::vector<double> bit_llr(Complex y, double mu, double eff_var,
                            const std::vector<double>& apriori,
                            const ModulationMap& map) {
    const int m = map.bits_per_symbol();
    if (apriori.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("one prior per bit of the symbol required");
    if (!(eff_var > 0.0))
        throw std::invalid_argument("effective variance must be positive");

    // Log weight of each symbol: Gaussian likelihood at mean mu*a plus the
    // prior contribution of its bits. Bit j's own prior is stripped per
    // output below, so the full sum is formed once.
    std::vector<double> prior(m);
    for (int j = 0; j < m; ++j) prior[j] = 0.5 * clip_llr(apriori[j]);
    std::vector<double> lw(map.size());
    std::vector<double> self(static_cast<std::size_t>(map.size()) * m);
    for (int s = 0; s < map.size(); ++s) {
        const Complex d = y - mu * map.constellation[s];
        double w = -std::norm(d) / eff_var;
        for (int j = 0; j < m; ++j) {
            const double c = map.bit_labels[s][j] == 0 ? prior[j] : -prior[j];
            self[static_cast<std::size_t>(s) * m + j] = c;
            w += c;
        }
        lw[s] = w;
    }

    std::vector<double> out(m);
    std::vector<double> plus, minus;
    for (int j = 0; j < m; ++j) {
        plus.clear();
        minus.clear();
        for (int s : map.plus_sets[j])
            plus.push_back(lw[s] - self[static_cast<std::size_t>(s) * m + j]);
        for (int s : map.minus_sets[j])
            minus.push_back(lw[s] - self[static_cast<std::size_t>(s) * m + j]);
        out[j] = clip_llr(log_sum_exp(plus) - log_sum_exp(minus));
    }
    return out;
}

}  // namespace kabp
