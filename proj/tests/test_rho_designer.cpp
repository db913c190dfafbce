#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "kabp/ldpc_graph.hpp"
#include "kabp/rho_designer.hpp"
#include "kabp/rng.hpp"
#include "kabp/rw_decoder.hpp"

using namespace kabp;

namespace {

Subgraph make_sub(ParityCheckMatrix local) {
    Subgraph s;
    s.root = 0;
    for (int i = 0; i < local.M; ++i) s.check_ids.push_back(i);
    for (int j = 0; j < local.N; ++j) s.var_ids.push_back(j);
    for (int i = 0; i < local.M; ++i)
        for (int j : local.rows[i]) s.edges.emplace_back(i, j);
    s.local_girth = girth(local);
    s.local = std::move(local);
    return s;
}

bool subgraph_connected(const ParityCheckMatrix& L) {
    if (L.M == 0) return true;
    std::vector<char> seen_c(L.M, 0), seen_v(L.N, 0);
    std::vector<int> stack{0};
    seen_c[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int c = stack.back();
        stack.pop_back();
        for (int v : L.rows[c]) {
            if (seen_v[v]) continue;
            seen_v[v] = 1;
            for (int c2 : L.cols[v])
                if (!seen_c[c2]) {
                    seen_c[c2] = 1;
                    ++reached;
                    stack.push_back(c2);
                }
        }
    }
    return reached == L.M;
}

}  // namespace

TEST_CASE("urw designer") {
    auto H = peg_construct(60, 30, std::vector<int>(60, 3), 2);
    auto rho = urw_rho(H);
    REQUIRE(rho.size() == 30);
    for (double v : rho.rho) CHECK(v == 2.0 / 3.0);  // n_D = 3 exactly
    CHECK_NOTHROW(rho.validate(30));

    // Degree-2 variables: the constant collapses to standard BP.
    auto H2 = peg_construct(16, 8, std::vector<int>(16, 2), 3);
    for (double v : urw_rho(H2).rho) CHECK(v == 1.0);
}

TEST_CASE("ckar designer") {
    // Both checks sit on the one 4-cycle; rho_v = 2/2 = 1.
    auto H = ParityCheckMatrix::from_rows(2, 2, {{0, 1}, {0, 1}});
    auto rho = ckar_rho(count_girth_cycles(H), H);
    CHECK(rho.rho == std::vector<double>{1.0, 1.0});

    // Synthetic census on a graph whose urw constant is 2/3: the check with
    // fewer-than-average cycles keeps full weight.
    auto H3 = ParityCheckMatrix::from_rows(3, 2, {{0, 1}, {0, 1}, {0, 1}});
    REQUIRE(average_connectivity(H3) == 3.0);
    CycleCensus synthetic;
    synthetic.girth = 4;
    synthetic.per_check_counts = {0, 2, 2};
    synthetic.mu_g = 4.0 / 3.0;
    auto rho3 = ckar_rho(synthetic, H3);
    CHECK(rho3.rho[0] == 1.0);
    CHECK(rho3.rho[1] == 2.0 / 3.0);
    CHECK(rho3.rho[2] == 2.0 / 3.0);

    // The real census of that graph: every check on two 4-cycles.
    auto real = count_girth_cycles(H3);
    CHECK(real.per_check_counts == std::vector<long>{2, 2, 2});
    auto rho_real = ckar_rho(real, H3);
    for (double v : rho_real.rho) CHECK(v == 2.0 / 3.0);

    // Tree code: no cycles, standard BP.
    auto tree = ParityCheckMatrix::from_rows(2, 4, {{0, 1, 2}, {2, 3}});
    for (double v : ckar_rho(count_girth_cycles(tree), tree).rho)
        CHECK(v == 1.0);

    CycleCensus wrong;
    wrong.per_check_counts = {1};
    CHECK_THROWS(ckar_rho(wrong, H));

    // On a regular code the output is two-valued.
    auto Hr = peg_construct(60, 30, std::vector<int>(60, 3), 2);
    auto census = count_girth_cycles(Hr);
    auto rr = ckar_rho(census, Hr);
    for (int i = 0; i < Hr.M; ++i) {
        if (census.per_check_counts[i] < census.mu_g)
            CHECK(rr.rho[i] == 1.0);
        else
            CHECK(rr.rho[i] == 2.0 / 3.0);
    }
}

TEST_CASE("subgraph expansion on a tree covers the whole graph") {
    auto tree = ParityCheckMatrix::from_rows(3, 7, {{0, 1, 2}, {2, 3, 4}, {4, 5, 6}});
    auto set = expand_subgraphs(tree, 1000, 1, 5);
    REQUIRE(set.subgraphs.size() == 1);
    const auto& sub = set.subgraphs.front();
    CHECK(sub.check_ids == std::vector<int>{0, 1, 2});
    CHECK(sub.var_ids == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
    CHECK(sub.local.edge_count() == tree.edge_count());
    CHECK(sub.local_girth == kInfiniteGirth);
}

TEST_CASE("subgraph expansion invariants") {
    auto H = peg_construct(60, 30, std::vector<int>(60, 3), 2);
    const int g = girth(H);
    auto set = expand_subgraphs(H, 2, 5, 77);
    CHECK(set.requested == 5);
    CHECK(set.subgraphs.size() >= 5);

    std::set<int> covered;
    long total_checks = 0;
    for (const auto& sub : set.subgraphs) {
        CHECK(sub.local_girth > g);
        CHECK(girth(sub.local) == sub.local_girth);
        CHECK(subgraph_connected(sub.local));
        for (const auto& row : sub.local.rows) CHECK(row.size() >= 2);
        // Every subgraph edge exists in the parent.
        REQUIRE(sub.edges.size() == static_cast<std::size_t>(sub.local.edge_count()));
        for (auto [c, v] : sub.edges) {
            bool present = std::binary_search(H.rows[c].begin(), H.rows[c].end(), v);
            CHECK(present);
        }
        // Root is retained with its full parent degree.
        int rl = sub.local_check(sub.root);
        REQUIRE(rl >= 0);
        CHECK(sub.local.rows[rl].size() == H.rows[sub.root].size());
        for (int c : sub.check_ids) covered.insert(c);
        total_checks += static_cast<long>(sub.check_ids.size());
    }
    CHECK(static_cast<int>(covered.size()) == H.M);
    CHECK(total_checks >= H.M);

    // Deterministic in the seed.
    auto again = expand_subgraphs(H, 2, 5, 77);
    REQUIRE(again.subgraphs.size() == set.subgraphs.size());
    for (std::size_t t = 0; t < set.subgraphs.size(); ++t) {
        CHECK(again.subgraphs[t].check_ids == set.subgraphs[t].check_ids);
        CHECK(again.subgraphs[t].edges == set.subgraphs[t].edges);
    }

    // Shallow expansion cannot cover with two roots; the set grows.
    auto shallow = expand_subgraphs(H, 1, 2, 9);
    CHECK(shallow.subgraphs.size() > 2);
    std::set<int> cov2;
    for (const auto& sub : shallow.subgraphs)
        for (int c : sub.check_ids) cov2.insert(c);
    CHECK(static_cast<int>(cov2.size()) == H.M);

    auto bad = ParityCheckMatrix::from_rows(2, 3, {{0, 1}, {2}});
    CHECK_THROWS(expand_subgraphs(bad, 2, 1, 0));
    CHECK_THROWS(expand_subgraphs(H, 0, 1, 0));
    CHECK_THROWS(expand_subgraphs(H, 2, 0, 0));
}

TEST_CASE("design ensemble statistics") {
    auto ens = design_ensemble(500, 64, 2.0, 123);
    REQUIRE(ens.size() == 64);
    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (const auto& seq : ens) {
        REQUIRE(seq.size() == 500);
        for (double v : seq) {
            sum += v;
            sq += v * v;
            ++n;
        }
    }
    double mean = sum / n, var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.02));   // sigma^2/2
    CHECK(var == doctest::Approx(4.0).epsilon(0.05));    // sigma^2

    auto again = design_ensemble(500, 64, 2.0, 123);
    CHECK(again == ens);
    auto other = design_ensemble(500, 64, 2.0, 124);
    CHECK(other != ens);
}

TEST_CASE("subgraph beliefs") {
    // Zero inputs: the zero fixed point survives averaging.
    auto sub = make_sub(ParityCheckMatrix::from_rows(2, 3, {{0, 1}, {1, 2}}));
    std::vector<LlrSequence> zeros(4, LlrSequence(3, 0.0));
    auto st = subgraph_beliefs(sub, {1.0, 1.0}, zeros, 10, 1e-9);
    CHECK(st.nonconverged == 0);
    for (double v : st.psi) CHECK(v == 0.0);
    for (double v : st.beliefs) CHECK(v == 0.0);

    // Single parity check at rho = 1: closed-form posterior.
    auto spc = make_sub(ParityCheckMatrix::from_rows(1, 3, {{0, 1, 2}}));
    LlrSequence llr{1.2, -0.7, 0.4};
    auto res = subgraph_beliefs(spc, {1.0}, {llr}, 10, 1e-9);
    CHECK(res.nonconverged == 0);
    for (int j = 0; j < 3; ++j) {
        double prod = 1.0;
        for (int k = 0; k < 3; ++k)
            if (k != j) prod *= std::tanh(0.5 * llr[k]);
        double expect = llr[j] + 2.0 * std::atanh(prod);
        CHECK(res.beliefs[j] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(res.psi[j] == doctest::Approx(llr[j]).epsilon(1e-12));
    }

    // Saturated consistent inputs: beliefs pinned at the clip with the
    // right signs.
    LlrSequence hard{50.0, 50.0, 50.0};
    auto sat = subgraph_beliefs(spc, {1.0}, {hard}, 10, 1e-6);
    for (double v : sat.beliefs) CHECK(v == kLlrClip);

    CHECK_THROWS(subgraph_beliefs(sub, {1.0, 1.0}, {}, 10, 1e-9));
    CHECK_THROWS(subgraph_beliefs(sub, {1.0}, zeros, 10, 1e-9));
}

TEST_CASE("mutual information") {
    const double ln2 = std::log(2.0);
    // Uniform messages: exactly ln 2 at every degree.
    for (int d : {2, 3, 4, 6}) {
        std::vector<int> all(d);
        for (int j = 0; j < d; ++j) all[j] = j;
        auto sub = make_sub(ParityCheckMatrix::from_rows(1, d, {all}));
        SubgraphBeliefs st;
        st.psi.assign(d, 0.0);
        st.beliefs.assign(d, 0.0);
        auto info = mutual_information(sub, st);
        REQUIRE(info.size() == 1);
        CHECK(std::abs(info[0] - ln2) <= 1e-12);
    }

    // Degree-2 check against a direct two-outcome KL evaluation.
    auto pair_sub = make_sub(ParityCheckMatrix::from_rows(1, 2, {{0, 1}}));
    for (double lam : {0.3, 1.0, -2.0}) {
        SubgraphBeliefs st;
        st.psi = {lam, lam};
        auto info = mutual_information(pair_sub, st);
        double p = 1.0 / (1.0 + std::exp(lam)), q = 1.0 - p;
        double w00 = q * q, w11 = p * p, z = w00 + w11;
        double b00 = w00 / z, b11 = w11 / z;
        double m1 = b11;
        double direct = b00 * std::log(b00 / ((1 - m1) * (1 - m1))) +
                        b11 * std::log(b11 / (m1 * m1));
        CHECK(info[0] == doctest::Approx(direct).epsilon(1e-12));
        CHECK(info[0] >= 0.0);
    }

    // Saturated consistent messages: the joint collapses, information -> 0.
    {
        auto sub = make_sub(ParityCheckMatrix::from_rows(1, 3, {{0, 1, 2}}));
        SubgraphBeliefs st;
        st.psi = {50.0, 50.0, 50.0};
        auto info = mutual_information(sub, st);
        CHECK(info[0] >= 0.0);
        CHECK(info[0] < 1e-8);
    }

    // Nonnegative on random messages.
    {
        Rng rng(55);
        auto sub = make_sub(ParityCheckMatrix::from_rows(2, 4, {{0, 1, 2}, {1, 2, 3}}));
        for (int trial = 0; trial < 200; ++trial) {
            SubgraphBeliefs st;
            st.psi.resize(6);
            for (auto& v : st.psi) v = 5.0 * rng.gaussian();
            for (double v : mutual_information(sub, st)) CHECK(v >= 0.0);
        }
    }

    // Enumeration guard.
    std::vector<int> wide(21);
    for (int j = 0; j < 21; ++j) wide[j] = j;
    auto guard = make_sub(ParityCheckMatrix::from_rows(1, 21, {wide}));
    SubgraphBeliefs st;
    st.psi.assign(21, 0.0);
    CHECK_THROWS(mutual_information(guard, st));
}

TEST_CASE("linear subproblem") {
    // Tree: everything is accepted.
    auto tree = make_sub(ParityCheckMatrix::from_rows(2, 5, {{0, 1, 2}, {2, 3, 4}}));
    auto rho = linear_subproblem({0.2, 0.9}, tree, 0.1);
    CHECK(rho == std::vector<double>(2, 1.0));

    // Two checks over the same variable pair: the lighter one is rejected.
    auto cyc = make_sub(ParityCheckMatrix::from_rows(2, 2, {{0, 1}, {0, 1}}));
    CHECK(linear_subproblem({0.5, 0.3}, cyc, 0.1) ==
          std::vector<double>{1.0, 0.1});
    CHECK(linear_subproblem({0.3, 0.5}, cyc, 0.1) ==
          std::vector<double>{0.1, 1.0});
    // Ties go to the lower local index.
    CHECK(linear_subproblem({0.4, 0.4}, cyc, 0.1) ==
          std::vector<double>{1.0, 0.1});

    CHECK_THROWS(linear_subproblem({0.4}, cyc, 0.1));
    CHECK_THROWS(linear_subproblem({-0.1, 0.4}, cyc, 0.1));

    // Property: the accepted set is acyclic and maximal.
    Rng rng(66);
    for (int trial = 0; trial < 30; ++trial) {
        auto H = peg_construct(12, 6, std::vector<int>(12, 2), rng.next());
        auto sub = make_sub(H);
        std::vector<double> w(6);
        for (auto& v : w) v = rng.uniform();
        auto r = linear_subproblem(w, sub, 0.1);
        std::vector<std::vector<int>> rows;
        std::vector<int> accepted;
        for (int l = 0; l < 6; ++l)
            if (r[l] == 1.0) {
                rows.push_back(H.rows[l]);
                accepted.push_back(l);
            }
        const int picked_m = static_cast<int>(rows.size());
        auto picked = ParityCheckMatrix::from_rows(picked_m, H.N, std::move(rows));
        CHECK(girth(picked) == kInfiniteGirth);
        // Maximality: every rejected check would close a cycle.
        for (int l = 0; l < 6; ++l) {
            if (r[l] == 1.0) continue;
            std::vector<std::vector<int>> aug;
            for (int a : accepted) aug.push_back(H.rows[a]);
            aug.push_back(H.rows[l]);
            const int aug_m = static_cast<int>(aug.size());
            auto with = ParityCheckMatrix::from_rows(aug_m, H.N, std::move(aug));
            CHECK(girth(with) != kInfiniteGirth);
        }
    }
}

TEST_CASE("line search") {
    auto H = peg_construct(16, 8, std::vector<int>(16, 3), 12);
    auto set = expand_subgraphs(H, 2, 1, 3);
    const auto& sub = set.subgraphs.front();
    EkarConfig cfg;
    cfg.ensemble_size = 8;
    cfg.grid = 4;
    auto ens = design_ensemble(sub.local.N, cfg.ensemble_size, cfg.design_sigma, 9);

    std::vector<double> start(sub.local.M, 1.0);
    // Degenerate direction: alpha 0 without any extra evaluation.
    double f = -1.0;
    std::vector<double> info;
    double a = line_search_alpha(sub, start, start, ens, cfg, nullptr, nullptr,
                                 &f, &info);
    CHECK(a == 0.0);
    REQUIRE(info.size() == static_cast<std::size_t>(sub.local.M));

    // A real direction never makes the objective worse than alpha = 0.
    auto vertex = linear_subproblem(info, sub, cfg.rho_floor);
    double f_best = 0.0;
    std::vector<double> info_best;
    a = line_search_alpha(sub, start, vertex, ens, cfg, &f, &info, &f_best,
                          &info_best);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    CHECK(f_best <= f);

    // grid = 1 restricts the step to the endpoints.
    EkarConfig ends = cfg;
    ends.grid = 1;
    double fe;
    std::vector<double> ie;
    double ae = line_search_alpha(sub, start, vertex, ens, ends, &f, &info, &fe, &ie);
    CHECK((ae == 0.0 || ae == 1.0));
}

TEST_CASE("subgraph optimization") {
    EkarConfig cfg;
    cfg.ensemble_size = 8;
    cfg.grid = 4;
    cfg.recursions = 40;

    // Tree subgraph: full weights, immediate gap closure.
    auto tree = make_sub(ParityCheckMatrix::from_rows(3, 7,
                                                      {{0, 1, 2}, {2, 3, 4}, {4, 5, 6}}));
    auto st = optimize_subgraph_rho(tree, cfg, 4);
    CHECK(st.rho == std::vector<double>(3, 1.0));
    CHECK(st.converged);
    CHECK(st.recursions <= 3);
    CHECK(st.objective - st.lower < cfg.tol);

    // Loopy subgraph: bound bookkeeping holds at every recorded recursion.
    auto H = peg_construct(24, 12, std::vector<int>(24, 3), 8);
    auto set = expand_subgraphs(H, 3, 1, 3);
    auto lo = optimize_subgraph_rho(set.subgraphs.front(), cfg, 21);
    REQUIRE(lo.upper_trace.size() == static_cast<std::size_t>(lo.recursions));
    for (int r = 0; r < lo.recursions; ++r) {
        CHECK(lo.upper_trace[r] >= lo.lower_trace[r]);
        if (r > 0) {
            CHECK(lo.lower_trace[r] >= lo.lower_trace[r - 1]);  // z monotone
            CHECK(lo.upper_trace[r] <= lo.upper_trace[r - 1]);  // alpha=0 cached
        }
    }
    for (double v : lo.rho) {
        CHECK(v >= cfg.rho_floor);
        CHECK(v <= 1.0);
    }

    // Deterministic in the seed.
    auto again = optimize_subgraph_rho(set.subgraphs.front(), cfg, 21);
    CHECK(again.rho == lo.rho);
    CHECK(again.objective == lo.objective);
}

TEST_CASE("merge rule") {
    SubgraphSet set;
    set.requested = 2;
    set.subgraphs.push_back(make_sub(ParityCheckMatrix::from_rows(2, 3, {{0, 1}, {1, 2}})));
    Subgraph second;
    second.root = 1;
    second.check_ids = {1, 2};
    second.var_ids = {0, 1, 2};
    second.local = ParityCheckMatrix::from_rows(2, 3, {{0, 1}, {1, 2}});
    set.subgraphs.push_back(second);

    // Check 1 is covered twice; the better (lower) objective wins.
    auto rho = merge_rho(set, {{0.7, 0.7}, {1.0, 0.5}}, {-1.2, -0.8});
    CHECK(rho.rho == std::vector<double>{0.7, 0.7, 0.5});
    auto rho2 = merge_rho(set, {{0.7, 0.7}, {1.0, 0.5}}, {-0.8, -1.2});
    CHECK(rho2.rho == std::vector<double>{0.7, 1.0, 0.5});
    // Ties: the earlier subgraph wins.
    auto rho3 = merge_rho(set, {{0.7, 0.7}, {1.0, 0.5}}, {-1.0, -1.0});
    CHECK(rho3.rho[1] == 0.7);

    // Incomplete coverage is a caller error.
    SubgraphSet partial;
    partial.requested = 1;
    partial.subgraphs.push_back(second);
    CHECK_THROWS(merge_rho(partial, {{1.0, 0.5}}, {-1.0}));
    CHECK_THROWS(merge_rho(set, {{0.7, 0.7}}, {-1.2, -0.8}));
}

TEST_CASE("ekar end to end on a small code") {
    auto H = peg_construct(60, 30, std::vector<int>(60, 3), 2);
    EkarConfig cfg;
    cfg.d_max = 2;
    cfg.T = 4;
    cfg.recursions = 30;
    cfg.ensemble_size = 8;
    cfg.grid = 4;
    auto res = ekar_rho(H, cfg, 99);
    REQUIRE(res.rho.size() == H.M);
    CHECK_NOTHROW(res.rho.validate(H.M));
    for (double v : res.rho.rho) {
        CHECK(v >= cfg.rho_floor);
        CHECK(v <= 1.0);
    }
    for (const auto& st : res.states)
        for (int r = 0; r < st.recursions; ++r)
            CHECK(st.upper_trace[r] >= st.lower_trace[r]);

    auto again = ekar_rho(H, cfg, 99);
    CHECK(again.rho.rho == res.rho.rho);

    // The designed vector feeds the decode engine directly.
    RwDecoder dec(H);
    auto out = dec.decode(res.rho, LlrSequence(H.N, 1.0), 5);
    CHECK(out.beliefs.size() == static_cast<std::size_t>(H.N));

    EkarConfig val = cfg;
    val.merge_by_validation = true;
    val.validation_words = 4;
    auto vres = ekar_rho(H, val, 99);
    REQUIRE(vres.rho.size() == H.M);
    CHECK_NOTHROW(vres.rho.validate(H.M));
    CHECK(vres.merge_objectives.size() == vres.set.subgraphs.size());
    for (double o : vres.merge_objectives) {
        CHECK(o >= 0.0);
        CHECK(o <= 1.0);  // validation objectives are bit-error rates
    }
}

TEST_CASE("rho file round trip") {
    ReweightVector rho{{1.0, 2.0 / 3.0, 0.1, 0.123456789012345678}};
    std::stringstream ss;
    write_rho(ss, rho, 0xdeadbeefcafe1234ull, "ekar", "d_max=4;T=20");
    auto rf = read_rho(ss);
    CHECK(rf.code_hash == 0xdeadbeefcafe1234ull);
    CHECK(rf.designer == "ekar");
    CHECK(rf.config == "d_max=4;T=20");
    REQUIRE(rf.rho.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(rf.rho.rho[i] == rho.rho[i]);

    std::stringstream empty("# code 0\n# designer urw\n# config x\n");
    CHECK_THROWS(read_rho(empty));
}
