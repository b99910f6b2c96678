#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nets.hpp"
#include "random_trees.hpp"
#include "snc/pmoo.hpp"

using namespace snc;
using namespace testutil;

namespace {

ReducedTree reduce(const Network& net) {
    auto r = tree_reduce(net);
    REQUIRE(tree_reducible(r));
    return std::get<ReducedTree>(r);
}

ResidualRates direct_terms(double theta, std::vector<double> on_path, double foi_rho,
                           double foi_sigma = 0.0, double log_pref = 0.0) {
    ResidualRates rr;
    rr.theta = theta;
    rr.on_path = std::move(on_path);
    rr.foi_rho = foi_rho;
    rr.foi_sigma = foi_sigma;
    rr.log_prefactor = log_pref;
    rr.feasible = true;
    return rr;
}

}  // namespace

TEST_CASE("e2e generating function of the interleaved tandem") {
    const auto a = ArrivalModel::exponential(1.5);
    const auto tree = reduce(interleaved_tandem(a));
    const double theta = 0.3;
    const double rho = envelope(a).rho(theta);
    const auto gf = e2e_gf(tree, theta);
    REQUIRE(gf.has_value());
    REQUIRE(gf->poles.size() == 3);
    // One pole per foi-path server with rates C1-rho, C2-2rho, C3-rho.
    CHECK(gf->poles[0] == Catch::Approx(std::exp(-theta * (2.5 - rho))).epsilon(1e-12));
    CHECK(gf->poles[1] == Catch::Approx(std::exp(-theta * (3.0 - 2.0 * rho))).epsilon(1e-12));
    CHECK(gf->poles[2] == Catch::Approx(std::exp(-theta * (2.0 - rho))).epsilon(1e-12));
    // No off-path servers and all sigma terms vanish: unit prefactor.
    CHECK(gf->log_c == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("e2e generating function of the small tree") {
    const auto a = ArrivalModel::exponential(2.0);
    const auto tree = reduce(small_tree(a));
    const double theta = 0.4;
    const double rho = envelope(a).rho(theta);
    const auto gf = e2e_gf(tree, theta);
    REQUIRE(gf.has_value());
    REQUIRE(gf->poles.size() == 2);
    // z-factors only for servers crossed by the foi (1 and 3); server 2
    // contributes the off-path factor 1/(1 - exp(-theta(C2 - rho_A2))).
    CHECK(gf->poles[0] == Catch::Approx(std::exp(-theta * (2.0 - rho))).epsilon(1e-12));
    CHECK(gf->poles[1] == Catch::Approx(std::exp(-theta * (2.0 - rho))).epsilon(1e-12));
    CHECK(gf->log_c == Catch::Approx(-log1mexp(theta * (2.0 - rho))).epsilon(1e-12));
}

TEST_CASE("e2e generating function of a lone server") {
    const auto a = ArrivalModel::exponential(1.0);
    const auto tree = reduce(single_node(a, 2.0));
    const auto gf = e2e_gf(tree, 0.5);
    REQUIRE(gf.has_value());
    REQUIRE(gf->poles.size() == 1);
    CHECK(gf->poles[0] == Catch::Approx(std::exp(-0.5 * 2.0)).epsilon(1e-12));
    CHECK(gf->log_c == 0.0);
}

TEST_CASE("stability violations are reported as infeasible, not thrown") {
    const auto a = ArrivalModel::exponential(1.0);
    // Off-path residual rate negative: flow 2 alone overloads server 2.
    auto net = small_tree(a, 0.5);
    const auto tree = reduce(net);
    CHECK_FALSE(residual_rates(tree, 0.8).feasible);
    CHECK(delay_violation(tree, 0.8, 5.0) == kInf);
}

TEST_CASE("coefficient oracle matches the composed generating function") {
    const auto a = ArrivalModel::exponential(1.5);
    const auto tree = reduce(interleaved_tandem(a));
    const double theta = 0.3;
    const auto gf = e2e_gf(tree, theta);
    REQUIRE(gf.has_value());
    for (int t = 0; t <= 40; ++t) {
        const double oracle = e2e_gf_coefficient_oracle(tree, theta, t);
        CHECK(coefficient(*gf, t) == Catch::Approx(oracle).epsilon(1e-9));
    }
    SECTION("t = 0 is exactly the prefactor") {
        CHECK(e2e_gf_coefficient_oracle(tree, theta, 0) ==
              Catch::Approx(std::exp(gf->log_c)).epsilon(1e-12));
    }
    SECTION("single-pole tree is plainly geometric") {
        const auto single = reduce(single_node(a, 3.0));
        const auto sgf = e2e_gf(single, theta);
        for (int t : {0, 1, 7, 33})
            CHECK(e2e_gf_coefficient_oracle(single, theta, t) ==
                  Catch::Approx(std::exp(sgf->log_c) * std::pow(sgf->poles[0], t))
                      .epsilon(1e-12));
    }
    SECTION("size limits are enforced") {
        CHECK_THROWS_AS(e2e_gf_coefficient_oracle(tree, theta, 61), std::invalid_argument);
    }
}

TEST_CASE("simplification to the dominant pole") {
    SECTION("all rates equal is the identity") {
        const GeomGF f{0.25, {0.5, 0.5, 0.5}};
        const auto g = simplify(f);
        CHECK(g.log_c == f.log_c);
        CHECK(g.poles == f.poles);
    }
    SECTION("distinct rates fold into the prefactor") {
        // rho' in {1.0, 2.0} at theta = 1: the faster pole folds as
        // 1/(1 - e^{-(2-1)}).
        const double theta = 1.0;
        const GeomGF f{0.0, {std::exp(-theta * 1.0), std::exp(-theta * 2.0)}};
        const auto g = simplify(f);
        REQUIRE(g.poles.size() == 1);
        CHECK(g.poles[0] == Catch::Approx(std::exp(-1.0)));
        CHECK(g.log_c == Catch::Approx(-std::log1p(-std::exp(-1.0))).epsilon(1e-12));
    }
    SECTION("coefficient-wise dominance on random instances") {
        Rng rng(11);
        std::uniform_real_distribution<double> pole(0.05, 0.95);
        std::uniform_int_distribution<int> npoles(1, 5);
        for (int rep = 0; rep < 100; ++rep) {
            GeomGF f{0.0, {}};
            const int m = npoles(rng);
            for (int j = 0; j < m; ++j) f.poles.push_back(pole(rng));
            const auto g = simplify(f);
            const auto sf = series_oracle(f, 50);
            const auto sg = series_oracle(g, 50);
            for (int t = 0; t <= 50; ++t)
                CHECK(sg[std::size_t(t)] >= sf[std::size_t(t)] * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("backlog bound") {
    const auto a = ArrivalModel::exponential(1.0);
    const auto tree = reduce(single_node(a, 2.0));
    SECTION("clamped at small b, closed form at larger b") {
        CHECK(backlog_bound(tree, 0.5, 0.0) == 1.0);  // raw value ~3.785 clamps
        const double raw = 1.0 / (1.0 - std::exp(-0.5 * (2.0 - 2.0 * std::log(2.0))));
        CHECK(backlog_bound(tree, 0.5, 20.0) ==
              Catch::Approx(raw * std::exp(-10.0)).epsilon(1e-9));
    }
    SECTION("monotone to zero as b grows") {
        double prev = 1.0;
        for (double b : {5.0, 10.0, 20.0, 40.0, 80.0}) {
            const double v = backlog_bound(tree, 0.5, b);
            CHECK(v <= prev);
            prev = v;
        }
        CHECK(prev < 1e-15);
    }
}

TEST_CASE("delay bound closed forms against the tail-sum pipeline") {
    SECTION("single node reduces to the textbook bullet") {
        const auto a = ArrivalModel::exponential(1.0);
        const auto tree = reduce(single_node(a, 2.0));
        const double theta = 0.5, T = 12.0;
        const double rho_a = 2.0 * std::log(2.0);
        const double expected =
            std::exp(-theta * 2.0 * T) / (1.0 - std::exp(-theta * (2.0 - rho_a)));
        const auto rr = residual_rates(tree, theta);
        CHECK(delay_violation_distinct(rr, T) == Catch::Approx(expected).epsilon(1e-12));
        CHECK(delay_violation(rr, T) == Catch::Approx(expected).epsilon(1e-12));
    }
    SECTION("interleaved tandem at fixed theta equals the generic pipeline") {
        const auto a = ArrivalModel::exponential(1.5);
        const auto tree = reduce(interleaved_tandem(a));
        const auto rr = residual_rates(tree, 0.3);
        REQUIRE(rr.stable());
        for (int T : {0, 1, 5, 10, 25, 50}) {
            const double closed = delay_violation(rr, T);
            const double generic = delay_violation_via_tailsum(rr, T);
            CHECK(closed == Catch::Approx(generic).epsilon(1e-6));
        }
    }
    SECTION("equal-rate formula matches the pipeline") {
        const auto rr = direct_terms(0.4, {2.0, 2.0}, 1.0);
        CHECK(delay_violation_equal(rr, 5.0) ==
              Catch::Approx(delay_violation_via_tailsum(rr, 5)).epsilon(1e-6));
        CHECK(delay_violation(rr, 5.0) == delay_violation_equal(rr, 5.0));
    }
    SECTION("equal-rate formula at n = 1 equals the distinct form") {
        const auto rr = direct_terms(0.7, {1.5}, 0.8);
        for (double T : {1.0, 4.0, 9.0})
            CHECK(delay_violation_equal(rr, T) ==
                  Catch::Approx(delay_violation_distinct(rr, T)).epsilon(1e-12));
    }
    SECTION("general bound: k = n coincides with the equal form") {
        const auto rr = direct_terms(0.4, {2.0, 2.0, 2.0}, 1.2);
        for (double T : {1.0, 3.0, 10.0})
            CHECK(delay_violation_general(rr, T) ==
                  Catch::Approx(delay_violation_equal(rr, T)).epsilon(1e-12));
    }
    SECTION("general bound dominates the distinct form") {
        Rng rng(23);
        std::uniform_real_distribution<double> gap(0.05, 1.0), base(0.5, 2.0);
        std::uniform_int_distribution<int> nn(2, 4);
        for (int rep = 0; rep < 50; ++rep) {
            const int n = nn(rng);
            std::vector<double> rates{base(rng)};
            for (int j = 1; j < n; ++j) rates.push_back(rates.back() + gap(rng));
            const double foi_rho = rates[0] * std::uniform_real_distribution<double>(
                                                  0.3, 0.9)(rng);
            const auto rr = direct_terms(0.5, rates, foi_rho);
            for (double T : {1.0, 5.0, 20.0}) {
                const double tight = delay_violation_distinct(rr, T);
                const double coarse = delay_violation_general(rr, T);
                CHECK(coarse >= tight * (1.0 - 1e-9));
            }
        }
    }
    SECTION("bounds are non-increasing in T") {
        const auto a = ArrivalModel::mmoo(0.5, 0.5, 1.4);
        const auto tree = reduce(interleaved_tandem(a));
        const auto rr = residual_rates(tree, 0.4);
        REQUIRE(rr.stable());
        double prev_d = kInf, prev_g = kInf;
        for (int T = 1; T <= 30; ++T) {
            const double d = delay_violation_distinct(rr, T);
            const double g = delay_violation_general(rr, T);
            CHECK(d <= prev_d * (1.0 + 1e-12));
            CHECK(g <= prev_g * (1.0 + 1e-12));
            prev_d = d;
            prev_g = g;
        }
    }
}

TEST_CASE("delay oracle equivalence on random trees") {
    Rng rng(5);
    int done = 0;
    while (done < 25) {
        const auto net = random_tree_network(rng, done % 5 == 4);
        const auto r = tree_reduce(net);
        REQUIRE(tree_reducible(r));
        const auto& tree = std::get<ReducedTree>(r);
        const auto theta = pick_feasible_theta(tree, rng);
        if (!theta) continue;
        const auto rr = residual_rates(tree, *theta);
        if (!rr.stable()) continue;
        for (int T : {0, 1, 3, 10, 30, 50}) {
            const double closed = delay_violation(rr, T);
            const double generic = delay_violation_via_tailsum(rr, T);
            INFO("instance " << done << " theta " << *theta << " T " << T);
            CHECK(closed == Catch::Approx(generic).epsilon(1e-6));
        }
        ++done;
    }
}

TEST_CASE("e2e coefficients match the composition oracle on random trees") {
    Rng rng(6);
    int done = 0;
    while (done < 15) {
        const auto net = random_tree_network(rng);
        const auto r = tree_reduce(net);
        const auto& tree = std::get<ReducedTree>(r);
        const auto theta = pick_feasible_theta(tree, rng);
        if (!theta) continue;
        const auto gf = e2e_gf(tree, *theta);
        REQUIRE(gf.has_value());
        for (int t : {0, 1, 2, 5, 13, 40}) {
            const double oracle = e2e_gf_coefficient_oracle(tree, *theta, t);
            INFO("instance " << done << " t " << t);
            CHECK(log_coefficient(*gf, t) == Catch::Approx(std::log(oracle)).margin(1e-9));
        }
        ++done;
    }
}

TEST_CASE("departure bounding generating function") {
    const auto a = ArrivalModel::exponential(1.0);
    const double theta = 0.5;
    const double rho_a = 2.0 * std::log(2.0);
    SECTION("single node specialisation") {
        const auto tree = reduce(single_node(a, 2.0));
        const auto gf = departure_gf(tree, theta);
        REQUIRE(gf.has_value());
        REQUIRE(gf->poles.size() == 1);
        CHECK(gf->poles[0] == Catch::Approx(std::exp(theta * rho_a)).epsilon(1e-12));
        CHECK(gf->log_c == Catch::Approx(-log1mexp(theta * (2.0 - rho_a))).epsilon(1e-12));
    }
    SECTION("huge service rate passes the arrival through") {
        const auto tree = reduce(single_node(a, 1e9));
        const auto gf = departure_gf(tree, theta);
        REQUIRE(gf.has_value());
        CHECK(gf->log_c == Catch::Approx(0.0).margin(1e-12));
        CHECK(gf->poles[0] == Catch::Approx(std::exp(theta * rho_a)).epsilon(1e-12));
    }
    SECTION("departure envelope matches the gf prefactor") {
        const auto tree = reduce(single_node(a, 2.0));
        const auto dep = departure_envelope(tree);
        const auto gf = departure_gf(tree, theta);
        CHECK(dep.env.rho(theta) == Catch::Approx(rho_a).epsilon(1e-12));
        CHECK(theta * dep.env.sigma(theta) == Catch::Approx(gf->log_c).epsilon(1e-10));
        CHECK(dep.sources == std::vector<std::string>{"A:1", "S:1"});
        // theta_max sits at the stability boundary: rho_A(t) = 2 at t*.
        CHECK(dep.env.theta_max() < envelope(a).theta_max());
        CHECK(residual_rates(tree, dep.env.theta_max() * 0.999).stable());
        CHECK_FALSE(residual_rates(tree, std::min(dep.env.theta_max() * 1.001, 0.999)).stable());
    }
}

TEST_CASE("isolated flows do not change bounds bit for bit") {
    const auto a = ArrivalModel::exponential(1.5);
    auto net = interleaved_tandem(a);
    const auto before = reduce(net);
    net.servers.push_back({"9", ServiceModel::constant_rate(4.0)});
    net.flows.push_back({"iso", {"9"}, a, {}, nullptr, ""});
    const auto after = reduce(net);
    for (double theta : {0.2, 0.35}) {
        for (double T : {4.0, 16.0}) {
            const double x = delay_violation(before, theta, T);
            const double y = delay_violation(after, theta, T);
            CHECK(x == y);
        }
    }
}
