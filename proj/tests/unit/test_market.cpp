#include <doctest.h>

#include <cmath>
#include <map>

#include "rcl/market.hpp"
#include "unit/test_helpers.hpp"

using namespace rcl;
using markov::Frequency;

namespace {

market::SentimentMarketSpec example_spec() {
    return {1.0 / 3.0,
            2.0 / 3.0,
            0.01,
            -0.01,
            Frequency(2.0 / 3.0, 1.0 / 3.0),
            market::DemandCurve::linear(3.45, 1.0),
            30,
            10};
}

}  // namespace

TEST_CASE("profit coefficient basics") {
    for (double y : {0.1, 0.3, 0.5, 0.9}) {
        CHECK(market::phi(y, 0.0) == doctest::Approx(1.0 - y).epsilon(1e-15));
    }
    CHECK(market::phi(0.5, 0.1) == doctest::Approx(0.495).epsilon(1e-15));
    CHECK(market::phi(0.5, -0.1) == doctest::Approx(0.495).epsilon(1e-15));
    CHECK(market::phi(1.0 / 3.0, 0.01) == doctest::Approx(0.666641749534).epsilon(1e-10));
    CHECK(market::phi(2.0 / 3.0, 0.01) == doctest::Approx(0.333232666667).epsilon(1e-10));
    CHECK_THROWS_AS(market::phi(0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(market::phi(0.5, 1.0), ConfigError);
}

TEST_CASE("optimal labor") {
    CHECK(market::optimal_labor(0.0, 0.5, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(market::optimal_labor(0.01, 1.0 / 3.0, 1.397) ==
          doctest::Approx(1.676010248).epsilon(1e-8));
    CHECK(market::optimal_labor(0.02, 0.4, 1.3) > market::optimal_labor(0.01, 0.4, 1.3));
    CHECK_THROWS_AS(market::optimal_labor(0.0, 0.5, 0.0), ConfigError);
}

TEST_CASE("profit coefficient grid properties") {
    for (double y : {0.1, 0.3, 0.45, 0.55, 0.7, 0.9}) {
        const auto report = market::check_phi_properties(y, 1e-3);
        CHECK(report.pass);
    }
    const auto symmetric = market::check_phi_properties(0.5, 1e-3);
    CHECK(symmetric.pass);
    CHECK(symmetric.max_symmetry_gap <= 1e-12);
    CHECK(market::phi(0.3, 0.2) > market::phi(0.3, -0.2));
    CHECK(market::phi(0.7, 0.2) < market::phi(0.7, -0.2));
}

TEST_CASE("nondominated technology search") {
    SUBCASE("symmetric pair returns the canonical split") {
        const auto [y_a, y_b] = market::find_nondominated_technologies(0.01, -0.01);
        CHECK(y_a == doctest::Approx(1.0 / 3.0));
        CHECK(y_b == doctest::Approx(2.0 / 3.0));
        CHECK(market::phi(y_a, 0.01) > market::phi(y_a, -0.01));
        CHECK(market::phi(y_b, 0.01) < market::phi(y_b, -0.01));
    }
    SUBCASE("a more irrational optimist is dominated at every exponent") {
        // phi_y(0.02) < phi_y(-0.01) for all y in (0,1): the search has no
        // qualifying y_a and reports the failure.
        CHECK_THROWS_AS(market::find_nondominated_technologies(0.02, -0.01), NumericalError);
    }
    SUBCASE("input orientation is enforced") {
        CHECK_THROWS_AS(market::find_nondominated_technologies(-0.01, 0.01), ConfigError);
        CHECK_THROWS_AS(market::find_nondominated_technologies(0.01, -0.02), ConfigError);
    }
}

TEST_CASE("sentiment classification") {
    SUBCASE("a rational sentiment dominates") {
        auto spec = example_spec();
        spec.alpha = 0.0;
        spec.beta = 0.05;
        const auto cls = market::classify_sentiments(spec);
        CHECK(cls.pair_case == market::SentimentPair::RationalPresent);
        CHECK(cls.induced_case == markov::DominanceCase::StrictDominance);
        CHECK(cls.preferred_on_a == market::Sentiment::Alpha);
        CHECK(cls.preferred_on_b == market::Sentiment::Alpha);
        CHECK(cls.alpha_is_chain_alpha);
    }
    SUBCASE("symmetric opposite sentiments split the problems") {
        const auto cls = market::classify_sentiments(example_spec());
        CHECK(cls.pair_case == market::SentimentPair::SymmetricOpposite);
        CHECK(cls.induced_case == markov::DominanceCase::NoDominance);
        CHECK(cls.preferred_on_a == market::Sentiment::Alpha);
        CHECK(cls.preferred_on_b == market::Sentiment::Beta);
        CHECK(cls.alpha_is_chain_alpha);
    }
    SUBCASE("same direction: the milder sentiment dominates") {
        auto spec = example_spec();
        spec.alpha = 0.02;
        spec.beta = 0.01;
        const auto cls = market::classify_sentiments(spec);
        CHECK(cls.pair_case == market::SentimentPair::SameDirection);
        CHECK(cls.induced_case == markov::DominanceCase::StrictDominance);
        CHECK(cls.preferred_on_a == market::Sentiment::Beta);
        CHECK_FALSE(cls.alpha_is_chain_alpha);
    }
    SUBCASE("asymmetric opposite pair with a milder pessimist") {
        auto spec = example_spec();
        spec.alpha = 0.02;
        spec.beta = -0.01;
        const auto cls = market::classify_sentiments(spec);
        CHECK(cls.pair_case == market::SentimentPair::AsymmetricOpposite);
        // the milder pessimist wins on both weathers at these exponents
        CHECK(cls.induced_case == markov::DominanceCase::StrictDominance);
        CHECK(cls.preferred_on_a == market::Sentiment::Beta);
        CHECK(cls.preferred_on_b == market::Sentiment::Beta);
        CHECK_FALSE(cls.alpha_is_chain_alpha);
    }
    SUBCASE("exact profit ties are rejected") {
        auto spec = example_spec();
        spec.y_a = 0.25;
        spec.y_b = 0.5;  // phi_{1/2}(r) = phi_{1/2}(-r) exactly
        CHECK_THROWS_AS(market::classify_sentiments(spec), ConfigError);
    }
}

TEST_CASE("market clearing reproduces the consensus prices") {
    const auto spec = example_spec();
    SUBCASE("optimistic consensus") {
        const auto outcome = market::clear_market(spec, 30, {20, 0});
        CHECK(outcome.price == doctest::Approx(1.39683921204546).epsilon(1e-9));
        CHECK(std::abs(outcome.price - 1.397) <= 1e-3);
        // clearing residual at the returned price
        const double supply =
            (20.0 / 30.0) * std::pow(1.01 * outcome.price, 1.5) +
            (10.0 / 30.0) * std::pow(1.01 * outcome.price, 3.0);
        CHECK(std::abs(supply - (3.45 - outcome.price)) <= 1e-10);
        // profits match the coefficient form u(R,i) = phi p^(1/(1-y))
        CHECK(outcome.profit_by_cell[0] ==
              doctest::Approx(market::phi(spec.y_a, 0.01) * std::pow(outcome.price, 1.5))
                  .epsilon(1e-12));
        CHECK(outcome.profit_by_cell[1] ==
              doctest::Approx(market::phi(spec.y_b, 0.01) * std::pow(outcome.price, 3.0))
                  .epsilon(1e-12));
    }
    SUBCASE("pessimistic consensus") {
        const auto outcome = market::clear_market(spec, 0, {0, 20});
        CHECK(outcome.price == doctest::Approx(1.4182346610852).epsilon(1e-9));
        CHECK(std::abs(outcome.price - 1.418) <= 1e-3);
    }
    SUBCASE("per-capita formulation is scale invariant") {
        auto doubled = spec;
        doubled.n_agents = 60;
        doubled.initial_alpha_count = 20;
        const double p1 = market::clear_market(spec, 30, {20, 0}).price;
        const double p2 = market::clear_market(doubled, 60, {40, 0}).price;
        CHECK(p1 == doctest::Approx(p2).epsilon(1e-12));
    }
    SUBCASE("degenerate demand cannot bracket") {
        auto bad = spec;
        bad.demand = market::DemandCurve::near_elastic(1e-12, 1.0);
        CHECK_THROWS_AS(market::clear_market(bad, 30, {20, 0}), NumericalError);
    }
}

TEST_CASE("consensus price equals the full-consensus clearing price") {
    const auto spec = example_spec();
    CHECK(market::consensus_price(0.01, spec) ==
          doctest::Approx(market::clear_market(spec, 30, {20, 0}).price).epsilon(1e-12));
    SUBCASE("near-elastic demand pins the price at the anchor") {
        auto stiff = spec;
        stiff.demand = market::DemandCurve::near_elastic(1.5, 1e4);
        CHECK(std::abs(market::consensus_price(0.01, stiff) - 1.5) <= 3e-4);
        CHECK(std::abs(market::consensus_price(-0.2, stiff) - 1.5) <= 2e-3);
    }
}

TEST_CASE("welfare at the example point") {
    const auto spec = example_spec();
    const double w_alpha = market::welfare(0.01, spec);
    const double w_beta = market::welfare(-0.01, spec);
    CHECK(w_alpha == doctest::Approx(1.03644102811836).epsilon(1e-8));
    CHECK(w_beta == doctest::Approx(1.06748903649734).epsilon(1e-8));
    CHECK(std::abs(w_alpha - 1.037) <= 1e-3);
    CHECK(std::abs(w_beta - 1.067) <= 1e-3);
    CHECK(w_alpha < w_beta);  // the consensus sentiment is socially inferior
}

TEST_CASE("rational expectation maximizes welfare under near-elastic demand") {
    auto spec = example_spec();
    spec.demand = market::DemandCurve::near_elastic(1.5, 1e4);
    const double w0 = market::welfare(0.0, spec);
    for (double r = -0.5; r <= 0.5001; r += 0.025) {
        if (std::abs(r) < 1e-12) continue;
        CHECK(market::welfare(r, spec) < w0);
    }
}

TEST_CASE("welfare decomposition") {
    const auto spec = example_spec();
    const auto terms = market::welfare_decomposition(spec);
    const double direct = market::welfare(spec.alpha, spec) - market::welfare(spec.beta, spec);
    CHECK(terms[0] + terms[1] + terms[2] == doctest::Approx(direct).epsilon(1e-10));
    CHECK(direct == doctest::Approx(-0.031048008).epsilon(1e-6));
    CHECK(direct > -0.035);
    CHECK(direct < -0.025);

    // price terms shrink as demand approaches perfect elasticity
    auto soft = spec;
    soft.demand = market::DemandCurve::near_elastic(1.5, 1e2);
    auto stiff = spec;
    stiff.demand = market::DemandCurve::near_elastic(1.5, 1e4);
    const auto soft_terms = market::welfare_decomposition(soft);
    const auto stiff_terms = market::welfare_decomposition(stiff);
    CHECK(std::abs(stiff_terms[1]) < std::abs(soft_terms[1]));
    CHECK(std::abs(stiff_terms[2]) < std::abs(soft_terms[2]));
    CHECK(std::abs(stiff_terms[1]) + std::abs(stiff_terms[2]) < 1e-4);
}

TEST_CASE("dominant-sentiment welfare demo") {
    auto spec = example_spec();
    spec.alpha = 0.01;
    spec.beta = 0.02;  // same direction, alpha milder
    const auto report = market::dominant_welfare_demo(spec);
    CHECK(report.found);
    CHECK(report.w_first > report.w_second);

    auto rational = example_spec();
    rational.alpha = 0.0;
    rational.beta = -0.02;
    CHECK(market::dominant_welfare_demo(rational).found);

    CHECK_THROWS_AS(market::dominant_welfare_demo(example_spec()), ConfigError);
}

TEST_CASE("suboptimal consensus demo") {
    const auto report =
        market::suboptimal_consensus_demo(0.01, -0.01, Frequency(2.0 / 3.0, 1.0 / 3.0));
    CHECK(report.found);
    CHECK(report.w_first < report.w_second);
    CHECK(report.anchor_price > 1.0);
    CHECK_THROWS_AS(market::suboptimal_consensus_demo(-0.01, 0.01, Frequency(0.5, 0.5)),
                    ConfigError);

    // a steep technology with a stiff anchor above 1 flips the welfare ranking
    auto spec = example_spec();
    spec.y_b = 0.9;
    spec.demand = market::DemandCurve::near_elastic(1.5, 1e4);
    CHECK(market::welfare(0.01, spec) < market::welfare(-0.01, spec));
}

TEST_CASE("market learning runs") {
    SUBCASE("a rational fraction converts the whole market") {
        auto spec = example_spec();
        spec.alpha = 0.0;
        spec.beta = -0.01;
        spec.n_agents = 10;
        spec.initial_alpha_count = 3;
        sim::SimulationConfig cfg{21, 200, 100000};
        const auto result = market::run_market_learning(spec, cfg);
        CHECK(result.summary.unabsorbed_count == 0);
        CHECK(result.summary.absorbed_alpha_fraction == 1.0);
    }
    SUBCASE("opposite symmetric sentiments favor the frequent weather") {
        auto spec = example_spec();
        spec.n_agents = 60;
        spec.initial_alpha_count = 30;
        sim::SimulationConfig cfg{22, 200, 100000};
        const auto result = market::run_market_learning(spec, cfg);
        CHECK(result.summary.unabsorbed_count == 0);
        CHECK(result.summary.absorbed_alpha_fraction >= 0.95);
    }
    SUBCASE("trajectories and summaries are thread invariant") {
        auto spec = example_spec();
        spec.n_agents = 12;
        spec.initial_alpha_count = 6;
        sim::SimulationConfig cfg{23, 2000, 100000};
        const auto one = market::run_market_learning(spec, cfg, 1);
        const auto four = market::run_market_learning(spec, cfg, 4);
        CHECK(one.summary.absorbed_alpha_fraction == four.summary.absorbed_alpha_fraction);
        CHECK(one.summary.mean_periods_to_absorption == four.summary.mean_periods_to_absorption);
        REQUIRE(one.trajectory.size() == four.trajectory.size());
        for (std::size_t i = 0; i < one.trajectory.size(); ++i) {
            CHECK(one.trajectory[i].state == four.trajectory[i].state);
            CHECK(one.trajectory[i].price == four.trajectory[i].price);
        }
    }
}

TEST_CASE("market one-step law matches the induced chain row") {
    auto spec = example_spec();
    spec.n_agents = 5;
    spec.initial_alpha_count = 2;
    // induced case: no dominance with sentiment alpha better on weather A
    markov::Environment env(5, spec.freq, markov::DominanceCase::NoDominance, 2);
    const auto ts = markov::build_transition(env);
    const long draws = 20000;
    for (int m = 1; m <= 4; ++m) {
        std::map<int, double> expected;
        expected[0] = ts.r(m - 1, 0);
        expected[5] = ts.r(m - 1, 1);
        for (int k = 1; k <= 4; ++k) expected[k] = ts.q(m - 1, k - 1);
        std::map<int, long> observed;
        sim::Xoshiro256pp rng = sim::Xoshiro256pp::for_replication(4321, m);
        for (long i = 0; i < draws; ++i) {
            const auto asg = sim::draw_assignment(rng, m, env);
            const auto outcome = market::clear_market(spec, m, asg);
            ++observed[outcome.state_after_learning];
        }
        const auto chi2 = test_helpers::chi2_goodness(observed, expected, draws);
        CHECK_MESSAGE(chi2.pass, "m=", m, " chi2=", chi2.statistic);
    }
}

TEST_CASE("dominated-sentiment market matches the mirrored dominance rows") {
    // same-direction pair: beta (milder) strictly dominates, so the alpha
    // count follows the dominance chain with the roles swapped (m -> N - m)
    auto spec = example_spec();
    spec.alpha = 0.02;
    spec.beta = 0.01;
    spec.n_agents = 5;
    spec.initial_alpha_count = 2;
    markov::Environment env(5, spec.freq, markov::DominanceCase::StrictDominance, 2);
    const auto ts = markov::build_transition(env);
    const long draws = 20000;
    for (int m = 1; m <= 4; ++m) {
        const int mirrored = 5 - m;  // beta count plays the chain state
        std::map<int, double> expected;
        expected[5] = ts.r(mirrored - 1, 0);  // chain state 0 = all alpha sentiment
        expected[0] = ts.r(mirrored - 1, 1);
        for (int k = 1; k <= 4; ++k) expected[5 - k] = ts.q(mirrored - 1, k - 1);
        std::map<int, long> observed;
        sim::Xoshiro256pp rng = sim::Xoshiro256pp::for_replication(8765, m);
        for (long i = 0; i < draws; ++i) {
            const auto asg = sim::draw_assignment(rng, m, env);
            const auto outcome = market::clear_market(spec, m, asg);
            ++observed[outcome.state_after_learning];
        }
        const auto chi2 = test_helpers::chi2_goodness(observed, expected, draws);
        CHECK_MESSAGE(chi2.pass, "m=", m, " chi2=", chi2.statistic);
    }
}

TEST_CASE("profit ordering is price independent") {
    const auto spec = example_spec();
    const double d_a_sign = market::phi(spec.y_a, spec.alpha) - market::phi(spec.y_a, spec.beta);
    const double d_b_sign = market::phi(spec.y_b, spec.alpha) - market::phi(spec.y_b, spec.beta);
    for (double p : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
        const double ua_alpha = market::phi(spec.y_a, spec.alpha) * std::pow(p, 1.5);
        const double ua_beta = market::phi(spec.y_a, spec.beta) * std::pow(p, 1.5);
        const double ub_alpha = market::phi(spec.y_b, spec.alpha) * std::pow(p, 3.0);
        const double ub_beta = market::phi(spec.y_b, spec.beta) * std::pow(p, 3.0);
        CHECK(std::signbit(ua_alpha - ua_beta) == std::signbit(d_a_sign));
        CHECK(std::signbit(ub_alpha - ub_beta) == std::signbit(d_b_sign));
    }
}

TEST_CASE("spec validation") {
    auto spec = example_spec();
    spec.y_a = 2.0 / 3.0;
    spec.y_b = 1.0 / 3.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = example_spec();
    spec.alpha = spec.beta;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = example_spec();
    spec.initial_alpha_count = 30;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}
