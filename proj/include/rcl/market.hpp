#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rcl/markov.hpp"
#include "rcl/sim.hpp"

// Stochastic production market with sentiment rules. Producers anticipate the
// price as (1+R)p, choose labor to maximize subjective profit, and imitate
// the sentiment of same-weather peers with strictly higher realized profit.
namespace rcl::market {

enum class Sentiment : int { Alpha = 0, Beta = 1 };

struct DemandCurve {
    enum class Kind { Linear, NearElastic };
    Kind kind = Kind::Linear;
    // Linear: D(p) = max(intercept - slope*p, 0), intercept > 0, slope >= 0
    double intercept = 0.0;
    double slope = 0.0;
    // NearElastic: D(p) = stiffness*(anchor_price - p) for p <= anchor_price, else 0
    double anchor_price = 0.0;
    double stiffness = 0.0;

    static DemandCurve linear(double intercept, double slope);
    static DemandCurve near_elastic(double anchor_price, double stiffness);
    double operator()(double p) const;
};

struct SentimentMarketSpec {
    double y_a;        // technology exponent on problem (weather) A, in (0,1)
    double y_b;        // exponent on B, y_a < y_b < 1
    double alpha;      // sentiment of rule alpha, in (-1,1)
    double beta;       // sentiment of rule beta, in (-1,1), beta != alpha
    markov::Frequency freq;
    DemandCurve demand;
    int n_agents;
    int initial_alpha_count;

    void validate() const;
};

// Price-independent profit coefficient: u(R,i) = phi(y_i, R) * p^(1/(1-y_i)).
// phi(y, r) = (1+r)^(y/(1-y)) - y (1+r)^(1/(1-y)); maximal at r = 0.
double phi(double y, double r);

// Subjectively optimal labor ((1+r)p)^(1/(1-y)).
double optimal_labor(double r, double y, double p);

struct PhiPropertyReport {
    double y = 0.0;
    bool monotone_up_on_negative = false;  // phi increasing on (-1,0)
    bool monotone_down_on_positive = false;  // phi decreasing on (0,1)
    bool comparison_consistent = false;  // phi(R) vs phi(-R) ordering matches y vs 1/2
    double max_symmetry_gap = 0.0;       // only meaningful at y == 1/2
    bool pass = false;
};

PhiPropertyReport check_phi_properties(double y, double grid_step);

// For alpha > 0 > beta with alpha + beta >= 0: a technology pair with
// phi(y_a, alpha) > phi(y_a, beta) and phi(y_b, alpha) < phi(y_b, beta),
// located by bisection of Phi(y) = phi(y,alpha) - phi(y,beta) on (0,1/2) and
// scanning (1/2,1). Throws NumericalError when no qualifying y_a exists.
std::pair<double, double> find_nondominated_technologies(double alpha, double beta);

enum class SentimentPair : int {
    RationalPresent,    // one sentiment is exactly 0
    SameDirection,      // same sign, different magnitude
    SymmetricOpposite,  // alpha = -beta
    AsymmetricOpposite  // opposite signs, |alpha| != |beta|
};

struct SentimentClassification {
    SentimentPair pair_case;
    markov::DominanceCase induced_case;
    Sentiment preferred_on_a;  // rule with the larger phi on problem A
    Sentiment preferred_on_b;
    // true when rule alpha plays the chain's alpha role (dominant rule, or the
    // rule better on problem A when neither dominates)
    bool alpha_is_chain_alpha;
};

// The phi comparisons are price independent, so the classification is a pure
// function of (y_a, y_b, alpha, beta). Differences below 1e-14 are rejected:
// ties fall outside the dominance taxonomy.
SentimentClassification classify_sentiments(const SentimentMarketSpec& spec);

// Cells ordered (alpha,A), (alpha,B), (beta,A), (beta,B).
struct MarketOutcome {
    double price = 0.0;
    std::array<double, 4> profit_by_cell{};
    int state_after_learning = 0;
};

// Clears sum over cells of fraction * ((1+R)p)^(1/(1-y_i)) against D(p) by
// bracketed bisection, then evaluates realized profits and the one-period
// learning update. Residual at the root must be <= 1e-10.
MarketOutcome clear_market(const SentimentMarketSpec& spec, int state, const sim::Assignment& asg);

// Clearing price under full consensus on sentiment r with expected problem
// fractions (pi_a, pi_b).
double consensus_price(double r, const SentimentMarketSpec& spec);

// Expected producer profit at the consensus price of sentiment r.
double welfare(double r, const SentimentMarketSpec& spec);

// The three welfare-difference terms: the Phi term at the alpha price, and
// the two price-shift terms weighted by phi(., beta). Sums to W(a) - W(b).
std::array<double, 3> welfare_decomposition(const SentimentMarketSpec& spec);

struct WelfareDemoReport {
    bool found = false;
    double stiffness = 0.0;
    double anchor_price = 0.0;
    double y_b = 0.0;
    double w_first = 0.0;   // dominant / alpha sentiment
    double w_second = 0.0;  // dominated / beta sentiment
};

// Under a dominant sentiment (RationalPresent or SameDirection), scans
// near-elastic demand stiffness until the dominant sentiment also wins in
// welfare: W(dominant) > W(dominated).
WelfareDemoReport dominant_welfare_demo(const SentimentMarketSpec& spec);

// For an opposite-direction pair, scans y_b toward 1 and near-elastic
// anchors above 1 until W(alpha) < W(beta), i.e. the consensus sentiment for
// pi_a > 1/2 is the socially inferior one. Reports search failure in the
// result rather than throwing.
WelfareDemoReport suboptimal_consensus_demo(double alpha, double beta,
                                            const markov::Frequency& freq);

struct TrajectoryPoint {
    long period;
    int state;  // count of alpha-sentiment producers after learning
    double price;
};

struct MarketRunResult {
    std::vector<TrajectoryPoint> trajectory;  // recorded replication
    sim::SimulationSummary summary;           // alpha = consensus on sentiment alpha
};

// Runs the per-period market (assignment draw, clearing, profit comparison,
// imitation) for every replication. The learning update depends on realized
// profits only through the phi ordering, so trajectories follow the induced
// abstract chain; prices are recorded for the requested replication.
MarketRunResult run_market_learning(const SentimentMarketSpec& spec,
                                    const sim::SimulationConfig& cfg, int threads = 1,
                                    long record_replication = 0);

}  // namespace rcl::market
