#include "rcl/market.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace rcl::market {

namespace {

constexpr double kTieTolerance = 1e-14;

struct CellCounts {
    // (alpha,A), (alpha,B), (beta,A), (beta,B)
    std::array<int, 4> count;
};

CellCounts cells_from_assignment(int state, const sim::Assignment& asg, int n_agents) {
    CellCounts c{};
    c.count[0] = asg.alpha_to_a;
    c.count[1] = state - asg.alpha_to_a;
    c.count[2] = asg.beta_to_a;
    c.count[3] = (n_agents - state) - asg.beta_to_a;
    for (int k : c.count) {
        if (k < 0) throw ConfigError("assignment inconsistent with state");
    }
    return c;
}

double cell_supply(const SentimentMarketSpec& spec, const CellCounts& cells, double p) {
    const double n = spec.n_agents;
    const double exps[4] = {1.0 / (1.0 - spec.y_a), 1.0 / (1.0 - spec.y_b),
                            1.0 / (1.0 - spec.y_a), 1.0 / (1.0 - spec.y_b)};
    const double rules[4] = {spec.alpha, spec.alpha, spec.beta, spec.beta};
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (cells.count[k] == 0) continue;
        total += (cells.count[k] / n) * std::pow((1.0 + rules[k]) * p, exps[k]);
    }
    return total;
}

// Bracketed bisection for supply(p) = D(p); supply is strictly increasing
// from ~0 and demand is non-increasing, so the root is unique.
template <typename SupplyFn>
double clear_price(const SupplyFn& supply, const DemandCurve& demand) {
    double lo = 1e-9;
    if (supply(lo) >= demand(lo)) {
        throw NumericalError("cannot establish clearing bracket: demand degenerate near p=0");
    }
    double hi = 1.0;
    while (supply(hi) < demand(hi)) {
        hi *= 2.0;
        if (hi > 1e12) throw NumericalError("cannot establish clearing bracket: no crossing");
    }
    // iterate to a machine-level interval, then verify the residual
    for (int it = 0; it < 200 && (hi - lo) > 4.0 * std::numeric_limits<double>::epsilon() *
                                      std::max(1.0, hi);
         ++it) {
        const double mid = 0.5 * (lo + hi);
        if (supply(mid) >= demand(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const double p = 0.5 * (lo + hi);
    const double residual = std::abs(supply(p) - demand(p));
    if (residual > 1e-10) {
        throw NumericalError("market clearing residual " + std::to_string(residual) +
                             " exceeds 1e-10");
    }
    return p;
}

Sentiment better_rule(double d) { return d > 0.0 ? Sentiment::Alpha : Sentiment::Beta; }

// One-period imitation update on sentiment-alpha counts: each weather group
// converts to the rule with the larger phi for its weather whenever at least
// one member already carries it.
int market_learning_step(const CellCounts& cells, Sentiment preferred_on_a,
                         Sentiment preferred_on_b) {
    const int a_alpha = cells.count[0], b_alpha = cells.count[1];
    const int a_beta = cells.count[2], b_beta = cells.count[3];
    int alpha_after = 0;
    if (preferred_on_a == Sentiment::Alpha) {
        alpha_after += (a_alpha >= 1) ? a_alpha + a_beta : a_alpha;
    } else {
        alpha_after += (a_beta >= 1) ? 0 : a_alpha;
    }
    if (preferred_on_b == Sentiment::Alpha) {
        alpha_after += (b_alpha >= 1) ? b_alpha + b_beta : b_alpha;
    } else {
        alpha_after += (b_beta >= 1) ? 0 : b_alpha;
    }
    return alpha_after;
}

}  // namespace

DemandCurve DemandCurve::linear(double intercept, double slope) {
    if (!(intercept > 0.0) || slope < 0.0) {
        throw ConfigError("linear demand requires intercept > 0 and slope >= 0");
    }
    DemandCurve d;
    d.kind = Kind::Linear;
    d.intercept = intercept;
    d.slope = slope;
    return d;
}

DemandCurve DemandCurve::near_elastic(double anchor_price, double stiffness) {
    if (!(anchor_price > 0.0) || !(stiffness > 0.0)) {
        throw ConfigError("near-elastic demand requires anchor_price > 0 and stiffness > 0");
    }
    DemandCurve d;
    d.kind = Kind::NearElastic;
    d.anchor_price = anchor_price;
    d.stiffness = stiffness;
    return d;
}

double DemandCurve::operator()(double p) const {
    switch (kind) {
        case Kind::Linear: return std::max(intercept - slope * p, 0.0);
        case Kind::NearElastic: return p <= anchor_price ? stiffness * (anchor_price - p) : 0.0;
    }
    return 0.0;
}

void SentimentMarketSpec::validate() const {
    if (!(y_a > 0.0) || !(y_a < 1.0) || !(y_b > 0.0) || !(y_b < 1.0)) {
        throw ConfigError("technology exponents must lie in (0,1)");
    }
    if (!(y_a < y_b)) throw ConfigError("technology exponents must satisfy y_a < y_b");
    if (!(alpha > -1.0) || !(alpha < 1.0) || !(beta > -1.0) || !(beta < 1.0)) {
        throw ConfigError("sentiments must lie in (-1,1)");
    }
    if (alpha == beta) throw ConfigError("sentiments must differ");
    if (n_agents < 2) throw ConfigError("market requires at least 2 producers");
    if (initial_alpha_count < 1 || initial_alpha_count > n_agents - 1) {
        throw ConfigError("initial_alpha_count must lie in 1..N-1");
    }
}

double phi(double y, double r) {
    if (!(y > 0.0) || !(y < 1.0)) throw ConfigError("phi requires y in (0,1)");
    if (!(r > -1.0) || !(r < 1.0)) throw ConfigError("phi requires r in (-1,1)");
    const double g = 1.0 + r;
    return std::pow(g, y / (1.0 - y)) - y * std::pow(g, 1.0 / (1.0 - y));
}

double optimal_labor(double r, double y, double p) {
    if (!(p > 0.0)) throw ConfigError("optimal_labor requires a positive price");
    return std::pow((1.0 + r) * p, 1.0 / (1.0 - y));
}

PhiPropertyReport check_phi_properties(double y, double grid_step) {
    if (!(grid_step > 0.0) || !(grid_step < 1.0)) throw ConfigError("grid_step must be in (0,1)");
    PhiPropertyReport report;
    report.y = y;
    report.monotone_up_on_negative = true;
    report.monotone_down_on_positive = true;
    report.comparison_consistent = true;

    double prev = phi(y, -1.0 + grid_step);
    for (double r = -1.0 + 2.0 * grid_step; r < -1e-12; r += grid_step) {
        const double cur = phi(y, r);
        if (cur <= prev) report.monotone_up_on_negative = false;
        prev = cur;
    }
    prev = phi(y, grid_step);
    for (double r = 2.0 * grid_step; r < 1.0 - 1e-12; r += grid_step) {
        const double cur = phi(y, r);
        if (cur >= prev) report.monotone_down_on_positive = false;
        prev = cur;
    }
    for (double r = grid_step; r < 1.0 - 1e-12; r += grid_step) {
        const double gap = phi(y, r) - phi(y, -r);
        report.max_symmetry_gap = std::max(report.max_symmetry_gap, std::abs(gap));
        if (y < 0.5 && !(gap > 0.0)) report.comparison_consistent = false;
        if (y > 0.5 && !(gap < 0.0)) report.comparison_consistent = false;
        if (y == 0.5 && std::abs(gap) > 1e-12) report.comparison_consistent = false;
    }
    report.pass = report.monotone_up_on_negative && report.monotone_down_on_positive &&
                  report.comparison_consistent;
    return report;
}

std::pair<double, double> find_nondominated_technologies(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta < 0.0)) {
        throw ConfigError("expected alpha > 0 > beta");
    }
    if (alpha + beta < 0.0) {
        throw ConfigError("pair must satisfy alpha + beta >= 0; relabel the sentiments otherwise");
    }
    auto big_phi = [&](double y) { return phi(y, alpha) - phi(y, beta); };
    if (alpha + beta == 0.0) {
        return {1.0 / 3.0, 2.0 / 3.0};  // any split around 1/2 qualifies for a symmetric pair
    }

    // candidate y_a: scan dyadic points toward 0 for a positive Phi
    double y_a = -1.0;
    for (double y = 0.25; y > 1e-12; y *= 0.5) {
        if (big_phi(y) > 0.0) {
            y_a = y;
            break;
        }
    }
    if (y_a < 0.0) {
        throw NumericalError(
            "no technology exponent below 1/2 prefers the optimistic sentiment for this pair; "
            "the nondominance region is empty");
    }
    // candidate y_b: scan (1/2,1) for a negative Phi
    double y_b = -1.0;
    for (double y = 0.55; y < 1.0; y += 0.05) {
        if (big_phi(y) < 0.0) {
            y_b = y;
            break;
        }
    }
    for (double y = 0.99; y_b < 0.0 && y < 1.0; y += 0.002) {
        if (big_phi(y) < 0.0) y_b = y;
    }
    if (y_b < 0.0) {
        throw NumericalError("no technology exponent above 1/2 prefers the pessimistic sentiment");
    }
    return {y_a, y_b};
}

SentimentClassification classify_sentiments(const SentimentMarketSpec& spec) {
    spec.validate();
    const double d_a = phi(spec.y_a, spec.alpha) - phi(spec.y_a, spec.beta);
    const double d_b = phi(spec.y_b, spec.alpha) - phi(spec.y_b, spec.beta);
    if (std::abs(d_a) < kTieTolerance || std::abs(d_b) < kTieTolerance) {
        throw ConfigError("sentiment profits tie on one problem; outside the dominance taxonomy");
    }

    SentimentClassification cls{};
    if (spec.alpha == 0.0 || spec.beta == 0.0) {
        cls.pair_case = SentimentPair::RationalPresent;
    } else if (spec.alpha * spec.beta > 0.0) {
        cls.pair_case = SentimentPair::SameDirection;
    } else if (spec.alpha + spec.beta == 0.0) {
        cls.pair_case = SentimentPair::SymmetricOpposite;
    } else {
        cls.pair_case = SentimentPair::AsymmetricOpposite;
    }

    cls.preferred_on_a = better_rule(d_a);
    cls.preferred_on_b = better_rule(d_b);
    if (cls.preferred_on_a == cls.preferred_on_b) {
        cls.induced_case = markov::DominanceCase::StrictDominance;
        cls.alpha_is_chain_alpha = cls.preferred_on_a == Sentiment::Alpha;
    } else {
        cls.induced_case = markov::DominanceCase::NoDominance;
        cls.alpha_is_chain_alpha = cls.preferred_on_a == Sentiment::Alpha;
    }
    return cls;
}

MarketOutcome clear_market(const SentimentMarketSpec& spec, int state, const sim::Assignment& asg) {
    spec.validate();
    const CellCounts cells = cells_from_assignment(state, asg, spec.n_agents);
    if (spec.demand(1e-9) <= 0.0) {
        throw NumericalError("cannot establish clearing bracket: demand degenerate near p=0");
    }
    const double price = clear_price(
        [&](double p) { return cell_supply(spec, cells, p); }, spec.demand);

    MarketOutcome outcome;
    outcome.price = price;
    const double ys[4] = {spec.y_a, spec.y_b, spec.y_a, spec.y_b};
    const double rules[4] = {spec.alpha, spec.alpha, spec.beta, spec.beta};
    for (int k = 0; k < 4; ++k) {
        const double labor = optimal_labor(rules[k], ys[k], price);
        outcome.profit_by_cell[k] = price * std::pow(labor, ys[k]) - ys[k] * labor;
    }
    const SentimentClassification cls = classify_sentiments(spec);
    outcome.state_after_learning =
        market_learning_step(cells, cls.preferred_on_a, cls.preferred_on_b);
    return outcome;
}

double consensus_price(double r, const SentimentMarketSpec& spec) {
    spec.validate();
    if (spec.demand(1e-9) <= 0.0) {
        throw NumericalError("cannot establish clearing bracket: demand degenerate near p=0");
    }
    auto supply = [&](double p) {
        const double anticipated = (1.0 + r) * p;
        return spec.freq.pi_a * std::pow(anticipated, 1.0 / (1.0 - spec.y_a)) +
               spec.freq.pi_b * std::pow(anticipated, 1.0 / (1.0 - spec.y_b));
    };
    return clear_price(supply, spec.demand);
}

double welfare(double r, const SentimentMarketSpec& spec) {
    const double p = consensus_price(r, spec);
    return spec.freq.pi_a * phi(spec.y_a, r) * std::pow(p, 1.0 / (1.0 - spec.y_a)) +
           spec.freq.pi_b * phi(spec.y_b, r) * std::pow(p, 1.0 / (1.0 - spec.y_b));
}

std::array<double, 3> welfare_decomposition(const SentimentMarketSpec& spec) {
    const double pa_price = consensus_price(spec.alpha, spec);
    const double pb_price = consensus_price(spec.beta, spec);
    const double ea = 1.0 / (1.0 - spec.y_a);
    const double eb = 1.0 / (1.0 - spec.y_b);
    const double phi_diff_a = phi(spec.y_a, spec.alpha) - phi(spec.y_a, spec.beta);
    const double phi_diff_b = phi(spec.y_b, spec.alpha) - phi(spec.y_b, spec.beta);
    const double term1 = spec.freq.pi_a * std::pow(pa_price, ea) * phi_diff_a +
                         spec.freq.pi_b * std::pow(pa_price, eb) * phi_diff_b;
    const double term2 = spec.freq.pi_a * (std::pow(pa_price, ea) - std::pow(pb_price, ea)) *
                         phi(spec.y_a, spec.beta);
    const double term3 = spec.freq.pi_b * (std::pow(pa_price, eb) - std::pow(pb_price, eb)) *
                         phi(spec.y_b, spec.beta);
    return {term1, term2, term3};
}

WelfareDemoReport dominant_welfare_demo(const SentimentMarketSpec& spec) {
    const SentimentClassification cls = classify_sentiments(spec);
    if (cls.pair_case != SentimentPair::RationalPresent &&
        cls.pair_case != SentimentPair::SameDirection) {
        throw ConfigError("dominant_welfare_demo requires a dominant-sentiment pair");
    }
    const double dominant = cls.alpha_is_chain_alpha ? spec.alpha : spec.beta;
    const double dominated = cls.alpha_is_chain_alpha ? spec.beta : spec.alpha;

    WelfareDemoReport report;
    report.anchor_price = 1.5;
    report.y_b = spec.y_b;
    for (double s : {1e2, 1e3, 1e4}) {
        SentimentMarketSpec trial = spec;
        trial.demand = DemandCurve::near_elastic(report.anchor_price, s);
        const double w_dom = welfare(dominant, trial);
        const double w_sub = welfare(dominated, trial);
        if (w_dom > w_sub) {
            report.found = true;
            report.stiffness = s;
            report.w_first = w_dom;
            report.w_second = w_sub;
            return report;
        }
    }
    return report;
}

WelfareDemoReport suboptimal_consensus_demo(double alpha, double beta,
                                            const markov::Frequency& freq) {
    if (!(alpha > 0.0) || !(beta < 0.0)) {
        throw ConfigError("suboptimal_consensus_demo requires alpha > 0 > beta");
    }
    WelfareDemoReport report;
    for (double y_b : {0.75, 0.8, 0.85, 0.9, 0.95}) {
        for (double anchor : {1.1, 1.5, 2.0, 3.0}) {
            for (double s : {1e2, 1e3, 1e4}) {
                SentimentMarketSpec trial{1.0 / 3.0, y_b,    alpha, beta, freq,
                                          DemandCurve::near_elastic(anchor, s), 2, 1};
                const double w_alpha = welfare(alpha, trial);
                const double w_beta = welfare(beta, trial);
                if (w_alpha < w_beta) {
                    report.found = true;
                    report.stiffness = s;
                    report.anchor_price = anchor;
                    report.y_b = y_b;
                    report.w_first = w_alpha;
                    report.w_second = w_beta;
                    return report;
                }
            }
        }
    }
    return report;  // scan exhausted; reported, not thrown
}

MarketRunResult run_market_learning(const SentimentMarketSpec& spec,
                                    const sim::SimulationConfig& cfg, int threads,
                                    long record_replication) {
    spec.validate();
    cfg.validate();
    const SentimentClassification cls = classify_sentiments(spec);
    markov::Environment env(spec.n_agents, spec.freq, markov::DominanceCase::NoDominance, 1);

    const long reps = cfg.replications;
    std::vector<std::uint8_t> outcome(reps);
    std::vector<long> periods(reps);
    MarketRunResult result;
    if (record_replication < 0 || record_replication >= reps) {
        throw ConfigError("record_replication out of range");
    }

    auto run_one = [&](long rep, std::vector<TrajectoryPoint>* trace) {
        sim::Xoshiro256pp rng = sim::Xoshiro256pp::for_replication(cfg.master_seed,
                                                                   static_cast<std::uint64_t>(rep));
        int state = spec.initial_alpha_count;
        for (long period = 1; period <= cfg.max_periods; ++period) {
            const sim::Assignment asg = sim::draw_assignment(rng, state, env);
            const CellCounts cells = cells_from_assignment(state, asg, spec.n_agents);
            const double price = clear_price(
                [&](double p) { return cell_supply(spec, cells, p); }, spec.demand);
            state = market_learning_step(cells, cls.preferred_on_a, cls.preferred_on_b);
            if (trace) trace->push_back({period, state, price});
            if (state == 0 || state == spec.n_agents) {
                outcome[rep] = state == spec.n_agents ? 1 : 0;
                periods[rep] = period;
                return;
            }
        }
        outcome[rep] = 2;
        periods[rep] = cfg.max_periods;
    };

    auto worker = [&](long begin, long end) {
        for (long i = begin; i < end; ++i) {
            run_one(i, i == record_replication ? &result.trajectory : nullptr);
        }
    };

    const int workers = std::max(1, threads);
    if (workers == 1 || reps < 2 * workers) {
        worker(0, reps);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (reps + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const long begin = t * chunk;
            const long end = std::min(reps, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    long alpha_hits = 0, absorbed = 0, unabsorbed = 0;
    double period_sum = 0.0;
    for (long i = 0; i < reps; ++i) {
        if (outcome[i] == 2) {
            ++unabsorbed;
            continue;
        }
        ++absorbed;
        alpha_hits += outcome[i];
        period_sum += static_cast<double>(periods[i]);
    }
    result.summary.replications = reps;
    result.summary.unabsorbed_count = unabsorbed;
    result.summary.absorbed_alpha_fraction =
        absorbed > 0 ? static_cast<double>(alpha_hits) / static_cast<double>(absorbed) : 0.0;
    result.summary.mean_periods_to_absorption =
        absorbed > 0 ? period_sum / static_cast<double>(absorbed) : 0.0;
    const double p = result.summary.absorbed_alpha_fraction;
    result.summary.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    return result;
}

}  // namespace rcl::market
