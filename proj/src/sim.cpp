#include "rcl/sim.hpp"

#include <cmath>
#include <thread>

namespace rcl::sim {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

int binomial_by_tosses(Xoshiro256pp& rng, int trials, double p) {
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
        if (rng.bernoulli(p)) ++hits;
    }
    return hits;
}

}  // namespace

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Xoshiro256pp Xoshiro256pp::for_replication(std::uint64_t master_seed,
                                           std::uint64_t replication_index) {
    SplitMix64 mix{master_seed + (replication_index + 1) * 0x9E3779B97F4A7C15ull};
    Xoshiro256pp rng;
    for (auto& word : rng.s_) word = mix.next();
    return rng;
}

std::uint64_t Xoshiro256pp::next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256pp::next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

void SimulationConfig::validate() const {
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (max_periods < 1) throw ConfigError("max_periods must be >= 1");
}

Assignment draw_assignment(Xoshiro256pp& rng, int state, const markov::Environment& env) {
    if (state < 0 || state > env.n_agents) throw ConfigError("state out of 0..N");
    Assignment asg;
    asg.alpha_to_a = binomial_by_tosses(rng, state, env.freq.pi_a);
    asg.beta_to_a = binomial_by_tosses(rng, env.n_agents - state, env.freq.pi_a);
    return asg;
}

int learning_step(int state, const Assignment& asg, markov::DominanceCase rule_case, int n_agents) {
    const int m = state;
    const int alpha_in_a = asg.alpha_to_a;
    const int beta_in_a = asg.beta_to_a;
    const int alpha_in_b = m - alpha_in_a;
    const int beta_in_b = (n_agents - m) - beta_in_a;

    switch (rule_case) {
        case markov::DominanceCase::NoDominance: {
            const bool a_group_learns = alpha_in_a >= 1;  // alpha carrier on problem A
            const bool b_group_learns = beta_in_b >= 1;   // beta carrier on problem B
            if (a_group_learns && b_group_learns) return alpha_in_a + beta_in_a;  // |G_A|
            if (a_group_learns) return m + beta_in_a;  // G_B holds only alpha carriers
            if (b_group_learns) return 0;              // all alpha carriers sit in G_B
            return m;                                  // full mismatch, nobody learns
        }
        case markov::DominanceCase::WeakDominance:
            // Only the A-group can observe a strictly better outcome.
            return alpha_in_a >= 1 ? m + beta_in_a : m;
        case markov::DominanceCase::StrictDominance: {
            const bool a_has_alpha = alpha_in_a >= 1;
            const bool b_has_alpha = alpha_in_b >= 1;
            if (a_has_alpha && b_has_alpha) return n_agents;
            if (a_has_alpha) return m + beta_in_a;
            if (b_has_alpha) return n_agents - beta_in_a;
            return m;
        }
    }
    throw ConfigError("unknown dominance case");
}

RunResult run_to_absorption(const markov::Environment& env, const SimulationConfig& cfg,
                            std::uint64_t replication_index) {
    cfg.validate();
    Xoshiro256pp rng = Xoshiro256pp::for_replication(cfg.master_seed, replication_index);
    int state = env.initial_alpha_count;
    for (long period = 1; period <= cfg.max_periods; ++period) {
        const Assignment asg = draw_assignment(rng, state, env);
        state = learning_step(state, asg, env.rule_case, env.n_agents);
        if (state == 0 || state == env.n_agents) {
            return {true, state, period};
        }
    }
    return {false, state, cfg.max_periods};
}

SimulationSummary estimate_absorption(const markov::Environment& env, const SimulationConfig& cfg,
                                      int threads) {
    cfg.validate();
    const long reps = cfg.replications;
    std::vector<std::uint8_t> outcome(reps);  // 0 beta, 1 alpha, 2 unabsorbed
    std::vector<long> periods(reps);

    auto worker = [&](long begin, long end) {
        for (long i = begin; i < end; ++i) {
            const RunResult r = run_to_absorption(env, cfg, static_cast<std::uint64_t>(i));
            outcome[i] = r.absorbed ? (r.final_state == env.n_agents ? 1 : 0) : 2;
            periods[i] = r.periods;
        }
    };

    const int workers = std::max(1, threads);
    if (workers == 1 || reps < 2 * workers) {
        worker(0, reps);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const long chunk = (reps + workers - 1) / workers;
        for (int t = 0; t < workers; ++t) {
            const long begin = t * chunk;
            const long end = std::min(reps, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    // Deterministic reduction in replication order.
    long alpha_hits = 0;
    long absorbed = 0;
    long unabsorbed = 0;
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

    SimulationSummary summary;
    summary.replications = reps;
    summary.unabsorbed_count = unabsorbed;
    summary.absorbed_alpha_fraction =
        absorbed > 0 ? static_cast<double>(alpha_hits) / static_cast<double>(absorbed) : 0.0;
    summary.mean_periods_to_absorption =
        absorbed > 0 ? period_sum / static_cast<double>(absorbed) : 0.0;
    const double p = summary.absorbed_alpha_fraction;
    summary.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    return summary;
}

}  // namespace rcl::sim
