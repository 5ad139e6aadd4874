#pragma once

#include <cstdint>
#include <vector>

#include "rcl/markov.hpp"

// Agent-level Monte Carlo implementation of the single-period learning
// protocol. Serves as an independent oracle for the exact chain and as the
// trajectory engine for the production-market module.
namespace rcl::sim {

// Stream derivation (stable across versions; see README):
//   stream_seed = master_seed + (replication_index + 1) * 0x9E3779B97F4A7C15
//   generator state = four successive SplitMix64 outputs of stream_seed.
// Uniforms map the top 53 bits of xoshiro256++ output to [0,1).
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next();
};

class Xoshiro256pp {
  public:
    static Xoshiro256pp for_replication(std::uint64_t master_seed, std::uint64_t replication_index);
    std::uint64_t next();
    double next_unit();  // [0, 1)
    bool bernoulli(double p) { return next_unit() < p; }

  private:
    std::uint64_t s_[4] = {};
};

// Counts of agents assigned problem A, split by endowed rule. Given state m,
// the B-assigned complements are m - alpha_to_a and (N - m) - beta_to_a.
struct Assignment {
    int alpha_to_a = 0;
    int beta_to_a = 0;
};

struct SimulationConfig {
    std::uint64_t master_seed = 0;
    long replications = 1;
    long max_periods = 1'000'000;

    void validate() const;
};

struct SimulationSummary {
    double absorbed_alpha_fraction = 0.0;  // among absorbed runs
    double mean_periods_to_absorption = 0.0;
    double standard_error = 0.0;  // sqrt(p(1-p)/replications)
    long unabsorbed_count = 0;
    long replications = 0;
};

// alpha_to_a ~ Binomial(m, pi_a), beta_to_a ~ Binomial(N-m, pi_a), independent.
// Drawn as per-agent tosses, alpha-endowed agents first; one uniform each.
Assignment draw_assignment(Xoshiro256pp& rng, int state, const markov::Environment& env);

// Deterministic one-period update of the alpha-count given the realized
// assignment. Learning triggers only on strictly better problem-specific
// outcomes: with no dominance each problem group converts to the rule that is
// better for its problem when a carrier is present; under weak dominance only
// the A-group learns; under strict dominance any group with an alpha carrier
// converts to alpha.
int learning_step(int state, const Assignment& asg, markov::DominanceCase rule_case, int n_agents);

struct RunResult {
    bool absorbed = false;
    int final_state = -1;  // 0 or N when absorbed
    long periods = 0;
};

RunResult run_to_absorption(const markov::Environment& env, const SimulationConfig& cfg,
                            std::uint64_t replication_index);

// Aggregates run_to_absorption over all replications. The reduction order is
// fixed by replication index, so the summary is bit-identical for a given
// master seed regardless of thread count. Unabsorbed runs are counted
// separately and excluded from the absorbed fraction.
SimulationSummary estimate_absorption(const markov::Environment& env, const SimulationConfig& cfg,
                                      int threads = 1);

}  // namespace rcl::sim
