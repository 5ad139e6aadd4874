#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rcl/errors.hpp"

// Exact construction of the two-rule social-learning chain over states
// {0,...,N} and its long-run consensus distribution.
//
// Conventions used throughout:
//   * transient states are 1..N-1; row/column i of `q` holds state i+1,
//   * `r` has two columns ordered (to state 0, to state N),
//   * rule alpha is the rule counted by the state; under no dominance it is
//     the better rule for problem A, under (weak/strict) dominance it is the
//     dominant rule.
namespace rcl::markov {

// Problem frequencies (pi_a, pi_b). Stored normalized: pi_b = 1 - pi_a.
struct Frequency {
    double pi_a = 0.5;
    double pi_b = 0.5;

    Frequency(double a, double b);
    static Frequency from_pi_a(double a) { return Frequency(a, 1.0 - a); }
};

enum class DominanceCase : std::uint8_t {
    NoDominance,      // alpha better for A, beta better for B
    WeakDominance,    // alpha strictly better for A, tie on B
    StrictDominance,  // alpha strictly better for both problems
};

std::string to_string(DominanceCase c);
DominanceCase dominance_case_from_string(const std::string& s);

struct Environment {
    int n_agents;
    Frequency freq;
    DominanceCase rule_case;
    int initial_alpha_count;  // m0, in 1..N-1

    Environment(int n, Frequency f, DominanceCase c, int m0);
};

// Maps an initial fraction mu0 in (0,1) to the nearest integer count,
// rejecting values that round to a consensus state.
int initial_count_from_fraction(double mu0, int n_agents);

// Transient-to-transient block `q` ((N-1)x(N-1)) and transient-to-absorbing
// block `r` ((N-1)x2, columns: state 0, state N) of the transition matrix.
// The absorbing rows are unit self-loops and are never materialized.
struct TransitionSystem {
    int n_agents = 0;
    Eigen::MatrixXd q;
    Eigen::MatrixXd r;
};

inline constexpr int kDefaultMaxAgents = 2000;

TransitionSystem build_transition(const Environment& env, int max_agents = kDefaultMaxAgents);

// Per-initial-state absorption probabilities: to_beta[i] is the probability
// that state i+1 ends in all-beta consensus (state 0), to_alpha likewise for
// state N.
struct AbsorptionProfile {
    Eigen::VectorXd to_beta;
    Eigen::VectorXd to_alpha;
};

// Solves (I - Q) X = R column-wise by dense elimination in the
// cancellation-free absorbing-chain form (pivots assembled from remaining
// row mass), which keeps both columns componentwise accurate at sizes where
// the slowest absorption rate is far below machine epsilon. Throws
// NumericalError if a pivot falls below 1e-14 or the residual
// ||(I-Q)X - R||_inf exceeds 1e-10. Never forms the explicit inverse.
AbsorptionProfile absorption_profile(const TransitionSystem& ts);

// Absorption probabilities read at the environment's initial state.
// Returns (P[consensus on beta], P[consensus on alpha]).
std::pair<double, double> consensus_distribution(const Environment& env,
                                                 int max_agents = kDefaultMaxAgents);

struct SweepRow {
    int n_agents;
    int initial_state;  // ceil(c * N)
    double to_beta;
    double scaled;      // to_beta * N^(1/4)
};

// For each N in n_list builds the no-dominance chain and records the
// probability of beta-consensus started from ceil(c*N). Requires pi_a > 1/2
// (re-index the problems otherwise) and every N >= 4.
std::vector<SweepRow> consensus_trend_sweep(const Frequency& freq, double c,
                                            const std::vector<int>& n_list,
                                            int max_agents = kDefaultMaxAgents);

enum class OptimalRule : std::uint8_t { Alpha, Beta, Both };

struct SocialOptimum {
    OptimalRule optimal;
    double expected_payoff_alpha;
    double expected_payoff_beta;
};

// argmax over rules of pi_a*u(R,A) + pi_b*u(R,B); exact ties report Both.
// u_vec order: u(alpha,A), u(alpha,B), u(beta,A), u(beta,B).
SocialOptimum social_optimality(const std::array<double, 4>& u_vec, const Frequency& freq);

}  // namespace rcl::markov
