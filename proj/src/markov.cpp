#include "rcl/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rcl::markov {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// log C(a,b); callers guarantee 0 <= b <= a.
double log_binomial(int a, int b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

// Neumaier-compensated accumulator for the signed term combinations below.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

double clamp_entry(double x, const char* what) {
    if (x < -1e-12 || x > 1.0 + 1e-12) {
        throw NumericalError(std::string(what) + " entry out of [0,1] beyond tolerance: " +
                             std::to_string(x));
    }
    return std::clamp(x, 0.0, 1.0);
}

// Row-sum verification tolerance; 1e-12 is comfortably met on N <= 100 and
// relaxes with N to track accumulated lgamma/exp rounding.
double row_sum_tolerance(int n) { return std::max(1e-13, 32.0 * kEps * n); }

}  // namespace

Frequency::Frequency(double a, double b) {
    if (!(a > 0.0) || !(a < 1.0) || !(b > 0.0) || !(b < 1.0)) {
        throw ConfigError("frequency components must lie strictly in (0,1)");
    }
    if (std::abs(a + b - 1.0) > 1e-15) {
        throw ConfigError("frequency components must sum to 1 within 1e-15");
    }
    pi_a = a;
    pi_b = 1.0 - a;
}

std::string to_string(DominanceCase c) {
    switch (c) {
        case DominanceCase::NoDominance: return "A1";
        case DominanceCase::WeakDominance: return "A2";
        case DominanceCase::StrictDominance: return "A3";
    }
    return "?";
}

DominanceCase dominance_case_from_string(const std::string& s) {
    if (s == "A1") return DominanceCase::NoDominance;
    if (s == "A2") return DominanceCase::WeakDominance;
    if (s == "A3") return DominanceCase::StrictDominance;
    throw ConfigError("unknown dominance case '" + s + "' (expected A1, A2 or A3)");
}

Environment::Environment(int n, Frequency f, DominanceCase c, int m0)
    : n_agents(n), freq(f), rule_case(c), initial_alpha_count(m0) {
    if (n < 2) throw ConfigError("environment requires at least 2 agents");
    if (m0 < 1 || m0 > n - 1) {
        throw ConfigError("initial_alpha_count must lie in 1..N-1 (got " + std::to_string(m0) +
                          " for N=" + std::to_string(n) + ")");
    }
}

int initial_count_from_fraction(double mu0, int n_agents) {
    if (!(mu0 > 0.0) || !(mu0 < 1.0)) {
        throw ConfigError("initial fraction must lie strictly in (0,1)");
    }
    int m0 = static_cast<int>(std::lround(mu0 * n_agents));
    if (m0 < 1 || m0 > n_agents - 1) {
        throw ConfigError("initial fraction rounds to a consensus state for N=" +
                          std::to_string(n_agents));
    }
    return m0;
}

TransitionSystem build_transition(const Environment& env, int max_agents) {
    const int n = env.n_agents;
    if (n > max_agents) {
        throw ConfigError("n_agents=" + std::to_string(n) + " exceeds the configured cap of " +
                          std::to_string(max_agents));
    }
    const double pa = env.freq.pi_a;
    const double pb = env.freq.pi_b;
    const double la = std::log(pa);
    const double lb = std::log(pb);

    TransitionSystem ts;
    ts.n_agents = n;
    ts.q = Eigen::MatrixXd::Zero(n - 1, n - 1);
    ts.r = Eigen::MatrixXd::Zero(n - 1, 2);

    for (int m = 1; m <= n - 1; ++m) {
        const int row = m - 1;
        switch (env.rule_case) {
            case DominanceCase::NoDominance: {
                // R_m0 = pb^m (1 - pa^(N-m)),  R_mN = pa^(N-m) (1 - pb^m)
                ts.r(row, 0) = std::pow(pb, m) * (1.0 - std::pow(pa, n - m));
                ts.r(row, 1) = std::pow(pa, n - m) * (1.0 - std::pow(pb, m));
                for (int k = 1; k <= n - 1; ++k) {
                    // Z = (C(N,n) - C(N-m,n) - C(m,N-n) + [m+n=N]) pa^n pb^(N-n),
                    // plus the mismatch term pa^(N-n) pb^n on the diagonal.
                    const double lp = k * la + (n - k) * lb;
                    CompensatedSum s;
                    s.add(std::exp(log_binomial(n, k) + lp));
                    if (k <= n - m) s.add(-std::exp(log_binomial(n - m, k) + lp));
                    if (n - k <= m) s.add(-std::exp(log_binomial(m, n - k) + lp));
                    if (m + k == n) s.add(std::exp(lp));
                    if (m == k) s.add(std::exp((n - k) * la + k * lb));
                    ts.q(row, k - 1) = s.value();
                }
                break;
            }
            case DominanceCase::WeakDominance: {
                ts.r(row, 0) = 0.0;
                ts.r(row, 1) = std::pow(pa, n - m) * (1.0 - std::pow(pb, m));
                const double no_alpha_learner = 1.0 - std::pow(pb, m);
                ts.q(row, row) = std::pow(pb, n - m) + (1.0 - std::pow(pb, n - m)) * std::pow(pb, m);
                for (int k = m + 1; k <= n - 1; ++k) {
                    ts.q(row, k - 1) =
                        std::exp(log_binomial(n - m, k - m) + (k - m) * la + (n - k) * lb) *
                        no_alpha_learner;
                }
                break;
            }
            case DominanceCase::StrictDominance: {
                ts.r(row, 0) = 0.0;
                ts.r(row, 1) = 1.0 - std::pow(pa, m) * (1.0 - std::pow(pa, n - m)) -
                               std::pow(pb, m) * (1.0 - std::pow(pb, n - m));
                ts.q(row, row) = std::pow(pa, m) * std::pow(pb, n - m) +
                                 std::pow(pa, n - m) * std::pow(pb, m);
                for (int k = m + 1; k <= n - 1; ++k) {
                    const double lc = log_binomial(n - m, k - m);
                    ts.q(row, k - 1) = std::exp(lc + (n - k) * la + k * lb) +
                                       std::exp(lc + k * la + (n - k) * lb);
                }
                break;
            }
        }

        CompensatedSum row_sum;
        for (int k = 0; k < n - 1; ++k) row_sum.add(ts.q(row, k));
        row_sum.add(ts.r(row, 0));
        row_sum.add(ts.r(row, 1));
        if (std::abs(row_sum.value() - 1.0) > row_sum_tolerance(n)) {
            throw NumericalError("transition row " + std::to_string(m) +
                                 " is not stochastic: sum deviates by " +
                                 std::to_string(row_sum.value() - 1.0));
        }
        for (int k = 0; k < n - 1; ++k) ts.q(row, k) = clamp_entry(ts.q(row, k), "q");
        ts.r(row, 0) = clamp_entry(ts.r(row, 0), "r");
        ts.r(row, 1) = clamp_entry(ts.r(row, 1), "r");
    }
    return ts;
}

// Gaussian elimination on (I - Q) specialized to the absorbing-chain
// structure: each pivot 1 - w_kk is computed as the sum of the remaining
// off-diagonal and absorbing mass of its row instead of by subtraction
// (state-censoring form). All updates add nonnegative terms, which keeps
// every entry of X componentwise accurate even when interior absorption
// probabilities fall below machine epsilon, where a conventional pivoted LU
// loses the to_alpha column entirely. The factorization is still dense LU;
// only the pivot evaluation differs. No explicit inverse is formed.
AbsorptionProfile absorption_profile(const TransitionSystem& ts) {
    const int dim = static_cast<int>(ts.q.rows());
    Eigen::MatrixXd w = ts.q;
    Eigen::MatrixXd b = ts.r;
    Eigen::VectorXd pivot(dim);

    for (int k = 0; k < dim; ++k) {
        double denom = b(k, 0) + b(k, 1);
        for (int j = k + 1; j < dim; ++j) denom += w(k, j);
        if (denom < 1e-14) {
            throw NumericalError("singular absorption system: pivot " + std::to_string(denom) +
                                 " at state " + std::to_string(k + 1));
        }
        pivot(k) = denom;
        for (int i = k + 1; i < dim; ++i) {
            if (w(i, k) == 0.0) continue;
            const double factor = w(i, k) / denom;
            for (int j = k + 1; j < dim; ++j) w(i, j) += factor * w(k, j);
            b(i, 0) += factor * b(k, 0);
            b(i, 1) += factor * b(k, 1);
        }
    }
    Eigen::MatrixXd x(dim, 2);
    for (int k = dim - 1; k >= 0; --k) {
        for (int c = 0; c < 2; ++c) {
            double num = b(k, c);
            for (int j = k + 1; j < dim; ++j) num += w(k, j) * x(j, c);
            x(k, c) = num / pivot(k);
        }
    }
    const double residual =
        ((Eigen::MatrixXd::Identity(dim, dim) - ts.q) * x - ts.r).cwiseAbs().maxCoeff();
    if (residual > 1e-10) {
        throw NumericalError("absorption solve residual " + std::to_string(residual) +
                             " exceeds 1e-10");
    }

    AbsorptionProfile profile;
    profile.to_beta = x.col(0);
    profile.to_alpha = x.col(1);
    for (int i = 0; i < dim; ++i) {
        profile.to_beta(i) = clamp_entry(profile.to_beta(i), "to_beta");
        profile.to_alpha(i) = clamp_entry(profile.to_alpha(i), "to_alpha");
        if (std::abs(profile.to_beta(i) + profile.to_alpha(i) - 1.0) > 1e-10) {
            throw NumericalError("absorption probabilities at state " + std::to_string(i + 1) +
                                 " do not sum to 1 within 1e-10");
        }
    }
    return profile;
}

std::pair<double, double> consensus_distribution(const Environment& env, int max_agents) {
    const AbsorptionProfile profile = absorption_profile(build_transition(env, max_agents));
    const int idx = env.initial_alpha_count - 1;
    return {profile.to_beta(idx), profile.to_alpha(idx)};
}

std::vector<SweepRow> consensus_trend_sweep(const Frequency& freq, double c,
                                            const std::vector<int>& n_list, int max_agents) {
    if (!(freq.pi_a > 0.5)) {
        throw ConfigError("trend sweep requires pi_a > 1/2; re-index the problems otherwise");
    }
    if (!(c > 0.0) || !(c < 1.0)) throw ConfigError("sweep fraction c must lie in (0,1)");
    std::vector<SweepRow> rows;
    rows.reserve(n_list.size());
    std::vector<int> sorted = n_list;
    std::sort(sorted.begin(), sorted.end());
    for (int n : sorted) {
        if (n < 4) throw ConfigError("sweep sizes must satisfy N >= 4");
        const int m0 = static_cast<int>(std::ceil(c * n));
        Environment env(n, freq, DominanceCase::NoDominance, m0);
        const auto [to_beta, to_alpha] = consensus_distribution(env, max_agents);
        (void)to_alpha;
        rows.push_back({n, m0, to_beta, to_beta * std::pow(n, 0.25)});
    }
    return rows;
}

SocialOptimum social_optimality(const std::array<double, 4>& u_vec, const Frequency& freq) {
    for (double u : u_vec) {
        if (!std::isfinite(u)) throw ConfigError("payoff entries must be finite");
    }
    const double ea = freq.pi_a * u_vec[0] + freq.pi_b * u_vec[1];
    const double eb = freq.pi_a * u_vec[2] + freq.pi_b * u_vec[3];
    OptimalRule which = OptimalRule::Both;
    if (ea > eb) which = OptimalRule::Alpha;
    if (eb > ea) which = OptimalRule::Beta;
    return {which, ea, eb};
}

}  // namespace rcl::markov
