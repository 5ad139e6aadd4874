#include "rcl/approx.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rcl::approx {

namespace {

using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

void require_size(const markov::Frequency&, int n, int cap, const char* what) {
    if (n < 3) throw ConfigError(std::string(what) + " requires N >= 3");
    if (n > cap) {
        throw ConfigError(std::string(what) + ": N=" + std::to_string(n) +
                          " exceeds the module cap of " + std::to_string(cap));
    }
}

// Binomial weights v_n = C(N,n) x^n (1-x)^(N-n), n = 1..N-1, by the
// multiplicative recurrence (better relative accuracy than lgamma at size).
template <typename Real>
std::vector<Real> binomial_weights(Real x, int n) {
    std::vector<Real> v(n - 1);
    Real t = std::pow(Real(1) - x, Real(n));  // C(N,0) term
    for (int k = 1; k <= n - 1; ++k) {
        t *= Real(n - k + 1) / Real(k) * (x / (Real(1) - x));
        v[k - 1] = t;
    }
    return v;
}

// no-dominance transient block in long double for the verification algebra
MatrixXld no_dominance_q_ld(long double pa, int n) {
    const long double pb = 1.0L - pa;
    const long double la = std::log(pa);
    const long double lb = std::log(pb);
    auto lbinom = [](int a, int b) {
        return std::lgamma(static_cast<long double>(a + 1)) -
               std::lgamma(static_cast<long double>(b + 1)) -
               std::lgamma(static_cast<long double>(a - b + 1));
    };
    MatrixXld q = MatrixXld::Zero(n - 1, n - 1);
    for (int m = 1; m <= n - 1; ++m) {
        for (int k = 1; k <= n - 1; ++k) {
            const long double lp = k * la + (n - k) * lb;
            long double t = std::exp(lbinom(n, k) + lp);
            if (k <= n - m) t -= std::exp(lbinom(n - m, k) + lp);
            if (n - k <= m) t -= std::exp(lbinom(m, n - k) + lp);
            if (m + k == n) t += std::exp(lp);
            if (m == k) t += std::exp((n - k) * la + k * lb);
            q(m - 1, k - 1) = t;
        }
    }
    return q;
}

template <typename Real>
VectorXld to_ld(const std::vector<Real>& v) {
    VectorXld out(static_cast<int>(v.size()));
    for (int i = 0; i < out.size(); ++i) out(i) = static_cast<long double>(v[i]);
    return out;
}

struct PartsLd {
    VectorXld u, v, v_tilde, r_col;
    MatrixXld q, q_tilde, e;
    long double p_pow;   // (pa + pa*pb)^N
    long double pb_pow;  // (pb + pa*pb)^N
};

PartsLd build_parts_ld(long double pa, int n) {
    const long double pb = 1.0L - pa;
    PartsLd parts;
    parts.q = no_dominance_q_ld(pa, n);
    parts.u.resize(n - 1);
    parts.r_col.resize(n - 1);
    for (int m = 1; m <= n - 1; ++m) {
        parts.u(m - 1) = (1.0L - std::pow(pa, static_cast<long double>(n - m)) -
                          std::pow(pb, static_cast<long double>(m))) /
                         (1.0L - std::pow(pa, static_cast<long double>(n)) -
                          std::pow(pb, static_cast<long double>(n)));
        parts.r_col(m - 1) = std::pow(pb, static_cast<long double>(m)) *
                             (1.0L - std::pow(pa, static_cast<long double>(n - m)));
    }
    parts.v = to_ld(binomial_weights<long double>(pa, n));
    parts.q_tilde = parts.u * parts.v.transpose();
    parts.e = parts.q_tilde - parts.q;
    parts.p_pow = std::pow(pa + pa * pb, static_cast<long double>(n));
    parts.pb_pow = std::pow(pb + pa * pb, static_cast<long double>(n));
    parts.v_tilde = parts.e.transpose() * parts.v / parts.p_pow;
    return parts;
}

double operator_norm(const Eigen::MatrixXd& m) {
    if (m.rows() <= 200) {
        return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    }
    // power iteration on M^T M for larger systems
    Eigen::VectorXd x = Eigen::VectorXd::Ones(m.cols()).normalized();
    double norm = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd y = m.transpose() * (m * x);
        const double next = std::sqrt(y.norm());
        x = y.normalized();
        if (std::abs(next - norm) <= 1e-12 * std::max(1.0, next)) return next;
        norm = next;
    }
    return norm;
}

}  // namespace

namespace detail {

template <typename Real>
ConstantSetT<Real> compute_constants(Real pa, int n) {
    const Real pb = Real(1) - pa;
    const Real N = Real(n);
    auto pw = [N](Real x) { return std::pow(x, N); };

    const Real pan = pw(pa);
    const Real pbn = pw(pb);
    const Real papb = pw(pa * pb);
    const Real P = pw(pa + pa * pb);
    const Real PB = pw(pb + pa * pb);

    ConstantSetT<Real> c{};
    const Real den = P - pan - Real(2) * pan * pbn + PB - pbn;
    c.c1 = (pan + pbn + Real(2) * pan * pbn - PB - (pan + pbn) * P) / den;
    c.c2_1 = Real(1) + pw(pa * pb / (pb + pa * pb)) - pw(pb / (pb + pa * pb)) -
             pw(Real(2) * pa * pb / (pb + pa * pb));
    c.c2 = (Real(1) + c.c1) * c.c2_1;

    c.c3_2 = Real(1) / (Real(1) - pan - pbn);
    c.c3_3 = (pw(Real(1) + pb) - Real(1) - pbn) / pw(Real(1) + pb);
    c.c3_4 = (pw(Real(1) + pa) - Real(1) - pan) / pw(Real(1) + pa);
    c.c3_5 = c.c3_2 * (-Real(1) - PB / P + Real(2) * pan / P + Real(2) * pbn / P -
                       pan * pan / P - pbn * pbn / P);
    c.c3_6 = Real(1) - Real(2) * std::pow(Real(2), -N);  // (2^N - 2)/2^N
    c.c3_7 = c.c3_4 * c.c3_2;
    c.c3_8 = pw(Real(2) * pa * pb) / PB;
    c.c3_9 = pbn / PB;
    c.c3_10 = c.c3_4 * c.c3_2 - c.c3_8 * c.c3_2 * c.c3_6;
    c.c3_11 = c.c3_10 - c.c3_9;

    // c3_1 = v_tilde.u: S/P - (1/(1+c1)) (1 - P/(1+c1)), with
    // S = sum_n v_n u_n (pa^(N-n) + pb^n - 2 pa^(N-n) pb^n) in closed form.
    const Real S =
        c.c3_2 * ((P - pan - papb) + (PB - papb - pbn) - Real(4) * pw(Real(2) * pa * pb) +
                  Real(8) * papb - (pw(pa + pa * pa * pb) - pan - pw(pa * pa * pb)) -
                  (pw(pb + pa * pb * pb) - pw(pa * pb * pb) - pbn) +
                  Real(2) * (pw(pa * pb + pa * pa * pb) - papb - pw(pa * pa * pb)) +
                  Real(2) * (pw(pa * pb + pa * pb * pb) - pw(pa * pb * pb) - papb));
    c.c3_1 = S / P - (Real(1) / (Real(1) + c.c1)) * (Real(1) - P / (Real(1) + c.c1));

    // v^T E R in closed form (five separable pieces; the last two coincide).
    const Real c35P = c.c3_5 * P;
    const Real c21PB = PB + papb - pbn - pw(Real(2) * pa * pb);
    const Real piece1 = c35P * c21PB;
    const Real piece2 = pw(pb + pa * pb * pb) - papb - pw(pb * pb + pa * pb * pb) -
                        pbn * (Real(1) - pan - pbn) -
                        (pw(pa * pb + pa * pb * pb) - pw(pa * pa * pb) -
                         pw(Real(2) * pa * pb * pb)) +
                        papb * (Real(1) - pan - pbn);
    const Real piece3 =
        pw(Real(2) * pa * pb) - Real(2) * pw(pa * pb + pa * pa * pb) + pw(Real(2) * pa * pa * pb);
    const Real piece45 = -pw(pa * pb + pa * pb * pb) + Real(2) * papb - pw(pa * pa * pb);
    const Real vER = piece1 + piece2 + piece3 + Real(2) * piece45;

    const Real base = pa + pb / (Real(1) + pa);
    const Real base_pow = pw(base);
    const Real t3 = pw((Real(1) + pa * pb) / (Real(1) + pa)) - pw(pa / (Real(1) + pa)) - pbn;
    const Real t4 = base_pow - pan - pw(pb / (Real(1) + pa));
    const Real t5 = -c.c3_8 * (pw(pa / Real(2) + pb) - pw(pa / Real(2)) - pbn);
    const Real t6 = -c.c3_8 * (pw(pb / Real(2) + pa) - pw(pb / Real(2)) - pan);
    c.c3_12 = (t3 + t4 + t5 + t6) / base_pow;
    c.c3_13 = (c.c3_12 * base_pow - vER / PB) / P;
    c.c3 = c.c2 - (c.c3_12 * base_pow - c.c3_13 * P + c.c2 * c.c3_1) / (Real(1) + c.c3_1);

    c.c4_1 = (pan + pbn + Real(2) * pan * pbn - PB - pan * P - pbn * P) / den;
    c.c4_2 = (PB - pan - pbn + Real(2) * papb - Real(2) * pw(Real(2) * pa * pb)) / P;
    c.c4_3 = (-Real(4) * papb + pbn + pan) / P;
    c.c4_4 = c.c1 / (Real(1) + c.c1) + c.c4_3 +
             (P + PB + Real(2) * pw(Real(2) * pa * pb)) / (Real(1) + c.c1) +
             pw(Real(2) * pa * pb) / P + pw(pb + pa * pb * pb) / P +
             Real(2) * pw(pa * pb + pa * pb * pb) / P + Real(4) * pw(pa + pa * pa * pb) / P +
             Real(4) * pw(pa * pb + pa * pa * pb) / P + Real(2) * papb / P;
    c.c4 = (Real(4) * c.c4_1 * std::sqrt(N) + c.c4_4 * N) / (Real(1) + c.c3_1);
    return c;
}

template ConstantSetT<double> compute_constants<double>(double, int);
template ConstantSetT<long double> compute_constants<long double>(long double, int);

}  // namespace detail

RankOneDecomposition rank_one_parts(const markov::Frequency& freq, int n) {
    require_size(freq, n, markov::kDefaultMaxAgents, "rank_one_parts");
    markov::Environment env(n, freq, markov::DominanceCase::NoDominance, 1);
    const markov::TransitionSystem ts = markov::build_transition(env);

    RankOneDecomposition parts;
    parts.n_agents = n;
    const double pa = freq.pi_a;
    const double pb = freq.pi_b;
    parts.u.resize(n - 1);
    for (int m = 1; m <= n - 1; ++m) {
        parts.u(m - 1) = (1.0 - std::pow(pa, n - m) - std::pow(pb, m)) /
                         (1.0 - std::pow(pa, n) - std::pow(pb, n));
    }
    const auto weights = binomial_weights<double>(pa, n);
    parts.v = Eigen::Map<const Eigen::VectorXd>(weights.data(), n - 1);
    parts.q_tilde = parts.u * parts.v.transpose();
    parts.e = parts.q_tilde - ts.q;
    parts.v_tilde = parts.e.transpose() * parts.v / std::pow(pa + pa * pb, n);
    parts.d = parts.u.array() - 1.0;
    return parts;
}

ConstantSet constants(const markov::Frequency& freq, int n) {
    require_size(freq, n, kMaxConstantAgents, "constants");
    const auto t = detail::compute_constants<double>(freq.pi_a, n);
    ConstantSet c{t.c1,   t.c2,   t.c2_1, t.c3,   t.c3_1, t.c3_2,  t.c3_3,  t.c3_4,
                  t.c3_5, t.c3_6, t.c3_7, t.c3_8, t.c3_9, t.c3_10, t.c3_11, t.c3_12,
                  t.c3_13, t.c4,  t.c4_1, t.c4_2, t.c4_3, t.c4_4};
    for (double x : {c.c1, c.c2, c.c3, c.c3_1, c.c3_12, c.c3_13, c.c4}) {
        if (!std::isfinite(x)) {
            throw NumericalError("constant evaluation overflowed double range at N=" +
                                 std::to_string(n));
        }
    }
    return c;
}

LemmaReport verify_rank_one_inverse(const markov::Frequency& freq, int n, double tol) {
    require_size(freq, n, 200, "verify_rank_one_inverse");
    const double pa = freq.pi_a;
    const double pb = freq.pi_b;
    const auto v = binomial_weights<double>(pa, n);
    // 1 - v.u as a sum of positive complements; no cancellation, so the
    // product residual below is meaningful at full double accuracy.
    double one_minus_w = std::pow(pa, n) + std::pow(pb, n);
    const double denom = 1.0 - std::pow(pa, n) - std::pow(pb, n);
    for (int k = 1; k <= n - 1; ++k) {
        const double one_minus_u =
            (std::pow(pa, n - k) + std::pow(pb, k) - std::pow(pa, n) - std::pow(pb, n)) / denom;
        one_minus_w += v[k - 1] * one_minus_u;
    }
    const double c1 = detail::compute_constants<double>(pa, n).c1;
    const double scale = (1.0 + c1) / std::pow(pa + pa * pb, n);
    // ((I-Qt)(I + scale Qt))_{mn} - I_{mn} = u_m v_n (scale (1 - v.u) - 1)
    const double gap = scale * one_minus_w - 1.0;
    double max_uv = 0.0;
    double u_max = 0.0;
    for (int m = 1; m <= n - 1; ++m) {
        const double um =
            (1.0 - std::pow(pa, n - m) - std::pow(pb, m)) / denom;
        u_max = std::max(u_max, std::abs(um));
    }
    for (double vn : v) max_uv = std::max(max_uv, u_max * vn);
    LemmaReport report;
    report.max_error = std::abs(gap) * max_uv;
    report.tolerance = tol;
    report.pass = report.max_error <= tol;
    return report;
}

LemmaReport verify_inverse_column(const markov::Frequency& freq, int n, double tol) {
    require_size(freq, n, 200, "verify_inverse_column");
    const PartsLd parts = build_parts_ld(freq.pi_a, n);
    const int dim = n - 1;
    const MatrixXld system = MatrixXld::Identity(dim, dim) - parts.q_tilde;
    const VectorXld lhs = Eigen::PartialPivLU<MatrixXld>(system).solve(parts.r_col);
    const long double c2 = detail::compute_constants<long double>(freq.pi_a, n).c2;
    const VectorXld rhs = parts.r_col + c2 * (parts.pb_pow / parts.p_pow) * parts.u;
    LemmaReport report;
    report.max_error = static_cast<double>((lhs - rhs).cwiseAbs().maxCoeff());
    report.tolerance = tol;
    report.pass = report.max_error <= tol;
    return report;
}

LemmaReport verify_corrected_column(const markov::Frequency& freq, int n, double tol) {
    require_size(freq, n, 200, "verify_corrected_column");
    const PartsLd parts = build_parts_ld(freq.pi_a, n);
    const int dim = n - 1;
    const MatrixXld system = MatrixXld::Identity(dim, dim) - parts.q_tilde;
    const VectorXld r_tilde = Eigen::PartialPivLU<MatrixXld>(system).solve(parts.r_col);
    const long double vtu = parts.v_tilde.dot(parts.u);  // direct, not the closed form
    const VectorXld lhs =
        r_tilde - parts.u * (parts.v_tilde.dot(r_tilde) / (1.0L + vtu));
    const long double c3 = detail::compute_constants<long double>(freq.pi_a, n).c3;
    const VectorXld rhs = parts.r_col + c3 * (parts.pb_pow / parts.p_pow) * parts.u;
    LemmaReport report;
    report.max_error = static_cast<double>((lhs - rhs).cwiseAbs().maxCoeff());
    report.tolerance = tol;
    report.pass = report.max_error <= tol;
    return report;
}

NormBoundReport verify_error_norm_bound(const markov::Frequency& freq, int n) {
    require_size(freq, n, kMaxConstantAgents, "verify_error_norm_bound");
    const PartsLd parts = build_parts_ld(freq.pi_a, n);
    const int dim = n - 1;
    const MatrixXld system = MatrixXld::Identity(dim, dim) - parts.q_tilde;
    const MatrixXld inv_e = Eigen::PartialPivLU<MatrixXld>(system).solve(parts.e);
    const long double vtu = parts.v_tilde.dot(parts.u);
    // Et = I + (I-Qt)^{-1}E - A with A = I + u v_tilde^T
    const MatrixXld et = inv_e - parts.u * parts.v_tilde.transpose();
    const MatrixXld a_inv_et = et - parts.u * (parts.v_tilde.transpose() * et) / (1.0L + vtu);

    NormBoundReport report;
    report.operator_norm = operator_norm(a_inv_et.cast<double>());
    const double pa = freq.pi_a;
    const double pb = freq.pi_b;
    const double c4 = constants(freq, n).c4;
    report.bound =
        6.0 * std::sqrt((pa / pb + pb / pa) / std::sqrt(pa * pb)) * std::pow(n, -0.25) + c4;
    report.pass = report.operator_norm <= report.bound;
    return report;
}

RateStudy convergence_rate_study(const markov::Frequency& freq, double c,
                                 const std::vector<int>& n_list) {
    RateStudy study;
    for (const auto& row : markov::consensus_trend_sweep(freq, c, n_list)) {
        study.rows.push_back({row.n_agents, row.initial_state, row.to_beta, row.scaled});
    }
    study.scaled_bounded = true;
    if (!study.rows.empty()) {
        const double cap = 1.05 * study.rows.front().scaled;
        for (const auto& row : study.rows) {
            if (row.scaled > cap) study.scaled_bounded = false;
        }
    }
    return study;
}

std::vector<AsymptoticTrack> asymptotic_scan(const markov::Frequency& freq,
                                             const std::vector<int>& n_grid) {
    std::vector<AsymptoticTrack> tracks = {
        {"c1", 0.0, {}, -1, false},  {"c2", 1.0, {}, -1, false}, {"c3", 1.0, {}, -1, false},
        {"c3_1", 0.0, {}, -1, false}, {"c3_5", -1.0, {}, -1, false}, {"c4", 0.0, {}, -1, false},
    };
    for (int n : n_grid) {
        const ConstantSet c = constants(freq, n);
        const double vals[] = {c.c1, c.c2, c.c3, c.c3_1, c.c3_5, c.c4};
        for (std::size_t i = 0; i < tracks.size(); ++i) tracks[i].values.push_back(vals[i]);
    }
    for (auto& track : tracks) {
        const int count = static_cast<int>(track.values.size());
        for (int start = 0; start < count && track.threshold_index < 0; ++start) {
            bool monotone = true;
            for (int i = start + 1; i < count; ++i) {
                if (std::abs(track.values[i] - track.limit) >
                    std::abs(track.values[i - 1] - track.limit) + 1e-15) {
                    monotone = false;
                    break;
                }
            }
            if (monotone) track.threshold_index = start;
        }
        track.flagged = track.threshold_index < 0;
    }
    return tracks;
}

}  // namespace rcl::approx
