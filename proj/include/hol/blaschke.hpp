#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "hol/disc_geometry.hpp"

namespace hol {

struct ZeroEntry {
    DiscPoint zero;
    int multiplicity = 1;
};

class ZeroSequence {
public:
    ZeroSequence() = default;
    explicit ZeroSequence(std::vector<ZeroEntry> entries, bool blaschke_intent = true)
        : entries_(std::move(entries)), intent_(blaschke_intent) {
        for (const auto& e : entries_)
            if (e.multiplicity < 1) throw Error(ErrorKind::InvalidArgument, "multiplicity must be positive");
    }

    static ZeroSequence from_points(const std::vector<cplx>& pts, bool blaschke_intent = true) {
        std::vector<ZeroEntry> e;
        e.reserve(pts.size());
        for (auto p : pts) e.push_back({DiscPoint(p), 1});
        return ZeroSequence(std::move(e), blaschke_intent);
    }

    const std::vector<ZeroEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    bool blaschke_intent() const { return intent_; }
    void push_back(ZeroEntry e) {
        if (e.multiplicity < 1) throw Error(ErrorKind::InvalidArgument, "multiplicity must be positive");
        entries_.push_back(e);
    }

    double blaschke_sum() const {
        double s = 0.0;
        for (const auto& e : entries_) s += e.multiplicity * (1.0 - e.zero.abs());
        return s;
    }

private:
    std::vector<ZeroEntry> entries_;
    bool intent_ = true;
};

// log of prod_{j != k} rho(z_j, z_k), multiplicities counted.
inline double thinness_log(const ZeroSequence& zs, std::size_t k) {
    const auto& e = zs.entries();
    if (k >= e.size()) throw Error(ErrorKind::InvalidArgument, "zero index out of range");
    if (e[k].multiplicity > 1) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        if (j == k) continue;
        const double q = rho_deficit(e[j].zero.value(), e[k].zero.value());
        s += e[j].multiplicity * log_rho_from_deficit(std::min(q, 1.0));
    }
    return s;
}

inline double thinness_measure(const ZeroSequence& zs, std::size_t k) { return std::exp(thinness_log(zs, k)); }

// gamma * phi_w(phi^(-shift)(z)), raised to the multiplicity; its zero is phi^(shift)(w).
struct BlaschkeFactor {
    cplx w;
    std::int64_t shift = 0;
    cplx gamma = 1.0;
    int multiplicity = 1;
};

struct OrbitZero {
    DiscPoint w;
    std::int64_t shift = 0;
    int multiplicity = 1;
};

struct TruncatedValue {
    cplx value;
    double tail_bound;
};

class BlaschkeProduct {
public:
    BlaschkeProduct() = default;

    static BlaschkeProduct from_zeros(const ZeroSequence& zs) {
        BlaschkeProduct b;
        b.intent_ = zs.blaschke_intent();
        for (const auto& e : zs.entries()) b.push_normalized(e.zero.value(), 0, e.multiplicity);
        return b;
    }

    static BlaschkeProduct from_orbit_zeros(const NonEllipticNormalForm& f, const std::vector<OrbitZero>& zs,
                                            bool blaschke_intent = true) {
        BlaschkeProduct b;
        b.form_ = f;
        b.intent_ = blaschke_intent;
        for (const auto& z : zs) {
            if (z.multiplicity < 1) throw Error(ErrorKind::InvalidArgument, "multiplicity must be positive");
            b.push_normalized(z.w.value(), z.shift, z.multiplicity);
        }
        return b;
    }

    const std::vector<BlaschkeFactor>& factors() const { return factors_; }
    const std::optional<NonEllipticNormalForm>& form() const { return form_; }
    std::size_t size() const { return factors_.size(); }
    bool empty() const { return factors_.empty(); }
    bool blaschke_intent() const { return intent_; }

    // Zero of factor k; may round onto the circle when it is extremely close.
    cplx zero(std::size_t k) const {
        const auto& fk = factors_.at(k);
        return pull(fk.shift, fk.w);
    }

    // 1 - |zero_k|^2 from the orbit structure.
    double zero_defect(std::size_t k) const {
        const auto& fk = factors_.at(k);
        return one_minus_abs2(fk.w) * derivative_modulus(fk.shift, fk.w);
    }

    ZeroSequence zeros() const {
        std::vector<ZeroEntry> e;
        for (std::size_t k = 0; k < size(); ++k) e.push_back({DiscPoint(zero(k)), factors_[k].multiplicity});
        return ZeroSequence(std::move(e), intent_);
    }

    // Single-power value of factor k.
    cplx factor_value(std::size_t k, cplx z) const {
        const auto& fk = factors_[k];
        return fk.gamma * involution_eval(fk.w, pull(-fk.shift, z));
    }

    // 1 - |factor_k(z)|^2 (single power), accurate near the circle.
    double factor_deficit(std::size_t k, cplx z) const {
        const auto& fk = factors_[k];
        const cplx zeta = pull(-fk.shift, z);
        const double dz = one_minus_abs2(z) * derivative_modulus(-fk.shift, z);
        return std::min(1.0, one_minus_abs2(fk.w) * dz / std::norm(1.0 - std::conj(fk.w) * zeta));
    }

    cplx evaluate(cplx z, std::size_t n_factors = std::numeric_limits<std::size_t>::max()) const {
        if (std::abs(z) > 1.0 + boundary_slack)
            throw Error(ErrorKind::OutsideDisc, "Blaschke products are evaluated on the closed disc");
        cplx v = 1.0;
        const std::size_t n = std::min(n_factors, size());
        for (std::size_t k = 0; k < n; ++k) {
            const cplx f = factor_value(k, z);
            for (int m = 0; m < factors_[k].multiplicity; ++m) v *= f;
        }
        return v;
    }

    cplx operator()(cplx z) const { return evaluate(z); }

    // First n factors plus a bound on |B(z) - B_n(z)| from the omitted zeros.
    TruncatedValue evaluate_with_tail(cplx z, std::size_t n_factors) const {
        if (n_factors > size()) throw Error(ErrorKind::InvalidArgument, "truncation exceeds stored zeros");
        double tail = 0.0;
        const double dz = 1.0 - std::abs(z);
        for (std::size_t k = n_factors; k < size(); ++k) {
            const double dk = zero_defect(k) / (1.0 + std::sqrt(std::max(0.0, 1.0 - zero_defect(k))));
            tail += factors_[k].multiplicity * 2.0 * dk / dz;
        }
        return {evaluate(z, n_factors), tail};
    }

    double log_abs(cplx z) const {
        double s = 0.0;
        for (std::size_t k = 0; k < size(); ++k)
            s += factors_[k].multiplicity * log_rho_from_deficit(factor_deficit(k, z));
        return s;
    }

    // 1 - |B(z)|
    double deficit(cplx z) const { return -std::expm1(log_abs(z)); }

    // B o phi^(n); exact integer bookkeeping on the shifts.
    BlaschkeProduct composed(const NonEllipticNormalForm& f, std::int64_t n) const {
        if (form_ && !(*form_ == f))
            throw Error(ErrorKind::InvalidArgument, "product is tied to a different normal form");
        BlaschkeProduct b = *this;
        b.form_ = f;
        for (auto& fk : b.factors_) fk.shift -= n;
        return b;
    }

    BlaschkeProduct truncated(std::size_t n_factors) const {
        BlaschkeProduct b = *this;
        if (n_factors < b.factors_.size()) b.factors_.resize(n_factors);
        return b;
    }

    // log prod_{j != k} rho(zero_j, zero_k), multiplicities counted.
    double thinness_log(std::size_t k) const {
        const auto& fk = factors_.at(k);
        if (fk.multiplicity > 1) return -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (std::size_t j = 0; j < size(); ++j) {
            if (j == k) continue;
            const auto& fj = factors_[j];
            // factor_j at zero_k, written through the orbit so nothing rounds to the circle
            const std::int64_t d = fk.shift - fj.shift;
            const cplx zeta = pull(d, fk.w);
            const double dz = one_minus_abs2(fk.w) * derivative_modulus(d, fk.w);
            const double q = std::min(1.0, one_minus_abs2(fj.w) * dz / std::norm(1.0 - std::conj(fj.w) * zeta));
            s += fj.multiplicity * log_rho_from_deficit(q);
        }
        return s;
    }

    double thinness(std::size_t k) const { return std::exp(thinness_log(k)); }

private:
    cplx pull(std::int64_t n, cplx z) const {
        if (n == 0) return z;
        return iterate_eval(*form_, n, z);
    }
    double derivative_modulus(std::int64_t n, cplx z) const {
        if (n == 0) return 1.0;
        return iterate_derivative_modulus(*form_, n, z);
    }

    void push_normalized(cplx w, std::int64_t shift, int multiplicity) {
        if (!(std::norm(w) < 1.0)) throw Error(ErrorKind::OutsideDisc, "zero must lie in the open disc");
        BlaschkeFactor fk{w, shift, 1.0, multiplicity};
        factors_.push_back(fk);
        const std::size_t k = factors_.size() - 1;
        const cplx v = factor_value(k, 0.0);
        if (std::abs(v) > 1e-300) {
            factors_[k].gamma = std::abs(v) / v;
        } else {
            // zero at the origin: the factor is a rotation, make it exactly z
            const cplx u = factor_value(k, 0.5) / 0.5;
            factors_[k].gamma = std::abs(u) / u;
        }
    }

    std::optional<NonEllipticNormalForm> form_;
    std::vector<BlaschkeFactor> factors_;
    bool intent_ = true;
};

inline cplx blaschke_eval(const BlaschkeProduct& b, cplx z, std::size_t n_factors) {
    return b.evaluate(z, n_factors);
}

// Points x_j = tanh(s_j / 2) on [0, 1) stored through their hyperbolic distance s_j from 0.
class ReferenceThinSequence {
public:
    ReferenceThinSequence() = default;
    explicit ReferenceThinSequence(std::vector<double> s) : s_(std::move(s)) {}

    std::size_t size() const { return s_.size(); }
    const std::vector<double>& positions() const { return s_; }
    double position(std::size_t j) const { return s_.at(j); }
    double x(std::size_t j) const { return std::tanh(0.5 * s_.at(j)); }
    double one_minus_x(std::size_t j) const { return 2.0 / (std::exp(s_.at(j)) + 1.0); }
    double beta(std::size_t j, std::size_t k) const { return std::abs(s_.at(j) - s_.at(k)); }
    double rho(std::size_t j, std::size_t k) const { return std::tanh(0.5 * beta(j, k)); }

    double log_product(std::size_t k) const {
        double s = 0.0;
        for (std::size_t j = 0; j < s_.size(); ++j) {
            if (j == k) continue;
            const double d = beta(j, k);
            if (d == 0.0) return -std::numeric_limits<double>::infinity();
            s += std::log1p(-2.0 / (std::exp(d) + 1.0));
        }
        return s;
    }
    double product(std::size_t k) const { return std::exp(log_product(k)); }

private:
    std::vector<double> s_;
};

// delta_k = 1 - 2^{-(k+1)} for k = 0..K-1.
inline std::vector<double> default_targets(std::size_t K) {
    std::vector<double> d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = 1.0 - std::ldexp(1.0, -int(k + 1));
    return d;
}

namespace detail {

inline void validate_targets(const std::vector<double>& delta) {
    for (std::size_t k = 0; k < delta.size(); ++k) {
        if (!(delta[k] >= 0.0 && delta[k] < 1.0))
            throw Error(ErrorKind::InvalidArgument, "thinness targets must lie in [0, 1)");
        if (k > 0 && delta[k] < delta[k - 1])
            throw Error(ErrorKind::InvalidArgument, "thinness targets must be nondecreasing");
    }
}

}  // namespace detail

// Greedy gap doubling from the seed x_j = 1 - 2^{-j} until every product clears its target.
inline ReferenceThinSequence reference_thin_sequence(const std::vector<double>& delta,
                                                     std::size_t max_iterations = 1000000) {
    detail::validate_targets(delta);
    const std::size_t K = delta.size();
    std::vector<double> gaps(K);
    double prev = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        const double s = std::log(std::ldexp(1.0, int(j) + 2) - 1.0);
        gaps[j] = s - prev;
        prev = s;
    }
    std::vector<double> s(K);
    for (std::size_t iter = 0;; ++iter) {
        std::partial_sum(gaps.begin(), gaps.end(), s.begin());
        ReferenceThinSequence seq(s);
        std::vector<std::size_t> failing;
        for (std::size_t k = 0; k < K; ++k)
            if (delta[k] > 0.0 && !(seq.log_product(k) > std::log(delta[k]))) failing.push_back(k);
        if (failing.empty()) return seq;
        if (iter >= max_iterations)
            throw Error(ErrorKind::TargetsInfeasible, "gap doubling did not reach the targets");
        std::vector<bool> grow(K, false);
        for (auto k : failing) {
            if (k > 0) grow[k] = true;
            if (k + 1 < K) grow[k + 1] = true;
        }
        for (std::size_t j = 0; j < K; ++j)
            if (grow[j]) gaps[j] *= 2.0;
    }
}

// Arbitrary disc points as candidates; the ball around candidate i is phi_{z_i}(D(0, r)).
class PointCandidates {
public:
    explicit PointCandidates(std::vector<DiscPoint> pts) : pts_(std::move(pts)) {}

    std::size_t size() const { return pts_.size(); }
    cplx center(std::size_t i) const { return pts_.at(i).value(); }

    double beta(std::size_t i, std::size_t j) const {
        const cplx a = pts_[i].value(), b = pts_[j].value();
        const double q = rho_deficit(a, b);
        const double r = std::sqrt(std::max(0.0, 1.0 - q));
        return 2.0 * std::log1p(r) - std::log(q);
    }

    cplx ball_point(std::size_t i, cplx u) const { return involution_eval(pts_[i].value(), u); }

    // 1 - rho(ball_point(i, u), ball_point(j, v))^2
    double pair_deficit(std::size_t i, cplx u, std::size_t j, cplx v) const {
        const cplx a = pts_[i].value(), b = pts_[j].value();
        const cplx xa = involution_eval(a, u), xb = involution_eval(b, v);
        const double da = one_minus_abs2(a) * one_minus_abs2(u) / std::norm(1.0 - std::conj(a) * u);
        const double db = one_minus_abs2(b) * one_minus_abs2(v) / std::norm(1.0 - std::conj(b) * v);
        return std::min(1.0, da * db / std::norm(1.0 - std::conj(xa) * xb));
    }

    // |z_n| nondecreasing over the second half of the list.
    bool tail_monotone() const {
        for (std::size_t i = pts_.size() / 2 + 1; i < pts_.size(); ++i)
            if (pts_[i].abs() < pts_[i - 1].abs()) return false;
        return true;
    }

private:
    std::vector<DiscPoint> pts_;
};

// Candidates z_{-n} = phi^(n)(0), n >= 0, the centers of phi^(-n) in canonical form.
class OrbitCenterCandidates {
public:
    explicit OrbitCenterCandidates(NonEllipticNormalForm f,
                                   std::size_t count = std::size_t(1) << 62)
        : f_(f), count_(count) {}

    const NonEllipticNormalForm& form() const { return f_; }
    std::size_t size() const { return count_; }
    cplx center(std::size_t i) const { return iterate_eval(f_, std::int64_t(i), 0.0); }

    double beta_of_gap(double d) const {
        d = std::abs(d);
        if (f_.is_hyperbolic()) return d * std::log(f_.alpha());
        return 2.0 * std::asinh(0.5 * d * f_.t());
    }

    double beta(std::size_t i, std::size_t j) const { return beta_of_gap(double(i) - double(j)); }

    cplx ball_point(std::size_t i, cplx u) const { return iterate_eval(f_, std::int64_t(i), u); }

    double pair_deficit(std::size_t i, cplx u, std::size_t j, cplx v) const {
        const std::int64_t d = std::int64_t(i) - std::int64_t(j);
        const cplx zeta = iterate_eval(f_, d, u);
        const double dz = one_minus_abs2(u) * iterate_derivative_modulus(f_, d, u);
        return std::min(1.0, dz * one_minus_abs2(v) / std::norm(1.0 - std::conj(zeta) * v));
    }

    // Smallest index after `last` whose distance to `last` exceeds the budget. Distances grow
    // with the index gap, so the most recent selection is always the binding one.
    std::optional<std::size_t> next_beyond(std::size_t last, double budget) const {
        double d;
        if (f_.is_hyperbolic()) d = std::floor(budget / std::log(f_.alpha())) + 1.0;
        else d = std::floor(2.0 * std::sinh(0.5 * budget) / f_.t()) + 1.0;
        if (!std::isfinite(d) || d > double(count_ - last - 1) || d > 9.0e15) return std::nullopt;
        auto gap = std::max<std::size_t>(1, std::size_t(d));
        while (gap > 1 && beta_of_gap(double(gap - 1)) > budget) --gap;
        while (!(beta_of_gap(double(gap)) > budget)) ++gap;
        if (gap > count_ - last - 1) return std::nullopt;
        return last + gap;
    }

private:
    NonEllipticNormalForm f_;
    std::size_t count_;
};

template <class C>
concept CandidateSource = requires(const C& c, std::size_t i, cplx u) {
    { c.size() } -> std::convertible_to<std::size_t>;
    { c.beta(i, i) } -> std::convertible_to<double>;
    { c.ball_point(i, u) } -> std::convertible_to<cplx>;
    { c.pair_deficit(i, u, i, u) } -> std::convertible_to<double>;
};

struct ThinSelectionPlan {
    std::vector<std::size_t> indices;
    std::vector<double> radii;
    std::vector<double> targets;
    std::vector<double> R;         // log((1 + r_k) / (1 - r_k))
    std::vector<double> budgets;   // R_k + sum_{j<k} (R_j + beta_{k,j})
    std::vector<double> achieved;  // min_{j<k} beta(z_{n_k}, z_{n_j}); infinity for k = 0
    ReferenceThinSequence reference;

    std::size_t size() const { return indices.size(); }
    double beta_kj(std::size_t k, std::size_t j) const { return reference.beta(k, j); }
};

template <CandidateSource C>
ThinSelectionPlan thin_subsequence_select(const C& cands, const std::vector<double>& radii,
                                          const std::vector<double>& targets, std::size_t K) {
    if (radii.size() != K || targets.size() != K)
        throw Error(ErrorKind::InvalidArgument, "need one radius and one target per selection");
    for (double r : radii)
        if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidArgument, "ball radii must lie in [0, 1)");
    if constexpr (requires { cands.tail_monotone(); }) {
        if (!cands.tail_monotone())
            throw Error(ErrorKind::InvalidArgument, "candidate moduli must increase along the tail");
    }
    ThinSelectionPlan plan;
    plan.radii = radii;
    plan.targets = targets;
    plan.reference = reference_thin_sequence(targets);
    for (double r : radii) plan.R.push_back(std::log1p(r) - std::log1p(-r));

    std::size_t next = 0;
    for (std::size_t k = 0; k < K; ++k) {
        double budget = plan.R[k];
        for (std::size_t j = 0; j < k; ++j) budget += plan.R[j] + plan.beta_kj(k, j);
        std::optional<std::size_t> pick;
        if (k == 0) {
            if (cands.size() > 0) pick = 0;
        } else if constexpr (requires { cands.next_beyond(next, budget); }) {
            pick = cands.next_beyond(plan.indices.back(), budget);
        } else {
            for (std::size_t i = next; i < cands.size() && !pick; ++i) {
                bool ok = true;
                for (auto j : plan.indices)
                    if (!(cands.beta(i, j) > budget)) {
                        ok = false;
                        break;
                    }
                if (ok) pick = i;
            }
        }
        if (!pick) throw Error(ErrorKind::CandidatesExhausted, "no candidate meets the separation budget");
        double achieved = std::numeric_limits<double>::infinity();
        for (auto j : plan.indices) achieved = std::min(achieved, cands.beta(*pick, j));
        plan.indices.push_back(*pick);
        plan.budgets.push_back(budget);
        plan.achieved.push_back(achieved);
        next = *pick + 1;
    }
    return plan;
}

struct PlacementCheck {
    std::size_t trials = 0;
    std::size_t failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();  // min of log prod - log delta
};

// Random points xi_k in the selected balls; checks prod_{j != k} rho(xi_j, xi_k) > delta_k.
template <CandidateSource C, class Rng>
PlacementCheck verify_plan_placements(const C& cands, const ThinSelectionPlan& plan, Rng& rng,
                                      std::size_t trials) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PlacementCheck out;
    const std::size_t K = plan.size();
    std::vector<cplx> u(K);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
            const double r = plan.radii[k] * std::sqrt(unif(rng));
            u[k] = std::polar(r, 2.0 * pi * unif(rng));
        }
        bool failed = false;
        for (std::size_t k = 0; k < K; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                if (j == k) continue;
                s += log_rho_from_deficit(cands.pair_deficit(plan.indices[j], u[j], plan.indices[k], u[k]));
            }
            const double margin = s - std::log(plan.targets[k]);
            out.worst_margin = std::min(out.worst_margin, margin);
            if (!(margin > 0.0)) failed = true;
        }
        ++out.trials;
        if (failed) ++out.failures;
    }
    return out;
}

struct ThinConstruction {
    BlaschkeProduct product;
    ThinSelectionPlan plan;
    std::vector<DiscPoint> schedule;
};

// Repetition schedule a1; a1 a2; a1 a2 a3; ... capped at the seed size, K entries.
inline std::vector<DiscPoint> repetition_schedule(const std::vector<DiscPoint>& seed, std::size_t K) {
    std::vector<DiscPoint> out;
    if (seed.empty()) return out;
    for (std::size_t block = 1; out.size() < K; ++block)
        for (std::size_t i = 0; i < std::min(block, seed.size()) && out.size() < K; ++i) out.push_back(seed[i]);
    return out;
}

// Thin product whose pullbacks accumulate on the orbit closure of the seed. An empty seed gives
// radial zeros toward a point of J, away from every fixed point.
inline ThinConstruction construct_thin_from_E(const NonEllipticNormalForm& f, const std::vector<DiscPoint>& seed,
                                              std::size_t K, std::vector<double> targets = {}) {
    if (targets.empty()) targets = default_targets(K);
    if (targets.size() != K) throw Error(ErrorKind::InvalidArgument, "need one target per factor");
    ThinConstruction out;
    if (seed.empty()) {
        out.plan.targets = targets;
        out.plan.reference = reference_thin_sequence(targets);
        const cplx anchor = f.is_hyperbolic() ? -imag_unit : cplx(-1.0);
        ZeroSequence zs;
        for (std::size_t j = 0; j < K; ++j) {
            if (out.plan.reference.one_minus_x(j) < 1e-15)
                throw Error(ErrorKind::CandidatesExhausted, "radial zeros are no longer representable");
            zs.push_back({DiscPoint(anchor * out.plan.reference.x(j)), 1});
            out.plan.indices.push_back(j);
        }
        out.product = BlaschkeProduct::from_zeros(zs).composed(f, 0);
        return out;
    }
    out.schedule = repetition_schedule(seed, K);
    std::vector<double> radii;
    for (const auto& w : out.schedule) radii.push_back(w.abs());
    OrbitCenterCandidates cands(f);
    out.plan = thin_subsequence_select(cands, radii, targets, K);
    std::vector<OrbitZero> zs;
    for (std::size_t k = 0; k < K; ++k) zs.push_back({out.schedule[k], std::int64_t(out.plan.indices[k]), 1});
    out.product = BlaschkeProduct::from_orbit_zeros(f, zs);
    return out;
}

struct BlaschkeBlock {
    std::size_t seed_index;
    double y;
    std::int64_t half_width;  // block is |n| <= half_width
    double block_sum;
    double lower_bound;       // 1 / (6 t)
};

struct OrbitBlaschkeReport {
    bool hyperbolic = true;
    bool blaschke = true;
    double seed_sum = 0.0;                       // sum_k y_k / (1 + |v_k|^2)
    double bound_factor = 0.0;                   // hyperbolic only
    double certified_bound = 0.0;                // bound_factor * seed_sum
    std::vector<double> partial_sums;            // entry N sums over |n| <= N
    double sup_y = 0.0;
    std::vector<BlaschkeBlock> blocks;           // parabolic seeds with y >= t + 1
};

// Orbit Blaschke sums sum_{k, n} Im(v) / (1 + |v|^2) over v = phi~^n(v_k) in half-plane coordinates.
inline OrbitBlaschkeReport blaschke_condition_orbit(const NonEllipticNormalForm& f, const std::vector<cplx>& seed,
                                                    std::int64_t n_orbit, bool bounded_intent = true) {
    if (n_orbit < 0) throw Error(ErrorKind::InvalidArgument, "orbit truncation must be nonnegative");
    for (auto v : seed)
        if (!in_half_plane_domain(f, v))
            throw Error(ErrorKind::SeedOutsideFundamentalDomain, "seed point is outside the fundamental domain");
    OrbitBlaschkeReport rep;
    rep.hyperbolic = f.is_hyperbolic();
    auto term = [&](cplx v, std::int64_t n) {
        if (f.is_hyperbolic()) {
            // written in powers of alpha^{-|n|} so it stays finite past the overflow of alpha^n
            const double r = std::pow(f.alpha(), -std::abs(double(n)));
            return n >= 0 ? r * v.imag() / (r * r + std::norm(v)) : r * v.imag() / (1.0 + r * r * std::norm(v));
        }
        const cplx w = v + double(n) * f.t();
        return w.imag() / (1.0 + std::norm(w));
    };
    for (auto v : seed) {
        rep.seed_sum += v.imag() / (1.0 + std::norm(v));
        rep.sup_y = std::max(rep.sup_y, v.imag());
    }
    rep.partial_sums.assign(std::size_t(n_orbit) + 1, 0.0);
    double acc = 0.0;
    for (std::int64_t n = 0; n <= n_orbit; ++n) {
        for (auto v : seed) {
            acc += term(v, n);
            if (n > 0) acc += term(v, -n);
        }
        rep.partial_sums[std::size_t(n)] = acc;
    }
    if (f.is_hyperbolic()) {
        const double a = f.alpha();
        rep.bound_factor = (a + 1.0) / (a - 1.0) * (1.0 + a * a);
        rep.certified_bound = rep.bound_factor * rep.seed_sum;
        rep.blaschke = true;
    } else {
        const double t = f.t();
        for (std::size_t k = 0; k < seed.size(); ++k) {
            const double y = seed[k].imag();
            if (y < t + 1.0) continue;
            const auto m = std::int64_t(std::floor(y / t));
            double s = 0.0;
            for (std::int64_t n = -m; n <= m; ++n) s += term(seed[k], n);
            rep.blocks.push_back({k, y, m, s, 1.0 / (6.0 * t)});
        }
        rep.blaschke = bounded_intent;
    }
    return rep;
}

inline OrbitBlaschkeReport blaschke_condition_orbit(const NonEllipticNormalForm& f, const std::vector<DiscPoint>& seed,
                                                    std::int64_t n_orbit, bool bounded_intent = true) {
    std::vector<cplx> v;
    for (const auto& z : seed) v.push_back(to_half_plane(z.value()));
    return blaschke_condition_orbit(f, v, n_orbit, bounded_intent);
}

// beta distance with the deficit formula, usable close to the circle.
inline double beta_accurate(cplx a, cplx b) {
    const double q = rho_deficit(a, b);
    if (q >= 1.0) return 0.0;
    const double r = std::sqrt(1.0 - q);
    return 2.0 * std::log1p(r) - std::log(q);
}

// Greedy net in the fundamental domain: grid points in order of distance from 0, kept when their
// beta distance to every accepted point and its images under phi^d, |d| <= 2, is at least `separation`.
inline std::vector<DiscPoint> separated_net(const NonEllipticNormalForm& f, std::size_t K, double separation = 1.0) {
    std::vector<cplx> grid;
    const double step = 0.15, umax = 10.0;
    if (f.is_hyperbolic()) {
        const double la = std::log(f.alpha());
        const int nr = std::max(2, int(std::ceil(la / step)));
        for (int i = 0; i < nr; ++i) {
            const double r = std::exp(la * i / nr);
            for (double u = -umax; u <= umax + 1e-12; u += step)
                grid.push_back(from_half_plane(std::polar(r, 2.0 * std::atan(std::exp(u)))));
        }
    } else {
        const double t = f.t();
        for (double u = -umax; u <= umax + 1e-12; u += step) {
            const double y = std::exp(u);
            const int nx = std::clamp(int(std::ceil(t / (step * y))), 2, 512);
            for (int i = 0; i < nx; ++i) grid.push_back(from_half_plane(cplx(t * i / nx, y)));
        }
    }
    std::vector<cplx> keep;
    for (auto z : grid)
        if (std::norm(z) < 1.0 && in_half_plane_domain(f, to_half_plane(z))) keep.push_back(z);
    std::stable_sort(keep.begin(), keep.end(), [](cplx a, cplx b) {
        const double ra = std::abs(a), rb = std::abs(b);
        return ra != rb ? ra < rb : std::arg(a) < std::arg(b);
    });
    std::vector<DiscPoint> net;
    std::vector<cplx> images;
    for (auto z : keep) {
        if (net.size() >= K) break;
        bool ok = true;
        for (auto p : images)
            if (beta_accurate(z, p) < separation) {
                ok = false;
                break;
            }
        if (!ok) continue;
        net.emplace_back(z);
        for (int d = -2; d <= 2; ++d) images.push_back(iterate_eval(f, d, z));
    }
    if (net.size() < K) throw Error(ErrorKind::CandidatesExhausted, "grid too coarse for the requested net size");
    return net;
}

struct OmissionRow {
    std::size_t j;
    cplx w;
    std::int64_t n;
    double numerator;      // (1 - |B_j o phi^(n_j)(0)|^2)^{1/2}, B_j omits factor j; may underflow
    double ratio;          // numerator / (1 - |w_j|^2); may underflow
    double log_numerator;
    double log_ratio;      // compared when checking monotonicity
};

struct NetProductOptions {
    double separation = 1.0;
    int max_tightening = 200;
};

struct NetProduct {
    BlaschkeProduct product;
    std::vector<DiscPoint> net;
    ThinSelectionPlan plan;
    std::vector<OmissionRow> table;
    bool decreasing = false;
    int tightening_rounds = 0;
};

// Factor-omission table computed in log space: the numerators fall far below the double range.
inline std::vector<OmissionRow> omission_table(const BlaschkeProduct& b, const NonEllipticNormalForm& f) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<OmissionRow> rows;
    const auto& fs = b.factors();
    for (std::size_t j = 0; j < fs.size(); ++j) {
        // L = log(-log |B_j(phi^(n_j)(0))|) as a log-sum-exp of per-factor terms.
        std::vector<double> logs;
        for (std::size_t k = 0; k < fs.size(); ++k) {
            if (k == j) continue;
            const std::int64_t d = fs[j].shift - fs[k].shift;
            const cplx zeta = iterate_eval(f, d, 0.0);
            const double lq = std::log(one_minus_abs2(fs[k].w)) + iterate_center_log_defect(f, d) -
                              std::log(std::norm(1.0 - std::conj(fs[k].w) * zeta));
            double lt;
            if (lq >= 0.0) lt = inf;
            else if (lq > -30.0) lt = std::log(-0.5 * std::log1p(-std::exp(lq)));
            else lt = lq - std::log(2.0);
            logs.push_back(lt + std::log(double(fs[k].multiplicity)));
        }
        double L = -inf;
        if (!logs.empty()) {
            const double m = *std::max_element(logs.begin(), logs.end());
            if (std::isinf(m)) L = m;
            else {
                double acc = 0.0;
                for (double v : logs) acc += std::exp(v - m);
                L = m + std::log(acc);
            }
        }
        double lnum;
        if (L == -inf) lnum = -inf;
        else if (L > -30.0) lnum = 0.5 * std::log(-std::expm1(-2.0 * std::exp(L)));
        else lnum = 0.5 * (std::log(2.0) + L);
        const double lratio = lnum - std::log(one_minus_abs2(fs[j].w));
        rows.push_back({j, fs[j].w, fs[j].shift, std::exp(lnum), std::exp(lratio), lnum, lratio});
    }
    return rows;
}

// Thin product over a separated net of the fundamental domain, no pullback accumulation.
inline NetProduct separated_net_product(const NonEllipticNormalForm& f, std::size_t K, NetProductOptions opt = {}) {
    if (K < 1) throw Error(ErrorKind::InvalidArgument, "need at least one factor");
    NetProduct out;
    out.net = separated_net(f, K, opt.separation);
    // Rows 0 and 1 share their dominant term rho(z_0, z_1) and row 1 also sees z_2, so the ratio drops
    // from row 0 to row 1 only with room to spare in 1 - |w|^2: the outermost net point takes slot 0.
    std::rotate(out.net.begin(), out.net.end() - 1, out.net.end());
    std::vector<double> radii;
    for (const auto& w : out.net) radii.push_back(w.abs());
    // Initial deficits shrink with 1 - |w_j|^2 so the ratio bound sqrt(2(1 - delta_j))/(1 - |w_j|^2) decreases.
    std::vector<double> targets(K);
    double prev = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        const double d = one_minus_abs2(out.net[j].value());
        const double gap = std::min(0.5, 0.5 * d * d * std::ldexp(1.0, -int(j)));
        prev = std::max(prev, 1.0 - gap);
        targets[j] = prev;
    }
    OrbitCenterCandidates cands(f);
    for (int round = 0;; ++round) {
        NetProduct trial = out;
        try {
            trial.plan = thin_subsequence_select(cands, radii, targets, K);
        } catch (const Error& e) {
            if (round == 0 || e.kind() != ErrorKind::CandidatesExhausted) throw;
            break;  // keep the last buildable result
        }
        std::vector<OrbitZero> zs;
        for (std::size_t k = 0; k < K; ++k) zs.push_back({out.net[k], std::int64_t(trial.plan.indices[k]), 1});
        trial.product = BlaschkeProduct::from_orbit_zeros(f, zs);
        trial.table = omission_table(trial.product, f);
        trial.tightening_rounds = round;
        std::size_t bad = trial.table.size();
        for (std::size_t j = 1; j < trial.table.size() && bad == trial.table.size(); ++j)
            if (!(trial.table[j].log_ratio < trial.table[j - 1].log_ratio)) bad = j;
        trial.decreasing = bad == trial.table.size();
        out = std::move(trial);
        if (out.decreasing || round >= opt.max_tightening) break;
        bool moved = false;
        for (std::size_t j = bad; j < K; ++j) {
            double next = std::min(1.0 - 1e-15, 1.0 - 0.25 * (1.0 - targets[j]));
            if (j > 0) next = std::max(next, targets[j - 1]);
            if (next > targets[j]) {
                targets[j] = next;
                moved = true;
            }
        }
        if (!moved) break;
    }
    return out;
}

}  // namespace hol
