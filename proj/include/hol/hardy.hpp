#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hol/blaschke.hpp"

namespace hol {

constexpr std::size_t default_grid_size = 4096;

// Truncated power series a_0 + a_1 z + ... + a_N z^N.
class TaylorVector {
public:
    TaylorVector() = default;
    explicit TaylorVector(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {}

    static TaylorVector monomial(std::size_t n, cplx a = 1.0) {
        std::vector<cplx> c(n + 1, 0.0);
        c[n] = a;
        return TaylorVector(std::move(c));
    }

    // Szego kernel K_w materialized to the given degree: coefficients conj(w)^n.
    static TaylorVector kernel(cplx w, std::size_t degree) {
        std::vector<cplx> c(degree + 1);
        cplx p = 1.0;
        for (auto& a : c) {
            a = p;
            p *= std::conj(w);
        }
        return TaylorVector(std::move(c));
    }

    const std::vector<cplx>& coefficients() const { return c_; }
    std::size_t size() const { return c_.size(); }
    cplx operator[](std::size_t n) const { return n < c_.size() ? c_[n] : cplx(0.0); }

    cplx operator()(cplx z) const {
        cplx v = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) v = v * z + c_[i];
        return v;
    }

    double norm2() const {
        double s = 0.0;
        for (auto a : c_) s += std::norm(a);
        return std::sqrt(s);
    }

    friend TaylorVector operator+(const TaylorVector& a, const TaylorVector& b) {
        std::vector<cplx> c(std::max(a.size(), b.size()));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
        return TaylorVector(std::move(c));
    }
    friend TaylorVector operator-(const TaylorVector& a, const TaylorVector& b) { return a + cplx(-1.0) * b; }
    friend TaylorVector operator*(cplx s, const TaylorVector& a) {
        std::vector<cplx> c = a.c_;
        for (auto& x : c) x *= s;
        return TaylorVector(std::move(c));
    }

private:
    std::vector<cplx> c_;
};

// <f, g> = sum a_n conj(b_n)
inline cplx inner_product(const TaylorVector& f, const TaylorVector& g) {
    cplx s = 0.0;
    const std::size_t n = std::min(f.size(), g.size());
    for (std::size_t i = 0; i < n; ++i) s += f[i] * std::conj(g[i]);
    return s;
}

inline cplx kernel_eval(const DiscPoint& w, cplx z) {
    if (!(std::norm(z) < 1.0)) throw Error(ErrorKind::OutsideDisc, "kernel is evaluated inside the disc");
    return 1.0 / (1.0 - std::conj(w.value()) * z);
}

inline bool is_power_of_two(std::size_t m) { return m >= 2 && (m & (m - 1)) == 0; }

// Values on M equispaced boundary angles 2 pi j / M.
class BoundarySamples {
public:
    BoundarySamples() = default;
    explicit BoundarySamples(std::vector<cplx> values) : v_(std::move(values)) {
        if (!is_power_of_two(v_.size())) throw Error(ErrorKind::InvalidArgument, "grid size must be a power of two");
    }

    template <class F>
    static BoundarySamples from_function(F&& f, std::size_t M = default_grid_size) {
        if (!is_power_of_two(M)) throw Error(ErrorKind::InvalidArgument, "grid size must be a power of two");
        std::vector<cplx> v(M);
        for (std::size_t j = 0; j < M; ++j) v[j] = f(std::polar(1.0, angle_of(j, M)));
        return BoundarySamples(std::move(v));
    }

    static BoundarySamples from_taylor(const TaylorVector& f, std::size_t M = default_grid_size) {
        return from_function([&](cplx z) { return f(z); }, M);
    }

    static double angle_of(std::size_t j, std::size_t M) { return 2.0 * pi * double(j) / double(M); }

    std::size_t size() const { return v_.size(); }
    double angle(std::size_t j) const { return angle_of(j, size()); }
    const std::vector<cplx>& values() const { return v_; }
    cplx operator[](std::size_t j) const { return v_[j]; }

    // Discrete Fourier coefficients c_k = mean_j f_j e^{-i k theta_j}; index k >= M/2 holds k - M.
    std::vector<cplx> fourier() const {
        Eigen::FFT<double> fft;
        std::vector<cplx> out;
        fft.fwd(out, v_);
        for (auto& c : out) c /= double(size());
        return out;
    }

    // Nonnegative-frequency part up to the given degree.
    TaylorVector analytic_part(std::size_t degree) const {
        const auto c = fourier();
        const std::size_t n = std::min(degree + 1, size() / 2);
        return TaylorVector(std::vector<cplx>(c.begin(), c.begin() + std::ptrdiff_t(n)));
    }

    // Trigonometric interpolant at an arbitrary angle, Nyquist term split symmetrically.
    cplx interpolate(double theta) const { return interpolate_with(fourier(), theta); }

    static cplx interpolate_with(const std::vector<cplx>& c, double theta) {
        const std::size_t M = c.size(), h = M / 2;
        const cplx e = std::polar(1.0, theta);
        cplx s = c[0] + c[h] * std::cos(double(h) * theta);
        cplx p = 1.0;
        for (std::size_t k = 1; k < h; ++k) {
            p *= e;
            if (k % 64 == 0) p = std::polar(1.0, double(k) * theta);  // limit drift of the recurrence
            s += c[k] * p + c[M - k] * std::conj(p);
        }
        return s;
    }

private:
    std::vector<cplx> v_;
};

// Boundary H^p norm by the trapezoidal rule, (mean |f|^p)^{1/p}.
inline double hp_norm(const BoundarySamples& f, double p) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    double s = 0.0;
    for (auto v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s / double(f.size()), 1.0 / p);
}

inline double sup_norm(const BoundarySamples& f) {
    double m = 0.0;
    for (auto v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

inline cplx inner_product(const BoundarySamples& f, const BoundarySamples& g) {
    if (f.size() != g.size()) throw Error(ErrorKind::InvalidArgument, "grids differ");
    cplx s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * std::conj(g[j]);
    return s / double(f.size());
}

// Samples of f o phi on the same grid; off-grid values from the trigonometric interpolant.
template <class Map>
BoundarySamples compose_boundary_with(const BoundarySamples& f, Map&& phi) {
    const auto c = f.fourier();
    std::vector<cplx> out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        const cplx e = phi(std::polar(1.0, f.angle(j)));
        out[j] = BoundarySamples::interpolate_with(c, std::arg(e));
    }
    return BoundarySamples(std::move(out));
}

inline BoundarySamples compose_boundary(const BoundarySamples& f, const MoebiusAutomorphism& phi) {
    return compose_boundary_with(f, [&](cplx z) { return phi(z); });
}

inline BoundarySamples compose_boundary(const BoundarySamples& f, const NonEllipticNormalForm& phi, std::int64_t n = 1) {
    return compose_boundary_with(f, [&](cplx z) { return iterate_eval(phi, n, z); });
}

// ---------------------------------------------------------------------------------------------
// Limits of B o phi^(n)

enum class LimitKind { UnimodularConstant, RotatedInvolution };

inline std::string to_string(LimitKind k) {
    return k == LimitKind::UnimodularConstant ? "constant" : "rotated_involution";
}

struct OrbitLimit {
    std::int64_t n = 0;
    LimitKind kind = LimitKind::UnimodularConstant;
    cplx lambda = 1.0;
    cplx w = 0.0;                // root of the fitted lambda phi_w; unused for constants
    double sup_residual = 0.0;   // on the test disc
    double h2_residual = 0.0;    // ||B o phi^(n) - g||_2^2 = 2 - 2 Re <B o phi^(n), g>
    bool fit_failed = false;
};

struct OrbitLimitOptions {
    double test_radius = 0.7;
    std::size_t test_points = 200;
    double eps_const = 1e-3;
    double eps_fit = 1e-3;
};

// Deterministic sunflower layout of n points filling the disc of radius r.
inline std::vector<cplx> sunflower_points(std::size_t n, double r) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    std::vector<cplx> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = std::polar(r * std::sqrt((double(i) + 0.5) / double(n)), golden * double(i));
    return pts;
}

inline OrbitLimit fit_orbit_limit(const BlaschkeProduct& B, const NonEllipticNormalForm& f, std::int64_t n,
                                  const std::vector<cplx>& test, const OrbitLimitOptions& opt) {
    const BlaschkeProduct g = B.composed(f, n);
    OrbitLimit out;
    out.n = n;
    const cplx g0 = g(0.0);
    const double log_g0 = g.log_abs(0.0);
    if (g.empty() || std::abs(g0) > 1.0 - opt.eps_const) {
        out.kind = LimitKind::UnimodularConstant;
        out.lambda = g.empty() ? cplx(1.0) : g0 / std::abs(g0);
        out.h2_residual = 2.0 * -std::expm1(log_g0);
        for (auto z : test) out.sup_residual = std::max(out.sup_residual, std::abs(g(z) - out.lambda));
        out.fit_failed = out.sup_residual > opt.eps_fit;
        return out;
    }
    // Root: the pulled-back zero nearest the origin. It is a zero of g exactly, no polishing needed.
    std::size_t kstar = 0;
    double best = 2.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double a = std::abs(g.zero(k));
        if (a < best) {
            best = a;
            kstar = k;
        }
    }
    const cplx r = g.zero(kstar);
    const int m = g.factors()[kstar].multiplicity;
    // Factor kstar is an automorphism vanishing at r, i.e. lam2 phi_r with lam2 = A(z)(1 - conj(r) z)/(r - z).
    const cplx zp = std::abs(r - 0.5) > 0.25 ? cplx(0.5) : cplx(-0.5);
    const cplx lam2 = g.factor_value(kstar, zp) * (1.0 - std::conj(r) * zp) / (r - zp);
    cplx u0 = std::pow(g.factor_value(kstar, 0.0), m - 1);
    double log_u0 = (m - 1) * std::log(std::abs(r));
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (j == kstar) continue;
        const int mj = g.factors()[j].multiplicity;
        u0 *= std::pow(g.factor_value(j, 0.0), mj);
        log_u0 += mj * log_rho_from_deficit(g.factor_deficit(j, 0.0));
    }
    out.kind = LimitKind::RotatedInvolution;
    out.w = r;
    if (std::abs(u0) == 0.0) {
        out.lambda = lam2 / std::abs(lam2);
        out.h2_residual = 2.0;
        out.fit_failed = true;
        return out;
    }
    out.lambda = lam2 / std::abs(lam2) * u0 / std::abs(u0);
    out.h2_residual = 2.0 * -std::expm1(log_u0);
    for (auto z : test)
        out.sup_residual = std::max(out.sup_residual, std::abs(g(z) - out.lambda * involution_eval(r, z)));
    out.fit_failed = out.sup_residual > opt.eps_fit;
    return out;
}

inline std::vector<OrbitLimit> orbit_limit_points(const BlaschkeProduct& B, const NonEllipticNormalForm& f,
                                                  const std::vector<std::int64_t>& n_list, OrbitLimitOptions opt = {}) {
    const auto test = sunflower_points(opt.test_points, opt.test_radius);
    std::vector<OrbitLimit> out;
    out.reserve(n_list.size());
    for (auto n : n_list) out.push_back(fit_orbit_limit(B, f, n, test, opt));
    return out;
}

// ---------------------------------------------------------------------------------------------
// Accumulation of pulled-back zeros

struct ECluster {
    cplx center;
    std::size_t support = 0;  // distinct zeros that land in the cluster
    std::size_t hits = 0;     // (zero, m) pairs
};

struct EstimateEOptions {
    double subdisc = 0.95;
    double eps = 0.05;              // pseudo-hyperbolic cluster radius
    std::size_t min_support = 2;
    std::optional<std::int64_t> m_min, m_max;
};

// Indices d with |phi^(d)(w)| <= r, from the intersection of the orbit curve with the disc of radius r
// (a Euclidean disc centered at i c, radius R, in the half-plane; c^2 - R^2 = 1).
inline std::pair<std::int64_t, std::int64_t> orbit_range_in_disc(const NonEllipticNormalForm& f, cplx w, double r) {
    const cplx v = to_half_plane(w);
    const double c = (1.0 + r * r) / (1.0 - r * r), R = 2.0 * r / (1.0 - r * r);
    const std::pair<std::int64_t, std::int64_t> empty{1, 0};
    if (f.is_hyperbolic()) {
        const double sn = v.imag() / std::abs(v);
        const double disc = c * c * sn * sn - 1.0;
        if (disc < 0.0) return empty;
        const double s1 = c * sn - std::sqrt(disc), s2 = c * sn + std::sqrt(disc);
        const double la = std::log(f.alpha()), lv = std::log(std::abs(v));
        return {std::int64_t(std::floor((std::log(s1) - lv) / la)) - 1, std::int64_t(std::ceil((std::log(s2) - lv) / la)) + 1};
    }
    const double dy = v.imag() - c;
    if (std::abs(dy) > R) return empty;
    const double half = std::sqrt(R * R - dy * dy), t = f.t();
    return {std::int64_t(std::floor((-half - v.real()) / t)) - 1, std::int64_t(std::ceil((half - v.real()) / t)) + 1};
}

inline std::vector<ECluster> estimate_E(const BlaschkeProduct& B, const NonEllipticNormalForm& f,
                                        EstimateEOptions opt = {}) {
    struct Hit {
        cplx p;
        std::size_t zero;
    };
    std::vector<Hit> hits;
    for (std::size_t j = 0; j < B.size(); ++j) {
        const auto& fj = B.factors()[j];
        const auto [d0, d1] = orbit_range_in_disc(f, fj.w, opt.subdisc);
        for (std::int64_t d = d0; d <= d1; ++d) {
            const std::int64_t m = fj.shift - d;  // phi^(-m)(zero_j) = phi^(shift_j - m)(w_j)
            if (opt.m_min && m < *opt.m_min) continue;
            if (opt.m_max && m > *opt.m_max) continue;
            const cplx p = iterate_eval(f, d, fj.w);
            if (std::abs(p) <= opt.subdisc) hits.push_back({p, j});
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        const double ra = std::abs(a.p), rb = std::abs(b.p);
        return ra != rb ? ra < rb : std::arg(a.p) < std::arg(b.p);
    });
    std::vector<ECluster> clusters;
    std::vector<std::vector<std::size_t>> members;
    for (const auto& h : hits) {
        std::size_t c = clusters.size();
        for (std::size_t i = 0; i < clusters.size(); ++i)
            if (rho(clusters[i].center, h.p) < opt.eps) {
                c = i;
                break;
            }
        if (c == clusters.size()) {
            clusters.push_back({h.p, 0, 0});
            members.emplace_back();
        }
        ++clusters[c].hits;
        members[c].push_back(h.zero);
    }
    std::vector<ECluster> out;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        auto& ids = members[i];
        std::sort(ids.begin(), ids.end());
        clusters[i].support = std::size_t(std::unique(ids.begin(), ids.end()) - ids.begin());
        if (clusters[i].support >= opt.min_support) out.push_back(clusters[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Span of {1} u {K_w : w in E} u {z if 0 in E}

struct KernelSpanBasis {
    std::vector<cplx> nodes;  // nonzero, distinct
    bool include_constant = true;
    bool include_z = false;

    static KernelSpanBasis from_set(const std::vector<DiscPoint>& E) {
        KernelSpanBasis b;
        for (const auto& e : E) {
            if (e.value() == 0.0) b.include_z = true;
            else b.nodes.push_back(e.value());
        }
        return b;
    }

    std::size_t size() const { return nodes.size() + (include_constant ? 1 : 0) + (include_z ? 1 : 0); }

    enum class Kind { Constant, Z, Kernel };
    struct Element {
        Kind kind;
        cplx w;
    };
    Element element(std::size_t i) const {
        if (include_constant) {
            if (i == 0) return {Kind::Constant, 0.0};
            --i;
        }
        if (include_z) {
            if (i == 0) return {Kind::Z, 0.0};
            --i;
        }
        return {Kind::Kernel, nodes.at(i)};
    }
};

// <a, b> for two basis elements.
inline cplx basis_inner(const KernelSpanBasis::Element& a, const KernelSpanBasis::Element& b) {
    using K = KernelSpanBasis::Kind;
    if (a.kind == K::Constant) {
        if (b.kind == K::Constant) return 1.0;
        if (b.kind == K::Z) return 0.0;
        return 1.0;  // <1, K_w> = 1(w)
    }
    if (a.kind == K::Z) {
        if (b.kind == K::Constant) return 0.0;
        if (b.kind == K::Z) return 1.0;
        return b.w;  // <z, K_w> = w
    }
    if (b.kind == K::Constant) return 1.0;
    if (b.kind == K::Z) return std::conj(a.w);
    return 1.0 / (1.0 - std::conj(a.w) * b.w);  // <K_a, K_b> = K_a(b)
}

// <f, e> for a polynomial f, using the reproducing property.
inline cplx basis_inner(const TaylorVector& f, const KernelSpanBasis::Element& e) {
    using K = KernelSpanBasis::Kind;
    if (e.kind == K::Constant) return f[0];
    if (e.kind == K::Z) return f[1];
    return f(e.w);
}

// Element sum_i c_i e_i of the span.
struct SpanElement {
    KernelSpanBasis basis;
    std::vector<cplx> coeffs;
    double condition = 1.0;

    cplx operator()(cplx z) const {
        cplx s = 0.0;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            const auto e = basis.element(i);
            using K = KernelSpanBasis::Kind;
            s += coeffs[i] * (e.kind == K::Constant ? cplx(1.0) : e.kind == K::Z ? z : 1.0 / (1.0 - std::conj(e.w) * z));
        }
        return s;
    }

    TaylorVector to_taylor(std::size_t degree) const {
        std::vector<cplx> c(degree + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            const auto e = basis.element(i);
            using K = KernelSpanBasis::Kind;
            if (e.kind == K::Constant) c[0] += coeffs[i];
            else if (e.kind == K::Z) {
                if (degree >= 1) c[1] += coeffs[i];
            } else {
                cplx p = coeffs[i];
                for (auto& a : c) {
                    a += p;
                    p *= std::conj(e.w);
                }
            }
        }
        return TaylorVector(std::move(c));
    }
};

// Gram matrix G_ij = <e_j, e_i>, so that G c = (<f, e_i>)_i gives the projection coefficients.
inline Eigen::MatrixXcd gram_matrix(const KernelSpanBasis& basis) {
    const auto n = Eigen::Index(basis.size());
    Eigen::MatrixXcd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = basis_inner(basis.element(std::size_t(j)), basis.element(std::size_t(i)));
    return G;
}

inline double gram_condition(const Eigen::MatrixXcd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev.size() == 0) return 1.0;
    if (!(ev(0) > 0.0)) return std::numeric_limits<double>::infinity();
    return ev(ev.size() - 1) / ev(0);
}

template <class RhsFn>
SpanElement project_with(const KernelSpanBasis& basis, RhsFn&& rhs, double cond_max) {
    const Eigen::MatrixXcd G = gram_matrix(basis);
    SpanElement out;
    out.basis = basis;
    out.condition = gram_condition(G);
    if (!(out.condition <= cond_max)) throw Error(ErrorKind::IllConditionedBasis, "Gram matrix condition number too large");
    Eigen::VectorXcd b(G.rows());
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rhs(basis.element(std::size_t(i)));
    Eigen::LLT<Eigen::MatrixXcd> llt(G);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::IllConditionedBasis, "Gram matrix is not positive definite");
    const Eigen::VectorXcd c = llt.solve(b);
    out.coeffs.assign(c.data(), c.data() + c.size());
    return out;
}

inline SpanElement model_space_project(const TaylorVector& f, const KernelSpanBasis& basis, double cond_max = 1e12) {
    return project_with(basis, [&](const KernelSpanBasis::Element& e) { return basis_inner(f, e); }, cond_max);
}

// Projection of an element already in some span; exact inner products, no truncation.
inline SpanElement model_space_project(const SpanElement& f, const KernelSpanBasis& basis, double cond_max = 1e12) {
    return project_with(
        basis,
        [&](const KernelSpanBasis::Element& e) {
            cplx s = 0.0;
            for (std::size_t i = 0; i < f.coeffs.size(); ++i) s += f.coeffs[i] * basis_inner(f.basis.element(i), e);
            return s;
        },
        cond_max);
}

// ---------------------------------------------------------------------------------------------
// Classification of the closed span of the orbit limits

enum class SpanCase { ConstantsOnly, WholeSpace, ModelSpace };

inline std::string to_string(SpanCase c) {
    switch (c) {
        case SpanCase::ConstantsOnly: return "constants_only";
        case SpanCase::WholeSpace: return "whole_space";
        case SpanCase::ModelSpace: return "model_space";
    }
    return "unknown";
}

struct SpanFlags {
    bool blaschke_intent = true;
    bool is_empty = false;
};

struct SpanOptions {
    double r_window = 0.999;        // closure under phi^{+-1} is checked for images inside this radius
    double closure_tol = 1e-9;      // pseudo-hyperbolic
    double grid_radius = 0.9;
    std::size_t grid_points = 400;
    double stable_tail = 1e-9;      // truncation-stable grid points
    double min_modulus = 1e-3;      // skip grid points near zeros of b
};

struct SpanClassification {
    SpanCase kind = SpanCase::ConstantsOnly;
    std::optional<BlaschkeProduct> b;
    KernelSpanBasis basis;
    bool phi_invariant = true;   // false raises the NotPhiInvariant warning
    bool gamma_checked = false;
    cplx gamma = 1.0;
    double gamma_modulus_error = 0.0;  // ||gamma| - 1|
    double gamma_residual = 0.0;       // max |b(phi(z))/b(z) - gamma| on the stable subgrid
    std::size_t stable_points = 0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// {phi^(n)(w) : |n| <= N}, dropping points that round onto the circle.
inline std::vector<DiscPoint> truncated_orbit(const NonEllipticNormalForm& f, cplx w, std::int64_t N) {
    std::vector<DiscPoint> out;
    for (std::int64_t n = -N; n <= N; ++n) {
        const cplx p = iterate_eval(f, n, w);
        if (1.0 - std::abs(p) >= 1e-15) out.emplace_back(p);
    }
    return out;
}

inline SpanClassification span_classification(const NonEllipticNormalForm& f, const std::vector<DiscPoint>& E,
                                               SpanFlags flags = {}, SpanOptions opt = {}) {
    SpanClassification out;
    if (flags.is_empty || E.empty()) {
        out.kind = SpanCase::ConstantsOnly;
        out.basis.include_constant = true;
        return out;
    }
    if (!flags.blaschke_intent) {
        out.kind = SpanCase::WholeSpace;
        return out;
    }
    out.kind = SpanCase::ModelSpace;
    out.basis = KernelSpanBasis::from_set(E);
    std::vector<cplx> pts;
    for (const auto& e : E) pts.push_back(e.value());
    out.b = BlaschkeProduct::from_zeros(ZeroSequence::from_points(pts));

    auto member = [&](cplx z) {
        for (auto p : pts)
            if (rho(p, z) < opt.closure_tol || std::abs(p - z) < 1e-14) return true;  // rho is unresolvable at the rim
        return false;
    };
    // Zeros of b without a partner under phi^{-1} or phi; their factors differ between b o phi and b.
    std::vector<cplx> unmatched;
    for (auto p : pts) {
        const cplx fwd = iterate_eval(f, 1, p), bwd = iterate_eval(f, -1, p);
        const bool has_fwd = member(fwd), has_bwd = member(bwd);
        if ((!has_fwd && std::abs(fwd) <= opt.r_window) || (!has_bwd && std::abs(bwd) <= opt.r_window))
            out.phi_invariant = false;
        if (!has_fwd || !has_bwd) unmatched.push_back(p);
    }
    if (!out.phi_invariant) return out;

    std::vector<double> re, im;
    std::vector<cplx> ratios;
    for (auto z : sunflower_points(opt.grid_points, opt.grid_radius)) {
        const cplx pz = iterate_eval(f, 1, z);
        // |F_a(z) - 1| <= (1 - |a|)(1 + |z|)/(1 - |z|) for a normalized factor F_a
        double tail = 0.0;
        for (auto a : unmatched) {
            const double da = 1.0 - std::abs(a);
            tail += da * ((1.0 + std::abs(z)) / (1.0 - std::abs(z)) + (1.0 + std::abs(pz)) / (1.0 - std::abs(pz)));
        }
        if (tail > opt.stable_tail) continue;
        const cplx bz = (*out.b)(z);
        if (std::abs(bz) < opt.min_modulus) continue;
        const cplx q = (*out.b)(pz) / bz;
        ratios.push_back(q);
        re.push_back(q.real());
        im.push_back(q.imag());
    }
    out.stable_points = ratios.size();
    if (ratios.empty()) return out;
    out.gamma_checked = true;
    out.gamma = cplx(median(re), median(im));
    out.gamma_modulus_error = std::abs(std::abs(out.gamma) - 1.0);
    for (auto q : ratios) out.gamma_residual = std::max(out.gamma_residual, std::abs(q - out.gamma));
    return out;
}

}  // namespace hol
