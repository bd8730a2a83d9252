#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "hol/error.hpp"

namespace hol {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx imag_unit{0.0, 1.0};

// Exclusion radius around boundary fixed points.
inline constexpr double fixed_point_radius = 1e-12;
inline constexpr double classify_tolerance = 1e-12;
// Points this far outside the closed disc are rejected by map evaluation.
inline constexpr double boundary_slack = 1e-12;

// 1 - |z|^2 without the cancellation of 1 - norm(z).
inline double one_minus_abs2(cplx z) {
    const double a = std::abs(z);
    return (1.0 - a) * (1.0 + a);
}

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * pi);
    if (r <= -pi) r += 2.0 * pi;
    return r;
}

class DiscPoint {
public:
    DiscPoint() = default;
    DiscPoint(cplx v) : v_(v) {
        if (!(std::norm(v) < 1.0))
            throw Error(ErrorKind::OutsideDisc, "disc point must satisfy |z| < 1");
    }
    DiscPoint(double re, double im = 0.0) : DiscPoint(cplx(re, im)) {}

    cplx value() const { return v_; }
    double abs() const { return std::abs(v_); }
    double defect() const { return one_minus_abs2(v_); }

private:
    cplx v_{};
};

class BoundaryPoint {
public:
    BoundaryPoint() = default;
    explicit BoundaryPoint(double angle) : angle_(wrap_angle(angle)) {}

    static BoundaryPoint from_value(cplx v) { return BoundaryPoint(std::arg(v)); }

    // Inverse of half_plane(): the boundary point whose Cayley image is the real x.
    static BoundaryPoint from_half_plane(double x) {
        if (x == 0.0) return BoundaryPoint(pi);
        const double s = x > 0.0 ? -1.0 : 1.0;
        return BoundaryPoint(2.0 * std::atan2(s, std::abs(x)));
    }

    double angle() const { return angle_; }
    cplx value() const { return std::polar(1.0, angle_); }

    // h(e^{i theta}) = -cot(theta / 2); infinite at theta = 0.
    double half_plane() const {
        const double h = 0.5 * angle_;
        return -std::cos(h) / std::sin(h);
    }

private:
    double angle_ = 0.0;
};

// z -> rotation * (center - z) / (1 - conj(center) z)
class MoebiusAutomorphism {
public:
    MoebiusAutomorphism() : rot_(-1.0, 0.0) {}
    MoebiusAutomorphism(cplx rotation, DiscPoint center) : rot_(rotation), w_(center.value()) {
        const double m = std::abs(rotation);
        if (!(std::abs(m - 1.0) < 1e-10))
            throw Error(ErrorKind::InvalidArgument, "rotation must be unimodular");
        rot_ /= m;
    }

    static MoebiusAutomorphism identity() { return {}; }
    static MoebiusAutomorphism involution(DiscPoint w) { return {1.0, w}; }
    // z -> u z
    static MoebiusAutomorphism rotation_by(cplx u) { return {-u, DiscPoint()}; }

    // Canonicalizes z -> (a z + b) / (c z + d).
    static MoebiusAutomorphism from_matrix(const std::array<cplx, 4>& m) {
        const cplx d = m[3];
        if (std::abs(d) == 0.0)
            throw Error(ErrorKind::InvalidArgument, "matrix does not preserve the disc");
        const cplx lam = -m[0] / d;
        const cplx w = (m[1] / d) / lam;
        if (!(std::norm(w) < 1.0))
            throw Error(ErrorKind::InvalidArgument, "matrix does not preserve the disc");
        return {lam / std::abs(lam), DiscPoint(w)};
    }

    cplx rotation() const { return rot_; }
    cplx center() const { return w_; }

    std::array<cplx, 4> matrix() const { return {-rot_, rot_ * w_, -std::conj(w_), 1.0}; }

    cplx operator()(cplx z) const {
        if (std::abs(z) > 1.0 + boundary_slack)
            throw Error(ErrorKind::OutsideDisc, "automorphisms are evaluated on the closed disc");
        return rot_ * (w_ - z) / (1.0 - std::conj(w_) * z);
    }
    BoundaryPoint operator()(BoundaryPoint xi) const {
        return BoundaryPoint::from_value((*this)(xi.value()));
    }

    cplx derivative(cplx z) const {
        const cplx d = 1.0 - std::conj(w_) * z;
        return -rot_ * one_minus_abs2(w_) / (d * d);
    }
    double derivative_modulus(cplx z) const {
        return one_minus_abs2(w_) / std::norm(1.0 - std::conj(w_) * z);
    }

    MoebiusAutomorphism inverse() const { return {std::conj(rot_), DiscPoint(rot_ * w_)}; }

    bool is_involution(double tol = 1e-14) const { return std::abs(rot_ - 1.0) < tol; }

private:
    cplx rot_;
    cplx w_{};
};

// a o b
inline MoebiusAutomorphism compose(const MoebiusAutomorphism& a, const MoebiusAutomorphism& b) {
    const auto x = a.matrix();
    const auto y = b.matrix();
    return MoebiusAutomorphism::from_matrix({x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
                                             x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]});
}

inline cplx mobius_eval(const MoebiusAutomorphism& m, cplx z) { return m(z); }

// phi_w(z) = (w - z) / (1 - conj(w) z), no range checks.
inline cplx involution_eval(cplx w, cplx z) { return (w - z) / (1.0 - std::conj(w) * z); }

inline double rho(DiscPoint z, DiscPoint w) { return std::abs(involution_eval(w.value(), z.value())); }

// 1 - rho(a, b)^2, accurate when the points are far apart.
inline double rho_deficit(cplx a, cplx b) {
    return one_minus_abs2(a) * one_minus_abs2(b) / std::norm(1.0 - std::conj(a) * b);
}

inline double beta_from_rho(double r) { return 2.0 * std::atanh(r); }
inline double rho_from_beta(double b) { return std::tanh(0.5 * b); }
inline double beta(DiscPoint z, DiscPoint w) { return beta_from_rho(rho(z, w)); }

// log rho from the deficit q = 1 - rho^2.
inline double log_rho_from_deficit(double q) { return 0.5 * std::log1p(-q); }

struct GeneralAutomorphismParams {
    double theta = 0.0;
    DiscPoint p;

    MoebiusAutomorphism to_moebius() const { return {std::polar(1.0, theta), p}; }
    static GeneralAutomorphismParams from_moebius(const MoebiusAutomorphism& m) {
        return {std::arg(m.rotation()), DiscPoint(m.center())};
    }
};

enum class AutomorphismClass { Elliptic, Parabolic, Hyperbolic };

inline const char* to_string(AutomorphismClass c) {
    switch (c) {
        case AutomorphismClass::Elliptic: return "elliptic";
        case AutomorphismClass::Parabolic: return "parabolic";
        case AutomorphismClass::Hyperbolic: return "hyperbolic";
    }
    return "?";
}

inline AutomorphismClass classify(const GeneralAutomorphismParams& params,
                                  double tol = classify_tolerance) {
    const double theta = wrap_angle(params.theta);
    const double modp = params.p.abs();
    if (modp < tol && std::abs(theta - pi) < tol)
        throw Error(ErrorKind::DegenerateIdentity, "theta = pi, p = 0 is the identity map");
    const double gap = modp - std::cos(0.5 * theta);
    if (gap > tol) return AutomorphismClass::Hyperbolic;
    if (gap < -tol) return AutomorphismClass::Elliptic;
    return AutomorphismClass::Parabolic;
}

inline AutomorphismClass classify(const MoebiusAutomorphism& m, double tol = classify_tolerance) {
    return classify(GeneralAutomorphismParams::from_moebius(m), tol);
}

class NonEllipticNormalForm {
public:
    enum class Kind { Hyperbolic, Parabolic };

    static NonEllipticNormalForm hyperbolic(double alpha) {
        if (!(alpha > 1.0) || !std::isfinite(alpha))
            throw Error(ErrorKind::InvalidArgument, "hyperbolic normal form needs alpha > 1");
        return {Kind::Hyperbolic, alpha};
    }
    static NonEllipticNormalForm parabolic(double t) {
        if (!(t > 0.0) || !std::isfinite(t))
            throw Error(ErrorKind::InvalidArgument, "parabolic normal form needs t > 0");
        return {Kind::Parabolic, t};
    }

    Kind kind() const { return kind_; }
    bool is_hyperbolic() const { return kind_ == Kind::Hyperbolic; }
    double parameter() const { return param_; }
    double alpha() const {
        if (!is_hyperbolic()) throw Error(ErrorKind::InvalidArgument, "parabolic form has no alpha");
        return param_;
    }
    double t() const {
        if (is_hyperbolic()) throw Error(ErrorKind::InvalidArgument, "hyperbolic form has no t");
        return param_;
    }

    // Attractive fixed point first.
    std::vector<cplx> fixed_points() const {
        if (is_hyperbolic()) return {1.0, -1.0};
        return {1.0};
    }

    std::string describe() const {
        return std::string(is_hyperbolic() ? "hyperbolic(alpha=" : "parabolic(t=") +
               std::to_string(param_) + ")";
    }

    bool operator==(const NonEllipticNormalForm&) const = default;

private:
    NonEllipticNormalForm(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_;
    double param_;
};

// Cayley map onto the upper half-plane; the attractive fixed point goes to infinity.
inline cplx to_half_plane(cplx z) { return imag_unit * (1.0 + z) / (1.0 - z); }
inline cplx from_half_plane(cplx v) { return (v - imag_unit) / (v + imag_unit); }

// Center c_n of phi^(n) written as rotation * phi_{c_n}. May round onto the circle for huge n.
inline cplx iterate_center(const NonEllipticNormalForm& f, std::int64_t n) {
    if (f.is_hyperbolic()) return -std::tanh(0.5 * double(n) * std::log(f.alpha()));
    const double s = double(n) * f.t();
    return s / cplx(s, -2.0);
}

inline cplx iterate_rotation(const NonEllipticNormalForm& f, std::int64_t n) {
    if (f.is_hyperbolic()) return -1.0;
    const double s = double(n) * f.t();
    return cplx(s, -2.0) / cplx(s, 2.0);
}

// 1 - |c_n|^2 in closed form, accurate when c_n is near the circle.
inline double iterate_center_defect(const NonEllipticNormalForm& f, std::int64_t n) {
    if (f.is_hyperbolic()) {
        const double c = std::cosh(0.5 * double(n) * std::log(f.alpha()));
        return 1.0 / (c * c);
    }
    const double s = double(n) * f.t();
    return 4.0 / (s * s + 4.0);
}

// log of iterate_center_defect, finite for every n.
inline double iterate_center_log_defect(const NonEllipticNormalForm& f, std::int64_t n) {
    if (f.is_hyperbolic()) {
        const double x = std::abs(0.5 * double(n) * std::log(f.alpha()));
        return -2.0 * (x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0));
    }
    const double s = double(n) * f.t();
    return std::log(4.0) - std::log(s * s + 4.0);
}

// phi^(n)(z) for |z| <= 1. Written so that neither alpha^n nor c_n needs to be representable.
inline cplx iterate_eval(const NonEllipticNormalForm& f, std::int64_t n, cplx z) {
    if (n == 0) return z;
    if (f.is_hyperbolic()) {
        // (z + tau) / (1 + tau z) with tau = tanh(n log(alpha) / 2) = sgn (1 - eps), written as an
        // offset from the attractive end so points piling up there keep full precision.
        const double x = 0.5 * double(n) * std::log(f.alpha());
        const double sgn = x > 0.0 ? 1.0 : -1.0;
        const double eps = 2.0 / (std::exp(2.0 * std::abs(x)) + 1.0);
        if (eps == 0.0) return z == -sgn ? z : cplx(sgn);
        const cplx den = (1.0 + sgn * z) - sgn * eps * z;
        return sgn + (z - sgn) * eps / den;
    }
    // 1 - 2i (1 - z) / (s (1 - z) + 2i), s = n t
    const double s = double(n) * f.t();
    const cplx d = 1.0 - z;
    return 1.0 - 2.0 * imag_unit * d / (s * d + 2.0 * imag_unit);
}

// phi^(n) as a centered map; only valid while c_n stays off the circle in double precision.
inline MoebiusAutomorphism iterate_map(const NonEllipticNormalForm& f, std::int64_t n) {
    const cplx c = iterate_center(f, n);
    if (!(std::norm(c) < 1.0))
        throw Error(ErrorKind::InvalidArgument, "iterate center is not representable");
    return {iterate_rotation(f, n), DiscPoint(c)};
}

// |phi^(n)'(z)| for any |z| <= 1, no fixed-point check.
inline double iterate_derivative_modulus(const NonEllipticNormalForm& f, std::int64_t n, cplx z) {
    if (n == 0) return 1.0;
    return iterate_center_defect(f, n) / std::norm(1.0 - std::conj(iterate_center(f, n)) * z);
}

inline bool near_fixed_point(const NonEllipticNormalForm& f, BoundaryPoint w) {
    const double a = std::abs(w.angle());
    if (a < fixed_point_radius) return true;
    return f.is_hyperbolic() && pi - a < fixed_point_radius;
}

inline bool near_fixed_point(const NonEllipticNormalForm& f, cplx z) {
    if (std::abs(z - 1.0) < fixed_point_radius) return true;
    return f.is_hyperbolic() && std::abs(z + 1.0) < fixed_point_radius;
}

inline double boundary_derivative(const NonEllipticNormalForm& f, std::int64_t n, BoundaryPoint w) {
    if (near_fixed_point(f, w))
        throw Error(ErrorKind::FixedPointSingularity, "derivative requested at a fixed point");
    return iterate_derivative_modulus(f, n, w.value());
}

// phi^(n) on the boundary, carried out on the real half-plane coordinate.
inline double iterate_half_plane_real(const NonEllipticNormalForm& f, std::int64_t n, double x) {
    if (n == 0 || x == 0.0 && f.is_hyperbolic()) return x;
    if (f.is_hyperbolic()) return x * std::pow(f.alpha(), double(n));
    return x + double(n) * f.t();
}

inline BoundaryPoint iterate_boundary(const NonEllipticNormalForm& f, std::int64_t n, BoundaryPoint w) {
    if (n == 0 || w.angle() == 0.0) return w;
    return BoundaryPoint::from_half_plane(iterate_half_plane_real(f, n, w.half_plane()));
}

namespace detail {

// Tile coordinates within this many tile widths below an integer count as that integer, so the
// closed ends of J (at +-i or -1) survive the rounding of their stored angles.
inline constexpr double tile_snap = 1e-12;

inline std::int64_t hyperbolic_index(double modv, double alpha) {
    return std::int64_t(std::floor(std::log(modv) / std::log(alpha) + tile_snap));
}

inline std::int64_t parabolic_index(double x, double t) {
    return std::int64_t(std::floor(x / t + tile_snap));
}

}  // namespace detail

// The n with phi^(-n)(z) in the fundamental domain (interior) or in J (boundary).
inline std::int64_t quotient_index(const NonEllipticNormalForm& f, cplx z) {
    if (std::abs(z) > 1.0 + boundary_slack)
        throw Error(ErrorKind::OutsideDisc, "quotient index needs |z| <= 1");
    if (near_fixed_point(f, z))
        throw Error(ErrorKind::FixedPointSingularity, "fixed points have no quotient index");
    const cplx v = to_half_plane(z);
    if (f.is_hyperbolic()) return detail::hyperbolic_index(std::abs(v), f.alpha());
    return detail::parabolic_index(v.real(), f.t());
}

inline std::int64_t quotient_index(const NonEllipticNormalForm& f, BoundaryPoint w) {
    if (near_fixed_point(f, w))
        throw Error(ErrorKind::FixedPointSingularity, "fixed points have no quotient index");
    const double x = w.half_plane();
    if (f.is_hyperbolic()) return detail::hyperbolic_index(std::abs(x), f.alpha());
    return detail::parabolic_index(x, f.t());
}

// Membership of the fundamental domain tested directly in half-plane coordinates.
inline bool in_half_plane_domain(const NonEllipticNormalForm& f, cplx v) {
    if (!(v.imag() > 0.0)) return false;
    if (f.is_hyperbolic()) {
        const double m = std::abs(v);
        return m >= 1.0 && m < f.alpha();
    }
    return v.real() >= 0.0 && v.real() < f.t();
}

inline bool in_fundamental_domain(const NonEllipticNormalForm& f, cplx z) {
    return quotient_index(f, z) == 0;
}

// Constant of the two-sided derivative bound on J in the parabolic case.
inline double parabolic_bound_constant(double t, double slack = 1e-9) {
    const double gap = 2.0 * (1.0 / std::sqrt(t * t + 1.0) - 1.0 / std::sqrt(t * t + 4.0));
    return std::max(4.0 + slack, 4.0 / (gap * gap));
}

struct DerivativeBounds {
    double lower;
    double upper;
};

// Bounds on |phi^(n)'(w)| valid for every w in J.
inline DerivativeBounds derivative_bounds(const NonEllipticNormalForm& f, std::int64_t n) {
    const double an = std::abs(double(n));
    if (f.is_hyperbolic()) {
        const double a = f.alpha();
        const double g = std::pow(a, -an);
        return {0.25 * g, (a + 1.0) * (a + 1.0) * g};
    }
    const double t = f.t();
    const double d = an * an * t * t + 4.0;
    return {1.0 / d, parabolic_bound_constant(t) / d};
}

struct JArc {
    double start;  // angle
    double end;    // angle, end > start
    bool start_closed;
    bool end_closed;
    double length() const { return end - start; }
};

// The boundary tile J, parameterized by normalized arc length s in [0, 1].
// Hyperbolic: s in [0, 1/2) runs over the lower arc from -i, s in [1/2, 1] over the upper arc up to i.
class BoundaryIntervalJ {
public:
    explicit BoundaryIntervalJ(const NonEllipticNormalForm& f) : form_(f) {
        if (f.is_hyperbolic()) {
            const double a = std::arg(iterate_eval(f, 1, imag_unit));
            const double b = std::arg(iterate_eval(f, 1, -imag_unit));
            arcs_ = {{-pi / 2.0, b, true, false}, {a, pi / 2.0, false, true}};
        } else {
            const double b = std::arg(iterate_eval(f, 1, cplx(-1.0)));
            arcs_ = {{-pi, b, true, false}};
        }
        for (const auto& arc : arcs_) length_ += arc.length();
    }

    const NonEllipticNormalForm& form() const { return form_; }
    const std::vector<JArc>& arcs() const { return arcs_; }
    double length() const { return length_; }

    // Range of s covered by arc k.
    std::pair<double, double> arc_params(std::size_t k) const {
        if (arcs_.size() == 1) return {0.0, 1.0};
        return k == 0 ? std::pair{0.0, 0.5} : std::pair{0.5, 1.0};
    }

    double angle_at(double s) const {
        if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::InvalidArgument, "arc parameter outside [0,1]");
        if (arcs_.size() == 1) return arcs_[0].start + s * arcs_[0].length();
        if (s < 0.5) return arcs_[0].start + 2.0 * s * arcs_[0].length();
        return arcs_[1].start + (2.0 * s - 1.0) * arcs_[1].length();
    }

    BoundaryPoint point_at(double s) const { return BoundaryPoint(angle_at(s)); }

    double half_plane_at(double s) const { return point_at(s).half_plane(); }

    bool contains(BoundaryPoint w) const {
        if (near_fixed_point(form_, w)) return false;
        return quotient_index(form_, w) == 0;
    }

    double param_of(BoundaryPoint w) const {
        if (!contains(w)) throw Error(ErrorKind::InvalidArgument, "boundary point is not in J");
        double th = w.angle();
        if (arcs_.size() == 1) {
            if (th == pi) th = -pi;
            return std::clamp((th - arcs_[0].start) / arcs_[0].length(), 0.0, 1.0);
        }
        if (th < 0.0) return std::clamp(0.5 * (th - arcs_[0].start) / arcs_[0].length(), 0.0, 0.5);
        return std::clamp(0.5 + 0.5 * (th - arcs_[1].start) / arcs_[1].length(), 0.5, 1.0);
    }

    // Midpoint in arc length of the first arc.
    BoundaryPoint midpoint() const {
        return BoundaryPoint(0.5 * (arcs_[0].start + arcs_[0].end));
    }

private:
    NonEllipticNormalForm form_;
    std::vector<JArc> arcs_;
    double length_ = 0.0;
};

inline BoundaryIntervalJ boundary_tile_J(const NonEllipticNormalForm& f) { return BoundaryIntervalJ(f); }

struct NormalizationResult {
    NonEllipticNormalForm form;
    MoebiusAutomorphism conjugator;  // sigma with sigma o phi^(+-1) o sigma^-1 = normal form
    bool inverted = false;           // true when phi^-1 had to be used
};

namespace detail {

inline std::array<cplx, 4> mat_mul(const std::array<cplx, 4>& x, const std::array<cplx, 4>& y) {
    return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
            x[2] * y[1] + x[3] * y[3]};
}

inline std::array<cplx, 4> mat_inv(const std::array<cplx, 4>& m) { return {m[3], -m[1], -m[2], m[0]}; }

// Moebius map sending (p, q, r) to (0, 1, infinity).
inline std::array<cplx, 4> cross_ratio(cplx p, cplx q, cplx r) {
    return {q - r, -p * (q - r), q - p, -r * (q - p)};
}

}  // namespace detail

inline NormalizationResult to_normal_form(const GeneralAutomorphismParams& params) {
    const auto cls = classify(params);
    if (cls == AutomorphismClass::Elliptic)
        throw Error(ErrorKind::EllipticInput, "elliptic automorphisms have no non-elliptic normal form");
    const MoebiusAutomorphism phi = params.to_moebius();
    const cplx lam = phi.rotation();
    const cplx w = phi.center();
    // Fixed points solve conj(w) z^2 - (1 + lam) z + lam w = 0.
    const cplx qa = std::conj(w), qb = -(1.0 + lam), qc = lam * w;

    if (cls == AutomorphismClass::Hyperbolic) {
        const cplx sq = std::sqrt(qb * qb - 4.0 * qa * qc);
        const cplx q = std::abs(qb + sq) > std::abs(qb - sq) ? -0.5 * (qb + sq) : -0.5 * (qb - sq);
        cplx r1 = q / qa, r2 = qc / q;
        r1 /= std::abs(r1);
        r2 /= std::abs(r2);
        cplx att = r1, rep = r2;
        if (phi.derivative_modulus(r1) > phi.derivative_modulus(r2)) std::swap(att, rep);
        const double alpha = 1.0 / phi.derivative_modulus(att);
        double delta = std::arg(att) - std::arg(rep);
        if (delta <= 0.0) delta += 2.0 * pi;
        const cplx mid = std::polar(1.0, std::arg(rep) + 0.5 * delta);
        const auto s1 = detail::cross_ratio(rep, mid, att);
        const auto s2 = detail::cross_ratio(-1.0, -imag_unit, 1.0);
        const auto sigma = MoebiusAutomorphism::from_matrix(detail::mat_mul(detail::mat_inv(s2), s1));
        return {NonEllipticNormalForm::hyperbolic(alpha), sigma, false};
    }

    cplx zeta = (1.0 + lam) / (2.0 * qa);
    zeta /= std::abs(zeta);
    const auto sigma = MoebiusAutomorphism::rotation_by(std::conj(zeta));
    const auto psi = compose(compose(sigma, phi), sigma.inverse());
    double t = to_half_plane(psi(0.0)).real();
    const bool inverted = t < 0.0;
    return {NonEllipticNormalForm::parabolic(std::abs(t)), sigma, inverted};
}

inline GeneralAutomorphismParams normal_form_params(const NonEllipticNormalForm& f) {
    return GeneralAutomorphismParams::from_moebius(iterate_map(f, 1));
}

}  // namespace hol
