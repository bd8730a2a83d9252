#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hol/blaschke.hpp"
#include "hol/hardy.hpp"
#include "hol/quadrature.hpp"

namespace hol {

inline constexpr double p_infinity = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------------------------
// Admissible eigenvalue moduli

struct LambdaRange {
    double lo = 1.0;
    double hi = 1.0;
    bool singleton = true;

    bool contains(double lambda, double tol = 1e-12) const {
        if (singleton) return std::abs(lambda - lo) <= tol;
        return lambda > lo && lambda < hi;
    }
    std::string describe() const;
};

inline std::string LambdaRange::describe() const {
    if (singleton) return "{" + std::to_string(lo) + "}";
    return "(" + std::to_string(lo) + ", " + std::to_string(hi) + ")";
}

inline LambdaRange admissible_lambda_range(double p, const NonEllipticNormalForm& f) {
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    if (!f.is_hyperbolic() || std::isinf(p)) return {};
    return {std::pow(f.alpha(), -1.0 / p), std::pow(f.alpha(), 1.0 / p), false};
}

// ---------------------------------------------------------------------------------------------
// Positive boundary data on J, piecewise linear in the arc parameter s

class BoundaryModulus {
public:
    BoundaryModulus() : s_{0.0, 1.0}, v_{1.0, 1.0} {}

    BoundaryModulus(std::vector<double> params, std::vector<double> values) : s_(std::move(params)), v_(std::move(values)) {
        if (s_.size() != v_.size() || s_.size() < 2)
            throw Error(ErrorKind::InvalidArgument, "need at least two (arc_param, value) samples");
        if (s_.front() != 0.0 || s_.back() != 1.0)
            throw Error(ErrorKind::InvalidArgument, "arc parameters must span [0, 1]");
        for (std::size_t i = 1; i < s_.size(); ++i)
            if (!(s_[i] > s_[i - 1])) throw Error(ErrorKind::InvalidArgument, "arc parameters must increase");
        for (double v : v_)
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(ErrorKind::InvalidArgument, "boundary modulus must be positive and finite");
    }

    static BoundaryModulus constant(double c) { return BoundaryModulus({0.0, 1.0}, {c, c}); }

    // g sampled at n + 1 equispaced parameters.
    template <class G>
    static BoundaryModulus sample(G&& g, std::size_t n) {
        if (n < 1) throw Error(ErrorKind::InvalidArgument, "need at least one interval");
        std::vector<double> s(n + 1), v(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            s[i] = i == n ? 1.0 : double(i) / double(n);
            v[i] = g(s[i]);
        }
        return BoundaryModulus(std::move(s), std::move(v));
    }

    const std::vector<double>& params() const { return s_; }
    const std::vector<double>& values() const { return v_; }

    double operator()(double s) const {
        s = std::clamp(s, 0.0, 1.0);
        const auto it = std::upper_bound(s_.begin(), s_.end(), s);
        if (it == s_.end()) return v_.back();
        const std::size_t i = std::size_t(it - s_.begin());
        const double a = (s - s_[i - 1]) / (s_[i] - s_[i - 1]);
        return v_[i - 1] + a * (v_[i] - v_[i - 1]);
    }

    double log_at(double s) const { return std::log((*this)(s)); }

    // int_J |log f0| |dz|, Gauss-Legendre on every sample interval of every arc.
    double log_integral(const BoundaryIntervalJ& J) const {
        double total = 0.0;
        for (std::size_t k = 0; k < J.arcs().size(); ++k) {
            const auto [s0, s1] = J.arc_params(k);
            const double scale = J.arcs()[k].length() / (s1 - s0);
            for (std::size_t i = 1; i < s_.size(); ++i) {
                const double a = std::max(s0, s_[i - 1]), b = std::min(s1, s_[i]);
                if (!(b > a)) continue;
                total += scale * integrate_gl<8>([&](double s) { return std::abs(log_at(s)); }, a, b);
            }
        }
        return total;
    }

private:
    std::vector<double> s_, v_;
};

// ---------------------------------------------------------------------------------------------
// Quadrature nodes on J in half-plane coordinates

struct JNode {
    double theta;
    double x;       // half-plane coordinate of e^{i theta}
    double s;       // arc parameter
    double weight;  // d theta
};

// N-point Gauss-Legendre on each of `panels` equal pieces of every arc.
template <std::size_t N = 64>
std::vector<JNode> j_nodes(const BoundaryIntervalJ& J, int panels = 1) {
    if (panels < 1) throw Error(ErrorKind::InvalidArgument, "need at least one panel per arc");
    std::vector<JNode> out;
    for (std::size_t k = 0; k < J.arcs().size(); ++k) {
        const auto& arc = J.arcs()[k];
        const auto [s0, s1] = J.arc_params(k);
        for (int q = 0; q < panels; ++q) {
            const double a = arc.start + arc.length() * q / panels, b = arc.start + arc.length() * (q + 1) / panels;
            const auto rule = gauss_legendre<N>(a, b);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double th = rule.nodes[i];
                const double s = s0 + (s1 - s0) * (th - arc.start) / arc.length();
                out.push_back({th, BoundaryPoint(th).half_plane(), s, rule.weights[i]});
            }
        }
    }
    return out;
}

// Boundary image of a half-plane coordinate.
inline cplx boundary_from_x(double x) { return (x - imag_unit) / (x + imag_unit); }

// |d theta_n / d theta| at a boundary point with half-plane coordinate x.
inline double boundary_speed(const NonEllipticNormalForm& f, std::int64_t n, double x) {
    const double xn = iterate_half_plane_real(f, n, x);
    const double dx = f.is_hyperbolic() ? std::pow(f.alpha(), double(n)) : 1.0;
    return dx * (1.0 + x * x) / (1.0 + xn * xn);
}

// Arc parameter of the point of J with half-plane coordinate x (x already pulled back into J).
inline double j_param_from_x(const BoundaryIntervalJ& J, double x) {
    const double th = std::arg(boundary_from_x(x));
    const auto& arcs = J.arcs();
    if (arcs.size() == 1) {
        double a = th;
        if (a > arcs[0].end) a -= 2.0 * pi;  // -pi end
        return std::clamp((a - arcs[0].start) / arcs[0].length(), 0.0, 1.0);
    }
    if (x > 0.0) return std::clamp(0.5 * (th - arcs[0].start) / arcs[0].length(), 0.0, 0.5);
    return std::clamp(0.5 + 0.5 * (th - arcs[1].start) / arcs[1].length(), 0.5, 1.0);
}

// Tile index and pulled-back half-plane coordinate of a boundary point.
inline std::pair<std::int64_t, double> tile_pullback(const NonEllipticNormalForm& f, BoundaryPoint xi) {
    const std::int64_t n = quotient_index(f, xi);
    return {n, iterate_half_plane_real(f, -n, xi.half_plane())};
}

// f(xi) = lambda^n f0(phi^(-n)(xi)) for xi in phi^(n)(J).
inline double tile_boundary_modulus(const BoundaryModulus& f0, double lambda, const NonEllipticNormalForm& f,
                                    BoundaryPoint xi) {
    if (near_fixed_point(f, xi)) throw Error(ErrorKind::FixedPointSingularity, "boundary modulus is undefined at fixed points");
    const BoundaryIntervalJ J(f);
    const auto [n, x] = tile_pullback(f, xi);
    return std::pow(lambda, double(n)) * f0(j_param_from_x(J, x));
}

inline double tile_log_modulus(const BoundaryModulus& f0, double lambda, const NonEllipticNormalForm& f,
                               const BoundaryIntervalJ& J, BoundaryPoint xi) {
    if (near_fixed_point(f, xi)) throw Error(ErrorKind::FixedPointSingularity, "boundary modulus is undefined at fixed points");
    const auto [n, x] = tile_pullback(f, xi);
    return double(n) * std::log(lambda) + f0.log_at(j_param_from_x(J, x));
}

// ---------------------------------------------------------------------------------------------
// L^p summability of the tiled modulus

struct LpConvergence {
    bool converges = false;
    double p = 2.0;
    double I_J = 0.0;                    // int_J f0^p |dz|
    std::vector<double> tile_integrals;  // index n + N for n in [-N, N]
    std::vector<double> partial_sums;    // entry M: sum over |n| <= M
    std::vector<double> log_partial_sums;
    double ratio_plus = 0.0;             // lambda^p / alpha  (hyperbolic)
    double ratio_minus = 0.0;            // lambda^-p / alpha
    double tail_bound = p_infinity;      // bound on sum over |n| > N (converging case)
    std::int64_t n_needed = -1;          // smallest N with tail bound below 1e-6
};

// Majorant of sum_{|n| > N} int_J lambda^{pn} f0^p |phi^(n)'|, given I_J.
inline double lp_tail_majorant(const NonEllipticNormalForm& f, double lambda, double p, double I_J, std::int64_t N) {
    if (f.is_hyperbolic()) {
        const double a = f.alpha();
        const double rp = std::pow(lambda, p) / a, rm = std::pow(lambda, -p) / a;
        if (rp >= 1.0 || rm >= 1.0) return p_infinity;
        const double c = (a + 1.0) * (a + 1.0) * I_J;
        return c * (std::pow(rp, double(N + 1)) / (1.0 - rp) + std::pow(rm, double(N + 1)) / (1.0 - rm));
    }
    if (std::abs(lambda - 1.0) > 1e-12) return p_infinity;
    const double t = f.t();
    // 2 sum_{n > N} 1/(n^2 t^2 + 4) <= 2 int_N^inf dn/(n^2 t^2 + 4)
    return parabolic_bound_constant(t) * I_J * 2.0 * (0.5 / t) * (0.5 * pi - std::atan(double(N) * t / 2.0));
}

inline LpConvergence check_lp_convergence(const BoundaryModulus& f0, double lambda, const NonEllipticNormalForm& f, double p,
                                          std::int64_t N) {
    if (N < 1) throw Error(ErrorKind::InvalidArgument, "need N >= 1");
    if (!(p >= 1.0)) throw Error(ErrorKind::InvalidArgument, "p must be at least 1");
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
    const BoundaryIntervalJ J(f);
    const auto nodes = j_nodes(J);
    LpConvergence out;
    out.p = p;
    const double pe = std::isinf(p) ? 1.0 : p;  // L^inf: tiles of f itself are summed for the record
    for (const auto& nd : nodes) out.I_J += nd.weight * std::pow(f0(nd.s), pe);
    out.tile_integrals.assign(std::size_t(2 * N + 1), 0.0);
    std::vector<double> logs(std::size_t(2 * N + 1), 0.0);
    for (std::int64_t n = -N; n <= N; ++n) {
        double s = 0.0, sl = 0.0;
        for (const auto& nd : nodes) {
            const double w = nd.weight * boundary_speed(f, n, nd.x);
            s += std::pow(lambda, pe * double(n)) * std::pow(f0(nd.s), pe) * w;
            sl += std::abs(double(n) * std::log(lambda) + f0.log_at(nd.s)) * w;
        }
        out.tile_integrals[std::size_t(n + N)] = s;
        logs[std::size_t(n + N)] = sl;
    }
    double acc = 0.0, accl = 0.0;
    for (std::int64_t m = 0; m <= N; ++m) {
        acc += out.tile_integrals[std::size_t(N + m)];
        accl += logs[std::size_t(N + m)];
        if (m > 0) {
            acc += out.tile_integrals[std::size_t(N - m)];
            accl += logs[std::size_t(N - m)];
        }
        out.partial_sums.push_back(acc);
        out.log_partial_sums.push_back(accl);
    }
    if (f.is_hyperbolic()) {
        out.ratio_plus = std::pow(lambda, pe) / f.alpha();
        out.ratio_minus = std::pow(lambda, -pe) / f.alpha();
    }
    if (std::isinf(p)) {
        // bounded iff lambda = 1 (the tiled modulus grows like lambda^n otherwise)
        out.converges = std::abs(lambda - 1.0) <= 1e-12;
        out.tail_bound = out.converges ? 0.0 : p_infinity;
        out.n_needed = out.converges ? 0 : -1;
        return out;
    }
    out.tail_bound = lp_tail_majorant(f, lambda, p, out.I_J, N);
    out.converges = std::isfinite(out.tail_bound);
    if (out.converges) {
        std::int64_t lo = 1;
        while (lp_tail_majorant(f, lambda, p, out.I_J, lo) >= 1e-6 && lo < (std::int64_t(1) << 40)) lo *= 2;
        std::int64_t hi = lo;
        lo = std::max<std::int64_t>(1, lo / 2);
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (lp_tail_majorant(f, lambda, p, out.I_J, mid) < 1e-6) hi = mid;
            else lo = mid + 1;
        }
        out.n_needed = hi;
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Outer eigenfunction exp(Herglotz integral of log f)

struct OuterOptions {
    std::int64_t n_tile = 24;
    int panels = 1;                      // Gauss-Legendre panels of 64 nodes per arc of J
    double r_max = 0.95;
    double eps_quad = 1e-6;
    double switch_ratio = 0.25;          // tiles use moments once |xi - xi0| <= switch_ratio |xi0 - z|
    std::int64_t parabolic_mid = 4096;   // moment tiles before the closed-form far tail
    double far_bound = 1e-13;            // hyperbolic far tail target
};

struct OuterValue {
    cplx log_value;   // Herglotz integral H(z); F(z) = exp(H(z))
    double tail = 0.0;
    cplx value() const { return std::exp(log_value); }
};

class OuterEigenfunction {
public:
    OuterEigenfunction(const NonEllipticNormalForm& f, BoundaryModulus f0, double lambda, double p = 2.0, OuterOptions opt = {})
        : form_(f), f0_(std::move(f0)), lambda_(lambda), p_(p), opt_(opt), J_(f) {
        if (!admissible_lambda_range(p, f).contains(lambda))
            throw Error(ErrorKind::InadmissibleLambda, "lambda is outside the admissible range");
        if (opt_.n_tile < 0) throw Error(ErrorKind::InvalidArgument, "tile truncation must be nonnegative");
        if (!(opt_.r_max > 0.0 && opt_.r_max < 1.0)) throw Error(ErrorKind::InvalidArgument, "r_max must lie in (0, 1)");
        if (!std::isfinite(f0_.log_integral(J_))) throw Error(ErrorKind::InvalidArgument, "log f0 is not integrable on J");
        log_lambda_ = std::log(lambda);
        nodes_ = j_nodes(J_, opt_.panels);
        build();
    }

    const NonEllipticNormalForm& form() const { return form_; }
    const BoundaryModulus& f0() const { return f0_; }
    double lambda() const { return lambda_; }
    double p() const { return p_; }
    const OuterOptions& options() const { return opt_; }
    std::int64_t stored_tiles() const { return n_store_; }
    std::int64_t moment_tiles() const { return n_mid_; }

    OuterValue log_eval(cplx z) const {
        if (!(std::abs(z) <= opt_.r_max)) throw Error(ErrorKind::OutsideDisc, "outer evaluation needs |z| <= r_max");
        cplx sum = 0.0;
        double tail = 0.0;
        for (int side = 0; side < 2; ++side) {
            const Side& sd = sides_[side];
            const double dist = std::abs(sd.xi0 - z);
            // first tile index (>= 1) handled by moments for this z
            std::int64_t ns = std::max<std::int64_t>(opt_.n_tile + 1, 1);
            while (ns <= n_store_ && sd.eps_suffix_max[std::size_t(ns)] > opt_.switch_ratio * dist) ++ns;
            if (ns > n_store_ + 1) ns = n_store_ + 1;
            for (std::int64_t m = 1; m < ns; ++m) sum += tile_sum(sd.tiles[std::size_t(m)], sd.direction * m, z);
            if (ns <= n_mid_) {
                const cplx d = sd.xi0 - z;
                cplx dk = d;  // (xi0 - z)^{k+1}
                sum += (sd.xi0 + z) / d * sd.moment_suffix[std::size_t(ns)][0];
                double sign = -1.0;
                for (int k = 1; k <= moment_order; ++k) {
                    dk *= d;
                    sum += 2.0 * z * sign / dk * sd.moment_suffix[std::size_t(ns)][std::size_t(k)];
                    sign = -sign;
                }
                const double umax = sd.eps_suffix_max[std::size_t(ns)] / dist;
                tail += 2.0 * std::abs(z) / dist * sd.q_suffix[std::size_t(ns)] / std::pow(dist, moment_order + 1) / (1.0 - umax);
            }
            const auto [far, far_tail] = far_tail_value(side, z);
            sum += far;
            tail += far_tail;
        }
        sum += tile_sum(center_, 0, z);
        return {sum / (2.0 * pi), tail / (2.0 * pi)};
    }

    // F(z); throws QuadratureTailTooLarge when the certified tail exceeds eps_quad.
    cplx operator()(cplx z) const {
        const auto v = log_eval(z);
        if (v.tail > opt_.eps_quad) throw Error(ErrorKind::QuadratureTailTooLarge, "tile tail bound exceeds tolerance");
        return v.value();
    }

private:
    // Kernel expansion order around the fixed points for tiles beyond the exact ones.
    static constexpr int moment_order = 8;
    using Moments = std::array<cplx, moment_order + 1>;

    struct TilePoint {
        cplx xi;
        double gw;  // (n log lambda + log f0) * |phi^(n)'| * d theta
        double w;   // |phi^(n)'| * d theta
    };

    // Kernel sum over one tile; tiles passing closer to z than their node spacing are redone on a finer rule.
    cplx tile_sum(const std::vector<TilePoint>& tile, std::int64_t n, cplx z) const {
        cplx s = 0.0;
        double len = 0.0, dmin = p_infinity;
        for (const auto& tp : tile) {
            s += herglotz(tp.xi, z) * tp.gw;
            len += tp.w;
            dmin = std::min(dmin, std::abs(tp.xi - z));
        }
        // 64-node panels converge like rho^-128, rho = b + sqrt(1 + b^2), b = 2 d / panel length
        const double panel_len = len / double(tile.size()) * 64.0;
        if (dmin >= 0.2 * panel_len) return s;
        const int panels = int(std::min(4096.0, std::ceil(0.5 * panel_len / dmin) * opt_.panels));
        if (panels <= opt_.panels) return s;
        s = 0.0;
        for (const auto& nd : j_nodes(J_, panels)) {
            const double xn = iterate_half_plane_real(form_, n, nd.x);
            const double g = (double(n) * log_lambda_ + f0_.log_at(nd.s)) * nd.weight * boundary_speed(form_, n, nd.x);
            s += herglotz(boundary_from_x(xn), z) * g;
        }
        return s;
    }
    struct Side {
        cplx xi0;                                     // fixed point approached along this side
        int direction;                                // +1 or -1
        std::vector<std::vector<TilePoint>> tiles;    // index m = |n|, m in [1, n_store]
        std::vector<Moments> moment_suffix;  // index m: sum over m' in [m, n_mid]
        std::vector<double> q_suffix;                 // sum |eps|^(order + 1) |g| w
        std::vector<double> eps_suffix_max;           // max |eps| over tiles >= m
        std::vector<double> g_abs_suffix;             // sum |g| w (for the hyperbolic far bound)
    };

    static cplx herglotz(cplx xi, cplx z) { return (xi + z) / (xi - z); }

    // xi - xi0 computed from the half-plane coordinate without cancellation.
    static cplx eps_from_x(double xn, cplx xi0) {
        if (xi0.real() > 0.0) return -2.0 * imag_unit / (xn + imag_unit);  // xi - 1
        return 2.0 * xn / (xn + imag_unit);                                // xi + 1
    }

    void build() {
        // center tile n = 0
        for (const auto& nd : nodes_) center_.push_back({boundary_from_x(nd.x), f0_.log_at(nd.s) * nd.weight, nd.weight});
        const double dmin = 1.0 - opt_.r_max;
        const bool hyp = form_.is_hyperbolic();
        sides_[0].xi0 = 1.0;
        sides_[0].direction = 1;
        sides_[1].xi0 = hyp ? cplx(-1.0) : cplx(1.0);
        sides_[1].direction = -1;

        // Tile extent: per-tile max |eps| until it drops below the switch threshold at r_max.
        auto tile_points = [&](int dir, std::int64_t m, double& eps_max, Moments& mom, double& q, double& gabs,
                               std::vector<TilePoint>* keep) {
            const std::int64_t n = dir * m;
            const cplx xi0 = dir > 0 || !hyp ? cplx(1.0) : cplx(-1.0);
            eps_max = 0.0;
            mom.fill(0.0);
            q = 0.0;
            gabs = 0.0;
            for (const auto& nd : nodes_) {
                const double xn = iterate_half_plane_real(form_, n, nd.x);
                const double w = nd.weight * boundary_speed(form_, n, nd.x);
                const double g = (double(n) * log_lambda_ + f0_.log_at(nd.s)) * w;
                const cplx e = eps_from_x(xn, xi0);
                eps_max = std::max(eps_max, std::abs(e));
                cplx ek = 1.0;
                for (auto& mk : mom) {
                    mk += ek * g;
                    ek *= e;
                }
                q += std::pow(std::abs(e), moment_order + 1) * std::abs(g);
                gabs += std::abs(g);
                if (keep) keep->push_back({boundary_from_x(xn), g, w});
            }
        };

        // stored tiles: up to where every later tile is below the threshold at r_max (monotone decay)
        n_store_ = std::max<std::int64_t>(opt_.n_tile, 1);
        for (int side = 0; side < 2; ++side) {
            std::int64_t m = 1;
            for (;; ++m) {
                double em, q, ga;
                Moments mom;
                tile_points(sides_[side].direction, m, em, mom, q, ga, nullptr);
                if (em <= 0.5 * opt_.switch_ratio * dmin) break;
                if (m > 1000000) throw Error(ErrorKind::QuadratureTailTooLarge, "tiles do not approach the fixed point");
            }
            n_store_ = std::max(n_store_, m);
        }
        if (hyp) {
            // far tail: sup|K| (alpha+1)^2 sum alpha^-n (n |log lambda| |J| + int_J |log f0|), both sides
            const double a = form_.alpha(), r = 1.0 / a;
            const double kmax = (1.0 + opt_.r_max) / (1.0 - opt_.r_max);
            const double c = (a + 1.0) * (a + 1.0) * kmax;
            const double LJ = f0_.log_integral(J_), lenJ = J_.length(), ll = std::abs(log_lambda_);
            auto far = [&](std::int64_t N) {
                const double g0 = std::pow(r, double(N + 1)) / (1.0 - r);
                const double g1 = std::pow(r, double(N + 1)) * (double(N + 1) - double(N) * r) / ((1.0 - r) * (1.0 - r));
                return 2.0 * c * (ll * lenJ * g1 + LJ * g0) / (2.0 * pi);
            };
            n_mid_ = n_store_;
            while (far(n_mid_) > opt_.far_bound && n_mid_ < 100000) ++n_mid_;
            hyp_far_bound_ = far(n_mid_);
        } else {
            n_mid_ = std::max(n_store_, opt_.parabolic_mid);
        }
        for (int side = 0; side < 2; ++side) {
            Side& sd = sides_[side];
            sd.tiles.assign(std::size_t(n_store_ + 1), {});
            std::vector<Moments> mom(std::size_t(n_mid_ + 2), Moments{});
            std::vector<double> q(std::size_t(n_mid_ + 2), 0.0), em(std::size_t(n_mid_ + 2), 0.0), ga(std::size_t(n_mid_ + 2), 0.0);
            for (std::int64_t m = 1; m <= n_mid_; ++m)
                tile_points(sd.direction, m, em[std::size_t(m)], mom[std::size_t(m)], q[std::size_t(m)], ga[std::size_t(m)],
                            m <= n_store_ ? &sd.tiles[std::size_t(m)] : nullptr);
            sd.moment_suffix = mom;
            sd.q_suffix = q;
            sd.eps_suffix_max = em;
            sd.g_abs_suffix = ga;
            for (std::int64_t m = n_mid_ - 1; m >= 1; --m) {
                const auto i = std::size_t(m);
                for (std::size_t k = 0; k <= moment_order; ++k) sd.moment_suffix[i][k] += sd.moment_suffix[i + 1][k];
                sd.q_suffix[i] += sd.q_suffix[i + 1];
                sd.g_abs_suffix[i] += sd.g_abs_suffix[i + 1];
                sd.eps_suffix_max[i] = std::max(sd.eps_suffix_max[i], sd.eps_suffix_max[i + 1]);
            }
        }
        if (!hyp) {
            // closed-form far tail per node: sums over n beyond n_mid by the midpoint integral rule
            const double t = form_.t();
            for (int side = 0; side < 2; ++side) {
                auto& ft = par_far_[side];
                ft = {};
                const int dir = sides_[side].direction;
                for (const auto& nd : nodes_) {
                    const double g = f0_.log_at(nd.s) * nd.weight * (1.0 + nd.x * nd.x);
                    const double Y = nd.x + dir * (double(n_mid_) + 0.5) * t;
                    double s0;
                    cplx s1;
                    if (dir > 0) {
                        s0 = (0.5 * pi - std::atan(Y)) / t;
                        s1 = (-std::atan2(1.0, Y) + 1.0 / (Y + imag_unit)) / t;
                    } else {
                        s0 = (std::atan(Y) + 0.5 * pi) / t;
                        s1 = (std::atan2(1.0, Y) - 1.0 / (Y + imag_unit) - pi) / t;
                    }
                    ft.m0 += g * s0;
                    ft.m1 += g * s1;
                    // sum |eps|^2 / (1 + y^2) <= 4 sum 1/y^4 <= (4/t) int_{|Y| - t}^inf dy / y^4
                    const double y0 = std::abs(Y) - t;
                    ft.q2 += std::abs(g) * 4.0 / (3.0 * t * y0 * y0 * y0);
                    // midpoint-rule error of the order-0 sum, |F'| / 24 at the start
                    ft.mid += std::abs(g) * (2.0 * std::abs(Y) / std::pow(1.0 + Y * Y, 2)) / 24.0;
                    ft.eps_max = std::max(ft.eps_max, 2.0 / std::abs(Y + imag_unit));
                }
            }
        }
    }

    std::pair<cplx, double> far_tail_value(int side, cplx z) const {
        if (form_.is_hyperbolic()) return {0.0, 0.5 * hyp_far_bound_};
        const auto& ft = par_far_[side];
        const cplx d = 1.0 - z;
        const double dist = std::abs(d);
        const cplx a0 = (1.0 + z) / d, a1 = -2.0 * z / (d * d);
        const double u = ft.eps_max / dist;
        const double rem = 2.0 * std::abs(z) / dist * ft.q2 / (dist * dist) / (1.0 - u) + std::abs(a0) * ft.mid;
        return {a0 * ft.m0 + a1 * ft.m1, rem};
    }

    struct ParabolicFar {
        double m0 = 0.0;
        cplx m1 = 0.0;
        double q2 = 0.0, mid = 0.0, eps_max = 0.0;
    };

    NonEllipticNormalForm form_;
    BoundaryModulus f0_;
    double lambda_, p_, log_lambda_ = 0.0;
    OuterOptions opt_;
    BoundaryIntervalJ J_;
    std::vector<JNode> nodes_;
    std::vector<TilePoint> center_;
    std::array<Side, 2> sides_;
    std::array<ParabolicFar, 2> par_far_;
    std::int64_t n_store_ = 0, n_mid_ = 0;
    double hyp_far_bound_ = 0.0;
};

inline cplx outer_eval(const OuterEigenfunction& F, const DiscPoint& z) { return F(z.value()); }

struct GammaEstimate {
    cplx gamma;
    double modulus_deviation;  // ||gamma| - 1|
    double tail;               // certified quadrature tail on log gamma
};

// gamma = F(phi(0)) / (lambda F(0)), in log space.
inline GammaEstimate eigenvalue_gamma(const OuterEigenfunction& F) {
    const auto h0 = F.log_eval(0.0);
    if (h0.log_value.real() < std::log(1e-300)) throw Error(ErrorKind::NumericalUnderflow, "F(0) underflows");
    const auto h1 = F.log_eval(iterate_eval(F.form(), 1, 0.0));
    const cplx lg = h1.log_value - h0.log_value - std::log(F.lambda());
    return {std::polar(1.0, lg.imag()), std::abs(std::expm1(lg.real())), h0.tail + h1.tail};
}

// ---------------------------------------------------------------------------------------------
// Blaschke eigenvectors: products over full truncated orbits

struct BlaschkeEigenvector {
    BlaschkeProduct product;
    cplx z0 = 0.0;
    cplx gamma = 1.0;
    double modulus_deviation = 0.0;
    double drift = 0.0;  // |gamma_N - gamma_{N/2}|
    cplx gamma_half = 1.0;
};

inline BlaschkeProduct orbit_product(const NonEllipticNormalForm& f, const std::vector<DiscPoint>& seed, std::int64_t N) {
    std::vector<OrbitZero> zs;
    for (const auto& w : seed)
        for (std::int64_t n = -N; n <= N; ++n) zs.push_back({w, n, 1});
    return BlaschkeProduct::from_orbit_zeros(f, zs);
}

inline BlaschkeEigenvector blaschke_eigenvector(const NonEllipticNormalForm& f, const std::vector<DiscPoint>& seed,
                                                std::int64_t N) {
    if (N < 0) throw Error(ErrorKind::InvalidArgument, "orbit truncation must be nonnegative");
    for (const auto& w : seed)
        if (!in_fundamental_domain(f, w.value()))
            throw Error(ErrorKind::SeedOutsideFundamentalDomain, "seed zero is outside the fundamental domain");
    BlaschkeEigenvector out;
    out.product = orbit_product(f, seed, N);
    if (seed.empty()) return out;
    auto near_zero = [&](cplx z) {
        for (std::size_t k = 0; k < out.product.size(); ++k)
            if (out.product.factor_deficit(k, z) > 1.0 - 0.01) return true;  // rho < 0.1
        return false;
    };
    out.z0 = 0.0;
    if (near_zero(out.z0)) out.z0 = cplx(0.0, 0.3);
    if (near_zero(out.z0)) throw Error(ErrorKind::ReferencePointNearZero, "both reference points are near zeros");
    auto gamma_of = [&](const BlaschkeProduct& b) { return b.composed(f, 1)(out.z0) / b(out.z0); };
    out.gamma = gamma_of(out.product);
    out.modulus_deviation = std::abs(std::abs(out.gamma) - 1.0);
    out.gamma_half = gamma_of(orbit_product(f, seed, N / 2));
    out.drift = std::abs(out.gamma - out.gamma_half);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Atomic singular measures

struct Atom {
    BoundaryPoint xi;
    double mass;
};

class AtomicSingularMeasure {
public:
    AtomicSingularMeasure() = default;
    explicit AtomicSingularMeasure(const std::vector<Atom>& atoms) {
        for (const auto& a : atoms) add(a.xi, a.mass);
    }

    static AtomicSingularMeasure dirac(BoundaryPoint xi, double mass = 1.0) { return AtomicSingularMeasure({{xi, mass}}); }

    // Atoms within 1e-12 in angle merge.
    void add(BoundaryPoint xi, double mass) {
        if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorKind::InvalidArgument, "atom masses must be positive");
        for (auto& a : atoms_)
            if (std::abs(wrap_angle(a.xi.angle() - xi.angle())) < 1e-12) {
                a.mass += mass;
                return;
            }
        atoms_.push_back({xi, mass});
    }

    const std::vector<Atom>& atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }
    double total_mass() const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.mass;
        return s;
    }

    // -log S(z) = sum m (xi + z)/(xi - z)
    cplx log_value(cplx z) const {
        if (!(std::norm(z) < 1.0)) throw Error(ErrorKind::OutsideDisc, "singular inner functions are evaluated inside the disc");
        cplx s = 0.0;
        for (const auto& a : atoms_) {
            const cplx xi = a.xi.value();
            s += a.mass * (xi + z) / (xi - z);
        }
        return -s;
    }

    double log_abs(cplx z) const {
        if (!(std::norm(z) < 1.0)) throw Error(ErrorKind::OutsideDisc, "singular inner functions are evaluated inside the disc");
        double s = 0.0;
        for (const auto& a : atoms_) s += a.mass * one_minus_abs2(z) / std::norm(a.xi.value() - z);
        return -s;
    }

private:
    std::vector<Atom> atoms_;
};

inline cplx singular_inner_eval(const AtomicSingularMeasure& mu, cplx z) { return std::exp(mu.log_value(z)); }

// (xi, m) -> (phi(xi), m |phi'(xi)|)
inline AtomicSingularMeasure pushforward_measure(const AtomicSingularMeasure& nu, const MoebiusAutomorphism& phi) {
    AtomicSingularMeasure mu;
    for (const auto& a : nu.atoms()) mu.add(phi(a.xi), a.mass * phi.derivative_modulus(a.xi.value()));
    return mu;
}

// Same under phi^(n) of a normal form; fixed atoms stay put with multiplier alpha^{-+n} or 1.
inline AtomicSingularMeasure pushforward_measure(const AtomicSingularMeasure& nu, const NonEllipticNormalForm& f,
                                                 std::int64_t n = 1) {
    AtomicSingularMeasure mu;
    for (const auto& a : nu.atoms()) {
        const double th = a.xi.angle();
        if (th == 0.0 || (f.is_hyperbolic() && std::abs(th) == pi)) {
            double d = 1.0;
            if (f.is_hyperbolic()) d = std::pow(f.alpha(), th == 0.0 ? -double(n) : double(n));
            mu.add(a.xi, a.mass * d);
            continue;
        }
        mu.add(iterate_boundary(f, n, a.xi), a.mass * boundary_speed(f, n, a.xi.half_plane()));
    }
    return mu;
}

struct OrbitMeasure {
    AtomicSingularMeasure measure;
    double tail_mass_bound = 0.0;  // total mass of the omitted tiles |n| > N_tile
    std::int64_t n_tile = 0;
};

inline OrbitMeasure orbit_measure(const AtomicSingularMeasure& nu0, const NonEllipticNormalForm& f, std::int64_t n_tile) {
    if (n_tile < 0) throw Error(ErrorKind::InvalidArgument, "tile truncation must be nonnegative");
    const BoundaryIntervalJ J(f);
    for (const auto& a : nu0.atoms())
        if (!J.contains(a.xi)) throw Error(ErrorKind::AtomOutsideJ, "orbit measures are built from atoms in J");
    OrbitMeasure out;
    out.n_tile = n_tile;
    for (std::int64_t n = -n_tile; n <= n_tile; ++n)
        for (const auto& a : nu0.atoms())
            out.measure.add(iterate_boundary(f, n, a.xi), a.mass * boundary_speed(f, n, a.xi.half_plane()));
    const double m = nu0.total_mass();
    if (f.is_hyperbolic()) {
        const double a = f.alpha();
        out.tail_mass_bound = m * 2.0 * (a + 1.0) * (a + 1.0) * std::pow(a, -double(n_tile + 1)) / (1.0 - 1.0 / a);
    } else {
        const double t = f.t();
        out.tail_mass_bound = m * parabolic_bound_constant(t) * 2.0 * (0.5 / t) * (0.5 * pi - std::atan(double(n_tile) * t / 2.0));
    }
    return out;
}

inline AtomicSingularMeasure fixed_point_component(const NonEllipticNormalForm& f, double a) {
    if (!(a >= 0.0)) throw Error(ErrorKind::InvalidArgument, "fixed-point mass must be nonnegative");
    if (a == 0.0) return {};
    if (f.is_hyperbolic())
        throw Error(ErrorKind::HyperbolicFixedAtomNotEigen,
                    "a fixed-point atom is not an eigenvector for hyperbolic maps: its mass scales by alpha^{-+1}");
    return AtomicSingularMeasure::dirac(BoundaryPoint(0.0), a);
}

// ---------------------------------------------------------------------------------------------
// h = F B S

struct EigenFactorization {
    std::optional<OuterEigenfunction> outer;
    std::optional<BlaschkeProduct> blaschke;
    std::optional<AtomicSingularMeasure> singular;
};

struct CombinedReport {
    cplx eigenvalue = 1.0;
    double expected_modulus = 1.0;
    double modulus_error = 0.0;    // ||eigenvalue| - expected|
    double arg_dispersion = 0.0;   // max |arg(q / eigenvalue)|
    double max_ratio_err = 0.0;    // max |q - eigenvalue| / |eigenvalue|
    double tail_bound = 0.0;       // outer quadrature tail, max over the grid
    std::size_t points_used = 0;
    std::int64_t n_tile = 0;
};

inline CombinedReport combine_factors(const NonEllipticNormalForm& f, const EigenFactorization& fac,
                                      const std::vector<cplx>& grid) {
    if (!fac.outer && !fac.blaschke && !fac.singular) throw Error(ErrorKind::AllFactorsAbsent, "no factor to combine");
    CombinedReport rep;
    rep.expected_modulus = fac.outer ? fac.outer->lambda() : 1.0;
    rep.n_tile = fac.outer ? fac.outer->options().n_tile : 0;
    std::vector<cplx> ratios;
    std::vector<double> re, im;
    for (auto z : grid) {
        const cplx pz = iterate_eval(f, 1, z);
        double log_abs_h = 0.0;
        cplx log_q = 0.0, bratio = 1.0;
        if (fac.outer) {
            const auto a = fac.outer->log_eval(z), b = fac.outer->log_eval(pz);
            log_abs_h += a.log_value.real();
            log_q += b.log_value - a.log_value;
            rep.tail_bound = std::max(rep.tail_bound, std::max(a.tail, b.tail));
        }
        if (fac.singular) {
            const cplx a = fac.singular->log_value(z);
            log_abs_h += a.real();
            log_q += fac.singular->log_value(pz) - a;
        }
        if (fac.blaschke) {
            const cplx bz = (*fac.blaschke)(z);
            if (std::abs(bz) < 1e-300) continue;
            log_abs_h += std::log(std::abs(bz));
            bratio = fac.blaschke->composed(f, 1)(z) / bz;
        }
        if (log_abs_h <= std::log(1e-12)) continue;
        const cplx q = std::exp(log_q) * bratio;
        ratios.push_back(q);
        re.push_back(q.real());
        im.push_back(q.imag());
    }
    rep.points_used = ratios.size();
    if (ratios.empty()) return rep;
    rep.eigenvalue = cplx(median(re), median(im));
    rep.modulus_error = std::abs(std::abs(rep.eigenvalue) - rep.expected_modulus);
    for (auto q : ratios) {
        rep.arg_dispersion = std::max(rep.arg_dispersion, std::abs(std::arg(q / rep.eigenvalue)));
        rep.max_ratio_err = std::max(rep.max_ratio_err, std::abs(q - rep.eigenvalue) / std::abs(rep.eigenvalue));
    }
    return rep;
}

}  // namespace hol
