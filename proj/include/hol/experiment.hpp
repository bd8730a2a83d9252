#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hol/io.hpp"

namespace hol {

inline constexpr int config_schema_version = 1;

// ---------------------------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    int schema_version = config_schema_version;
    std::string id;
    std::string kind;
    json automorphism;         // {"kind", "parameter"} or, for classify, {"theta", "p": [re, im]}
    std::uint64_t seed = 0;
    json params = json::object();
    json tolerances = json::object();

    json to_json() const {
        return {{"schema_version", schema_version}, {"id", id},           {"experiment", kind},
                {"automorphism", automorphism},     {"seed", seed},       {"params", params},
                {"tolerances", tolerances}};
    }
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> n_tile;
    std::optional<double> tolerance;
};

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"classify",     "iterate",      "thin-select", "construct-thin",
                                            "orbit-limits", "estimate-e",   "span-classify", "eig-blaschke",
                                            "eig-outer",    "eig-singular", "eig-verify",  "domain-plot"};
    return k;
}

inline std::string canonical_kind(const std::string& k) {
    if (k == "eigen-verify") return "eig-verify";
    if (k == "fundamental-domain") return "domain-plot";
    return k;
}

inline ExperimentConfig config_from_json(const json& j) {
    auto bad = [](const std::string& m) { return Error(ErrorKind::ConfigInvalid, m); };
    if (!j.is_object()) throw bad("config must be a JSON object");
    ExperimentConfig c;
    try {
        c.schema_version = j.at("schema_version").get<int>();
        if (c.schema_version != config_schema_version)
            throw bad("unsupported schema_version " + std::to_string(c.schema_version));
        c.kind = canonical_kind(j.at("experiment").get<std::string>());
        c.id = j.value("id", c.kind);
        c.automorphism = j.value("automorphism", json::object());
        c.seed = j.value("seed", std::uint64_t(0));
        c.params = j.value("params", json::object());
        c.tolerances = j.value("tolerances", json::object());
    } catch (const json::exception& e) {
        throw bad(std::string("config: ") + e.what());
    }
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), c.kind) == experiment_kinds().end())
        throw bad("unknown experiment '" + c.kind + "'");
    if (c.id.empty() || c.id.find_first_of("/\\") != std::string::npos) throw bad("id must be a plain file stem");
    for (const auto& [k, v] : j.items())
        if (k != "schema_version" && k != "id" && k != "experiment" && k != "automorphism" && k != "seed" &&
            k != "params" && k != "tolerances")
            throw bad("unknown config field '" + k + "'");
    return c;
}

// Built-in configurations; the demos/ configs are copies of these.
inline ExperimentConfig default_config(const std::string& kind_in) {
    const std::string kind = canonical_kind(kind_in);
    ExperimentConfig c;
    c.kind = kind;
    c.id = kind;
    c.seed = 20240601;
    c.automorphism = {{"kind", "hyperbolic"}, {"parameter", 2.0}};
    if (kind == "classify") {
        c.automorphism = {{"theta", 1.0}, {"p", {0.9, 0.2}}};
        c.params = {{"expected", "hyperbolic"}};
        c.tolerances = {{"conjugation", 1e-10}};
    } else if (kind == "iterate") {
        c.params = {{"points", {{0.3, 0.2}, {-0.5, 0.1}, {0.0, -0.8}}}, {"n", {-20, -3, -1, 0, 1, 2, 5, 20}}};
        c.tolerances = {{"group_law", 1e-10}};
    } else if (kind == "thin-select") {
        c.params = {{"candidates", "orbit"}, {"K", 8}, {"radius", 0.5}, {"trials", 100}};
    } else if (kind == "construct-thin") {
        c.params = {{"seed_points", {{0.3, 0.2}}}, {"K", 16}};
    } else if (kind == "orbit-limits") {
        c.params = {{"w", {0.3, 0.2}}, {"K", 32}};
        c.tolerances = {{"h2_final", 1e-3}};
    } else if (kind == "estimate-e") {
        c.params = {{"w", {0.3, 0.2}}, {"K", 32}};
        c.tolerances = {{"eps", 0.05}};
    } else if (kind == "span-classify") {
        c.params = {{"input", "orbit"}, {"w", {0.3, 0.2}}, {"N", 64}, {"blaschke_intent", true},
                    {"expected", "model_space"}};
        c.tolerances = {{"gamma_modulus", 1e-8}};
    } else if (kind == "eig-blaschke") {
        c.params = {{"seed_points", {{0.1, 0.4}}}, {"N", 32}};
        c.tolerances = {{"gamma_modulus", 1e-8}};
    } else if (kind == "eig-outer") {
        c.params = {{"f0", {{"trig_terms", 4}, {"amplitude", 0.4}, {"samples", 2000}}},
                    {"lambda", 1.2},
                    {"lambda_reference", 1.0},
                    {"lambda_inadmissible", 2.2},
                    {"p", 2.0},
                    {"n_tile", 24},
                    {"grid_points", 100},
                    {"grid_radius", 0.7}};
        c.tolerances = {{"eigenrelation", 1e-6}, {"gamma_agreement", 1e-6}, {"gamma_modulus", 1e-8}};
    } else if (kind == "eig-singular") {
        c.params = {{"atoms", {{{"s", 0.2}, {"mass", 0.5}}, {{"s", 0.7}, {"mass", 0.25}}}},
                    {"fixed_mass", 0.0},
                    {"n_tile", 24},
                    {"grid_points", 100},
                    {"grid_radius", 0.7}};
        c.tolerances = {{"tail_factor", 10.0}};
    } else if (kind == "eig-verify") {
        c.params = {{"outer", {{"f0", {{"trig_terms", 4}, {"amplitude", 0.4}, {"samples", 2000}}}, {"lambda", 1.2}, {"p", 2.0}}},
                    {"blaschke", {{"seed_points", {{0.1, 0.4}}}, {"N", 32}}},
                    {"singular", {{"atoms", json::array()}, {"fixed_mass", 0.0}}},
                    {"n_tile", 24},
                    {"grid_points", 200},
                    {"grid_radius", 0.7}};
        c.tolerances = {{"modulus", 1e-4}, {"arg_dispersion", 1e-4}};
    } else if (kind == "domain-plot") {
        c.params = {{"tiles", 8}, {"samples", 64}};
    } else {
        throw Error(ErrorKind::ConfigInvalid, "unknown experiment '" + kind + "'");
    }
    return c;
}

inline void apply_overrides(ExperimentConfig& c, const ConfigOverrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.n_tile) c.params["n_tile"] = *o.n_tile;
    if (o.tolerance) {
        // the kind's first (primary) tolerance
        if (c.tolerances.empty()) c.tolerances["tolerance"] = *o.tolerance;
        else c.tolerances.begin().value() = *o.tolerance;
    }
}

// ---------------------------------------------------------------------------------------------
// Results

struct CsvFile {
    std::string name;  // file suffix, written as <id>.<name>.csv
    std::string text;
};

struct ExperimentResult {
    json report;
    std::vector<CsvFile> files;
    bool passed = true;
};

namespace detail {

struct Run {
    const ExperimentConfig& cfg;
    json report = json::object();
    json assertions = json::array();
    std::vector<CsvFile> files;

    template <class T>
    T param(const std::string& key, T fallback) const {
        try {
            return cfg.params.value(key, fallback);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigInvalid, "params." + key + ": " + e.what());
        }
    }
    const json& param_json(const std::string& key) const {
        if (!cfg.params.contains(key)) throw Error(ErrorKind::ConfigInvalid, "missing params." + key);
        return cfg.params.at(key);
    }
    double tol(const std::string& key, double fallback) const {
        try {
            return cfg.tolerances.value(key, fallback);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::ConfigInvalid, "tolerances." + key + ": " + e.what());
        }
    }

    // value <= threshold passes
    void check_le(const std::string& name, double value, double threshold) {
        assertions.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"passed", value <= threshold}});
    }
    void check(const std::string& name, bool ok, const std::string& detail = "") {
        json a = {{"name", name}, {"passed", ok}};
        if (!detail.empty()) a["detail"] = detail;
        assertions.push_back(a);
    }

    void csv(const std::string& name, const std::string& comment, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
        std::ostringstream out;
        write_csv(out, comment, header, rows);
        files.push_back({name, out.str()});
    }
};

inline cplx as_cplx(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::ConfigInvalid, "complex numbers are [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<DiscPoint> as_points(const json& j) {
    std::vector<DiscPoint> out;
    for (const auto& p : j) out.emplace_back(as_cplx(p));
    return out;
}

inline json cjson(cplx z) { return json::array({z.real(), z.imag()}); }

inline NonEllipticNormalForm form_of(const ExperimentConfig& c) {
    try {
        return form_from_json(c.automorphism);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("automorphism: ") + e.what());
    }
}

// log f0(s) = sum_k a_k cos(2 pi k s), a_k uniform in [-amp, amp] / k; symmetric under s -> 1 - s.
inline BoundaryModulus trig_modulus(const json& desc, std::uint64_t seed) {
    if (desc.contains("csv")) {
        std::ifstream in(desc.at("csv").get<std::string>());
        if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open boundary modulus CSV");
        return modulus_from_csv(in);
    }
    const int terms = desc.value("trig_terms", 4);
    const double amp = desc.value("amplitude", 0.4);
    const std::size_t samples = desc.value("samples", std::size_t(2000));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> a(std::size_t(std::max(terms, 0)));
    for (int k = 0; k < terms; ++k) a[std::size_t(k)] = amp * u(rng) / double(k + 1);
    return BoundaryModulus::sample(
        [&](double s) {
            double l = 0.0;
            for (int k = 0; k < terms; ++k) l += a[std::size_t(k)] * std::cos(2.0 * pi * double(k + 1) * s);
            return std::exp(l);
        },
        samples);
}

inline AtomicSingularMeasure atoms_on_J(const json& atoms, const BoundaryIntervalJ& J) {
    AtomicSingularMeasure m;
    for (const auto& a : atoms) m.add(J.point_at(a.at("s").get<double>()), a.at("mass").get<double>());
    return m;
}

// ---------------------------------------------------------------------------------------------

inline void run_classify(Run& r) {
    const auto& a = r.cfg.automorphism;
    GeneralAutomorphismParams gp;
    try {
        gp.theta = a.at("theta").get<double>();
        gp.p = DiscPoint(as_cplx(a.at("p")));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("automorphism: ") + e.what());
    }
    const auto cls = classify(gp);
    r.report["class"] = to_string(cls);
    if (r.cfg.params.contains("expected"))
        r.check("expected_class", r.cfg.params.at("expected").get<std::string>() == to_string(cls));
    if (cls == AutomorphismClass::Elliptic) return;
    const auto nf = to_normal_form(gp);
    r.report["normal_form"] = form_to_json(nf.form);
    r.report["inverted"] = nf.inverted;
    r.report["conjugator"] = {{"rotation", cjson(nf.conjugator.rotation())}, {"center", cjson(nf.conjugator.center())}};
    const auto phi = gp.to_moebius();
    const auto step = nf.inverted ? phi.inverse() : phi;
    double err = 0.0;
    for (auto z : sunflower_points(50, 0.9)) {
        const cplx lhs = nf.conjugator(step(nf.conjugator.inverse()(z)));
        err = std::max(err, std::abs(lhs - iterate_eval(nf.form, 1, z)));
    }
    r.report["conjugation_error"] = err;
    r.check_le("conjugation", err, r.tol("conjugation", 1e-10));
}

inline void run_iterate(Run& r) {
    const auto f = form_of(r.cfg);
    const auto pts = as_points(r.param_json("points"));
    const auto ns = r.param_json("n").get<std::vector<std::int64_t>>();
    std::vector<std::vector<double>> rows;
    double err = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const cplx z = pts[i].value();
        for (auto n : ns) {
            const cplx v = iterate_eval(f, n, z);
            rows.push_back({double(i), double(n), v.real(), v.imag(), double(quotient_index(f, v))});
            for (auto m : ns) err = std::max(err, std::abs(iterate_eval(f, m, v) - iterate_eval(f, n + m, z)));
        }
    }
    r.csv("iterates", "point_index, n, re, im of phi^(n)(z), and the tile index of the image",
          {"point_index", "n", "re", "im", "tile_index"}, rows);
    r.report["group_law_error"] = err;
    r.check_le("group_law", err, r.tol("group_law", 1e-10));
}

inline void run_thin_select(Run& r) {
    const auto f = form_of(r.cfg);
    const std::size_t K = r.param("K", std::size_t(8));
    const double radius = r.param("radius", 0.5);
    const int trials = r.param("trials", 100);
    std::vector<double> targets = r.cfg.params.contains("targets") ? r.param_json("targets").get<std::vector<double>>()
                                                                   : default_targets(K);
    const std::vector<double> radii(K, radius);
    std::mt19937_64 rng(r.cfg.seed);
    ThinSelectionPlan plan;
    PlacementCheck pc;
    const std::string src = r.param("candidates", std::string("orbit"));
    if (src == "orbit") {
        const OrbitCenterCandidates cands(f);
        plan = thin_subsequence_select(cands, radii, targets, K);
        pc = verify_plan_placements(cands, plan, rng, trials);
    } else if (src == "points") {
        const PointCandidates cands(as_points(r.param_json("points")));
        plan = thin_subsequence_select(cands, radii, targets, K);
        pc = verify_plan_placements(cands, plan, rng, trials);
    } else {
        throw Error(ErrorKind::ConfigInvalid, "params.candidates must be 'orbit' or 'points'");
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < plan.size(); ++k)
        rows.push_back({double(k), double(plan.indices[k]), plan.radii[k], plan.targets[k], plan.budgets[k],
                        std::isinf(plan.achieved[k]) ? -1.0 : plan.achieved[k]});
    r.csv("plan", "selected candidate indices; achieved = min hyperbolic distance to earlier picks (-1 for k = 0)",
          {"k", "index", "radius", "target", "budget", "achieved"}, rows);
    r.report["placement"] = {{"trials", pc.trials}, {"failures", pc.failures}, {"worst_margin", pc.worst_margin}};
    r.check_le("placement_failures", double(pc.failures), 0.0);
}

inline void run_construct_thin(Run& r) {
    const auto f = form_of(r.cfg);
    const std::size_t K = r.param("K", std::size_t(16));
    const auto seed = as_points(r.cfg.params.value("seed_points", json::array()));
    const auto c = construct_thin_from_E(f, seed, K);
    // zeros deep in the orbit round to the circle in double, so the seed and shift are kept alongside
    std::vector<std::vector<double>> zrows;
    for (std::size_t k = 0; k < c.product.size(); ++k) {
        const auto& fk = c.product.factors()[k];
        const cplx z = c.product.zero(k);
        zrows.push_back({z.real(), z.imag(), double(fk.multiplicity), fk.w.real(), fk.w.imag(), double(fk.shift),
                         c.product.zero_defect(k)});
    }
    r.csv("zeros", "", {"re_z", "im_z", "multiplicity", "seed_re", "seed_im", "shift", "defect"}, zrows);
    r.report["product"] = product_to_json(c.product);
    json thin = json::array();
    bool ok = true;
    for (std::size_t k = 0; k < c.product.size(); ++k) {
        const double lt = c.product.thinness_log(k);
        thin.push_back({{"k", k}, {"log_thinness", lt}, {"target", c.plan.targets[k]}});
        ok = ok && lt >= std::log(c.plan.targets[k]);
    }
    r.report["thinness"] = thin;
    r.check("thinness_meets_targets", ok);
}

inline ThinConstruction seed_construction(Run& r, const NonEllipticNormalForm& f, cplx& w) {
    w = as_cplx(r.param_json("w"));
    return construct_thin_from_E(f, {DiscPoint(w)}, r.param("K", std::size_t(32)));
}

inline void run_orbit_limits(Run& r) {
    const auto f = form_of(r.cfg);
    cplx w;
    const auto c = seed_construction(r, f, w);
    std::vector<std::int64_t> ns;
    for (auto i : c.plan.indices) ns.push_back(std::int64_t(i));
    const auto L = orbit_limit_points(c.product, f, ns);
    std::vector<std::vector<double>> rows;
    json jr = json::array();
    bool decreasing = true;
    for (std::size_t k = 0; k < L.size(); ++k) {
        rows.push_back({double(L[k].n), L[k].w.real(), L[k].w.imag(), L[k].lambda.real(), L[k].lambda.imag(), L[k].h2_residual});
        jr.push_back({{"n", L[k].n}, {"h2_residual", L[k].h2_residual}, {"kind", to_string(L[k].kind)}});
        if (k > 1 && L[k - 1].h2_residual > 0.0 && !(L[k].h2_residual < L[k - 1].h2_residual)) decreasing = false;
    }
    r.csv("limits", "orbit limits lambda phi_w of B o phi^(n) along the selected indices",
          {"n", "fitted_w_re", "fitted_w_im", "fitted_lambda_re", "fitted_lambda_im", "h2_residual"}, rows);
    r.report["rows"] = jr;
    double werr = 0.0;
    for (const auto& l : L) werr = std::max(werr, std::abs(l.w - w));
    r.report["max_w_error"] = werr;
    r.check("h2_decreasing", decreasing);
    r.check_le("h2_final", L.empty() ? 1.0 : L.back().h2_residual, r.tol("h2_final", 1e-3));
}

inline void run_estimate_e(Run& r) {
    const auto f = form_of(r.cfg);
    cplx w;
    const auto c = seed_construction(r, f, w);
    EstimateEOptions opt;
    opt.eps = r.tol("eps", 0.05);
    const auto E = estimate_E(c.product, f, opt);
    std::vector<std::vector<double>> rows;
    double worst = 0.0;
    for (const auto& cl : E) {
        rows.push_back({cl.center.real(), cl.center.imag(), double(cl.support), double(cl.hits)});
        // distance to the nearest orbit point of w
        const std::int64_t d = quotient_index(f, cl.center) - quotient_index(f, w);
        double best = 1.0;
        for (std::int64_t e = d - 1; e <= d + 1; ++e) best = std::min(best, rho(DiscPoint(cl.center), DiscPoint(iterate_eval(f, e, w))));
        worst = std::max(worst, best);
    }
    r.csv("clusters", "accumulation points of pulled-back zeros inside the test disc", {"re", "im", "support", "hits"}, rows);
    r.report["clusters"] = E.size();
    r.report["worst_orbit_distance"] = worst;
    r.check("nonempty", !E.empty());
    r.check_le("orbit_distance", worst, opt.eps);
}

inline void run_span_classify(Run& r) {
    const auto f = form_of(r.cfg);
    const std::string input = r.param("input", std::string("orbit"));
    std::vector<DiscPoint> E;
    SpanFlags flags;
    flags.blaschke_intent = r.param("blaschke_intent", true);
    if (input == "empty") flags.is_empty = true;
    else if (input == "orbit") E = truncated_orbit(f, as_cplx(r.param_json("w")), r.param("N", std::int64_t(64)));
    else if (input == "points") E = as_points(r.param_json("points"));
    else throw Error(ErrorKind::ConfigInvalid, "params.input must be empty, orbit or points");
    const auto c = span_classification(f, E, flags);
    r.report["classification"] = classification_to_json(c);
    if (r.cfg.params.contains("expected"))
        r.check("expected_case", r.cfg.params.at("expected").get<std::string>() == to_string(c.kind));
    if (c.gamma_checked) r.check_le("gamma_modulus", c.gamma_modulus_error, r.tol("gamma_modulus", 1e-8));
}

inline void run_eig_blaschke(Run& r) {
    const auto f = form_of(r.cfg);
    const auto seed = as_points(r.param_json("seed_points"));
    const std::int64_t N = r.param("N", std::int64_t(32));
    const auto e = blaschke_eigenvector(f, seed, N);
    r.report["gamma"] = cjson(e.gamma);
    r.report["gamma_half"] = cjson(e.gamma_half);
    r.report["z0"] = cjson(e.z0);
    r.report["drift"] = e.drift;
    r.report["product"] = product_to_json(e.product);
    const auto ob = blaschke_condition_orbit(f, seed, N);
    json partials = json::array();
    for (std::size_t n = 0; n < ob.partial_sums.size(); ++n)
        partials.push_back({{"N", n}, {"partial_sum", ob.partial_sums[n]}, {"majorant", ob.hyperbolic ? ob.certified_bound : 0.0}});
    r.report["partials"] = partials;
    r.report["seed_sum"] = ob.seed_sum;
    r.check_le("gamma_modulus", e.modulus_deviation, r.tol("gamma_modulus", 1e-8));
    if (ob.hyperbolic) {
        bool ok = true;
        for (double s : ob.partial_sums) ok = ok && s <= ob.certified_bound * (1.0 + 1e-12);
        r.check("orbit_sum_bounded", ok);
    }
}

inline json boundary_tiling(const OuterEigenfunction& F, const NonEllipticNormalForm& f, std::size_t M) {
    json rows = json::array();
    for (std::size_t j = 0; j < M; ++j) {
        const double th = -pi + 2.0 * pi * (double(j) + 0.5) / double(M);
        const BoundaryPoint xi(th);
        if (near_fixed_point(f, xi)) continue;
        rows.push_back({{"theta", th},
                        {"f_value", tile_boundary_modulus(F.f0(), F.lambda(), f, xi)},
                        {"tile_index", quotient_index(f, xi)}});
    }
    return rows;
}

inline void run_eig_outer(Run& r) {
    const auto f = form_of(r.cfg);
    const auto f0 = trig_modulus(r.param_json("f0"), r.cfg.seed);
    const double lambda = r.param("lambda", 1.2), p = r.param("p", 2.0);
    OuterOptions opt;
    opt.n_tile = r.param("n_tile", std::int64_t(24));
    opt.eps_quad = r.tol("eps_quad", opt.eps_quad);
    const auto grid = sunflower_points(r.param("grid_points", std::size_t(100)), r.param("grid_radius", 0.7));

    const auto lp = check_lp_convergence(f0, lambda, f, p, 50);
    r.report["lp"] = {{"converges", lp.converges}, {"tail_bound", lp.converges ? lp.tail_bound : -1.0},
                      {"n_needed", lp.n_needed}, {"partial_sums", lp.partial_sums}};
    r.report["admissible"] = admissible_lambda_range(p, f).describe();
    const OuterEigenfunction F(f, f0, lambda, p, opt);
    double rel = 0.0, tail = 0.0;
    for (auto z : grid) {
        const auto a = F.log_eval(z), b = F.log_eval(iterate_eval(f, 1, z));
        rel = std::max(rel, std::abs(std::expm1(b.log_value.real() - a.log_value.real() - std::log(lambda))));
        tail = std::max(tail, std::max(a.tail, b.tail));
    }
    const auto g = eigenvalue_gamma(F);
    r.report["gamma"] = cjson(g.gamma);
    r.report["eigenrelation_error"] = rel;
    r.report["tail_bound"] = tail;
    r.report["N_tile"] = opt.n_tile;
    r.report["tiling"] = boundary_tiling(F, f, 512);
    r.files.push_back({"f0", modulus_to_csv(f0)});
    r.check("lp_converges", lp.converges);
    r.check_le("eigenrelation", rel, r.tol("eigenrelation", 1e-6));
    r.check_le("gamma_modulus", g.modulus_deviation, r.tol("gamma_modulus", 1e-8));
    r.check_le("quadrature_tail", tail, opt.eps_quad);
    if (r.cfg.params.contains("lambda_reference")) {
        const double lr = r.param("lambda_reference", 1.0);
        const auto g0 = eigenvalue_gamma(OuterEigenfunction(f, f0, lr, p, opt));
        r.report["gamma_reference"] = cjson(g0.gamma);
        r.check_le("gamma_agreement", std::abs(g0.gamma - g.gamma), r.tol("gamma_agreement", 1e-6));
    }
    if (r.cfg.params.contains("lambda_inadmissible")) {
        const auto bad = check_lp_convergence(f0, r.param("lambda_inadmissible", 2.2), f, p, 50);
        r.report["inadmissible_partial_sums"] = bad.partial_sums;
        r.check("inadmissible_diverges", !bad.converges);
    }
}

inline void run_eig_singular(Run& r) {
    const auto f = form_of(r.cfg);
    const BoundaryIntervalJ J(f);
    const auto nu0 = atoms_on_J(r.cfg.params.value("atoms", json::array()), J);
    const std::int64_t n_tile = r.param("n_tile", std::int64_t(24));
    AtomicSingularMeasure total;
    double tail = 0.0;
    if (!nu0.empty()) {
        const auto om = orbit_measure(nu0, f, n_tile);
        total = om.measure;
        tail = om.tail_mass_bound;
    }
    const auto fixed = fixed_point_component(f, r.param("fixed_mass", 0.0));
    for (const auto& a : fixed.atoms()) total.add(a.xi, a.mass);
    const auto grid = sunflower_points(r.param("grid_points", std::size_t(100)), r.param("grid_radius", 0.7));
    double err = 0.0;
    for (auto z : grid) err = std::max(err, std::abs(std::expm1(total.log_abs(iterate_eval(f, 1, z)) - total.log_abs(z))));
    r.report["measure"] = measure_to_json(total);
    r.report["tail_mass_bound"] = tail;
    r.report["eigenrelation_error"] = err;
    r.report["N_tile"] = n_tile;
    r.check_le("eigenrelation", err, r.tol("tail_factor", 10.0) * tail + 1e-12);
}

inline void run_eig_verify(Run& r) {
    const auto f = form_of(r.cfg);
    EigenFactorization fac;
    const std::int64_t n_tile = r.param("n_tile", std::int64_t(24));
    if (r.cfg.params.contains("outer") && !r.cfg.params.at("outer").is_null()) {
        const auto& o = r.cfg.params.at("outer");
        OuterOptions opt;
        opt.n_tile = n_tile;
        fac.outer.emplace(f, trig_modulus(o.at("f0"), r.cfg.seed), o.value("lambda", 1.0), o.value("p", 2.0), opt);
    }
    if (r.cfg.params.contains("blaschke") && !r.cfg.params.at("blaschke").is_null()) {
        const auto& b = r.cfg.params.at("blaschke");
        fac.blaschke = blaschke_eigenvector(f, as_points(b.at("seed_points")), b.value("N", std::int64_t(32))).product;
    }
    if (r.cfg.params.contains("singular") && !r.cfg.params.at("singular").is_null()) {
        const auto& s = r.cfg.params.at("singular");
        const BoundaryIntervalJ J(f);
        AtomicSingularMeasure m;
        const auto nu0 = atoms_on_J(s.value("atoms", json::array()), J);
        if (!nu0.empty()) m = orbit_measure(nu0, f, n_tile).measure;
        const auto fixed = fixed_point_component(f, s.value("fixed_mass", 0.0));
        for (const auto& a : fixed.atoms()) m.add(a.xi, a.mass);
        fac.singular = m;
    }
    const auto rep = combine_factors(f, fac, sunflower_points(r.param("grid_points", std::size_t(200)), r.param("grid_radius", 0.7)));
    r.report["verification"] = verification_to_json(rep);
    r.check_le("modulus", rep.modulus_error, r.tol("modulus", 1e-4));
    r.check_le("arg_dispersion", rep.arg_dispersion, r.tol("arg_dispersion", 1e-4));
}

inline void run_domain_plot(Run& r) {
    const auto f = form_of(r.cfg);
    const int tiles = r.param("tiles", 8);
    const int S = r.param("samples", 64);
    std::vector<std::vector<double>> rows;
    // domain edges: half-plane curves |v| = 1, alpha (hyperbolic) or Re v = 0, t (parabolic)
    for (int edge = 0; edge < 2; ++edge)
        for (int j = 0; j <= S; ++j) {
            cplx v;
            if (f.is_hyperbolic()) {
                const double rad = edge == 0 ? 1.0 : f.alpha();
                v = std::polar(rad, pi * (double(j) + 0.5) / double(S + 1));
            } else {
                const double y = std::exp(-8.0 + 16.0 * double(j) / double(S));
                v = cplx(edge == 0 ? 0.0 : f.t(), y);
            }
            const cplx z = from_half_plane(v);
            rows.push_back({0.0, double(edge), 0.0, z.real(), z.imag()});
        }
    const BoundaryIntervalJ J(f);
    for (int n = -tiles; n <= tiles; ++n)
        for (std::size_t k = 0; k < J.arcs().size(); ++k) {
            const auto [s0, s1] = J.arc_params(k);
            for (int j = 0; j <= S; ++j) {
                const double s = s0 + (s1 - s0) * double(j) / double(S);
                const cplx z = iterate_boundary(f, n, J.point_at(std::min(s, std::nextafter(s1, s0)))).value();
                rows.push_back({1.0, double(k), double(n), z.real(), z.imag()});
            }
        }
    r.csv("domain", "curve 0: edges of the fundamental domain (part = edge); curve 1: boundary tiles phi^(n)(J) (part = arc)",
          {"curve", "part", "tile_index", "x", "y"}, rows);
    r.report["tiles"] = tiles;
    r.check("nonempty", !rows.empty());
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    detail::Run r{cfg};
    static const std::map<std::string, std::function<void(detail::Run&)>> table{
        {"classify", detail::run_classify},         {"iterate", detail::run_iterate},
        {"thin-select", detail::run_thin_select},   {"construct-thin", detail::run_construct_thin},
        {"orbit-limits", detail::run_orbit_limits}, {"estimate-e", detail::run_estimate_e},
        {"span-classify", detail::run_span_classify}, {"eig-blaschke", detail::run_eig_blaschke},
        {"eig-outer", detail::run_eig_outer},       {"eig-singular", detail::run_eig_singular},
        {"eig-verify", detail::run_eig_verify},     {"domain-plot", detail::run_domain_plot}};
    const auto it = table.find(cfg.kind);
    if (it == table.end()) throw Error(ErrorKind::ConfigInvalid, "unknown experiment '" + cfg.kind + "'");
    try {
        it->second(r);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigInvalid, std::string("config: ") + e.what());
    }
    ExperimentResult out;
    out.passed = true;
    for (const auto& a : r.assertions) out.passed = out.passed && a.at("passed").get<bool>();
    out.report = {{"schema_version", config_schema_version}, {"id", cfg.id},       {"experiment", cfg.kind},
                  {"config", cfg.to_json()},                  {"passed", out.passed}, {"assertions", r.assertions},
                  {"results", r.report}};
    out.files = std::move(r.files);
    return out;
}

// Writes <id>.report.json and <id>.<name>.csv into dir; returns the paths written.
inline std::vector<std::string> write_experiment(const ExperimentResult& res, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string id = res.report.at("id").get<std::string>();
    std::vector<std::string> paths;
    const auto rp = (fs::path(dir) / (id + ".report.json")).string();
    write_text_file(rp, res.report.dump(2) + "\n");
    paths.push_back(rp);
    for (const auto& f : res.files) {
        const auto p = (fs::path(dir) / (id + "." + f.name + ".csv")).string();
        write_text_file(p, f.text);
        paths.push_back(p);
    }
    return paths;
}

// Flat CSV views of a report.
inline const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> k{"orbit-convergence", "boundary-tiling", "blaschke-partials"};
    return k;
}

inline std::string emit_plot_data(const json& report, const std::string& kind) {
    const json& res = report.at("results");
    std::ostringstream out;
    std::vector<std::vector<double>> rows;
    auto need = [&](const char* key) -> const json& {
        if (!res.contains(key)) throw Error(ErrorKind::InvalidArgument, std::string("report has no '") + key + "' data");
        return res.at(key);
    };
    if (kind == "orbit-convergence") {
        for (const auto& row : need("rows")) {
            const double h = row.at("h2_residual").get<double>();
            rows.push_back({row.at("n").get<double>(), h > 0.0 ? std::log10(h) : -400.0});
        }
        write_csv(out, "columns: n, log10 of the H2 residual (-400 marks an exact zero)", {"n", "log10_residual"}, rows);
    } else if (kind == "boundary-tiling") {
        for (const auto& row : need("tiling"))
            rows.push_back({row.at("theta").get<double>(), row.at("f_value").get<double>(), row.at("tile_index").get<double>()});
        write_csv(out, "columns: boundary angle, tiled modulus f, tile index n", {"theta", "f_value", "tile_index"}, rows);
    } else if (kind == "blaschke-partials") {
        for (const auto& row : need("partials"))
            rows.push_back({row.at("N").get<double>(), row.at("partial_sum").get<double>(), row.at("majorant").get<double>()});
        write_csv(out, "columns: truncation N, orbit Blaschke partial sum, certified majorant", {"N", "partial_sum", "majorant"}, rows);
    } else {
        throw Error(ErrorKind::UnknownReportKind, "unknown plot kind '" + kind + "'");
    }
    return out.str();
}

}  // namespace hol
