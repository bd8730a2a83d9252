#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hol/eigenfunctions.hpp"
#include "json.hpp"

namespace hol {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------------------------
// CSV plumbing: '#' lines are comments, the first non-comment line is the header.

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error(ErrorKind::InvalidArgument, "missing CSV column '" + name + "'");
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto a = cell.find_first_not_of(" \t\r"), b = cell.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return out;
}

inline CsvTable parse_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw Error(ErrorKind::InvalidArgument, "CSV line " + std::to_string(lineno) + ": wrong number of cells");
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0')
                throw Error(ErrorKind::InvalidArgument, "CSV line " + std::to_string(lineno) + ": not a number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw Error(ErrorKind::InvalidArgument, "CSV has no header");
    return t;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
    return parse_csv(in);
}

inline void write_csv(std::ostream& out, const std::string& comment, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    if (!comment.empty()) out << "# " << comment << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt17(r[i]);
        out << "\n";
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    out << text;
}

// ---------------------------------------------------------------------------------------------
// Zero lists and products

inline std::string zeros_to_csv(const ZeroSequence& zs) {
    std::vector<std::vector<double>> rows;
    for (const auto& e : zs.entries()) rows.push_back({e.zero.value().real(), e.zero.value().imag(), double(e.multiplicity)});
    std::ostringstream out;
    write_csv(out, "", {"re_z", "im_z", "multiplicity"}, rows);
    return out.str();
}

inline ZeroSequence zeros_from_csv(std::istream& in, bool blaschke_intent = true) {
    const auto t = parse_csv(in);
    const auto cr = t.column("re_z"), ci = t.column("im_z"), cm = t.column("multiplicity");
    std::vector<ZeroEntry> e;
    for (const auto& r : t.rows) {
        if (r[cm] != std::floor(r[cm]) || r[cm] < 1)
            throw Error(ErrorKind::InvalidArgument, "multiplicity must be a positive integer");
        e.push_back({DiscPoint(cplx(r[cr], r[ci])), int(r[cm])});
    }
    return ZeroSequence(std::move(e), blaschke_intent);
}

inline constexpr const char* blaschke_convention = "normalized: (|a|/a)(a - z)/(1 - conj(a) z), z for a = 0";

// Orbit products keep (w, shift) so zeros extremely close to the circle round-trip exactly.
inline json product_to_json(const BlaschkeProduct& b) {
    json j;
    j["convention"] = blaschke_convention;
    j["blaschke_intent"] = b.blaschke_intent();
    if (b.form()) {
        j["automorphism"] = {{"kind", b.form()->is_hyperbolic() ? "hyperbolic" : "parabolic"},
                             {"parameter", b.form()->parameter()}};
    }
    json zs = json::array();
    for (std::size_t k = 0; k < b.size(); ++k) {
        const auto& fk = b.factors()[k];
        const cplx z = b.zero(k);
        json e = {{"re", z.real()}, {"im", z.imag()}, {"multiplicity", fk.multiplicity}};
        if (b.form()) {
            e["seed_re"] = fk.w.real();
            e["seed_im"] = fk.w.imag();
            e["shift"] = fk.shift;
        }
        zs.push_back(e);
    }
    j["zeros"] = zs;
    return j;
}

inline NonEllipticNormalForm form_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double p = j.at("parameter").get<double>();
    if (kind == "hyperbolic") return NonEllipticNormalForm::hyperbolic(p);
    if (kind == "parabolic") return NonEllipticNormalForm::parabolic(p);
    throw Error(ErrorKind::InvalidArgument, "automorphism kind must be hyperbolic or parabolic");
}

inline json form_to_json(const NonEllipticNormalForm& f) {
    return {{"kind", f.is_hyperbolic() ? "hyperbolic" : "parabolic"}, {"parameter", f.parameter()}};
}

inline BlaschkeProduct product_from_json(const json& j) {
    if (j.value("convention", std::string()) != blaschke_convention)
        throw Error(ErrorKind::InvalidArgument, "unknown Blaschke convention tag");
    const bool intent = j.value("blaschke_intent", true);
    if (j.contains("automorphism")) {
        const auto f = form_from_json(j.at("automorphism"));
        std::vector<OrbitZero> zs;
        for (const auto& e : j.at("zeros"))
            zs.push_back({DiscPoint(cplx(e.at("seed_re").get<double>(), e.at("seed_im").get<double>())),
                          e.at("shift").get<std::int64_t>(), e.at("multiplicity").get<int>()});
        return BlaschkeProduct::from_orbit_zeros(f, zs, intent);
    }
    std::vector<ZeroEntry> e;
    for (const auto& z : j.at("zeros"))
        e.push_back({DiscPoint(cplx(z.at("re").get<double>(), z.at("im").get<double>())), z.at("multiplicity").get<int>()});
    return BlaschkeProduct::from_zeros(ZeroSequence(std::move(e), intent));
}

// ---------------------------------------------------------------------------------------------
// Boundary data

inline std::string samples_to_csv(const BoundarySamples& s) {
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < s.size(); ++j) rows.push_back({s.angle(j), s[j].real(), s[j].imag()});
    std::ostringstream out;
    write_csv(out, "", {"theta", "re", "im"}, rows);
    return out.str();
}

inline BoundarySamples samples_from_csv(std::istream& in) {
    const auto t = parse_csv(in);
    const auto cr = t.column("re"), ci = t.column("im");
    std::vector<cplx> v;
    for (const auto& r : t.rows) v.emplace_back(r[cr], r[ci]);
    return BoundarySamples(std::move(v));
}

inline std::string modulus_to_csv(const BoundaryModulus& f0) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < f0.params().size(); ++i) rows.push_back({f0.params()[i], f0.values()[i]});
    std::ostringstream out;
    write_csv(out, "", {"arc_param", "value"}, rows);
    return out.str();
}

inline BoundaryModulus modulus_from_csv(std::istream& in) {
    const auto t = parse_csv(in);
    const auto cs = t.column("arc_param"), cv = t.column("value");
    std::vector<double> s, v;
    for (const auto& r : t.rows) {
        s.push_back(r[cs]);
        v.push_back(r[cv]);
    }
    return BoundaryModulus(std::move(s), std::move(v));
}

// ---------------------------------------------------------------------------------------------
// Measures and reports

inline json measure_to_json(const AtomicSingularMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms()) atoms.push_back({{"theta", a.xi.angle()}, {"mass", a.mass}});
    return {{"atoms", atoms}};
}

inline AtomicSingularMeasure measure_from_json(const json& j) {
    AtomicSingularMeasure m;
    for (const auto& a : j.at("atoms")) m.add(BoundaryPoint(a.at("theta").get<double>()), a.at("mass").get<double>());
    return m;
}

inline json classification_to_json(const SpanClassification& c) {
    json j;
    j["case"] = to_string(c.kind);
    j["phi_invariant"] = c.phi_invariant;
    if (c.gamma_checked) j["gamma"] = {c.gamma.real(), c.gamma.imag()};
    else j["gamma"] = nullptr;
    j["residuals"] = {{"gamma_modulus_error", c.gamma_modulus_error},
                      {"gamma_residual", c.gamma_residual},
                      {"stable_points", c.stable_points}};
    j["basis_size"] = c.basis.size();
    return j;
}

inline json verification_to_json(const CombinedReport& r) {
    return {{"eigenvalue", {r.eigenvalue.real(), r.eigenvalue.imag()}},
            {"expected_modulus", r.expected_modulus},
            {"modulus_error", r.modulus_error},
            {"max_ratio_err", r.max_ratio_err},
            {"arg_dispersion", r.arg_dispersion},
            {"tail_bound", r.tail_bound},
            {"N_tile", r.n_tile},
            {"points_used", r.points_used}};
}

}  // namespace hol
