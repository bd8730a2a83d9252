// Batch driver: one subcommand per experiment kind, JSON report plus CSV files in --out.
// Exit status: 0 all assertions pass, 1 some assertion failed (report still written), 2 bad config or precondition.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "hol/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> n_tile;
    std::optional<double> tolerance;
    std::string plot;
};

hol::ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hol::Error(hol::ErrorKind::ConfigInvalid, "cannot open config " + path);
    hol::json j;
    try {
        j = hol::json::parse(in);
    } catch (const hol::json::exception& e) {
        throw hol::Error(hol::ErrorKind::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
    }
    return hol::config_from_json(j);
}

int run(const std::string& sub, const Options& o) {
    hol::ExperimentConfig cfg = o.config.empty() ? hol::default_config(sub) : load_config(o.config);
    if (cfg.kind != hol::canonical_kind(sub))
        throw hol::Error(hol::ErrorKind::ConfigInvalid,
                         "config is for experiment '" + cfg.kind + "', not '" + hol::canonical_kind(sub) + "'");
    hol::apply_overrides(cfg, {o.seed, o.n_tile, o.tolerance});
    spdlog::info("running {} (id {}, seed {})", cfg.kind, cfg.id, cfg.seed);

    const auto res = hol::run_experiment(cfg);
    for (const auto& a : res.report.at("assertions"))
        spdlog::debug("assertion {}: {}", a.at("name").get<std::string>(), a.at("passed").get<bool>() ? "pass" : "FAIL");
    for (const auto& p : hol::write_experiment(res, o.out)) std::cout << p << "\n";

    if (!o.plot.empty()) {
        const auto csv = hol::emit_plot_data(res.report, o.plot);
        const auto path = (std::filesystem::path(o.out) / (cfg.id + ".plot." + o.plot + ".csv")).string();
        hol::write_text_file(path, csv);
        std::cout << path << "\n";
    }
    if (!res.passed) {
        for (const auto& a : res.report.at("assertions"))
            if (!a.at("passed").get<bool>()) spdlog::error("assertion failed: {}", a.dump());
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("hol");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("HOL_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

    CLI::App app{"Composition-operator eigenfunction experiments"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;

    auto add = [&](const std::string& name, const std::string& help, std::vector<std::string> aliases = {}) {
        auto* s = app.add_subcommand(name, help);
        for (const auto& a : aliases) s->alias(a);
        s->add_option("--config", o.config, "experiment config (JSON); built-in defaults when omitted")->check(CLI::ExistingFile);
        s->add_option("--out", o.out, "output directory")->capture_default_str();
        s->add_option("--seed", o.seed, "override the config seed");
        s->add_option("--n-tile", o.n_tile, "override params.n_tile");
        s->add_option("--tolerance", o.tolerance, "override the primary tolerance of the experiment");
        s->add_option("--plot", o.plot, "also emit flat plot data")
            ->check(CLI::IsMember(hol::plot_kinds()));
        s->callback([&chosen, name] { chosen = name; });
    };
    add("classify", "classify a general automorphism and conjugate it to normal form");
    add("iterate", "evaluate iterates and check the group law");
    add("thin-select", "select a thin subsequence and check random placements");
    add("construct-thin", "build a thin Blaschke product from seed points");
    add("orbit-limits", "fit orbit limits of B o phi^(n)");
    add("estimate-e", "estimate the accumulation set E of a product");
    add("span-classify", "classify the closed span of orbit limits");
    add("eig-blaschke", "Blaschke eigenvector from an orbit");
    add("eig-outer", "outer eigenfunction from boundary modulus data");
    add("eig-singular", "singular inner eigenfunction from an orbit measure");
    add("eig-verify", "verify a combined factorization", {"eigen-verify"});
    add("domain-plot", "fundamental domain and boundary tiles", {"fundamental-domain"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        return run(chosen, o);
    } catch (const hol::Error& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
}
