#pragma once

// Command-line front end: every library operation as a subcommand emitting
// JSON (default) or CSV. Entropy and information are reported in bits unless
// --nats is given.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lowent/capacity_opt.hpp"
#include "lowent/serialization.hpp"

namespace lowent::cli {

enum class Status { Ok, Error };

struct CommandResult {
    Status status = Status::Ok;
    json payload;
    double elapsed = 0.0;     ///< seconds
    int exit_code = 0;        ///< 0 ok, 1 domain/numeric error, 2 usage error
    std::string output;       ///< stdout text
    std::string diagnostics;  ///< stderr text
};

namespace detail {

using lowent::detail::fail;
using lowent::detail::require;

struct Common {
    bool csv = false;
    bool json_out = false;
    bool nats = false;
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
};

struct Target {
    bool gaussian = false;
    double m1 = 0.0;
    std::optional<double> m2, m3, m4;
    bool symmetric = false;
};

struct Entropy {
    std::optional<double> bits, nats;
};

struct Input {
    std::string dist;
    std::vector<double> atoms, weights;
    std::size_t gh = 0;
};

/// What a handler produced: the JSON payload, an optional CSV rendering, and
/// an optional artifact for --out (defaults to the rendered output).
struct Produced {
    json payload;
    std::optional<std::string> csv = {};
    std::optional<json> artifact_json = {};
    std::optional<std::string> artifact_csv = {};
};

inline double unit_scale(const Common& c) { return c.nats ? 1.0 : 1.0 / std::log(2.0); }
inline std::string unit_name(const Common& c) { return c.nats ? "nats" : "bits"; }

inline void add_target_options(CLI::App* sub, Target& t) {
    sub->add_flag("--gaussian", t.gaussian, "Standard normal target");
    sub->add_option("--m1", t.m1, "Target mean");
    sub->add_option("--m2", t.m2, "Target second moment");
    sub->add_option("--m3", t.m3, "Target third moment");
    sub->add_option("--m4", t.m4, "Target fourth moment");
    sub->add_flag("--symmetric", t.symmetric, "Target is symmetric about zero");
}

inline TargetMoments make_target(const Target& t, std::size_t order) {
    const bool explicit_moments = t.m2 || t.m3 || t.m4;
    if (t.gaussian) {
        if (explicit_moments) throw CLI::ValidationError("--gaussian excludes --m2/--m3/--m4");
        return TargetMoments::gaussian(order);
    }
    if (!t.m2 || (order >= 3 && !t.m3) || (order >= 4 && !t.m4))
        throw CLI::ValidationError("give --gaussian or the target moments --m2 --m3" +
                                   std::string(order >= 4 ? " --m4" : ""));
    std::vector<double> m{t.m1, *t.m2};
    if (order >= 3) m.push_back(*t.m3);
    if (order >= 4) m.push_back(*t.m4);
    return TargetMoments(std::move(m), t.symmetric);
}

inline void add_entropy_options(CLI::App* sub, Entropy& e) {
    auto* b = sub->add_option("--h-bits", e.bits, "Entropy budget in bits");
    auto* n = sub->add_option("--h-nats", e.nats, "Entropy budget in nats");
    b->excludes(n);
}

inline double entropy_budget(const Entropy& e) {
    if (e.bits) return *e.bits * std::log(2.0);
    if (e.nats) return *e.nats;
    throw CLI::ValidationError("an entropy budget is required (--h-bits or --h-nats)");
}

inline void add_input_options(CLI::App* sub, Input& in) {
    sub->add_option("--dist", in.dist, "Input distribution JSON file {\"atoms\", \"weights\"}");
    sub->add_option("--atoms", in.atoms, "Comma-separated atoms")->delimiter(',');
    sub->add_option("--weights", in.weights, "Comma-separated weights")->delimiter(',');
    sub->add_option("--gh", in.gh, "Use the m-point Gauss-Hermite distribution");
}

inline json read_json_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorCode::Config, "cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, "invalid JSON in " + path + ": " + e.what());
    }
}

inline AtomicDistribution make_input(const Input& in) {
    const int given = int(!in.dist.empty()) + int(!in.atoms.empty() || !in.weights.empty()) + int(in.gh > 0);
    if (given != 1) throw CLI::ValidationError("give exactly one of --dist, --atoms/--weights, --gh");
    if (!in.dist.empty()) return distribution_from_json(read_json_file(in.dist));
    if (in.gh > 0) return gauss_hermite(in.gh);
    return AtomicDistribution(in.atoms, in.weights);
}

inline void write_atomic(const std::string& path, const std::string& text) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        require(f.good(), ErrorCode::Config, "cannot write " + tmp.string());
        f << text;
        f.flush();
        require(f.good(), ErrorCode::Config, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::Config, "cannot move output into place at " + path);
    }
}

/// Flat key-value optimizer settings; unknown keys are rejected.
inline void apply_config(const json& j, OptimizationConfig& cfg) {
    require(j.is_object(), ErrorCode::Config, "config must be a flat JSON object");
    for (const auto& [key, v] : j.items()) {
        require(v.is_number() || v.is_boolean(), ErrorCode::Config, "config value for " + key + " must be a number");
        const auto count = [&] {
            require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::Config,
                    "config value for " + key + " must be a nonnegative integer");
            return static_cast<std::size_t>(v.get<long long>());
        };
        const double x = v.get<double>();
        if (key == "support_size") cfg.support_size = count();
        else if (key == "restarts") cfg.restarts = count();
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(count());
        else if (key == "max_iterations") cfg.max_iterations = count();
        else if (key == "initial_step") cfg.initial_step = x;
        else if (key == "step_growth") cfg.step_growth = x;
        else if (key == "step_shrink") cfg.step_shrink = x;
        else if (key == "min_step") cfg.min_step = x;
        else if (key == "constraint_tolerance") cfg.constraint_tolerance = x;
        else if (key == "entropy_boundary_tolerance") cfg.entropy_boundary_tolerance = x;
        else if (key == "penalty_stages") cfg.penalty_stages = count();
        else if (key == "penalty_initial") cfg.penalty_initial = x;
        else if (key == "penalty_growth") cfg.penalty_growth = x;
        else if (key == "node_count") cfg.integration.node_count = count();
        else if (key == "tail_sigma") cfg.integration.tail_sigma = x;
        else if (key == "tolerance") cfg.integration.tolerance = x;
        else if (key == "max_doublings") cfg.integration.max_doublings = count();
        else fail(ErrorCode::Config, "unknown config key: " + key);
    }
}

inline json info_value(double nats, const Common& c) { return nats * unit_scale(c); }

inline json moments_json(const AtomicDistribution& d, std::size_t k) { return to_json(moments(d, k)); }

}  // namespace detail

/// Parses args (without the program name), dispatches and renders.
inline CommandResult run(const std::vector<std::string>& args) {
    using namespace detail;
    const auto start = std::chrono::steady_clock::now();
    CommandResult result;

    CLI::App app{"Low-entropy moment matching and entropy-constrained Gaussian channel numerics", "lowent"};
    app.require_subcommand(1);
    Common common;
    app.add_flag("--json", common.json_out, "JSON output (default)");
    app.add_flag("--csv", common.csv, "CSV output where the command has tabular data");
    app.add_flag("--nats", common.nats, "Report entropy and information in nats instead of bits");
    auto* seed_opt = app.add_option("--seed", common.seed, "Random seed for optimizer restarts");
    app.add_option("--config", common.config, "Flat JSON key-value file with optimizer and integration settings");
    app.add_option("--out", common.out, "Also write the result to this file (atomically)");

    std::function<Produced()> handler;
    const auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
        auto* sub = parent->add_subcommand(name, desc);
        sub->fallthrough();
        return sub;
    };

    // moments
    auto* moments_cmd = app.add_subcommand("moments", "Moment sequence checks");
    moments_cmd->require_subcommand(1);
    moments_cmd->fallthrough();
    std::vector<double> seq;
    double tol = -1.0;
    {
        auto* check = leaf(moments_cmd, "check", "Hankel PSD verdict, leading minors and truncated feasibility");
        check->add_option("--seq", seq, "Comma-separated moments s0,s1,...")->required()->delimiter(',');
        check->add_option("--tol", tol, "PSD tolerance (default relative 1e-10)");
        check->callback([&] {
            handler = [&] {
                const MomentSequence s(seq);
                const std::size_t n = s.order() / 2;
                const auto h = hankel(s, n);
                const double t = tol >= 0.0 ? tol : default_psd_tolerance(h.matrix());
                const auto verdict = psd_check(h, t);
                json j{{"verdict", std::string(to_string(verdict))},
                       {"order", n},
                       {"tolerance", t},
                       {"leading_minors", leading_minors(h)}};
                if (s.is_probability()) {
                    const auto f = truncated_feasible(s);
                    j["feasibility"] = std::string(to_string(f.verdict));
                    j["witness"] = f.witness;
                }
                return Produced{j};
            };
        });
        auto* center = leaf(moments_cmd, "center", "Central moments from raw moments");
        center->add_option("--seq", seq, "Comma-separated moments s0,s1,...")->required()->delimiter(',');
        center->callback([&] {
            handler = [&] { return Produced{json{{"centered", to_json(center_moments(MomentSequence(seq)))}}}; };
        });
        auto* recover = leaf(moments_cmd, "recover", "Atomic measure with the given moments");
        recover->add_option("--seq", seq, "Comma-separated moments s0,s1,...")->required()->delimiter(',');
        recover->add_option("--tol", tol, "Moment residual tolerance (default 1e-8)");
        recover->callback([&] {
            handler = [&] {
                const auto d = prony_recover(MomentSequence(seq), tol >= 0.0 ? tol : 1e-8);
                return Produced{to_json(d), distribution_csv(d)};
            };
        });
    }

    // quadrature
    std::size_t m_points = 0;
    {
        auto* quad = leaf(&app, "quadrature", "Gauss-Hermite distribution matching 2m-1 Gaussian moments");
        quad->add_option("--m", m_points, "Number of atoms")->required();
        quad->callback([&] {
            handler = [&] {
                const auto d = gauss_hermite(m_points);
                json j = to_json(d);
                j["entropy"] = info_value(entropy(d), common);
                j["unit"] = unit_name(common);
                return Produced{j, distribution_csv(d), to_json(d), distribution_csv(d)};
            };
        });
    }

    // eta
    Target target;
    EtaSearch search;
    {
        auto* eta_cmd = leaf(&app, "eta", "Four-moment threshold eta(W) and h2(eta) for a target");
        add_target_options(eta_cmd, target);
        eta_cmd->add_option("--bisection-tol", search.bisection_tolerance, "Bisection tolerance on eps");
        eta_cmd->add_option("--x0-points", search.x0_points, "x0 grid size for non-symmetric targets");
        eta_cmd->callback([&] {
            handler = [&] {
                const auto r = eta(make_target(target, 4), search);
                json j = to_json(r);
                j["threshold"] = info_value(binary_entropy(r.eta), common);
                j["unit"] = unit_name(common);
                return Produced{j};
            };
        });
    }

    // certificate
    Entropy budget;
    CertificateGrid grid;
    {
        auto* cert = leaf(&app, "certificate", "Grid certificate that no low-entropy X matches four moments");
        add_target_options(cert, target);
        add_entropy_options(cert, budget);
        cert->add_option("--eps-points", grid.eps_points, "eps grid size");
        cert->add_option("--x0-points", grid.x0_points, "x0 grid size");
        cert->add_option("--margin", grid.margin, "Relative x0 margin past the det1 boundary");
        cert->callback([&] {
            handler = [&] {
                const auto r = four_moment_certificate(make_target(target, 4), entropy_budget(budget), grid);
                return Produced{to_json(r), certificate_csv(r)};
            };
        });
    }

    // match3
    bool tight = false;
    {
        auto* match = leaf(&app, "match3", "Three-atom input matching three target moments under an entropy budget");
        add_target_options(match, target);
        add_entropy_options(match, budget);
        match->add_flag("--tight", tight, "Use the largest eps the budget allows");
        match->callback([&] {
            handler = [&] {
                const auto d = match_three_moments(make_target(target, 3), entropy_budget(budget),
                                                   tight ? MatchMode::Tight : MatchMode::Slack);
                json j = to_json(d);
                j["entropy"] = info_value(entropy(d), common);
                j["unit"] = unit_name(common);
                j["moments"] = moments_json(d, 4);
                return Produced{j, distribution_csv(d), to_json(d), distribution_csv(d)};
            };
        });
    }

    // channel
    Input input;
    std::vector<double> snrs;
    IntegrationSpec integration;
    auto* channel = app.add_subcommand("channel", "AWGN channel quantities for a discrete input");
    channel->require_subcommand(1);
    channel->fallthrough();
    const auto channel_leaf = [&](const std::string& name, const std::string& desc) {
        auto* sub = leaf(channel, name, desc);
        add_input_options(sub, input);
        sub->add_option("--snr", snrs, "Comma-separated snr values")->required()->delimiter(',');
        sub->add_option("--nodes", integration.node_count, "Base noise quadrature node count");
        return sub;
    };
    {
        channel_leaf("info", "Mutual information, mmse, capacity and gap")->callback([&] {
            handler = [&] {
                const auto x = make_input(input);
                const bool standardized = std::abs(x.mean()) <= 1e-9 && std::abs(x.second_moment() - 1.0) <= 1e-9;
                json rows = json::array();
                std::vector<std::vector<double>> table;
                for (double s : snrs) {
                    const double i = mutual_information(x, s, integration);
                    const double e = mmse(x, s, integration);
                    const double c = capacity(s);
                    const double gap = standardized ? capacity_gap(x, s, integration) : NAN;
                    rows.push_back({{"snr", s},
                                    {"information", info_value(i, common)},
                                    {"mmse", e},
                                    {"capacity", info_value(c, common)},
                                    {"gap", standardized ? info_value(gap, common) : json(nullptr)}});
                    table.push_back({s, i, e, c, gap});
                }
                json j{{"input", to_json(x)}, {"entropy", info_value(entropy(x), common)},
                       {"unit", unit_name(common)}, {"points", rows}};
                return Produced{j, csv_table({"snr", "I_nats", "mmse", "capacity", "gap"}, table)};
            };
        });
        channel_leaf("mmse", "Minimum mean squared error of X from sqrt(snr) X + Z")->callback([&] {
            handler = [&] {
                const auto x = make_input(input);
                json rows = json::array();
                std::vector<std::vector<double>> table;
                for (double s : snrs) {
                    const double e = mmse(x, s, integration);
                    rows.push_back({{"snr", s}, {"mmse", e}});
                    table.push_back({s, e});
                }
                return Produced{json{{"points", rows}}, csv_table({"snr", "mmse"}, table)};
            };
        });
        channel_leaf("immse-check", "Residual of I(snr) - (1/2) integral of mmse")->callback([&] {
            handler = [&] {
                const auto x = make_input(input);
                json rows = json::array();
                std::vector<std::vector<double>> table;
                for (double s : snrs) {
                    const double r = i_mmse_check(x, s, integration);
                    rows.push_back({{"snr", s}, {"residual", info_value(r, common)}});
                    table.push_back({s, r});
                }
                return Produced{json{{"unit", unit_name(common)}, {"points", rows}},
                                csv_table({"snr", "residual_nats"}, table)};
            };
        });
    }

    // capacity
    OptimizationConfig opt;
    double snr = 0.0;
    std::optional<std::size_t> support, restarts, iterations;
    std::vector<std::string> warm_files;
    std::string mode = "baseline";
    std::vector<double> grid_spec{1e-3, 1e-1, 9};
    auto* cap = app.add_subcommand("capacity", "Entropy-constrained capacity lower bounds");
    cap->require_subcommand(1);
    cap->fallthrough();
    const auto load_config = [&] {
        if (!common.config.empty()) apply_config(read_json_file(common.config), opt);
        if (seed_opt->count() > 0) opt.seed = common.seed;
        if (support) opt.support_size = *support;
        if (restarts) opt.restarts = *restarts;
        if (iterations) opt.max_iterations = *iterations;
    };
    const auto grid_from_spec = [&] {
        if (grid_spec.size() != 3 || grid_spec[2] < 2 || grid_spec[2] != std::floor(grid_spec[2]))
            throw CLI::ValidationError("--grid expects lo,hi,n with integer n >= 2");
        return geometric_grid(grid_spec[0], grid_spec[1], static_cast<std::size_t>(grid_spec[2]));
    };
    {
        auto* est = leaf(cap, "estimate", "Multi-start lower bound on C_H(h, snr)");
        add_entropy_options(est, budget);
        est->add_option("--snr", snr, "Signal-to-noise ratio")->required();
        est->add_option("--K", support, "Support size");
        est->add_option("--restarts", restarts, "Number of restarts");
        est->add_option("--max-iterations", iterations, "Iterations per penalty stage");
        est->add_option("--warm-start", warm_files, "Distribution JSON used as an extra start");
        est->callback([&] {
            handler = [&] {
                load_config();
                std::vector<AtomicDistribution> warm;
                for (const auto& f : warm_files) warm.push_back(distribution_from_json(read_json_file(f)));
                const auto e = estimate_capacity(entropy_budget(budget), snr, opt, warm);
                const auto sanity = sanity_bounds(e, 1e-6, opt.integration);
                json j{{"lower_bound", info_value(e.lower_bound_nats, common)},
                       {"h", info_value(e.h_nats, common)},
                       {"capacity", info_value(capacity(e.snr), common)},
                       {"unit", unit_name(common)},
                       {"estimate", to_json(e)},
                       {"sanity", to_json(sanity)}};
                return Produced{j, distribution_csv(e.best_input), to_json(e.best_input),
                                distribution_csv(e.best_input)};
            };
        });

        auto* base = leaf(cap, "baseline", "Three-moment baseline input and its mutual information");
        add_entropy_options(base, budget);
        base->add_option("--snr", snr, "Signal-to-noise ratio")->required();
        base->callback([&] {
            handler = [&] {
                load_config();
                const auto b = baseline_three_moment(entropy_budget(budget), snr, opt.integration);
                const double gap = capacity_gap(b.input, snr, opt.integration);
                json j{{"input", to_json(b.input)},
                       {"information", info_value(b.information_nats, common)},
                       {"information_nats", b.information_nats},
                       {"capacity", info_value(capacity(snr), common)},
                       {"gap", info_value(gap, common)},
                       {"unit", unit_name(common)}};
                return Produced{j, distribution_csv(b.input), to_json(b.input), distribution_csv(b.input)};
            };
        });

        auto* scaling = leaf(cap, "scaling", "Log-log slope of the capacity gap at low snr");
        add_entropy_options(scaling, budget);
        scaling->add_option("--mode", mode, "baseline or optimized")
            ->check(CLI::IsMember({"baseline", "optimized"}));
        scaling->add_option("--grid", grid_spec, "lo,hi,n geometric snr grid")->delimiter(',');
        add_input_options(scaling, input);
        scaling->callback([&] {
            handler = [&] {
                load_config();
                const auto snr_grid = grid_from_spec();
                const bool fixed = !input.dist.empty() || !input.atoms.empty() || input.gh > 0;
                ScalingReport r;
                json j;
                if (fixed) {
                    if (budget.bits || budget.nats) throw CLI::ValidationError("a fixed input excludes --h-bits/--h-nats");
                    const auto x = make_input(input);
                    r = gap_scaling_fixed(x, snr_grid, opt.integration);
                    j["input"] = to_json(x);
                    j["mode"] = "fixed";
                } else {
                    const auto m = mode == "optimized" ? ScalingMode::Optimized : ScalingMode::Baseline;
                    r = gap_scaling_experiment(entropy_budget(budget), snr_grid, m, opt);
                    j["mode"] = std::string(to_string(m));
                }
                j["report"] = to_json(r);
                return Produced{j, scaling_csv(r)};
            };
        });
    }

    const auto finish = [&] {
        result.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    };
    const auto error = [&](int code, const std::string& kind, const std::string& message) {
        result.status = Status::Error;
        result.exit_code = code;
        result.payload = {{"error", {{"code", kind}, {"message", message}}}};
        result.output = result.payload.dump(2) + "\n";
        result.diagnostics = "error: " + message + "\n";
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (common.csv && common.json_out) throw CLI::ValidationError("--json and --csv are exclusive");
        require(static_cast<bool>(handler), ErrorCode::Config, "no command selected");
        Produced p = handler();
        result.payload = p.payload;
        if (common.csv) {
            if (!p.csv) throw CLI::ValidationError("this command has no CSV form");
            result.output = *p.csv;
        } else {
            result.output = p.payload.dump(2) + "\n";
        }
        if (!common.out.empty()) {
            std::string artifact = result.output;
            if (common.csv && p.artifact_csv) artifact = *p.artifact_csv;
            else if (!common.csv && p.artifact_json) artifact = p.artifact_json->dump(2) + "\n";
            write_atomic(common.out, artifact);
        }
    } catch (const CLI::CallForHelp&) {
        result.output = app.help();
    } catch (const CLI::CallForAllHelp&) {
        result.output = app.help("", CLI::AppFormatMode::All);
    } catch (const CLI::ParseError& e) {
        error(2, "usage_error", std::string(e.what()) + "\n" + app.help());
    } catch (const Error& e) {
        error(1, std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
        error(1, "internal_error", e.what());
    }
    return finish();
}

}  // namespace lowent::cli
