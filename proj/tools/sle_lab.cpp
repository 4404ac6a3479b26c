#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "slelab/experiments.hpp"
#include "slelab/loewner.hpp"
#include "slelab/quadrature.hpp"

namespace {

using namespace slelab;

void print_constants(double kappa, const std::vector<double>& rhos) {
    std::cout.precision(12);
    for (double rho : rhos.empty() ? std::vector<double>{0.0} : rhos) {
        const DerivedConstants d = derive_constants(kappa, rho);
        std::cout << "kappa=" << kappa << " rho=" << rho << "\n"
                  << "  a          = " << d.a << "\n"
                  << "  b          = " << d.b << "\n"
                  << "  c          = " << d.c << "\n"
                  << "  lambda     = " << d.lambda << "\n"
                  << "  alpha      = " << d.alpha << "\n"
                  << "  bessel_dim = " << d.bessel_dim << "\n"
                  << "  dual_kappa = " << d.dual_kappa << "\n"
                  << "  dual_rho   = " << d.dual_rho << "\n";
    }
    if (rhos.size() > 1) {
        std::cout << "exponent sum alpha(kappa, sum rho) = "
                  << lemma4_exponent_sum(kappa, rhos) << "\n";
    }
}

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::string>& overrides, ExperimentKind kind) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ExperimentConfig::from_file(config_path);
    cfg.kind = kind;
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("override must be key=value: " + kv);
        cfg.apply_keyval(kv.substr(0, eq), kv.substr(eq + 1));
        if (kv.substr(0, eq) == "kind") cfg.kind = cfg.kind;  // kind stays the subcommand's
    }
    cfg.kind = kind;
    return cfg;
}

int run_and_report(const ExperimentConfig& cfg, const std::string& out_root, bool strict) {
    std::vector<ReplicaRecord> detail;
    const std::vector<ExperimentResult> results = run_experiment(cfg, &detail);
    const std::string dir = emit_report(cfg, results, detail, out_root);
    std::cout << "wrote " << dir << "\n";
    for (const auto& r : results) {
        std::cout << "  " << r.kind << " | " << r.label << " | estimate=" << r.estimate
                  << " stderr=" << r.stderr_;
        if (r.has_target) std::cout << " target=" << r.target << " z=" << r.z;
        if (r.inconclusive) std::cout << " [inconclusive]";
        std::cout << "\n";
    }
    return report_exit_code(results, strict);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sle-lab: SLE(kappa,rho) simulation and identity-verification toolkit"};
    app.require_subcommand(1);

    // constants
    double kappa = 6.0;
    std::vector<double> rho_args;
    auto* c_const = app.add_subcommand("constants", "derived constants for (kappa, rho...)");
    c_const->add_option("kappa", kappa, "speed parameter")->required();
    c_const->add_option("rho", rho_args, "force-point weights");

    // drift-check
    std::string dc_config;
    std::vector<std::string> dc_overrides;
    std::string dc_out = "results";
    bool dc_strict = false;
    auto* c_drift = app.add_subcommand("drift-check", "exact + Monte Carlo drift cancellation");
    c_drift->add_option("--config", dc_config, "config file");
    c_drift->add_option("--set", dc_overrides, "key=value overrides");
    c_drift->add_option("--out", dc_out, "output root");
    c_drift->add_flag("--strict", dc_strict, "nonzero exit on inconclusive results");

    // simulate
    double sim_kappa = 6.0;
    std::vector<double> sim_rhos;
    std::vector<double> sim_z0;
    std::string sim_side = "right";
    double sim_dt = 5e-4, sim_t = 1.0;
    std::uint64_t sim_seed = 42;
    std::string sim_driver_csv, sim_trace_csv, sim_chain_txt;
    bool sim_zero_noise = false;
    auto* c_sim = app.add_subcommand("simulate", "sample one driver path; optional trace export");
    c_sim->add_option("--kappa", sim_kappa);
    c_sim->add_option("--rho", sim_rhos);
    c_sim->add_option("--z0", sim_z0, "force-point start positions");
    c_sim->add_option("--side", sim_side)->check(CLI::IsMember({"left", "right"}));
    c_sim->add_option("--dt", sim_dt);
    c_sim->add_option("--t", sim_t);
    c_sim->add_option("--seed", sim_seed);
    c_sim->add_option("--driver-csv", sim_driver_csv);
    c_sim->add_option("--trace-csv", sim_trace_csv);
    c_sim->add_option("--chain-txt", sim_chain_txt);
    c_sim->add_flag("--zero-noise", sim_zero_noise, "deterministic drift skeleton");

    // experiments
    struct ExpCmd {
        CLI::App* cmd;
        ExperimentKind kind;
        std::string config;
        std::vector<std::string> overrides;
        std::string out = "results";
        bool strict = false;
    };
    std::vector<ExpCmd> exp_cmds;
    auto add_exp = [&](const char* name, const char* help, ExperimentKind kind) {
        exp_cmds.push_back({});
        ExpCmd& e = exp_cmds.back();
        e.kind = kind;
        e.cmd = app.add_subcommand(name, help);
        e.cmd->add_option("--config", e.config, "config file (key=value lines)");
        e.cmd->add_option("--set", e.overrides, "key=value overrides");
        e.cmd->add_option("--out", e.out, "output root directory");
        e.cmd->add_flag("--strict", e.strict, "nonzero exit on inconclusive results");
    };
    add_exp("restriction", "hull-avoidance probability vs phi'_A(0)^alpha",
            ExperimentKind::Restriction);
    add_exp("duality", "paired avoidance estimates at kappa and 16/kappa",
            ExperimentKind::Duality);
    add_exp("conditioning", "swallow order vs the absorption-splitting function",
            ExperimentKind::Conditioning);
    add_exp("reconditioning", "survival of an inner force point", ExperimentKind::Reconditioning);
    add_exp("bilateral", "two-sided avoidance with exponent alpha(kappa, 2 kappa - 8)",
            ExperimentKind::Bilateral);

    // report
    std::string rep_dir;
    auto* c_rep = app.add_subcommand("report", "regenerate summary.csv from results.ndjson");
    c_rep->add_option("dir", rep_dir, "run directory (results/<digest>)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_const->parsed()) {
            print_constants(kappa, rho_args);
            return 0;
        }
        if (c_drift->parsed()) {
            ExperimentConfig cfg = load_config(dc_config, dc_overrides, ExperimentKind::DriftSuite);
            return run_and_report(cfg, dc_out, dc_strict);
        }
        if (c_sim->parsed()) {
            SleParameters p;
            p.kappa = sim_kappa;
            p.rhos = sim_rhos;
            p.side = sim_side == "left" ? Side::Left : Side::Right;
            p.z0 = sim_z0;
            if (p.z0.empty()) p.z0.assign(p.rhos.size(), 0.0);
            const TimeGrid grid(sim_dt, static_cast<std::size_t>(std::llround(sim_t / sim_dt)));
            SdeOptions opts;
            opts.zero_noise = sim_zero_noise;
            DriverPath path;
            if (p.rhos.empty()) {
                path.grid = grid;
                path.side = p.side;
                path.W = sample_brownian(grid, RngStream(sim_seed, 0), opts);
                for (double& w : path.W) w *= std::sqrt(sim_kappa);
            } else if (p.rhos.size() == 1) {
                path = sle_single_force_driver(p, grid, RngStream(sim_seed, 0), opts);
            } else {
                path = sle_multi_force_driver(p, grid, RngStream(sim_seed, 0), opts);
            }
            if (!sim_driver_csv.empty()) {
                std::ofstream out(sim_driver_csv);
                write_driver_csv(out, path);
            }
            const LoewnerChain chain = chain_from_driver(path);
            if (!sim_chain_txt.empty()) {
                std::ofstream out(sim_chain_txt);
                write_chain_txt(out, chain);
            }
            if (!sim_trace_csv.empty()) {
                const TracePath trace = trace_points(chain, path, 0.0, 10);
                std::ofstream out(sim_trace_csv);
                write_trace_csv(out, trace);
            }
            std::cout << "simulated " << path.grid.n_steps << " steps, capacity "
                      << chain.capacity() << "\n";
            return 0;
        }
        for (ExpCmd& e : exp_cmds) {
            if (e.cmd->parsed()) {
                ExperimentConfig cfg = load_config(e.config, e.overrides, e.kind);
                return run_and_report(cfg, e.out, e.strict);
            }
        }
        if (c_rep->parsed()) {
            regenerate_report(rep_dir);
            std::cout << "regenerated " << rep_dir << "/summary.csv\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 0;
}
