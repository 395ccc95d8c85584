#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qcontact/suites.hpp"

namespace {

using namespace qcontact;

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIntegrationError = 3;
constexpr int kExitNotExtremal = 4;

struct ModelArgs {
    std::string config_path;
    std::string builtin;
    std::vector<std::string> param_overrides;
    std::vector<double> initial;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON model configuration file");
        cmd->add_option("--builtin", builtin,
                        "built-in model, e.g. e1, rocket, contact-r3, two-contact-r4");
        cmd->add_option("--param", param_overrides, "override a parameter, name=value")
            ->expected(-1);
        cmd->add_option("--initial", initial, "initial state q1..qn,v1..vn,z1..zq")
            ->delimiter(',');
    }

    ModelConfig resolve() const {
        if (config_path.empty() == builtin.empty())
            throw ConfigError("provide exactly one of --config or --builtin");
        ModelConfig config =
            builtin.empty() ? load_config(config_path) : builtin_model(builtin);
        for (const auto& kv : param_overrides) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--param expects name=value, got '" + kv + "'");
            try {
                config.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("--param value in '" + kv + "' is not a number");
            }
        }
        if (!initial.empty()) config.initial = initial;
        return config;
    }
};

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << content;
}

void dump_ast(const ExprAst& ast, const std::string& prefix, bool last, std::ostream& out,
              bool root = true) {
    out << prefix;
    if (!root) out << (last ? "`- " : "|- ");
    switch (ast->kind) {
    case ExprNode::Kind::Constant: out << "Constant " << ast->number; break;
    case ExprNode::Kind::Coord:
        out << "Coord "
            << (ast->coord == CoordKind::Q ? 'q' : ast->coord == CoordKind::V ? 'v' : 'z')
            << ast->index;
        break;
    case ExprNode::Kind::Param: out << "Param " << ast->name; break;
    case ExprNode::Kind::Unary: out << "Neg"; break;
    case ExprNode::Kind::Binary:
        out << "Binary ";
        switch (ast->op) {
        case BinOp::Add: out << '+'; break;
        case BinOp::Sub: out << '-'; break;
        case BinOp::Mul: out << '*'; break;
        case BinOp::Div: out << '/'; break;
        case BinOp::Pow: out << '^'; break;
        }
        break;
    case ExprNode::Kind::Call:
        out << "Call ";
        switch (ast->fn) {
        case FnKind::Sin: out << "sin"; break;
        case FnKind::Cos: out << "cos"; break;
        case FnKind::Exp: out << "exp"; break;
        case FnKind::Log: out << "log"; break;
        case FnKind::Sqrt: out << "sqrt"; break;
        case FnKind::Tanh: out << "tanh"; break;
        case FnKind::Abs: out << "abs"; break;
        }
        break;
    }
    out << "\n";
    const std::string child_prefix = root ? prefix : prefix + (last ? "   " : "|  ");
    if (ast->left && ast->right) {
        dump_ast(ast->left, child_prefix, false, out, false);
        dump_ast(ast->right, child_prefix, true, out, false);
    } else if (ast->left) {
        dump_ast(ast->left, child_prefix, true, out, false);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Hamiltonian and Lagrangian dynamics on uniform q-contact manifolds"};
    app.require_subcommand(1);

    // --- simulate -----------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "integrate the model flow and write CSV");
    ModelArgs sim_model;
    sim_model.attach(simulate);
    double sim_t0 = 0.0, sim_t1 = -1.0, sim_tol = 1e-10, sim_step = 1e-2;
    std::string sim_method = "rk45", sim_output;
    int sim_stride = 1;
    simulate->add_option("--t0", sim_t0, "start time");
    simulate->add_option("--t1", sim_t1, "end time (default: model horizon)");
    simulate->add_option("--tol", sim_tol, "rk45 absolute tolerance (relative = 10x)");
    simulate->add_option("--step", sim_step, "rk4 fixed step");
    simulate->add_option("--method", sim_method, "rk45 | rk4")
        ->check(CLI::IsMember({"rk45", "rk4"}));
    simulate->add_option("--stride", sim_stride, "record every stride-th accepted step");
    simulate->add_option("-o,--output", sim_output, "output CSV path (default stdout)");

    // --- verify -------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run a verification suite, emit a JSON report");
    ModelArgs ver_model;
    ver_model.attach(verify);
    std::string ver_suite = "all", ver_output;
    SuiteOptions ver_opts;
    verify->add_option("--suite", ver_suite, "structure | dynamics | noether | pontryagin | all")
        ->check(CLI::IsMember({"structure", "dynamics", "noether", "pontryagin", "all"}));
    verify->add_option("--tol", ver_opts.tol, "structural tolerance")
        ->envname("QCONTACT_TOL");
    verify->add_option("--seed", ver_opts.seed, "sampling seed");
    verify->add_option("--points", ver_opts.solver_points, "random sample point count");
    verify->add_option("--horizon", ver_opts.horizon, "trajectory horizon override");
    verify->add_option("-o,--output", ver_output, "report path (default stdout)");

    // --- pontryagin ---------------------------------------------------------
    auto* pontryagin =
        app.add_subcommand("pontryagin", "forward extremal + backward adjoints, write CSV");
    ModelArgs pmp_model;
    pmp_model.attach(pontryagin);
    double pmp_t0 = 0.0, pmp_t1 = -1.0;
    int pmp_samples = 1601;
    std::string pmp_output;
    pontryagin->add_option("--t0", pmp_t0, "start time");
    pontryagin->add_option("--t1", pmp_t1, "end time (default: model horizon)");
    pontryagin->add_option("--samples", pmp_samples, "uniform grid sample count");
    pontryagin->add_option("-o,--output", pmp_output, "output CSV path (default stdout)");

    // --- parse --------------------------------------------------------------
    auto* parse = app.add_subcommand("parse", "parse an expression and print its tree");
    std::string parse_source;
    parse->add_option("expression", parse_source, "expression text")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError; // --help exits cleanly
    }

    if (parse->parsed()) {
        ExprAst ast = parse_expression(parse_source);
        dump_ast(ast, "", true, std::cout);
        std::cout << "printed: " << print_expression(ast) << "\n";
        return kExitOk;
    }

    if (simulate->parsed()) {
        Model model = build_model(sim_model.resolve());
        IntegratorConfig cfg;
        cfg.method = sim_method == "rk4" ? IntegratorConfig::Method::Rk4Fixed
                                         : IntegratorConfig::Method::Rk45Adaptive;
        cfg.t0 = sim_t0;
        cfg.t1 = sim_t1 > sim_t0 ? sim_t1 : sim_t0 + model.config.horizon;
        cfg.step = sim_step;
        cfg.abs_tol = sim_tol;
        cfg.rel_tol = 10.0 * sim_tol;
        cfg.stride = sim_stride;
        Trajectory traj = integrate(model.flow(), model.initialState(), cfg);
        traj.model_id = model.config.id();
        std::ostringstream csv;
        write_trajectory_csv(csv, traj, model.system.get());
        write_output(sim_output, csv.str());
        return kExitOk;
    }

    if (verify->parsed()) {
        Model model = build_model(ver_model.resolve());
        const auto started = std::chrono::steady_clock::now();
        RunReport report = run_suite(model, ver_suite, ver_opts);
        const auto elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        write_output(ver_output, report_to_json(report).dump(2) + "\n");
        std::cerr << "verify " << report.model_id << " suite=" << ver_suite << ": "
                  << report.checks.size() << " checks, " << (report.pass ? "pass" : "FAIL")
                  << " (" << elapsed << " s)\n";
        return report.pass ? kExitOk : kExitChecksFailed;
    }

    if (pontryagin->parsed()) {
        Model model = build_model(pmp_model.resolve());
        if (!model.isLagrangian())
            throw ConfigError("pontryagin needs a lagrangian model");
        IntegratorConfig cfg;
        cfg.t0 = pmp_t0;
        cfg.t1 = pmp_t1 > pmp_t0 ? pmp_t1 : pmp_t0 + model.config.horizon;
        cfg.abs_tol = 1e-12;
        cfg.rel_tol = 1e-11;
        Trajectory forward = integrate_grid(model.flow(), model.initialState(), cfg, pmp_samples);
        forward.model_id = model.config.id();
        PontryaginRun run = integrate_pontryagin(*model.system, forward);
        StationarityReport st = verify_stationarity(run, *model.system);

        std::ostringstream csv;
        write_pontryagin_csv(csv, run, *model.system);
        write_output(pmp_output, csv.str());

        nlohmann::json report = {{"model", model.config.id()},
                                 {"stationarity_residual", st.stationarity_residual},
                                 {"m_law_residual", st.mlaw_residual},
                                 {"tolerance", st.tolerance},
                                 {"pass", st.pass},
                                 {"M_t0", run.M.front()},
                                 {"M_t1", run.M.back()}};
        std::cerr << report.dump(2) << "\n";
        return st.pass ? kExitOk : kExitChecksFailed;
    }

    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const qcontact::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qcontact::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qcontact::SingularLagrangian& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const qcontact::NotAnExtremal& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNotExtremal;
    } catch (const qcontact::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIntegrationError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitIntegrationError;
    }
}
