#include "qcontact/suites.hpp"

#include <random>

namespace qcontact {

std::vector<ExtendedPoint> sample_points(int n, int qcount, int count, unsigned seed, double lo,
                                         double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<ExtendedPoint> points;
    points.reserve(count);
    for (int k = 0; k < count; ++k) {
        ExtendedPoint p = ExtendedPoint::zero(n, qcount);
        for (double& c : p.coords) c = dist(rng);
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<ExtendedPoint> sample_regular_points(const LagrangianSystem& sys, int count,
                                                 unsigned seed, double min_abs_v) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<ExtendedPoint> points;
    points.reserve(count);
    int guard = 0;
    while (static_cast<int>(points.size()) < count) {
        if (++guard > 100 * count)
            throw Error("could not sample enough regular points for this Lagrangian");
        ExtendedPoint p = ExtendedPoint::zero(sys.n(), sys.qcount());
        for (double& c : p.coords) c = dist(rng);
        bool v_ok = true;
        for (int i = 1; i <= sys.n(); ++i)
            if (std::fabs(p.v(i)) < min_abs_v) v_ok = false;
        if (!v_ok) continue;
        try {
            sys.derivatives(p);
        } catch (const SingularLagrangian&) {
            continue;
        }
        points.push_back(std::move(p));
    }
    return points;
}

double flow_law_residual(const Trajectory& traj, const QContactStructure& s,
                         const ScalarField& h) {
    const std::size_t m = traj.size();
    std::vector<double> values(m);
    std::vector<double> law(m);
    for (std::size_t k = 0; k < m; ++k) {
        ExtendedPoint p = traj.point(k);
        values[k] = h.value(p);
        Eigen::VectorXd grad = h.gradientAt(p);
        double reeb_sum = 0.0;
        for (const auto& r : s.reeb) reeb_sum += grad.dot(r->values(p));
        law[k] = values[k] * reeb_sum;
    }
    std::vector<double> dh = fd_derivative(values, traj.spacing());
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        worst = std::max(worst, std::fabs(dh[k] + law[k]) / (1.0 + std::fabs(law[k])));
    return worst;
}

namespace {

class ScaledScalarField final : public ScalarField {
public:
    ScaledScalarField(std::shared_ptr<const ScalarField> base, double factor)
        : base_(std::move(base)), factor_(factor) {}
    int n() const override { return base_->n(); }
    int qcount() const override { return base_->qcount(); }
    double eval(std::span<const double> x) const override { return factor_ * base_->eval(x); }
    Dual2d eval(std::span<const Dual2d> x) const override {
        return factor_ * base_->eval(x);
    }

private:
    std::shared_ptr<const ScalarField> base_;
    double factor_;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct SuiteRunner {
    const Model& model;
    const SuiteOptions& opts;
    std::vector<CheckResult>& checks;

    double horizon() const {
        return opts.horizon > 0.0 ? opts.horizon : model.config.horizon;
    }

    void add(const std::string& name, double residual, double tol) {
        checks.push_back({name, residual, tol, residual <= tol});
    }

    std::vector<ExtendedPoint> points(int count, unsigned salt, double min_abs_v = 0.0) const {
        if (model.isLagrangian())
            return sample_regular_points(*model.system, count, opts.seed + salt, min_abs_v);
        return sample_points(model.config.n, model.config.qcount, count, opts.seed + salt);
    }

    Trajectory flowTrajectory() const {
        // Tighter than the simulate defaults: finite differences on the
        // samples amplify integration noise by ~1/h.
        IntegratorConfig cfg;
        cfg.method = IntegratorConfig::Method::Rk45Adaptive;
        cfg.t0 = 0.0;
        cfg.t1 = horizon();
        cfg.abs_tol = 1e-12;
        cfg.rel_tol = 1e-11;
        return integrate_grid(model.flow(), model.initialState(), cfg, opts.flow_samples);
    }

    // --- structure ---------------------------------------------------------

    void structureSuite() {
        auto pts = points(opts.structure_points, 11);
        pts.push_back(model.initialState());
        StructureReport report = verify_structure(model.structure, pts, opts.tol);
        for (const auto& c : report.checks)
            checks.push_back({"structure." + c.name, c.residual, c.tolerance, c.pass});

        double solver_residual = 0.0, resub = 0.0;
        for (const auto& p : points(opts.solver_points, 12)) {
            auto solved = solve_hamiltonian_field(model.structure, *model.hamiltonian, p);
            solver_residual = std::max(solver_residual, solved.residual);
            const double h = model.hamiltonian->value(p);
            for (const auto& lam : model.structure.coframe) {
                const double pairing = lam->values(p).dot(solved.field);
                resub = std::max(resub, std::fabs(pairing + h) / (1.0 + std::fabs(h)));
            }
        }
        add("hamiltonian.solver-residual", solver_residual, opts.tol);
        add("hamiltonian.resubstitution", resub, 1e-10);
    }

    // --- dynamics ----------------------------------------------------------

    void dynamicsSuite() {
        double pointwise = 0.0;
        for (const auto& p : points(opts.solver_points, 21)) {
            const double h = model.hamiltonian->value(p);
            Eigen::VectorXd grad = model.hamiltonian->gradientAt(p);
            double reeb_sum = 0.0;
            for (const auto& r : model.structure.reeb) reeb_sum += grad.dot(r->values(p));
            const double res = dissipation_residual(model.structure, *model.hamiltonian, p);
            pointwise = std::max(pointwise, std::fabs(res) / (1.0 + std::fabs(h * reeb_sum)));
        }
        add("dynamics.dissipation-pointwise", pointwise, opts.tol);

        Trajectory traj = flowTrajectory();
        add("dynamics.dissipation-along-flow",
            flow_law_residual(traj, model.structure, *model.hamiltonian), 1e-7);

        // z_i - z_j is a constant of motion only for Lagrangian dynamics,
        // where every z_i evolves by the same rate L.
        if (model.isLagrangian() && model.config.qcount > 1) {
            double drift = 0.0;
            const int n = model.config.n;
            for (std::size_t s = 0; s < traj.size(); ++s)
                for (int i = 0; i < model.config.qcount; ++i)
                    for (int j = i + 1; j < model.config.qcount; ++j) {
                        const double d0 = traj.states[0](2 * n + i) - traj.states[0](2 * n + j);
                        const double dt = traj.states[s](2 * n + i) - traj.states[s](2 * n + j);
                        drift = std::max(drift, std::fabs(dt - d0));
                    }
            add("dynamics.z-differences", drift, 1e-8);
        }

        if (!model.isLagrangian()) {
            CoordUsage usage = coordinate_usage(parse_expression(model.config.hamiltonian));
            if (usage.max_z == 0) {
                double drift = 0.0;
                const double h0 = model.hamiltonian->value(traj.point(0));
                for (std::size_t s = 0; s < traj.size(); ++s)
                    drift = std::max(drift, std::fabs(model.hamiltonian->value(traj.point(s)) - h0));
                add("dynamics.conserved-h", drift / (1.0 + std::fabs(h0)), 1e-8);
            }
            return;
        }

        const LagrangianSystem& sys = *model.system;
        add("dynamics.herglotz-residual", max_herglotz_residual(sys, traj), 1e-7);

        double oracle = 0.0, resub = 0.0, reeb_energy = 0.0;
        for (const auto& p : points(opts.solver_points, 22)) {
            Eigen::VectorXd closed = sys.vectorField(p);
            Eigen::VectorXd solved =
                hamiltonian_vector_field(model.structure, *model.hamiltonian, p);
            oracle = std::max(oracle, (closed - solved).cwiseAbs().maxCoeff() /
                                          (1.0 + closed.cwiseAbs().maxCoeff()));

            const double e = sys.energy(p);
            const double lag = sys.lagrangianValue(p);
            auto lams = sys.contactCoframe(p);
            for (const auto& lam : lams)
                resub = std::max(resub, std::fabs(lam.dot(closed) + e) / (1.0 + std::fabs(e)));
            for (int k = 0; k < sys.qcount(); ++k)
                resub = std::max(resub, std::fabs(closed(2 * sys.n() + k) - lag) /
                                            (1.0 + std::fabs(lag)));
            for (int i = 0; i < sys.n(); ++i)
                resub = std::max(resub, std::fabs(closed(i) - p.v(i + 1)) /
                                            (1.0 + std::fabs(p.v(i + 1))));

            auto d = sys.derivatives(p);
            Eigen::VectorXd grad_e = model.hamiltonian->gradientAt(p);
            auto reebs = sys.reebFields(p);
            for (int i = 0; i < sys.qcount(); ++i) {
                const double r = grad_e.dot(reebs[i]) + d->dLdz(i);
                reeb_energy = std::max(reeb_energy,
                                       std::fabs(r) / (1.0 + std::fabs(d->dLdz(i))));
            }
        }
        add("lagrangian.oracle-equivalence", oracle, 1e-7);
        add("lagrangian.resubstitution", resub, 1e-9);
        add("lagrangian.reeb-energy", reeb_energy, 1e-10);

        // Decay-rate fit against -sum_i R_i(E_L) when that rate is constant.
        try {
            auto grad0 = model.hamiltonian->gradientAt(traj.point(0));
            double rate0 = 0.0;
            for (const auto& r : sys.reebFields(traj.point(0))) rate0 += grad0.dot(r);
            bool constant_rate = true;
            for (std::size_t s = 0; s < traj.size(); s += traj.size() / 8 + 1) {
                ExtendedPoint p = traj.point(s);
                auto grad = model.hamiltonian->gradientAt(p);
                double rate = 0.0;
                for (const auto& r : sys.reebFields(p)) rate += grad.dot(r);
                if (std::fabs(rate - rate0) > 1e-9 * (1.0 + std::fabs(rate0)))
                    constant_rate = false;
            }
            if (constant_rate) {
                DecayMetrics metrics = decay_metrics(traj, sys);
                add("dynamics.energy-decay-rate", std::fabs(metrics.fitted_rate + rate0),
                    1e-5 * std::max(1.0, std::fabs(rate0)));
            }
        } catch (const NonPositiveEnergy&) {
            // no exponential fit when E_L is not positive along the flow
        }
    }

    // --- noether -----------------------------------------------------------

    void noetherSuite() {
        // Hamiltonian-symmetry theorem with f = H applies to both kinds.
        {
            auto pts = points(opts.structure_points, 31);
            auto report = hamiltonian_noether_check(model.structure, *model.hamiltonian,
                                                    *model.hamiltonian,
                                                    std::span<const ExtendedPoint>(pts), 1e-7);
            const bool ok = report.forward_implication_ok && report.converse_implication_ok;
            add("noether.hamiltonian-theorem", ok ? 0.0 : 1.0, 0.5);
        }
        if (!model.isLagrangian()) return;

        const LagrangianSystem& sys = *model.system;
        auto shared_sys = std::make_shared<const LagrangianSystem>(sys);
        auto pts = points(20, 32);

        // Corollary identity {E_L, Y^v(L)} = -Y^c(L) for random polynomial Y
        // (sign follows the closed-form field; see docs/checks.md).
        std::mt19937_64 rng(opts.seed + 33);
        std::uniform_real_distribution<double> coeff(-1.0, 1.0);
        double corollary = 0.0, lifted_comm = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<std::string> comps;
            for (int i = 0; i < sys.n(); ++i) {
                std::string c = fmt(coeff(rng));
                for (int j = 1; j <= sys.n(); ++j) {
                    c += " + " + fmt(coeff(rng)) + "*q" + std::to_string(j);
                    c += " + " + fmt(coeff(rng)) + "*q" + std::to_string(j) + "^2";
                }
                comps.push_back(c);
            }
            BaseVectorField y(sys.n(), comps);
            auto yc_shared = std::make_shared<ExprFieldVector>(
                complete_lift(y, sys.qcount()).components, sys.n(), sys.qcount(), sys.params());
            // Y^v(L) = S(Y^c)(L)
            auto yv_l = vertical_action_field(shared_sys, yc_shared);
            const ExprFieldVector& yc = *yc_shared;

            for (const auto& p : pts) {
                const double bracket =
                    qcontact_bracket(model.structure, *model.hamiltonian, *yv_l, p);
                auto d = sys.derivatives(p);
                Eigen::VectorXd grad_l(sys.dim());
                grad_l << d->dLdq, d->dLdv, d->dLdz;
                const double yc_l = grad_l.dot(yc.values(p));
                corollary = std::max(corollary,
                                     std::fabs(bracket + yc_l) / (1.0 + std::fabs(yc_l)));

                Eigen::VectorXd comm = dynamical_symmetry_residual(sys, yc, p);
                lifted_comm =
                    std::max(lifted_comm, comm.head(sys.n()).cwiseAbs().maxCoeff());
            }
        }
        add("noether.corollary-identity", corollary, 1e-6);
        add("noether.lifted-commutator", lifted_comm, 1e-7);

        // Dynamical-symmetry chain with Y = X_{E_L}: the coframe pairings
        // lambda_i(Y) agree and lambda_1(Y) = -E_L is dissipated.
        {
            auto dynamics = sys.dynamicsField();
            double pairing_residual = 0.0, dissipated = 0.0;
            auto minus_energy = std::make_shared<ScaledScalarField>(model.hamiltonian, -1.0);
            for (const auto& p : pts) {
                Eigen::VectorXd xel = dynamics->values(p);
                auto lams = sys.contactCoframe(p);
                const double first = lams[0].dot(xel);
                for (const auto& lam : lams)
                    pairing_residual = std::max(
                        pairing_residual, std::fabs(lam.dot(xel) - first) / (1.0 + std::fabs(first)));
                dissipated = std::max(
                    dissipated, std::fabs(dissipated_quantity_residual(
                                    model.structure, *model.hamiltonian, *minus_energy, p)) /
                                    (1.0 + std::fabs(first)));
            }
            add("noether.prop-chain",
                std::max(pairing_residual, dissipated), 1e-6);
        }

        if (model.config.builtin.rfind("e1", 0) == 0 ||
            model.config.builtin.rfind("example-e1", 0) == 0)
            e1Checks();
    }

    // Example-specific constructions on the damped-oscillator family.
    void e1Checks() {
        const LagrangianSystem& sys = *model.system;
        auto shared_sys = std::make_shared<const LagrangianSystem>(sys);
        const int m = sys.qcount();

        // Solution family F = vK, G = qK - X(v)K - vX(K), H_i = 0, K = q + v,
        // checked against the balance equation q F - (X(F) + G) v - sum gamma_i H_i = 0.
        {
            ExprScalarField f_field(parse_expression("v1*(q1 + v1)"), 1, m, sys.params());
            ExprScalarField k_field(parse_expression("q1 + v1"), 1, m, sys.params());
            double worst = 0.0;
            for (const auto& p : points(opts.solver_points, 41)) {
                Eigen::VectorXd xel = sys.vectorField(p);
                const double k = k_field.value(p);
                const double f = f_field.value(p);
                const double x_of_f = f_field.gradientAt(p).dot(xel);
                const double x_of_k = k_field.gradientAt(p).dot(xel);
                const double x_of_v = xel(1);
                const double g = p.q(1) * k - x_of_v * k - p.v(1) * x_of_k;
                const double residual = p.q(1) * f - (x_of_f + g) * p.v(1);
                const double scale = 1.0 + std::fabs(p.q(1) * f) + std::fabs((x_of_f + g) * p.v(1));
                worst = std::max(worst, std::fabs(residual) / scale);
            }
            add("noether.e1-family-equ", worst, 1e-9);
        }

        // A family that satisfies the Noether-type condition itself:
        // X = (E_L / v) d/dq, whose X^v(L) = E_L is dissipated along the flow.
        {
            std::string energy = "v1^2/2 + q1^2/2";
            for (int k = 1; k <= m; ++k)
                energy += " + gamma" + std::to_string(k) + "*z" + std::to_string(k);
            std::vector<ExprAst> comps(static_cast<std::size_t>(2 + m));
            comps[0] = parse_expression("(" + energy + ")/v1");
            for (std::size_t c = 1; c < comps.size(); ++c) comps[c] = parse_expression("0");
            auto x_field = std::make_shared<ExprFieldVector>(comps, 1, m, sys.params());

            double condition = 0.0;
            for (const auto& p : points(opts.solver_points, 42, 0.3)) {
                const double raw = noether_condition_residual(sys, *x_field, p);
                const double scale = 1.0 + std::fabs(model.hamiltonian->value(p) / p.v(1));
                condition = std::max(condition, std::fabs(raw) / scale);
            }
            add("noether.e1-dissipated-family", condition, 1e-9);

            auto f = vertical_action_field(shared_sys, x_field);
            add("noether.e1-dissipated-along-flow",
                dissipated_along_flow(sys, *f, flowTrajectory()), 1e-7);
        }

        // Cartan symmetry X = sum_i z_i d/dz_i + d/dv with f_i = z_i - q.
        {
            std::vector<ExprAst> comps(static_cast<std::size_t>(2 + m));
            comps[0] = parse_expression("0");
            comps[1] = parse_expression("1");
            for (int k = 0; k < m; ++k)
                comps[2 + k] = parse_expression("z" + std::to_string(k + 1));
            ExprFieldVector x_field(comps, 1, m, sys.params());
            std::vector<ExprAst> fs;
            for (int k = 0; k < m; ++k)
                fs.push_back(parse_expression("z" + std::to_string(k + 1) + " - q1"));
            auto pts41 = points(opts.structure_points, 43);
            CartanResult cartan = cartan_symmetry_residual(
                sys, x_field, fs, std::span<const ExtendedPoint>(pts41));
            double lie = 0.0, reeb = 0.0;
            for (double r : cartan.lie_residual) lie = std::max(lie, r);
            for (double r : cartan.reeb_contraction) reeb = std::max(reeb, r);
            add("noether.e1-cartan-lie", lie, 1e-9);
            add("noether.e1-cartan-reeb", reeb, 1e-10);
        }
    }

    // --- pontryagin ---------------------------------------------------------

    void pontryaginSuite() {
        if (!model.isLagrangian())
            throw ConfigError("pontryagin suite needs a lagrangian model");
        const LagrangianSystem& sys = *model.system;

        Trajectory forward = flowTrajectory();
        PontryaginRun run = integrate_pontryagin(sys, forward);

        double trans = 0.0;
        for (int i = 0; i < sys.qcount(); ++i)
            trans = std::max(trans, std::fabs(run.mu.back()(i) - 1.0));
        add("pontryagin.transversality", trans, 0.0);

        StationarityReport st = verify_stationarity(run, sys);
        add("pontryagin.stationarity", st.stationarity_residual, st.tolerance);
        add("pontryagin.m-law", st.mlaw_residual, st.tolerance);

        // Closed-form M when dL/dz is constant along the extremal.
        auto d0 = sys.derivatives(forward.point(0));
        bool constant_dldz = true;
        for (std::size_t s = 0; s < forward.size(); s += forward.size() / 8 + 1) {
            auto d = sys.derivatives(forward.point(s));
            if ((d->dLdz - d0->dLdz).cwiseAbs().maxCoeff() >
                1e-12 * (1.0 + d0->dLdz.cwiseAbs().maxCoeff()))
                constant_dldz = false;
        }
        if (constant_dldz) {
            const double rate = d0->dLdz.sum();
            const double t1 = forward.times.back();
            double worst = 0.0;
            for (std::size_t s = 0; s < forward.size(); ++s) {
                const double expected =
                    sys.qcount() * std::exp(-rate * (forward.times[s] - t1));
                worst = std::max(worst, std::fabs(run.M[s] - expected) / expected);
            }
            add("pontryagin.m-closed-form", worst, 1e-8);
        }
    }
};

} // namespace

RunReport run_suite(const Model& model, const std::string& suite, const SuiteOptions& opts) {
    RunReport report;
    report.model_id = model.config.id();
    report.digest = config_digest(model.config);
    report.suite = suite;

    SuiteRunner runner{model, opts, report.checks};
    if (suite == "structure") {
        runner.structureSuite();
    } else if (suite == "dynamics") {
        runner.dynamicsSuite();
    } else if (suite == "noether") {
        runner.noetherSuite();
    } else if (suite == "pontryagin") {
        runner.pontryaginSuite();
    } else if (suite == "all") {
        runner.structureSuite();
        runner.dynamicsSuite();
        runner.noetherSuite();
        if (model.isLagrangian()) runner.pontryaginSuite();
    } else {
        throw ConfigError("unknown suite '" + suite +
                          "' (expected structure|dynamics|noether|pontryagin|all)");
    }

    report.pass = true;
    for (const auto& c : report.checks) report.pass = report.pass && c.pass;
    return report;
}

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"max_residual", c.residual},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    return {{"model", report.model_id},
            {"digest", report.digest},
            {"suite", report.suite},
            {"checks", checks},
            {"pass", report.pass}};
}

nlohmann::json symmetry_report_to_json(const SymmetryReport& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : report)
        arr.push_back({{"check", c.check},
                       {"points", c.points},
                       {"max_residual", c.max_residual},
                       {"tolerance", c.tolerance},
                       {"pass", c.pass}});
    return arr;
}

} // namespace qcontact
