#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qcontact/models.hpp"
#include "qcontact/suites.hpp"

using namespace qcontact;

namespace {

ExtendedPoint make_point(int n, int qcount, std::initializer_list<double> coords) {
    return ExtendedPoint(n, qcount, std::vector<double>(coords));
}

std::shared_ptr<const LagrangianSystem> e1_system(double g1 = 0.1, double g2 = 0.2) {
    return std::make_shared<const LagrangianSystem>(
        1, 2, "v1^2/2 - q1^2/2 - gamma1*z1 - gamma2*z2",
        ParamMap{{"gamma1", g1}, {"gamma2", g2}});
}

ExprFieldVector expr_field(std::vector<std::string> comps, int n, int qcount,
                           ParamMap params = {}) {
    std::vector<ExprAst> parsed;
    for (const auto& s : comps) parsed.push_back(parse_expression(s));
    return ExprFieldVector(std::move(parsed), n, qcount, std::move(params));
}

double eval_at(const std::string& src, const ExtendedPoint& p, const ParamMap& params = {}) {
    return evaluate(parse_expression(src), p, params);
}

} // namespace

TEST_CASE("complete and vertical lifts") {
    // constant field
    BaseVectorField unit(1, std::vector<std::string>{"1"});
    VectorFieldSpec uc = complete_lift(unit, 2);
    VectorFieldSpec uv = vertical_lift(unit, 2);
    ExtendedPoint p = make_point(1, 2, {0.4, -1.1, 0.2, 0.9});
    ExprFieldVector ucf(uc.components, 1, 2, {});
    ExprFieldVector uvf(uv.components, 1, 2, {});
    Eigen::VectorXd ucv = ucf.values(p), uvv = uvf.values(p);
    CHECK(ucv(0) == 1.0);
    CHECK(ucv(1) == 0.0);
    CHECK(uvv(0) == 0.0);
    CHECK(uvv(1) == 1.0);

    // Y = q d/dq: Y^c = q d/dq + v d/dv
    BaseVectorField linear(1, std::vector<std::string>{"q1"});
    ExprFieldVector lcf(complete_lift(linear, 2).components, 1, 2, {});
    Eigen::VectorXd lcv = lcf.values(p);
    CHECK(lcv(0) == doctest::Approx(0.4));
    CHECK(lcv(1) == doctest::Approx(-1.1));
    CHECK(lcv(2) == 0.0);

    // Y = q^2 d/dq: Y^c = q^2 d/dq + 2 q v d/dv
    BaseVectorField quad(1, std::vector<std::string>{"q1^2"});
    ExprFieldVector qcf(complete_lift(quad, 2).components, 1, 2, {});
    Eigen::VectorXd qcv = qcf.values(p);
    CHECK(qcv(0) == doctest::Approx(0.16));
    CHECK(qcv(1) == doctest::Approx(2 * 0.4 * -1.1));

    // components may only reference q-variables
    CHECK_THROWS_AS(BaseVectorField(1, std::vector<std::string>{"v1"}), DimensionMismatch);
    CHECK_THROWS_AS(BaseVectorField(1, std::vector<std::string>{"q2"}), DimensionMismatch);
}

TEST_CASE("complete lift of a two-dof field") {
    BaseVectorField y(2, std::vector<std::string>{"q2^2", "q1*q2"});
    ExprFieldVector yc(complete_lift(y, 1).components, 2, 1, {});
    ExtendedPoint p = make_point(2, 1, {1.5, -0.5, 2.0, 3.0, 0.0});
    Eigen::VectorXd v = yc.values(p);
    CHECK(v(0) == doctest::Approx(0.25));           // q2^2
    CHECK(v(1) == doctest::Approx(-0.75));          // q1 q2
    CHECK(v(2) == doctest::Approx(3.0 * 2 * -0.5)); // v2 dY1/dq2 = v2 * 2 q2
    CHECK(v(3) == doctest::Approx(2.0 * -0.5 + 3.0 * 1.5)); // v1 q2 + v2 q1
    CHECK(v(4) == 0.0);
}

TEST_CASE("noether condition residual equals the bracket {E_L, X^v L}") {
    // cross-validation against the independent geometry route, for general X
    auto sys = e1_system();
    QContactStructure s = sys->inducedStructure();
    auto energy = sys->energyField();

    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> coeff(-1.5, 1.5);
    for (int trial = 0; trial < 8; ++trial) {
        auto c = [&] { return std::to_string(coeff(rng)); };
        auto x_field = std::make_shared<ExprFieldVector>(
            expr_field({c() + "*v1 + " + c() + "*q1^2", c() + "*q1*v1 + " + c(),
                        c() + "*z1", c() + "*q1 + " + c() + "*z2"},
                       1, 2, sys->params()));
        auto xv_l = vertical_action_field(sys, x_field);
        for (const auto& p : sample_regular_points(*sys, 6, 900 + trial)) {
            const double condition = noether_condition_residual(*sys, *x_field, p);
            const double bracket = qcontact_bracket(s, *energy, *xv_l, p);
            CHECK(std::fabs(condition - bracket) <= 1e-8 * (1.0 + std::fabs(bracket)));
        }
    }
}

TEST_CASE("noether condition on specific fields of the damped oscillator") {
    auto sys = e1_system();
    ExtendedPoint p = make_point(1, 2, {1, 1, 0, 0});

    // X = X_{E_L}: residual 2qv + v^2 sum(gamma), nonzero in general
    auto xel = sys->dynamicsField();
    CHECK(noether_condition_residual(*sys, *xel, p) == doctest::Approx(2.3));

    // vertical lifts have X^v = S(Y^v) = 0, so the condition holds trivially
    BaseVectorField w(1, std::vector<std::string>{"q1^2"});
    ExprFieldVector yv(vertical_lift(w, 2).components, 1, 2, sys->params());
    CHECK(std::fabs(noether_condition_residual(*sys, yv, p)) <= 1e-12);

    // complete lifts: residual -Y^c(L) = W q - v^2 W' (the no-vertical-
    // symmetry computation of the worked example)
    ExprFieldVector yc(complete_lift(w, 2).components, 1, 2, sys->params());
    for (const auto& pt : sample_regular_points(*sys, 20, 77)) {
        const double expected = eval_at("q1^2*q1 - v1^2*2*q1", pt);
        CHECK(noether_condition_residual(*sys, yc, pt) ==
              doctest::Approx(expected).epsilon(1e-9));
    }

    // the family X = (E_L/v) d/dq satisfies the condition: X^v L = E_L
    auto family = std::make_shared<ExprFieldVector>(
        expr_field({"(v1^2/2 + q1^2/2 + gamma1*z1 + gamma2*z2)/v1", "0", "0", "0"}, 1, 2,
                   sys->params()));
    for (const auto& pt : sample_regular_points(*sys, 20, 78, 0.3))
        CHECK(std::fabs(noether_condition_residual(*sys, *family, pt)) <= 1e-9);
}

TEST_CASE("printed solution family satisfies the balance equation, not the condition") {
    // The worked example's family F = vK, G = qK - X(v)K - vX(K), H_i = 0
    // makes q F - (X(F) + G) v - sum gamma_i H_i vanish identically; the
    // Noether-type condition itself equals {E_L, v^2 K} and stays nonzero.
    auto sys = e1_system();
    ExprScalarField k_field(parse_expression("q1 + v1"), 1, 2, sys->params());
    ExprScalarField f_field(parse_expression("v1*(q1 + v1)"), 1, 2, sys->params());
    QContactStructure s = sys->inducedStructure();
    auto energy = sys->energyField();
    auto xvl = std::make_shared<ExprScalarField>(parse_expression("v1^2*(q1 + v1)"), 1, 2,
                                                 sys->params());

    for (const auto& p : sample_regular_points(*sys, 25, 79)) {
        Eigen::VectorXd xel = sys->vectorField(p);
        const double k = k_field.value(p);
        const double f = f_field.value(p);
        const double x_of_f = f_field.gradientAt(p).dot(xel);
        const double x_of_k = k_field.gradientAt(p).dot(xel);
        const double g = p.q(1) * k - xel(1) * k - p.v(1) * x_of_k;
        const double balance = p.q(1) * f - (x_of_f + g) * p.v(1);
        CHECK(std::fabs(balance) <=
              1e-9 * (1.0 + std::fabs(p.q(1) * f) + std::fabs((x_of_f + g) * p.v(1))));

        // and the bracket form of the condition evaluates to {E_L, v^2 K}
        const double bracket = qcontact_bracket(s, *energy, *xvl, p);
        const double by_hand =
            2 * p.q(1) * p.v(1) * k + p.v(1) * p.v(1) * (0.3 * k - x_of_k);
        CHECK(bracket == doctest::Approx(by_hand).epsilon(1e-9));
    }
}

TEST_CASE("dissipated quantities along the flow") {
    SuiteOptions opts;
    Model e1 = build_model(builtin_model("e1"));
    IntegratorConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 10.0;
    cfg.abs_tol = 1e-12;
    cfg.rel_tol = 1e-11;
    Trajectory traj = integrate_grid(e1.flow(), e1.initialState(), cfg, 401);

    // the energy itself
    CHECK(dissipated_along_flow(*e1.system, *e1.hamiltonian, traj) <= 1e-8);

    // the two-contact example: f = -2 E_L = L_{X}E_L for the corrected field
    Model free2 = build_model(builtin_model("free2contact"));
    cfg.t1 = 3.0;
    Trajectory t2 = integrate_grid(free2.flow(), free2.initialState(), cfg, 401);
    auto minus2e = std::make_shared<ExprScalarField>(
        parse_expression("-2*(v1^2/2 + z1 + z2)"), 1, 2, ParamMap{});
    CHECK(dissipated_along_flow(*free2.system, *minus2e, t2) <= 1e-8);
}

TEST_CASE("dynamical symmetries") {
    auto sys = e1_system();
    ExtendedPoint p = make_point(1, 2, {1.2, -0.7, 0.3, 0.1});

    // the field commutes with itself
    auto xel = sys->dynamicsField();
    CHECK(dynamical_symmetry_residual(*sys, *xel, p).cwiseAbs().maxCoeff() <= 1e-9);

    // equal dissipation coefficients make d/dz1 - d/dz2 a symmetry
    auto equal = e1_system(0.1, 0.1);
    ExprFieldVector dz(expr_field({"0", "0", "1", "-1"}, 1, 2));
    CHECK(dynamical_symmetry_residual(*equal, dz, p).cwiseAbs().maxCoeff() <= 1e-9);

    // distinct coefficients break it
    CHECK(dynamical_symmetry_residual(*sys, dz, p).cwiseAbs().maxCoeff() > 1e-3);

    // q d/dq is not a symmetry at generic points
    ExprFieldVector qdq(expr_field({"q1", "0", "0", "0"}, 1, 2));
    CHECK(dynamical_symmetry_residual(*sys, qdq, p).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("noether symmetry classification") {
    auto equal = e1_system(0.1, 0.1);
    auto pts = sample_regular_points(*equal, 15, 81);

    ExprFieldVector dz(expr_field({"0", "0", "1", "-1"}, 1, 2));
    SymmetryReport good = noether_symmetry_check(*equal, dz, pts);
    for (const auto& check : good) {
        CHECK_MESSAGE(check.pass, check.check);
        CHECK(check.points == 15);
    }

    // d/dz1 alone moves the energy by gamma_1
    ExprFieldVector dz1(expr_field({"0", "0", "1", "0"}, 1, 2));
    SymmetryReport bad = noether_symmetry_check(*equal, dz1, pts);
    bool energy_failed = false;
    for (const auto& check : bad)
        if (check.check == "noether.energy-invariance") {
            CHECK(check.max_residual == doctest::Approx(0.1));
            energy_failed = !check.pass;
        }
    CHECK(energy_failed);

    // serialization shape
    auto json = symmetry_report_to_json(good);
    REQUIRE(json.is_array());
    CHECK(json[0].contains("check"));
    CHECK(json[0].contains("points"));
    CHECK(json[0].contains("max_residual"));
    CHECK(json[0].contains("tolerance"));
    CHECK(json[0].contains("pass"));
}

TEST_CASE("cartan symmetries of the damped oscillator") {
    auto sys = e1_system();
    auto pts = sample_regular_points(*sys, 15, 82);

    // X = z1 dz1 + z2 dz2 + d/dv with f_i = z_i - q
    ExprFieldVector x(expr_field({"0", "1", "z1", "z2"}, 1, 2, sys->params()));
    std::vector<ExprAst> fs{parse_expression("z1 - q1"), parse_expression("z2 - q1")};
    CartanResult good = cartan_symmetry_residual(*sys, x, fs, pts);
    for (double r : good.lie_residual) CHECK(r <= 1e-9);
    for (double r : good.reeb_contraction) CHECK(r <= 1e-10);

    // a Reeb field with constant f_i is a Cartan symmetry
    ExprFieldVector r1(expr_field({"0", "0", "1", "0"}, 1, 2, sys->params()));
    std::vector<ExprAst> consts{parse_expression("1"), parse_expression("2")};
    CartanResult reeb = cartan_symmetry_residual(*sys, r1, consts, pts);
    for (double r : reeb.lie_residual) CHECK(r <= 1e-9);

    // X = v d/dv fails: L_X lambda_i = -v dq
    ExprFieldVector vdv(expr_field({"0", "v1", "0", "0"}, 1, 2, sys->params()));
    std::vector<ExprAst> zeros{parse_expression("0"), parse_expression("0")};
    for (const auto& p : pts) {
        std::vector<ExtendedPoint> single{p};
        CartanResult fail = cartan_symmetry_residual(*sys, vdv, zeros,
                                                     std::span<const ExtendedPoint>(single));
        CHECK(fail.lie_residual[0] == doctest::Approx(std::fabs(p.v(1))));
    }
}

TEST_CASE("hamiltonian noether theorem on the R4 example") {
    Model r4 = build_model(builtin_model("two-contact-r4"));
    auto pts = sample_points(1, 2, 15, 83);

    // f = H: z-independent, conserved, and X_H preserves the coframe
    auto report = hamiltonian_noether_check(r4.structure, *r4.hamiltonian, *r4.hamiltonian,
                                            pts);
    CHECK(report.x_f_is_noether);
    CHECK(report.f_is_dissipated);
    CHECK(report.converse_hypothesis);
    CHECK(report.forward_implication_ok);
    CHECK(report.converse_implication_ok);

    // f touching z fails the converse hypothesis without forcing a verdict
    ExprScalarField fz(parse_expression("z1 + q1*v1"), 1, 2, {});
    auto gated = hamiltonian_noether_check(r4.structure, *r4.hamiltonian, fz, pts);
    CHECK_FALSE(gated.converse_hypothesis);
    CHECK(gated.reeb_f_max == doctest::Approx(1.0));
    CHECK(gated.converse_implication_ok); // hypothesis unmet, implication vacuous
}

TEST_CASE("hamiltonian noether theorem on the damped oscillator energy") {
    Model e1 = build_model(builtin_model("e1"));
    auto pts = sample_regular_points(*e1.system, 15, 84);
    auto report =
        hamiltonian_noether_check(e1.structure, *e1.hamiltonian, *e1.hamiltonian, pts);
    CHECK(report.f_is_dissipated);           // dissipation law
    CHECK_FALSE(report.converse_hypothesis); // R_i(E_L) = gamma_i != 0
    CHECK_FALSE(report.x_f_is_noether);      // L_X lambda_i = sum gamma_j lambda_j != 0
    CHECK(report.forward_implication_ok);
    CHECK(report.converse_implication_ok);

    // Remark-level value: the coframe residual is max(v sum(gamma), gamma_i)
    double expected = 0.0;
    for (const auto& p : pts)
        expected = std::max(expected, std::max(std::fabs(p.v(1)) * 0.3, 0.2));
    CHECK(report.coframe_residual == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("corollary identity and vanishing vertical commutator for lifts") {
    auto sys = e1_system();
    QContactStructure s = sys->inducedStructure();
    auto energy = sys->energyField();

    std::mt19937_64 rng(85);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::string c0 = std::to_string(coeff(rng));
        std::string c1 = std::to_string(coeff(rng));
        std::string c2 = std::to_string(coeff(rng));
        BaseVectorField y(1, std::vector<std::string>{c0 + " + " + c1 + "*q1 + " + c2 +
                                                      "*q1^2"});
        auto yc = std::make_shared<ExprFieldVector>(complete_lift(y, 2).components, 1, 2,
                                                    sys->params());
        auto yv_l = vertical_action_field(sys, yc);

        for (const auto& p : sample_regular_points(*sys, 10, 86 + trial)) {
            const double bracket = qcontact_bracket(s, *energy, *yv_l, p);
            auto d = sys->derivatives(p);
            Eigen::VectorXd grad_l(4);
            grad_l << d->dLdq, d->dLdv, d->dLdz;
            const double yc_l = grad_l.dot(yc->values(p));
            // with the closed-form field the corollary reads {E_L, Y^v L} = -Y^c L
            CHECK(std::fabs(bracket + yc_l) <= 1e-6 * (1.0 + std::fabs(yc_l)));

            Eigen::VectorXd comm = dynamical_symmetry_residual(*sys, *yc, p);
            CHECK(comm.head(1).cwiseAbs().maxCoeff() <= 1e-7);
        }
    }
}

TEST_CASE("dynamical symmetry chain yields dissipated pairings") {
    // Y = X_{E_L} pairs equally with every coframe form and lambda_1(Y) = -E_L
    // is dissipated.
    auto sys = e1_system();
    QContactStructure s = sys->inducedStructure();
    auto energy = sys->energyField();
    auto xel = sys->dynamicsField();

    for (const auto& p : sample_regular_points(*sys, 20, 87)) {
        Eigen::VectorXd x = xel->values(p);
        auto lams = sys->contactCoframe(p);
        const double first = lams[0].dot(x);
        for (const auto& lam : lams)
            CHECK(std::fabs(lam.dot(x) - first) <= 1e-9 * (1.0 + std::fabs(first)));
        CHECK(first == doctest::Approx(-sys->energy(p)));
    }

    Trajectory traj;
    {
        Model model = build_model(builtin_model("e1"));
        IntegratorConfig cfg;
        cfg.t0 = 0.0;
        cfg.t1 = 10.0;
        cfg.abs_tol = 1e-12;
        cfg.rel_tol = 1e-11;
        traj = integrate_grid(model.flow(), model.initialState(), cfg, 401);
    }
    auto minus_energy = std::make_shared<ExprScalarField>(
        parse_expression("-(v1^2/2 + q1^2/2 + gamma1*z1 + gamma2*z2)"), 1, 2, sys->params());
    CHECK(dissipated_along_flow(*sys, *minus_energy, traj) <= 1e-6);
}

TEST_CASE("reeb fields are annihilated by exact one-forms of the theorem") {
    // Remark-level narrow criterion: i_Y dlambda_1 = 0 holds for the Reeb
    // fields themselves, and their pairing lambda_i(R_j) is constant.
    auto sys = e1_system();
    QContactStructure s = sys->inducedStructure();
    for (const auto& p : sample_regular_points(*sys, 10, 88)) {
        Eigen::MatrixXd d1 = exterior_derivative_matrix(*s.coframe[0], p);
        for (const auto& reeb : s.reeb) {
            Eigen::VectorXd rv = reeb->values(p);
            CHECK((d1.transpose() * rv).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}
