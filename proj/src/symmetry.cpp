#include "qcontact/symmetry.hpp"

namespace qcontact {

namespace {

// --- expression-tree derivatives for lift construction ---------------------
//
// Mechanical chain rule with light constant folding; only needed to realize
// the complete lift Y^c = Y^i d/dq^i + v^j (dY^i/dq^j) d/dv^i as expressions.

ExprAst constant(double x) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Constant;
    node->number = x;
    return node;
}

bool is_const(const ExprAst& e, double x) {
    return e->kind == ExprNode::Kind::Constant && e->number == x;
}

ExprAst binary(BinOp op, ExprAst lhs, ExprAst rhs) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Binary;
    node->op = op;
    node->has_coord = lhs->has_coord || rhs->has_coord;
    node->left = std::move(lhs);
    node->right = std::move(rhs);
    return node;
}

ExprAst call(FnKind fn, ExprAst arg) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Call;
    node->fn = fn;
    node->has_coord = arg->has_coord;
    node->left = std::move(arg);
    return node;
}

ExprAst negate(ExprAst e) {
    if (is_const(e, 0.0)) return e;
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Unary;
    node->has_coord = e->has_coord;
    node->left = std::move(e);
    return node;
}

ExprAst add(ExprAst a, ExprAst b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    return binary(BinOp::Add, std::move(a), std::move(b));
}

ExprAst sub(ExprAst a, ExprAst b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return negate(std::move(b));
    return binary(BinOp::Sub, std::move(a), std::move(b));
}

ExprAst mul(ExprAst a, ExprAst b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    return binary(BinOp::Mul, std::move(a), std::move(b));
}

ExprAst div(ExprAst a, ExprAst b) {
    if (is_const(a, 0.0)) return a;
    if (is_const(b, 1.0)) return a;
    return binary(BinOp::Div, std::move(a), std::move(b));
}

// d(ast)/d(coordinate kind,index)
ExprAst differentiate(const ExprAst& ast, CoordKind kind, int index) {
    switch (ast->kind) {
    case ExprNode::Kind::Constant:
    case ExprNode::Kind::Param:
        return constant(0.0);
    case ExprNode::Kind::Coord:
        return constant(ast->coord == kind && ast->index == index ? 1.0 : 0.0);
    case ExprNode::Kind::Unary:
        return negate(differentiate(ast->left, kind, index));
    case ExprNode::Kind::Binary: {
        ExprAst du = differentiate(ast->left, kind, index);
        switch (ast->op) {
        case BinOp::Add: return add(du, differentiate(ast->right, kind, index));
        case BinOp::Sub: return sub(du, differentiate(ast->right, kind, index));
        case BinOp::Mul:
            return add(mul(du, ast->right),
                       mul(ast->left, differentiate(ast->right, kind, index)));
        case BinOp::Div: {
            ExprAst dv = differentiate(ast->right, kind, index);
            return div(sub(mul(du, ast->right), mul(ast->left, dv)),
                       binary(BinOp::Pow, ast->right, constant(2.0)));
        }
        case BinOp::Pow:
            if (!ast->right->has_coord) {
                // d(u^c) = c u^(c-1) u'
                ExprAst cm1 = sub(ast->right, constant(1.0));
                return mul(mul(ast->right, binary(BinOp::Pow, ast->left, cm1)), du);
            } else {
                // u^w = exp(w log u):  d = u^w (w' log u + w u'/u)
                ExprAst dw = differentiate(ast->right, kind, index);
                ExprAst term = add(mul(dw, call(FnKind::Log, ast->left)),
                                   mul(ast->right, div(du, ast->left)));
                return mul(binary(BinOp::Pow, ast->left, ast->right), term);
            }
        }
        break;
    }
    case ExprNode::Kind::Call: {
        ExprAst du = differentiate(ast->left, kind, index);
        switch (ast->fn) {
        case FnKind::Sin:  return mul(call(FnKind::Cos, ast->left), du);
        case FnKind::Cos:  return negate(mul(call(FnKind::Sin, ast->left), du));
        case FnKind::Exp:  return mul(call(FnKind::Exp, ast->left), du);
        case FnKind::Log:  return div(du, ast->left);
        case FnKind::Sqrt: return div(du, mul(constant(2.0), call(FnKind::Sqrt, ast->left)));
        case FnKind::Tanh:
            return mul(sub(constant(1.0),
                           binary(BinOp::Pow, call(FnKind::Tanh, ast->left), constant(2.0))),
                       du);
        case FnKind::Abs:
            return mul(div(ast->left, call(FnKind::Abs, ast->left)), du);
        }
        break;
    }
    }
    throw Error("corrupt expression node");
}

ExprAst coord_node(CoordKind kind, int index) {
    auto node = std::make_shared<ExprNode>();
    node->kind = ExprNode::Kind::Coord;
    node->coord = kind;
    node->index = index;
    node->has_coord = true;
    return node;
}

Eigen::VectorXd field_values(const FieldVector& f, const ExtendedPoint& p) {
    return f.values(p);
}

double reeb_energy_sum(const LagrangianSystem& sys, const ExtendedPoint& p,
                       const Eigen::VectorXd& grad_e) {
    double acc = 0.0;
    for (const auto& r : sys.reebFields(p)) acc += grad_e.dot(r);
    return acc;
}

} // namespace

BaseVectorField::BaseVectorField(int n_, std::vector<ExprAst> comps)
    : n(n_), components(std::move(comps)) {
    if (static_cast<int>(components.size()) != n)
        throw DimensionMismatch("base vector field needs exactly n components");
    for (const auto& c : components) {
        CoordUsage usage = coordinate_usage(c);
        if (usage.max_v > 0 || usage.max_z > 0)
            throw DimensionMismatch("base vector field components may reference only q-variables");
        if (usage.max_q > n)
            throw DimensionMismatch("base vector field component references q beyond n");
    }
}

BaseVectorField::BaseVectorField(int n_, const std::vector<std::string>& comps)
    : BaseVectorField(n_, [&] {
          std::vector<ExprAst> parsed;
          for (const auto& s : comps) parsed.push_back(parse_expression(s));
          return parsed;
      }()) {}

VectorFieldSpec complete_lift(const BaseVectorField& y, int qcount) {
    const int n = y.n;
    VectorFieldSpec lifted;
    lifted.components.resize(static_cast<std::size_t>(2 * n + qcount));
    for (int i = 0; i < n; ++i) lifted.components[i] = y.components[i];
    for (int i = 0; i < n; ++i) {
        ExprAst acc = constant(0.0);
        for (int j = 0; j < n; ++j) {
            ExprAst dy = differentiate(y.components[i], CoordKind::Q, j + 1);
            acc = add(acc, mul(coord_node(CoordKind::V, j + 1), dy));
        }
        lifted.components[n + i] = acc;
    }
    for (int k = 0; k < qcount; ++k) lifted.components[2 * n + k] = constant(0.0);
    return lifted;
}

VectorFieldSpec vertical_lift(const BaseVectorField& y, int qcount) {
    const int n = y.n;
    VectorFieldSpec lifted;
    lifted.components.resize(static_cast<std::size_t>(2 * n + qcount));
    for (int i = 0; i < n; ++i) lifted.components[i] = constant(0.0);
    for (int i = 0; i < n; ++i) lifted.components[n + i] = y.components[i];
    for (int k = 0; k < qcount; ++k) lifted.components[2 * n + k] = constant(0.0);
    return lifted;
}

namespace {

class VerticalActionField final : public ScalarField {
public:
    VerticalActionField(std::shared_ptr<const LagrangianSystem> sys,
                        std::shared_ptr<const FieldVector> x)
        : sys_(std::move(sys)), x_(std::move(x)) {}

    int n() const override { return sys_->n(); }
    int qcount() const override { return sys_->qcount(); }

    double eval(std::span<const double> coords) const override { return evalT<double>(coords); }
    Dual2d eval(std::span<const Dual2d> coords) const override { return evalT<Dual2d>(coords); }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
    std::shared_ptr<const FieldVector> x_;

    template <class S>
    S evalT(std::span<const S> coords) const {
        std::vector<S> x_out(static_cast<std::size_t>(sys_->dim()));
        x_->eval(coords, std::span<S>(x_out));
        auto blocks = sys_->blocks<S>(coords);
        S acc{};
        for (int i = 0; i < sys_->n(); ++i) acc = acc + x_out[i] * blocks.dLdv[i];
        return acc;
    }
};

} // namespace

std::shared_ptr<const ScalarField> vertical_action_field(
    std::shared_ptr<const LagrangianSystem> sys, std::shared_ptr<const FieldVector> x) {
    return std::make_shared<VerticalActionField>(std::move(sys), std::move(x));
}

double noether_condition_residual(const LagrangianSystem& sys, const FieldVector& x,
                                  const ExtendedPoint& point) {
    const int n = sys.n();
    const int q = sys.qcount();
    auto d = sys.derivatives(point);

    Eigen::VectorXd xv = field_values(x, point);
    Eigen::MatrixXd jx = x.jacobian(point); // jx(b, c) = d_b X^c
    Eigen::VectorXd xel = sys.vectorField(point);

    // X(L)
    Eigen::VectorXd grad_l(sys.dim());
    grad_l << d->dLdq, d->dLdv, d->dLdz;
    const double x_of_l = grad_l.dot(xv);

    // [X_{E_L}, X]^{q_i} = X_{E_L}(X^{q_i}) - X^{v_i}   (since X_{E_L}^{q_i} = v_i)
    double commv = 0.0;
    for (int i = 0; i < n; ++i) {
        const double comm_qi = xel.dot(jx.col(i)) - xv(n + i);
        commv += comm_qi * d->dLdv(i);
    }

    double z_term = 0.0;
    for (int k = 0; k < q; ++k) z_term += d->dLdz(k) * xv(2 * n + k);

    return -x_of_l - commv + z_term;
}

double dissipated_along_flow(const LagrangianSystem& sys, const ScalarField& f,
                             const Trajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        ExtendedPoint p = traj.point(k);
        Eigen::VectorXd grad_f = f.gradientAt(p);
        Eigen::VectorXd xel = sys.vectorField(p);
        auto energy_field = sys.energyField();
        const double reeb_sum = reeb_energy_sum(sys, p, energy_field->gradientAt(p));
        const double fval = f.value(p);
        const double residual = grad_f.dot(xel) + fval * reeb_sum;
        const double scale = 1.0 + std::fabs(fval * reeb_sum);
        worst = std::max(worst, std::fabs(residual) / scale);
    }
    return worst;
}

Eigen::VectorXd dynamical_symmetry_residual(const LagrangianSystem& sys, const FieldVector& y,
                                            const ExtendedPoint& point) {
    Eigen::VectorXd yv = field_values(y, point);
    Eigen::MatrixXd jy = y.jacobian(point);
    auto dynamics = sys.dynamicsField();
    Eigen::VectorXd xel = dynamics->values(point);
    Eigen::MatrixXd jx = dynamics->jacobian(point);

    // [Y, X]^c = Y^b d_b X^c - X^b d_b Y^c
    Eigen::VectorXd commutator(sys.dim());
    for (int c = 0; c < sys.dim(); ++c)
        commutator(c) = yv.dot(jx.col(c)) - xel.dot(jy.col(c));
    return commutator;
}

SymmetryReport noether_symmetry_check(const LagrangianSystem& sys, const FieldVector& y,
                                      std::span<const ExtendedPoint> points, double tol) {
    QContactStructure induced = sys.inducedStructure();
    auto energy_field = sys.energyField();

    double energy_residual = 0.0;
    double coframe_residual = 0.0;
    double dynamical = 0.0;

    for (const ExtendedPoint& p : points) {
        Eigen::VectorXd yv = field_values(y, p);
        energy_residual = std::max(energy_residual,
                                   std::fabs(energy_field->gradientAt(p).dot(yv)));

        // L_Y lambda_i = d(lambda_i(Y)) + i_Y dlambda_i
        for (int i = 0; i < sys.qcount(); ++i) {
            const FieldVector& lam = *induced.coframe[i];
            auto pairing = [&](std::span<const Dual2d> x) {
                std::vector<Dual2d> lam_out(lam.dim());
                std::vector<Dual2d> y_out(lam.dim());
                lam.eval(x, std::span<Dual2d>(lam_out));
                y.eval(x, std::span<Dual2d>(y_out));
                Dual2d acc;
                for (int c = 0; c < lam.dim(); ++c) acc = acc + lam_out[c] * y_out[c];
                return acc;
            };
            Eigen::VectorXd d_pairing =
                field_gradient(pairing, std::span<const double>(p.coords));
            Eigen::MatrixXd m = exterior_derivative_matrix(lam, p);
            Eigen::VectorXd lie = d_pairing + m.transpose() * yv;
            coframe_residual = std::max(coframe_residual, lie.cwiseAbs().maxCoeff());
        }

        dynamical = std::max(dynamical,
                             dynamical_symmetry_residual(sys, y, p).cwiseAbs().maxCoeff());
    }

    const int count = static_cast<int>(points.size());
    SymmetryReport report;
    report.push_back({"noether.energy-invariance", count, energy_residual, tol,
                      energy_residual <= tol});
    report.push_back({"noether.coframe-invariance", count, coframe_residual, tol,
                      coframe_residual <= tol});
    report.push_back({"noether.dynamical-commutator", count, dynamical, tol, dynamical <= tol});
    return report;
}

CartanResult cartan_symmetry_residual(const LagrangianSystem& sys, const FieldVector& x,
                                      const std::vector<ExprAst>& f,
                                      std::span<const ExtendedPoint> points) {
    const int q = sys.qcount();
    const int n = sys.n();
    if (static_cast<int>(f.size()) != q)
        throw DimensionMismatch("cartan check needs one f_i per coframe index");
    QContactStructure induced = sys.inducedStructure();

    CartanResult result;
    result.lie_residual.assign(q, 0.0);
    result.reeb_contraction.assign(q, 0.0);

    for (const ExtendedPoint& p : points) {
        Eigen::VectorXd xv = field_values(x, p);
        auto reeb = sys.reebFields(p);

        for (int i = 0; i < q; ++i) {
            const FieldVector& lam = *induced.coframe[i];
            auto pairing = [&](std::span<const Dual2d> coords) {
                std::vector<Dual2d> lam_out(lam.dim());
                std::vector<Dual2d> x_out(lam.dim());
                lam.eval(coords, std::span<Dual2d>(lam_out));
                x.eval(coords, std::span<Dual2d>(x_out));
                Dual2d acc;
                for (int c = 0; c < lam.dim(); ++c) acc = acc + lam_out[c] * x_out[c];
                return acc;
            };
            Eigen::VectorXd d_pairing =
                field_gradient(pairing, std::span<const double>(p.coords));
            Eigen::MatrixXd m = exterior_derivative_matrix(lam, p);
            Eigen::VectorXd lie = d_pairing + m.transpose() * xv;

            ExprScalarField fee(f[i], n, q, sys.params());
            Eigen::VectorXd df = fee.gradientAt(p);
            result.lie_residual[i] =
                std::max(result.lie_residual[i], (lie - df).cwiseAbs().maxCoeff());

            // g_i = f_i - H_i + X^v L, so dg_i contracted with the Reeb fields
            // realizes the theorem's conclusion.
            auto g_i = [&](std::span<const Dual2d> coords) {
                std::vector<Dual2d> x_out(static_cast<std::size_t>(2 * n + q));
                x.eval(coords, std::span<Dual2d>(x_out));
                Dual2d acc = evaluate_as<Dual2d>(f[i], coords, n, q, sys.params());
                acc = acc - x_out[2 * n + i];
                auto blocks = sys.blocks<Dual2d>(coords);
                for (int j = 0; j < n; ++j) acc = acc + x_out[j] * blocks.dLdv[j];
                return acc;
            };
            Eigen::VectorXd dg = field_gradient(g_i, std::span<const double>(p.coords));
            for (int k = 0; k < q; ++k)
                result.reeb_contraction[i] =
                    std::max(result.reeb_contraction[i], std::fabs(dg.dot(reeb[k])));
        }
    }
    return result;
}

HamiltonianNoetherReport hamiltonian_noether_check(const QContactStructure& s,
                                                   const ScalarField& h, const ScalarField& f,
                                                   std::span<const ExtendedPoint> points,
                                                   double tol) {
    HamiltonianNoetherReport report;
    report.tolerance = tol;

    for (const ExtendedPoint& p : points) {
        Eigen::VectorXd xf = hamiltonian_vector_field(s, f, p);
        Eigen::VectorXd grad_f = f.gradientAt(p);
        Eigen::VectorXd grad_h = h.gradientAt(p);

        // L_{X_f} lambda_i = -df + i_{X_f} dlambda_i, using lambda_i(X_f) = -f.
        for (int i = 0; i < s.qcount; ++i) {
            Eigen::MatrixXd m = exterior_derivative_matrix(*s.coframe[i], p);
            Eigen::VectorXd lie = -grad_f + m.transpose() * xf;
            report.coframe_residual =
                std::max(report.coframe_residual, lie.cwiseAbs().maxCoeff());
        }
        report.invariance_residual =
            std::max(report.invariance_residual, std::fabs(grad_h.dot(xf)));

        report.dissipated_residual = std::max(
            report.dissipated_residual, std::fabs(dissipated_quantity_residual(s, h, f, p)));

        for (int i = 0; i < s.qcount; ++i)
            report.reeb_f_max =
                std::max(report.reeb_f_max, std::fabs(grad_f.dot(s.reeb[i]->values(p))));
    }

    report.x_f_is_noether =
        report.coframe_residual <= tol && report.invariance_residual <= tol;
    report.f_is_dissipated = report.dissipated_residual <= tol;
    report.converse_hypothesis = report.reeb_f_max <= tol;
    report.forward_implication_ok = !report.x_f_is_noether || report.f_is_dissipated;
    report.converse_implication_ok =
        !(report.f_is_dissipated && report.converse_hypothesis) || report.x_f_is_noether;
    return report;
}

} // namespace qcontact
