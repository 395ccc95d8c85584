#include "qcontact/geometry.hpp"

#include <Eigen/SVD>

namespace qcontact {

Eigen::VectorXd ScalarField::gradientAt(const ExtendedPoint& p) const {
    return field_gradient([this](std::span<const Dual2d> x) { return eval(x); },
                          std::span<const double>(p.coords));
}

ExprScalarField::ExprScalarField(ExprAst ast, int n, int qcount, ParamMap params)
    : ast_(std::move(ast)), n_(n), qcount_(qcount), params_(std::move(params)) {}

double ExprScalarField::eval(std::span<const double> x) const {
    return evaluate_as<double>(ast_, x, n_, qcount_, params_);
}

Dual2d ExprScalarField::eval(std::span<const Dual2d> x) const {
    return evaluate_as<Dual2d>(ast_, x, n_, qcount_, params_);
}

Eigen::VectorXd FieldVector::values(const ExtendedPoint& p) const {
    Eigen::VectorXd out(dim());
    std::vector<double> buf(dim());
    eval(std::span<const double>(p.coords), std::span<double>(buf));
    for (int i = 0; i < dim(); ++i) out(i) = buf[i];
    return out;
}

Eigen::MatrixXd FieldVector::jacobian(const ExtendedPoint& p) const {
    const int d = dim();
    Eigen::MatrixXd jac(p.dim(), d);
    std::vector<Dual2d> coords(p.coords.size());
    for (std::size_t i = 0; i < p.coords.size(); ++i) coords[i] = Dual2d(p.coords[i]);
    std::vector<Dual2d> out(d);
    for (int a = 0; a < p.dim(); ++a) {
        coords[a].a = 1.0;
        eval(std::span<const Dual2d>(coords), std::span<Dual2d>(out));
        for (int c = 0; c < d; ++c) jac(a, c) = out[c].a;
        coords[a].a = 0.0;
    }
    return jac;
}

ExprFieldVector::ExprFieldVector(std::vector<ExprAst> components, int n, int qcount,
                                 ParamMap params)
    : components_(std::move(components)), n_(n), qcount_(qcount), params_(std::move(params)) {
    if (static_cast<int>(components_.size()) != 2 * n + qcount)
        throw DimensionMismatch("field has " + std::to_string(components_.size()) +
                                " components, expected " + std::to_string(2 * n + qcount));
}

void ExprFieldVector::eval(std::span<const double> x, std::span<double> out) const {
    for (std::size_t c = 0; c < components_.size(); ++c)
        out[c] = evaluate_as<double>(components_[c], x, n_, qcount_, params_);
}

void ExprFieldVector::eval(std::span<const Dual2d> x, std::span<Dual2d> out) const {
    for (std::size_t c = 0; c < components_.size(); ++c)
        out[c] = evaluate_as<Dual2d>(components_[c], x, n_, qcount_, params_);
}

QContactStructure QContactStructure::fromExpressions(int n, int qcount,
                                                     const std::vector<CovectorField>& coframe,
                                                     const std::vector<VectorFieldSpec>& reeb,
                                                     ParamMap params) {
    if (static_cast<int>(coframe.size()) != qcount || static_cast<int>(reeb.size()) != qcount)
        throw DimensionMismatch("structure needs exactly q coframe and q Reeb fields");
    QContactStructure s;
    s.n = n;
    s.qcount = qcount;
    s.params = params;
    for (const auto& form : coframe)
        s.coframe.push_back(std::make_shared<ExprFieldVector>(form.components, n, qcount, params));
    for (const auto& field : reeb)
        s.reeb.push_back(std::make_shared<ExprFieldVector>(field.components, n, qcount, params));
    return s;
}

Eigen::MatrixXd exterior_derivative_matrix(const FieldVector& form, const ExtendedPoint& point) {
    Eigen::MatrixXd jac = form.jacobian(point);
    return jac - jac.transpose();
}

const CheckResult* StructureReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

void check_point_dims(const QContactStructure& s, const ExtendedPoint& p) {
    if (p.n != s.n || p.qcount != s.qcount)
        throw DimensionMismatch("point dimensions (n=" + std::to_string(p.n) + ", q=" +
                                std::to_string(p.qcount) + ") do not match structure (n=" +
                                std::to_string(s.n) + ", q=" + std::to_string(s.qcount) + ")");
}

// Rank with a tolerance relative to the largest singular value.
int numeric_rank(const Eigen::MatrixXd& m, double rel = 1e-10) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > rel * sv(0)) ++rank;
    return rank;
}

} // namespace

StructureReport verify_structure(const QContactStructure& s,
                                 std::span<const ExtendedPoint> sample_points, double tol) {
    if (sample_points.empty())
        throw DimensionMismatch("verify_structure needs at least one sample point");

    const int q = s.qcount;
    double worst_duality = 0.0, worst_uniformity = 0.0, worst_kernel = 0.0;
    double worst_rank_deficit = 0.0, worst_independence_deficit = 0.0;

    for (const ExtendedPoint& p : sample_points) {
        check_point_dims(s, p);

        // Coframe value matrix: row i = components of lambda_i.
        Eigen::MatrixXd lam(q, s.dim());
        for (int i = 0; i < q; ++i) lam.row(i) = s.coframe[i]->values(p).transpose();

        Eigen::MatrixXd reeb(s.dim(), q);
        for (int j = 0; j < q; ++j) reeb.col(j) = s.reeb[j]->values(p);

        // (a) duality lambda_i(R_j) = delta_ij
        Eigen::MatrixXd pairing = lam * reeb;
        worst_duality = std::max(
            worst_duality, (pairing - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff());

        // (b) uniformity dlambda_i = dlambda_1
        Eigen::MatrixXd d1 = exterior_derivative_matrix(*s.coframe[0], p);
        for (int i = 1; i < q; ++i) {
            Eigen::MatrixXd di = exterior_derivative_matrix(*s.coframe[i], p);
            worst_uniformity = std::max(worst_uniformity, (di - d1).cwiseAbs().maxCoeff());
        }

        // (d) each Reeb field lies in ker dlambda_1; scale-aware residual
        const double d1scale = std::max(1.0, d1.cwiseAbs().maxCoeff());
        for (int j = 0; j < q; ++j) {
            double r = (d1.transpose() * reeb.col(j)).cwiseAbs().maxCoeff() / d1scale;
            worst_kernel = std::max(worst_kernel, r);
        }

        // (e) pointwise linear independence of the lambda_i
        int lam_rank = numeric_rank(lam);
        worst_independence_deficit = std::max(worst_independence_deficit,
                                              static_cast<double>(q - lam_rank));

        // (c) dlambda_1 restricted to xi = inter ker lambda_i has rank 2n
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(lam, Eigen::ComputeFullV);
        Eigen::MatrixXd kernel = svd.matrixV().rightCols(s.dim() - lam_rank);
        Eigen::MatrixXd restricted = kernel.transpose() * d1 * kernel;
        int r = numeric_rank(restricted);
        worst_rank_deficit = std::max(worst_rank_deficit, static_cast<double>(2 * s.n - r));
    }

    StructureReport report;
    auto add = [&](const std::string& name, double residual) {
        report.checks.push_back({name, residual, tol, residual <= tol});
    };
    add("duality", worst_duality);
    add("uniformity", worst_uniformity);
    add("nondegeneracy", worst_rank_deficit);
    add("reeb-kernel", worst_kernel);
    add("independence", worst_independence_deficit);
    report.pass = true;
    for (const auto& c : report.checks) report.pass = report.pass && c.pass;
    return report;
}

Eigen::VectorXd hamiltonian_vector_field(const QContactStructure& s, const ScalarField& H,
                                         const ExtendedPoint& point, double tol) {
    return solve_hamiltonian_field(s, H, point, tol).field;
}

SolvedHamiltonianField solve_hamiltonian_field(const QContactStructure& s, const ScalarField& H,
                                               const ExtendedPoint& point, double tol) {
    check_point_dims(s, point);
    const int dim = s.dim();
    const int q = s.qcount;

    Eigen::VectorXd grad = H.gradientAt(point);
    const double h_val = H.value(point);

    Eigen::MatrixXd d1 = exterior_derivative_matrix(*s.coframe[0], point);

    // rhs covector: dH - sum_i dH(R_i) lambda_i
    Eigen::VectorXd rhs_top = grad;
    Eigen::MatrixXd lam(q, dim);
    for (int i = 0; i < q; ++i) {
        lam.row(i) = s.coframe[i]->values(point).transpose();
        const double dh_ri = grad.dot(s.reeb[i]->values(point));
        rhs_top -= dh_ri * lam.row(i).transpose();
    }

    // Stacked system: (i_X dlambda_1)_b = sum_a X^a M(a,b)  ->  M^T X = rhs,
    // plus the q coframe rows lambda_i(X) = -H.
    Eigen::MatrixXd A(dim + q, dim);
    Eigen::VectorXd b(dim + q);
    A.topRows(dim) = d1.transpose();
    b.head(dim) = rhs_top;
    A.bottomRows(q) = lam;
    b.tail(q).setConstant(-h_val);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    if (svd.rank() < dim)
        throw InconsistentSystem("defining system is rank-deficient; X_H is not unique", 0.0);
    Eigen::VectorXd x = svd.solve(b);

    const double residual = (A * x - b).norm() / (1.0 + b.norm());
    if (residual > tol)
        throw InconsistentSystem("defining system is inconsistent at this point", residual);
    return {std::move(x), residual};
}

double qcontact_bracket(const QContactStructure& s, const ScalarField& f, const ScalarField& g,
                        const ExtendedPoint& point, double tol) {
    Eigen::VectorXd xf = hamiltonian_vector_field(s, f, point, tol);
    Eigen::VectorXd grad_f = f.gradientAt(point);
    Eigen::VectorXd grad_g = g.gradientAt(point);

    double reeb_sum = 0.0;
    for (int i = 0; i < s.qcount; ++i) reeb_sum += grad_f.dot(s.reeb[i]->values(point));

    return -grad_g.dot(xf) - g.value(point) * reeb_sum;
}

double dissipated_quantity_residual(const QContactStructure& s, const ScalarField& H,
                                    const ScalarField& f, const ExtendedPoint& point,
                                    double tol) {
    Eigen::VectorXd xh = hamiltonian_vector_field(s, H, point, tol);
    Eigen::VectorXd grad_h = H.gradientAt(point);
    Eigen::VectorXd grad_f = f.gradientAt(point);

    double reeb_sum = 0.0;
    for (int i = 0; i < s.qcount; ++i) reeb_sum += grad_h.dot(s.reeb[i]->values(point));

    return grad_f.dot(xh) + f.value(point) * reeb_sum;
}

double dissipation_residual(const QContactStructure& s, const ScalarField& H,
                            const ExtendedPoint& point, double tol) {
    return dissipated_quantity_residual(s, H, H, point, tol);
}

double conserved_quantity_residual(const QContactStructure& s, const ScalarField& H,
                                   const ScalarField& g, const ExtendedPoint& point,
                                   double tol) {
    Eigen::VectorXd xh = hamiltonian_vector_field(s, H, point, tol);
    return g.gradientAt(point).dot(xh);
}

} // namespace qcontact
