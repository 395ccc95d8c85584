#ifndef QCONTACT_GEOMETRY_HPP
#define QCONTACT_GEOMETRY_HPP

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qcontact/calculus.hpp"

namespace qcontact {

// A scalar function on the extended phase space, evaluable in double and
// hyper-dual arithmetic.  Expression-backed for loaded models; the
// Lagrangian module supplies an energy-function implementation.
class ScalarField {
public:
    virtual ~ScalarField() = default;
    virtual int n() const = 0;
    virtual int qcount() const = 0;
    virtual double eval(std::span<const double> x) const = 0;
    virtual Dual2d eval(std::span<const Dual2d> x) const = 0;

    double value(const ExtendedPoint& p) const { return eval(std::span<const double>(p.coords)); }
    Eigen::VectorXd gradientAt(const ExtendedPoint& p) const;
};

class ExprScalarField final : public ScalarField {
public:
    ExprScalarField(ExprAst ast, int n, int qcount, ParamMap params);
    int n() const override { return n_; }
    int qcount() const override { return qcount_; }
    double eval(std::span<const double> x) const override;
    Dual2d eval(std::span<const Dual2d> x) const override;
    const ExprAst& ast() const { return ast_; }

private:
    ExprAst ast_;
    int n_, qcount_;
    ParamMap params_;
};

// A family of dim() scalar components: covector fields (coefficients in the
// coordinate cobasis dq,dv,dz) and vector fields (coefficients in the
// coordinate basis) share this representation.
class FieldVector {
public:
    virtual ~FieldVector() = default;
    virtual int dim() const = 0;
    virtual void eval(std::span<const double> x, std::span<double> out) const = 0;
    virtual void eval(std::span<const Dual2d> x, std::span<Dual2d> out) const = 0;

    Eigen::VectorXd values(const ExtendedPoint& p) const;
    // J(a, c) = d(component_c)/d(coord_a)
    Eigen::MatrixXd jacobian(const ExtendedPoint& p) const;
};

// Spec-level expression forms, loadable from model configurations.
struct CovectorField {
    std::vector<ExprAst> components; // size 2n+q
};

struct VectorFieldSpec {
    std::vector<ExprAst> components; // ordered F_1..F_n, G_1..G_n, H_1..H_q
};

class ExprFieldVector final : public FieldVector {
public:
    ExprFieldVector(std::vector<ExprAst> components, int n, int qcount, ParamMap params);
    int dim() const override { return static_cast<int>(components_.size()); }
    void eval(std::span<const double> x, std::span<double> out) const override;
    void eval(std::span<const Dual2d> x, std::span<Dual2d> out) const override;
    const std::vector<ExprAst>& components() const { return components_; }

private:
    std::vector<ExprAst> components_;
    int n_, qcount_;
    ParamMap params_;
};

// A uniform q-contact structure on R^{2n+q}: q coframe 1-forms and their
// Reeb vector fields.  Immutable after construction; safe to share.
struct QContactStructure {
    int n = 0;
    int qcount = 0;
    std::vector<std::shared_ptr<const FieldVector>> coframe; // lambda_1..lambda_q
    std::vector<std::shared_ptr<const FieldVector>> reeb;    // R_1..R_q
    ParamMap params;

    int dim() const { return 2 * n + qcount; }

    static QContactStructure fromExpressions(int n, int qcount,
                                             const std::vector<CovectorField>& coframe,
                                             const std::vector<VectorFieldSpec>& reeb,
                                             ParamMap params);
};

// d(lambda) at a point as the antisymmetric matrix M with
// M(a,b) = d_a(lambda_b) - d_b(lambda_a), so that (i_X dlambda)_b = sum_a X^a M(a,b).
Eigen::MatrixXd exterior_derivative_matrix(const FieldVector& form, const ExtendedPoint& point);

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct StructureReport {
    std::vector<CheckResult> checks;
    bool pass = false;

    const CheckResult* find(const std::string& name) const;
};

// Verifies the q-contact axioms numerically at the sample points: duality
// lambda_i(R_j) = delta_ij, uniformity dlambda_i = dlambda_1, nondegeneracy
// of dlambda_1 on xi = inter ker lambda_i (rank 2n), R_i in ker dlambda_1 and
// pointwise linear independence of the coframe.
StructureReport verify_structure(const QContactStructure& s,
                                 std::span<const ExtendedPoint> sample_points,
                                 double tol = 1e-9);

// Solves the defining equations lambda_i(X_H) = -H,
// i_{X_H} dlambda_1 = dH - sum_i dH(R_i) lambda_i as one stacked
// least-squares system with an explicit consistency residual.
Eigen::VectorXd hamiltonian_vector_field(const QContactStructure& s, const ScalarField& H,
                                         const ExtendedPoint& point, double tol = 1e-9);

struct SolvedHamiltonianField {
    Eigen::VectorXd field;
    double residual; // ||A x - b|| / (1 + ||b||) of the stacked system
};

SolvedHamiltonianField solve_hamiltonian_field(const QContactStructure& s, const ScalarField& H,
                                               const ExtendedPoint& point, double tol = 1e-9);

// {f,g} = -X_f(g) - g sum_i R_i(f)
double qcontact_bracket(const QContactStructure& s, const ScalarField& f, const ScalarField& g,
                        const ExtendedPoint& point, double tol = 1e-9);

// X_H(H) + H sum_i R_i(H); zero certifies the dissipation law at the point.
double dissipation_residual(const QContactStructure& s, const ScalarField& H,
                            const ExtendedPoint& point, double tol = 1e-9);

// X_H(f) + f sum_i R_i(H)
double dissipated_quantity_residual(const QContactStructure& s, const ScalarField& H,
                                    const ScalarField& f, const ExtendedPoint& point,
                                    double tol = 1e-9);

// X_H(g)
double conserved_quantity_residual(const QContactStructure& s, const ScalarField& H,
                                   const ScalarField& g, const ExtendedPoint& point,
                                   double tol = 1e-9);

} // namespace qcontact

#endif // QCONTACT_GEOMETRY_HPP
