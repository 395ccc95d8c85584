#ifndef QCONTACT_SYMMETRY_HPP
#define QCONTACT_SYMMETRY_HPP

#include "qcontact/dynamics.hpp"

namespace qcontact {

// A vector field on the configuration space Q: components over q-variables
// only, Y = Y^i d/dq^i.
struct BaseVectorField {
    int n = 0;
    std::vector<ExprAst> components;

    BaseVectorField(int n_, std::vector<ExprAst> comps);
    BaseVectorField(int n_, const std::vector<std::string>& comps);
};

// Y^c = Y^i d/dq^i + v^j (dY^i/dq^j) d/dv^i, lifted to TQ x R^q with zero
// z-components.  The derivative components are built as expression trees.
VectorFieldSpec complete_lift(const BaseVectorField& y, int qcount);

// Y^v = S(Y^c) = Y^i d/dv^i
VectorFieldSpec vertical_lift(const BaseVectorField& y, int qcount);

// The scalar field X^v(L) = sum_i X^{q_i} dL/dv^i for a general field X.
std::shared_ptr<const ScalarField> vertical_action_field(
    std::shared_ptr<const LagrangianSystem> sys, std::shared_ptr<const FieldVector> x);

// -X(L) - [X_{E_L}, X]^v L + sum_i (dL/dz_i) H_i; zero certifies the
// Noether-type hypothesis at the point (X^v L is then a dissipated quantity).
double noether_condition_residual(const LagrangianSystem& sys, const FieldVector& x,
                                  const ExtendedPoint& point);

// Max over samples of the scale-relative dissipated-quantity residual
// d/dt f + f sum_i R_i(E_L) along the trajectory, with d/dt f expanded by
// the chain rule against the field values.
double dissipated_along_flow(const LagrangianSystem& sys, const ScalarField& f,
                             const Trajectory& traj);

// Components of [Y, X_{E_L}] at the point; the Jacobian of the closed-form
// dynamics components is obtained by hyper-dual differentiation.
Eigen::VectorXd dynamical_symmetry_residual(const LagrangianSystem& sys, const FieldVector& y,
                                            const ExtendedPoint& point);

// One serialized record per named residual:
// {check, points, max_residual, tolerance, pass}.
struct SymmetryCheck {
    std::string check;
    int points = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

using SymmetryReport = std::vector<SymmetryCheck>;

// Noether symmetry: L_Y E_L = 0 and L_Y lambda_i^L = 0 (Cartan formula).
SymmetryReport noether_symmetry_check(const LagrangianSystem& sys, const FieldVector& y,
                                      std::span<const ExtendedPoint> points, double tol = 1e-7);

struct CartanResult {
    // Per coframe index i, max over points.
    std::vector<double> lie_residual;     // |L_X lambda_i - df_i| components
    std::vector<double> reeb_contraction; // |d(f_i - H_i + X^v L)(R_k)| over k
};

CartanResult cartan_symmetry_residual(const LagrangianSystem& sys, const FieldVector& x,
                                      const std::vector<ExprAst>& f,
                                      std::span<const ExtendedPoint> points);

// The Hamiltonian-symmetry theorem, evaluated on a general structure:
// (a) Noether-symmetry residuals of X_f, (b) dissipated residual of f,
// (c) R_i(f); plus the two implication verdicts at the tolerance.
struct HamiltonianNoetherReport {
    double coframe_residual = 0.0;   // max_i |L_{X_f} lambda_i|
    double invariance_residual = 0.0;// |X_f(H)|
    double dissipated_residual = 0.0;
    double reeb_f_max = 0.0;         // max_i |R_i(f)|
    bool x_f_is_noether = false;
    bool f_is_dissipated = false;
    bool converse_hypothesis = false; // all R_i(f) = 0
    bool forward_implication_ok = false;
    bool converse_implication_ok = false;
    double tolerance = 0.0;
};

HamiltonianNoetherReport hamiltonian_noether_check(const QContactStructure& s,
                                                   const ScalarField& h, const ScalarField& f,
                                                   std::span<const ExtendedPoint> points,
                                                   double tol = 1e-7);

} // namespace qcontact

#endif // QCONTACT_SYMMETRY_HPP
