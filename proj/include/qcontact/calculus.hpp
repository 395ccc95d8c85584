#ifndef QCONTACT_CALCULUS_HPP
#define QCONTACT_CALCULUS_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qcontact/dual.hpp"
#include "qcontact/expr.hpp"
#include "qcontact/point.hpp"

namespace qcontact {

// Coordinate block selectors for Hessian sub-blocks.
enum class CoordBlock { Q, V, Z, All };

std::vector<int> block_indices(int n, int qcount, CoordBlock block);

// --- generic derivative helpers over scalar-field functors ----------------
//
// A field functor is callable as S(std::span<const S>) for S = double and
// the Dual2 levels it is used at.  Expressions, Lagrangian-derived blocks
// and closed-form vector-field components all fit this shape.

template <class F>
double field_value(F&& field, std::span<const double> x) {
    return field(x);
}

// First partials by one hyper-dual evaluation per coordinate.
template <class F>
Eigen::VectorXd field_gradient(F&& field, std::span<const double> x) {
    const int dim = static_cast<int>(x.size());
    Eigen::VectorXd grad(dim);
    std::vector<Dual2d> coords(x.size());
    for (int i = 0; i < dim; ++i) coords[i] = Dual2d(x[i]);
    for (int i = 0; i < dim; ++i) {
        coords[i].a = 1.0;
        Dual2d r = field(std::span<const Dual2d>(coords));
        grad(i) = r.a;
        coords[i].a = 0.0;
    }
    return grad;
}

// Mixed second partials for the selected row/column coordinate sets; one
// evaluation per (i,j) pair, no truncation error.
template <class F>
Eigen::MatrixXd field_hessian(F&& field, std::span<const double> x,
                              std::span<const int> rows, std::span<const int> cols) {
    Eigen::MatrixXd h(rows.size(), cols.size());
    std::vector<Dual2d> coords(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) coords[i] = Dual2d(x[i]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        coords[rows[r]].a = 1.0;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            coords[cols[c]].b = 1.0;
            Dual2d val = field(std::span<const Dual2d>(coords));
            h(r, c) = val.ab;
            coords[cols[c]].b = 0.0;
        }
        coords[rows[r]].a = 0.0;
    }
    return h;
}

// --- spec operations on expression fields ----------------------------------

Eigen::VectorXd gradient(const ExprAst& field, const ExtendedPoint& point,
                         const ParamMap& params);

Eigen::MatrixXd hessian_block(const ExprAst& field, const ExtendedPoint& point,
                              const ParamMap& params, CoordBlock rows, CoordBlock cols);

// Central-difference oracle, O(h^2); test-side cross-check for the
// hyper-dual results, never used on the main computation path.
Eigen::VectorXd fd_gradient(const ExprAst& field, const ExtendedPoint& point,
                            const ParamMap& params, double h = 1e-5);

Eigen::MatrixXd fd_hessian(const ExprAst& field, const ExtendedPoint& point,
                           const ParamMap& params, double h = 1e-4);

} // namespace qcontact

#endif // QCONTACT_CALCULUS_HPP
