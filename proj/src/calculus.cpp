#include "qcontact/calculus.hpp"

namespace qcontact {

std::vector<int> block_indices(int n, int qcount, CoordBlock block) {
    std::vector<int> idx;
    auto push_range = [&](int from, int count) {
        for (int i = 0; i < count; ++i) idx.push_back(from + i);
    };
    switch (block) {
    case CoordBlock::Q:   push_range(0, n); break;
    case CoordBlock::V:   push_range(n, n); break;
    case CoordBlock::Z:   push_range(2 * n, qcount); break;
    case CoordBlock::All: push_range(0, 2 * n + qcount); break;
    }
    return idx;
}

namespace {

struct ExprField {
    const ExprAst& ast;
    int n, qcount;
    const ParamMap& params;

    template <class S>
    S operator()(std::span<const S> coords) const {
        return evaluate_as<S>(ast, coords, n, qcount, params);
    }
};

} // namespace

Eigen::VectorXd gradient(const ExprAst& field, const ExtendedPoint& point,
                         const ParamMap& params) {
    return field_gradient(ExprField{field, point.n, point.qcount, params},
                          std::span<const double>(point.coords));
}

Eigen::MatrixXd hessian_block(const ExprAst& field, const ExtendedPoint& point,
                              const ParamMap& params, CoordBlock rows, CoordBlock cols) {
    auto ri = block_indices(point.n, point.qcount, rows);
    auto ci = block_indices(point.n, point.qcount, cols);
    return field_hessian(ExprField{field, point.n, point.qcount, params},
                         std::span<const double>(point.coords), std::span<const int>(ri),
                         std::span<const int>(ci));
}

Eigen::VectorXd fd_gradient(const ExprAst& field, const ExtendedPoint& point,
                            const ParamMap& params, double h) {
    const int dim = point.dim();
    Eigen::VectorXd grad(dim);
    ExtendedPoint probe = point;
    for (int i = 0; i < dim; ++i) {
        const double saved = probe.coords[i];
        probe.coords[i] = saved + h;
        double fp = evaluate(field, probe, params);
        probe.coords[i] = saved - h;
        double fm = evaluate(field, probe, params);
        probe.coords[i] = saved;
        grad(i) = (fp - fm) / (2.0 * h);
    }
    return grad;
}

Eigen::MatrixXd fd_hessian(const ExprAst& field, const ExtendedPoint& point,
                           const ParamMap& params, double h) {
    const int dim = point.dim();
    Eigen::MatrixXd hess(dim, dim);
    ExtendedPoint probe = point;
    const double f0 = evaluate(field, probe, params);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            const double si = probe.coords[i];
            if (i == j) {
                probe.coords[i] = si + h;
                double fp = evaluate(field, probe, params);
                probe.coords[i] = si - h;
                double fm = evaluate(field, probe, params);
                probe.coords[i] = si;
                hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
            } else {
                const double sj = probe.coords[j];
                double fpp, fpm, fmp, fmm;
                probe.coords[i] = si + h; probe.coords[j] = sj + h;
                fpp = evaluate(field, probe, params);
                probe.coords[j] = sj - h;
                fpm = evaluate(field, probe, params);
                probe.coords[i] = si - h; probe.coords[j] = sj + h;
                fmp = evaluate(field, probe, params);
                probe.coords[j] = sj - h;
                fmm = evaluate(field, probe, params);
                probe.coords[i] = si; probe.coords[j] = sj;
                hess(i, j) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            }
        }
    }
    return hess;
}

} // namespace qcontact
