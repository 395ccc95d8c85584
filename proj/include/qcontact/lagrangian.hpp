#ifndef QCONTACT_LAGRANGIAN_HPP
#define QCONTACT_LAGRANGIAN_HPP

#include <memory>
#include <mutex>
#include <unordered_map>

#include "qcontact/geometry.hpp"

namespace qcontact {

namespace detail {

// Derivative blocks of L needed by every construction of the theory, in any
// scalar arithmetic T.  Matrix blocks are row-major flat vectors.
template <class T>
struct LagrangianBlocks {
    T L{};
    std::vector<T> dLdq, dLdv, dLdz; // n, n, q
    std::vector<T> W;                // n*n, (i,j) = d2L/dv_i dv_j
    std::vector<T> d2L_vq;           // n*n, (i,j) = d2L/dv_i dq_j
    std::vector<T> d2L_vz;           // n*q, (i,k) = d2L/dv_i dz_k
};

// Dense solve by Gaussian elimination with partial pivoting, generic over
// the scalar type (pivots compared on the underlying value part).
template <class T>
std::vector<T> solve_dense(std::vector<T> a, std::vector<T> rhs, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(scalar_value(a[col * n + col]));
        for (int r = col + 1; r < n; ++r) {
            double cand = std::fabs(scalar_value(a[r * n + col]));
            if (cand > best) { best = cand; pivot = r; }
        }
        if (best < 1e-300)
            throw SingularLagrangian("velocity Hessian is numerically singular", 0.0);
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
            std::swap(rhs[pivot], rhs[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            T factor = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c)
                a[r * n + c] = a[r * n + c] - factor * a[col * n + c];
            rhs[r] = rhs[r] - factor * rhs[col];
        }
    }
    std::vector<T> x(static_cast<std::size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        T acc = rhs[r];
        for (int c = r + 1; c < n; ++c) acc = acc - a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return x;
}

} // namespace detail

// Double-precision derivative blocks at a point, cached per point.
struct LagrangianDerivatives {
    double L = 0.0;
    Eigen::VectorXd dLdq, dLdv, dLdz;
    Eigen::MatrixXd W, d2L_vq, d2L_vz;
    double detW = 0.0;
};

// A regular Lagrangian L(q, v, z) on TQ x R^q together with the structure it
// induces: contact coframe, Reeb fields, energy and the closed-form dynamics.
// Instances are immutable; copies share the per-point derivative cache.
class LagrangianSystem {
public:
    LagrangianSystem(int n, int qcount, ExprAst lagrangian, ParamMap params);
    LagrangianSystem(int n, int qcount, const std::string& lagrangian, ParamMap params);

    int n() const { return n_; }
    int qcount() const { return qcount_; }
    int dim() const { return 2 * n_ + qcount_; }
    const ExprAst& lagrangianAst() const { return lagrangian_; }
    const ParamMap& params() const { return params_; }

    double lagrangianValue(const ExtendedPoint& p) const;

    // Cached derivative blocks; throws SingularLagrangian when |det W| falls
    // below the scale-aware regularity threshold.
    std::shared_ptr<const LagrangianDerivatives> derivatives(const ExtendedPoint& p) const;

    // (W, condition number); the regularity gate of the theory.
    std::pair<Eigen::MatrixXd, double> regularityCheck(const ExtendedPoint& p) const;

    // lambda_i^L = dz^i - (dL/dv^j) dq^j, as numeric covector components.
    std::vector<Eigen::VectorXd> contactCoframe(const ExtendedPoint& p) const;

    // R_k = d/dz_k - W^{ij} (d2L/dv^i dz_k) d/dv^j
    std::vector<Eigen::VectorXd> reebFields(const ExtendedPoint& p) const;

    // E_L = v^i dL/dv^i - L
    double energy(const ExtendedPoint& p) const;

    // Closed-form Hamiltonian vector field of E_L on the induced structure.
    Eigen::VectorXd vectorField(const ExtendedPoint& p) const;

    // Herglotz Euler-Lagrange residual for a candidate (state, acceleration),
    // with d/dt expanded along qdot = v, vdot = acceleration, zdot_i = L.
    Eigen::VectorXd herglotzResidual(const ExtendedPoint& p,
                                     const Eigen::VectorXd& acceleration) const;

    // Packages the coframe and Reeb fields as a geometry-module structure.
    QContactStructure inducedStructure() const;

    std::shared_ptr<const ScalarField> energyField() const;
    std::shared_ptr<const FieldVector> dynamicsField() const;

    // --- generic pipeline, usable at any Dual2 nesting level ---------------

    template <class T>
    detail::LagrangianBlocks<T> blocks(std::span<const T> coords) const {
        const int dim = this->dim();
        detail::LagrangianBlocks<T> b;
        b.dLdq.resize(n_);
        b.dLdv.resize(n_);
        b.dLdz.resize(qcount_);
        b.W.resize(static_cast<std::size_t>(n_) * n_);
        b.d2L_vq.resize(static_cast<std::size_t>(n_) * n_);
        b.d2L_vz.resize(static_cast<std::size_t>(n_) * qcount_);

        std::vector<Dual2<T>> x(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) x[c].f = coords[c];

        for (int i = 0; i < n_; ++i) {
            x[n_ + i].b = T(1.0);
            for (int c = 0; c < dim; ++c) {
                x[c].a = T(1.0);
                Dual2<T> r = evaluate_as<Dual2<T>>(lagrangian_, std::span<const Dual2<T>>(x),
                                                   n_, qcount_, params_);
                x[c].a = T{};
                if (i == 0) {
                    b.L = r.f;
                    if (c < n_) b.dLdq[c] = r.a;
                    else if (c < 2 * n_) b.dLdv[c - n_] = r.a;
                    else b.dLdz[c - 2 * n_] = r.a;
                }
                if (c < n_) b.d2L_vq[i * n_ + c] = r.ab;
                else if (c < 2 * n_) b.W[i * n_ + (c - n_)] = r.ab;
                else b.d2L_vz[i * qcount_ + (c - 2 * n_)] = r.ab;
            }
            x[n_ + i].b = T{};
        }
        return b;
    }

    template <class T>
    T evalEnergy(std::span<const T> coords) const {
        const int dim = this->dim();
        std::vector<Dual2<T>> x(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c) x[c].f = coords[c];
        T e{};
        for (int i = 0; i < n_; ++i) {
            x[n_ + i].a = T(1.0);
            Dual2<T> r = evaluate_as<Dual2<T>>(lagrangian_, std::span<const Dual2<T>>(x), n_,
                                               qcount_, params_);
            x[n_ + i].a = T{};
            e = e + coords[n_ + i] * r.a;
            if (i == n_ - 1) e = e - r.f;
        }
        return e;
    }

    // Eq-(i6) components:
    //   qdot^i = v^i
    //   vdot^i = W^{ik} ( dL/dq^k - (d2L/dq^j dv^k) v^j
    //                     + sum_l ( -L d2L/dz_l dv^k + (dL/dz_l)(dL/dv^k) ) )
    //   zdot_l = L
    template <class T>
    void evalVectorField(std::span<const T> coords, std::span<T> out) const {
        auto b = blocks<T>(coords);
        requireRegularValues(b);
        std::vector<T> rhs(static_cast<std::size_t>(n_));
        T zsum{};
        for (int l = 0; l < qcount_; ++l) zsum = zsum + b.dLdz[l];
        for (int k = 0; k < n_; ++k) {
            T acc = b.dLdq[k];
            for (int j = 0; j < n_; ++j) acc = acc - b.d2L_vq[k * n_ + j] * coords[n_ + j];
            for (int l = 0; l < qcount_; ++l) acc = acc - b.L * b.d2L_vz[k * qcount_ + l];
            acc = acc + zsum * b.dLdv[k];
            rhs[k] = acc;
        }
        std::vector<T> vdot = detail::solve_dense<T>(b.W, rhs, n_);
        for (int i = 0; i < n_; ++i) out[i] = coords[n_ + i];
        for (int i = 0; i < n_; ++i) out[n_ + i] = vdot[i];
        for (int l = 0; l < qcount_; ++l) out[2 * n_ + l] = b.L;
    }

    template <class T>
    void evalCoframe(int i, std::span<const T> coords, std::span<T> out) const {
        auto b = blocks<T>(coords);
        for (int j = 0; j < n_; ++j) out[j] = -b.dLdv[j];
        for (int j = 0; j < n_; ++j) out[n_ + j] = T{};
        for (int k = 0; k < qcount_; ++k) out[2 * n_ + k] = T(k == i ? 1.0 : 0.0);
    }

    template <class T>
    void evalReeb(int k, std::span<const T> coords, std::span<T> out) const {
        auto b = blocks<T>(coords);
        requireRegularValues(b);
        std::vector<T> rhs(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) rhs[i] = b.d2L_vz[i * qcount_ + k];
        std::vector<T> corr = detail::solve_dense<T>(b.W, rhs, n_);
        for (int j = 0; j < n_; ++j) out[j] = T{};
        for (int j = 0; j < n_; ++j) out[n_ + j] = -corr[j];
        for (int l = 0; l < qcount_; ++l) out[2 * n_ + l] = T(l == k ? 1.0 : 0.0);
    }

private:
    int n_, qcount_;
    ExprAst lagrangian_;
    ParamMap params_;

    struct Cache;
    std::shared_ptr<Cache> cache_;

    // Regularity check on the value parts of a generic block set.
    template <class T>
    void requireRegularValues(const detail::LagrangianBlocks<T>& b) const {
        Eigen::MatrixXd w(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) w(i, j) = scalar_value(b.W[i * n_ + j]);
        checkRegularity(w);
    }

    void checkRegularity(const Eigen::MatrixXd& w) const;

    std::shared_ptr<const LagrangianDerivatives> computeDerivatives(const ExtendedPoint& p) const;
};

} // namespace qcontact

#endif // QCONTACT_LAGRANGIAN_HPP
