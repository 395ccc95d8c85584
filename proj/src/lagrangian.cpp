#include "qcontact/lagrangian.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cstdint>
#include <cstring>
#include <limits>

namespace qcontact {

struct LagrangianSystem::Cache {
    std::mutex mutex;
    std::unordered_map<std::size_t, std::vector<std::pair<std::vector<double>,
        std::shared_ptr<const LagrangianDerivatives>>>> entries;
    std::size_t size = 0;

    static std::size_t hashCoords(const std::vector<double>& c) {
        std::size_t h = 1469598103934665603ull;
        for (double x : c) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof(bits));
            h ^= bits;
            h *= 1099511628211ull;
        }
        return h;
    }
};

LagrangianSystem::LagrangianSystem(int n, int qcount, ExprAst lagrangian, ParamMap params)
    : n_(n), qcount_(qcount), lagrangian_(std::move(lagrangian)), params_(std::move(params)),
      cache_(std::make_shared<Cache>()) {
    if (n_ < 1 || qcount_ < 1)
        throw DimensionMismatch("Lagrangian system needs n >= 1 and q >= 1");
    CoordUsage usage = coordinate_usage(lagrangian_);
    if (usage.max_q > n_ || usage.max_v > n_ || usage.max_z > qcount_)
        throw DimensionMismatch("Lagrangian references coordinates beyond (n=" +
                                std::to_string(n_) + ", q=" + std::to_string(qcount_) + ")");
    for (const auto& name : parameter_names(lagrangian_))
        if (!params_.count(name)) throw UnboundParameter(name);
}

LagrangianSystem::LagrangianSystem(int n, int qcount, const std::string& lagrangian,
                                   ParamMap params)
    : LagrangianSystem(n, qcount, parse_expression(lagrangian), std::move(params)) {}

double LagrangianSystem::lagrangianValue(const ExtendedPoint& p) const {
    return evaluate(lagrangian_, p, params_);
}

void LagrangianSystem::checkRegularity(const Eigen::MatrixXd& w) const {
    const double det = w.determinant();
    const double norm = w.cwiseAbs().maxCoeff();
    const double threshold = 1e-10 * std::max(1.0, std::pow(norm, n_));
    if (std::fabs(det) < threshold)
        throw SingularLagrangian("Lagrangian is singular at the evaluated point", det);
}

std::shared_ptr<const LagrangianDerivatives>
LagrangianSystem::computeDerivatives(const ExtendedPoint& p) const {
    auto b = blocks<double>(std::span<const double>(p.coords));
    auto d = std::make_shared<LagrangianDerivatives>();
    d->L = b.L;
    d->dLdq = Eigen::Map<const Eigen::VectorXd>(b.dLdq.data(), n_);
    d->dLdv = Eigen::Map<const Eigen::VectorXd>(b.dLdv.data(), n_);
    d->dLdz = Eigen::Map<const Eigen::VectorXd>(b.dLdz.data(), qcount_);
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    d->W = Eigen::Map<const RowMajor>(b.W.data(), n_, n_);
    d->d2L_vq = Eigen::Map<const RowMajor>(b.d2L_vq.data(), n_, n_);
    d->d2L_vz = Eigen::Map<const RowMajor>(b.d2L_vz.data(), n_, qcount_);
    d->detW = d->W.determinant();
    checkRegularity(d->W);
    return d;
}

std::shared_ptr<const LagrangianDerivatives>
LagrangianSystem::derivatives(const ExtendedPoint& p) const {
    if (p.n != n_ || p.qcount != qcount_)
        throw DimensionMismatch("point does not match Lagrangian dimensions");
    const std::size_t h = Cache::hashCoords(p.coords);
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        auto it = cache_->entries.find(h);
        if (it != cache_->entries.end())
            for (const auto& [coords, blocks] : it->second)
                if (coords == p.coords) return blocks;
    }
    auto d = computeDerivatives(p);
    {
        std::lock_guard<std::mutex> lock(cache_->mutex);
        if (cache_->size > 4096) {
            cache_->entries.clear();
            cache_->size = 0;
        }
        cache_->entries[h].emplace_back(p.coords, d);
        ++cache_->size;
    }
    return d;
}

std::pair<Eigen::MatrixXd, double> LagrangianSystem::regularityCheck(const ExtendedPoint& p) const {
    auto d = derivatives(p);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d->W);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                : std::numeric_limits<double>::infinity();
    return {d->W, cond};
}

std::vector<Eigen::VectorXd> LagrangianSystem::contactCoframe(const ExtendedPoint& p) const {
    auto d = derivatives(p);
    std::vector<Eigen::VectorXd> forms;
    for (int i = 0; i < qcount_; ++i) {
        Eigen::VectorXd lam = Eigen::VectorXd::Zero(dim());
        lam.head(n_) = -d->dLdv;
        lam(2 * n_ + i) = 1.0;
        forms.push_back(std::move(lam));
    }
    return forms;
}

std::vector<Eigen::VectorXd> LagrangianSystem::reebFields(const ExtendedPoint& p) const {
    auto d = derivatives(p);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(d->W);
    std::vector<Eigen::VectorXd> fields;
    for (int k = 0; k < qcount_; ++k) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(dim());
        r.segment(n_, n_) = -lu.solve(d->d2L_vz.col(k));
        r(2 * n_ + k) = 1.0;
        fields.push_back(std::move(r));
    }
    return fields;
}

double LagrangianSystem::energy(const ExtendedPoint& p) const {
    auto d = derivatives(p);
    double e = -d->L;
    for (int i = 0; i < n_; ++i) e += p.coords[n_ + i] * d->dLdv(i);
    return e;
}

Eigen::VectorXd LagrangianSystem::vectorField(const ExtendedPoint& p) const {
    auto d = derivatives(p);
    const double zsum = d->dLdz.sum();
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p.coords.data() + n_, n_);
    Eigen::VectorXd rhs = d->dLdq - d->d2L_vq * v - d->L * d->d2L_vz.rowwise().sum() +
                          zsum * d->dLdv;
    Eigen::VectorXd out(dim());
    out.head(n_) = v;
    out.segment(n_, n_) = d->W.partialPivLu().solve(rhs);
    out.tail(qcount_).setConstant(d->L);
    return out;
}

Eigen::VectorXd LagrangianSystem::herglotzResidual(const ExtendedPoint& p,
                                                   const Eigen::VectorXd& acceleration) const {
    if (acceleration.size() != n_)
        throw DimensionMismatch("acceleration must have n components");
    auto d = derivatives(p);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p.coords.data() + n_, n_);
    // d/dt (dL/dv^k) along qdot = v, vdot = a, zdot_i = L
    Eigen::VectorXd momentum_rate =
        d->d2L_vq * v + d->W * acceleration + d->d2L_vz.rowwise().sum() * d->L;
    return momentum_rate - d->dLdq - d->dLdz.sum() * d->dLdv;
}

namespace {

class LagrangianEnergyField final : public ScalarField {
public:
    explicit LagrangianEnergyField(std::shared_ptr<const LagrangianSystem> sys)
        : sys_(std::move(sys)) {}
    int n() const override { return sys_->n(); }
    int qcount() const override { return sys_->qcount(); }
    double eval(std::span<const double> x) const override { return sys_->evalEnergy<double>(x); }
    Dual2d eval(std::span<const Dual2d> x) const override { return sys_->evalEnergy<Dual2d>(x); }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
};

class LagrangianCoframeField final : public FieldVector {
public:
    LagrangianCoframeField(std::shared_ptr<const LagrangianSystem> sys, int index)
        : sys_(std::move(sys)), index_(index) {}
    int dim() const override { return sys_->dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override {
        sys_->evalCoframe<double>(index_, x, out);
    }
    void eval(std::span<const Dual2d> x, std::span<Dual2d> out) const override {
        sys_->evalCoframe<Dual2d>(index_, x, out);
    }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
    int index_;
};

class LagrangianReebField final : public FieldVector {
public:
    LagrangianReebField(std::shared_ptr<const LagrangianSystem> sys, int index)
        : sys_(std::move(sys)), index_(index) {}
    int dim() const override { return sys_->dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override {
        sys_->evalReeb<double>(index_, x, out);
    }
    void eval(std::span<const Dual2d> x, std::span<Dual2d> out) const override {
        sys_->evalReeb<Dual2d>(index_, x, out);
    }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
    int index_;
};

class LagrangianDynamicsField final : public FieldVector {
public:
    explicit LagrangianDynamicsField(std::shared_ptr<const LagrangianSystem> sys)
        : sys_(std::move(sys)) {}
    int dim() const override { return sys_->dim(); }
    void eval(std::span<const double> x, std::span<double> out) const override {
        sys_->evalVectorField<double>(x, out);
    }
    void eval(std::span<const Dual2d> x, std::span<Dual2d> out) const override {
        sys_->evalVectorField<Dual2d>(x, out);
    }

private:
    std::shared_ptr<const LagrangianSystem> sys_;
};

} // namespace

QContactStructure LagrangianSystem::inducedStructure() const {
    auto shared = std::make_shared<const LagrangianSystem>(*this);
    QContactStructure s;
    s.n = n_;
    s.qcount = qcount_;
    s.params = params_;
    for (int i = 0; i < qcount_; ++i) {
        s.coframe.push_back(std::make_shared<LagrangianCoframeField>(shared, i));
        s.reeb.push_back(std::make_shared<LagrangianReebField>(shared, i));
    }
    return s;
}

std::shared_ptr<const ScalarField> LagrangianSystem::energyField() const {
    return std::make_shared<LagrangianEnergyField>(std::make_shared<const LagrangianSystem>(*this));
}

std::shared_ptr<const FieldVector> LagrangianSystem::dynamicsField() const {
    return std::make_shared<LagrangianDynamicsField>(
        std::make_shared<const LagrangianSystem>(*this));
}

} // namespace qcontact
