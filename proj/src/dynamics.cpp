#include "qcontact/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace qcontact {

void IntegratorConfig::validate() const {
    if (!(t1 > t0)) throw ConfigError("integration span requires t1 > t0");
    if (method == Method::Rk4Fixed && !(step > 0.0))
        throw ConfigError("rk4-fixed requires a positive step");
    if (method == Method::Rk45Adaptive && (!(abs_tol > 0.0) || !(rel_tol > 0.0)))
        throw ConfigError("rk45-adaptive requires positive tolerances");
    if (stride < 1) throw ConfigError("sample stride must be >= 1");
}

ExtendedPoint Trajectory::point(std::size_t k) const {
    const Eigen::VectorXd& s = states[k];
    return ExtendedPoint(n, qcount, std::vector<double>(s.data(), s.data() + s.size()));
}

bool Trajectory::isUniform(double rel_tol) const {
    if (times.size() < 3) return true;
    const double h = times[1] - times[0];
    for (std::size_t k = 2; k < times.size(); ++k)
        if (std::fabs((times[k] - times[k - 1]) - h) > rel_tol * std::max(1.0, std::fabs(h)))
            return false;
    return true;
}

double Trajectory::spacing() const {
    if (times.size() < 2) throw Error("trajectory has fewer than two samples");
    return times[1] - times[0];
}

namespace {

bool all_finite(const Eigen::VectorXd& y) {
    for (int i = 0; i < y.size(); ++i)
        if (!std::isfinite(y(i))) return false;
    return true;
}

Eigen::VectorXd eval_field(const FlowField& field, const Eigen::VectorXd& y) {
    Eigen::VectorXd dy(y.size());
    field(std::span<const double>(y.data(), y.size()), std::span<double>(dy.data(), dy.size()));
    return dy;
}

Eigen::VectorXd rk4_step(const FlowField& field, const Eigen::VectorXd& y, double h) {
    Eigen::VectorXd k1 = eval_field(field, y);
    Eigen::VectorXd k2 = eval_field(field, y + 0.5 * h * k1);
    Eigen::VectorXd k3 = eval_field(field, y + 0.5 * h * k2);
    Eigen::VectorXd k4 = eval_field(field, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192,
                 A75 = -2187.0 / 6784, A76 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

// Generic driver: marches from t0 to t1, calling `record(t, y)` after every
// accepted step; `boundary(t)` caps the step so integration lands exactly on
// the next requested output time.
struct Driver {
    const FlowField& field;
    const IntegratorConfig& cfg;
    long accepted = 0;
    long rejected = 0;

    template <class Record, class Boundary>
    void run(Eigen::VectorXd y, Record&& record, Boundary&& boundary) {
        if (cfg.method == IntegratorConfig::Method::Rk4Fixed)
            runFixed(std::move(y), record, boundary);
        else
            runAdaptive(std::move(y), record, boundary);
    }

    template <class Record, class Boundary>
    void runFixed(Eigen::VectorXd y, Record&& record, Boundary&& boundary) {
        double t = cfg.t0;
        while (t < cfg.t1 - 1e-14 * std::max(1.0, std::fabs(cfg.t1))) {
            double h = std::min(cfg.step, boundary(t) - t);
            h = std::min(h, cfg.t1 - t);
            y = rk4_step(field, y, h);
            t += h;
            if (!all_finite(y)) throw NonFiniteState(t);
            ++accepted;
            record(t, y);
        }
    }

    template <class Record, class Boundary>
    void runAdaptive(Eigen::VectorXd y, Record&& record, Boundary&& boundary) {
        const double span = cfg.t1 - cfg.t0;
        const double hmax = cfg.max_step > 0.0 ? cfg.max_step : span;
        const double safe = 0.9, facmin = 0.2, facmax = 10.0;
        const double beta = 0.04, alpha = 0.2 - beta * 0.75;

        double t = cfg.t0;
        double h = std::min(hmax, span / 100.0);
        double facold = 1e-4;
        bool last_rejected = false;

        Eigen::VectorXd k1 = eval_field(field, y);
        while (t < cfg.t1 - 1e-14 * std::max(1.0, std::fabs(cfg.t1))) {
            bool clipped = false;
            double hcap = std::min(boundary(t), cfg.t1) - t;
            if (h >= hcap) {
                h = hcap;
                clipped = true;
            }
            if (h < cfg.min_step) throw StepSizeUnderflow(t);

            Eigen::VectorXd k2 = eval_field(field, y + h * (A21 * k1));
            Eigen::VectorXd k3 = eval_field(field, y + h * (A31 * k1 + A32 * k2));
            Eigen::VectorXd k4 = eval_field(field, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
            Eigen::VectorXd k5 =
                eval_field(field, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
            Eigen::VectorXd k6 = eval_field(
                field, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
            Eigen::VectorXd y5 =
                y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
            Eigen::VectorXd k7 = eval_field(field, y5);

            Eigen::VectorXd errv =
                h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
            double err = 0.0;
            for (int i = 0; i < y.size(); ++i) {
                const double sc =
                    cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(y(i)), std::fabs(y5(i)));
                const double r = errv(i) / sc;
                err += r * r;
            }
            err = std::sqrt(err / static_cast<double>(y.size()));

            double fac = std::pow(err, alpha) / std::pow(facold, beta);
            fac = std::clamp(fac / safe, 1.0 / facmax, 1.0 / facmin);
            double hnew = h / fac;

            if (err <= 1.0) {
                t += h;
                y = std::move(y5);
                k1 = std::move(k7); // FSAL
                if (!all_finite(y)) throw NonFiniteState(t);
                facold = std::max(err, 1e-4);
                ++accepted;
                record(t, y);
                if (last_rejected) hnew = std::min(hnew, h);
                last_rejected = false;
            } else {
                ++rejected;
                last_rejected = true;
                if (clipped) hnew = std::min(hnew, hcap);
            }
            h = std::min(hnew, hmax);
        }
    }
};

Eigen::VectorXd to_vector(const ExtendedPoint& p) {
    return Eigen::Map<const Eigen::VectorXd>(p.coords.data(),
                                             static_cast<Eigen::Index>(p.coords.size()));
}

Trajectory grid_core(const FlowField& field, Eigen::VectorXd y0, const IntegratorConfig& config,
                     int samples, int n, int qcount) {
    config.validate();
    if (samples < 2) throw ConfigError("grid integration needs at least 2 samples");
    Trajectory traj;
    traj.n = n;
    traj.qcount = qcount;
    const double h = (config.t1 - config.t0) / (samples - 1);
    auto grid_time = [&](int k) {
        return k == samples - 1 ? config.t1 : config.t0 + k * h;
    };

    traj.times.push_back(config.t0);
    traj.states.push_back(y0);

    int next = 1;
    Driver driver{field, config};
    driver.run(
        std::move(y0),
        [&](double t, const Eigen::VectorXd& y) {
            if (next < samples &&
                t >= grid_time(next) - 1e-12 * std::max(1.0, std::fabs(grid_time(next)))) {
                traj.times.push_back(grid_time(next));
                traj.states.push_back(y);
                ++next;
            }
        },
        [&](double t) {
            int k = next;
            while (k < samples && grid_time(k) <= t + 1e-14 * std::max(1.0, std::fabs(t))) ++k;
            return k < samples ? grid_time(k) : config.t1;
        });
    traj.accepted = driver.accepted;
    traj.rejected = driver.rejected;
    if (static_cast<int>(traj.times.size()) != samples)
        throw Error("grid integration failed to land on all sample times");
    return traj;
}

} // namespace

Trajectory integrate(const FlowField& field, const ExtendedPoint& initial,
                     const IntegratorConfig& config) {
    config.validate();
    Trajectory traj;
    traj.n = initial.n;
    traj.qcount = initial.qcount;
    Eigen::VectorXd y0 = to_vector(initial);
    traj.times.push_back(config.t0);
    traj.states.push_back(y0);

    Driver driver{field, config};
    long count = 0;
    driver.run(
        y0,
        [&](double t, const Eigen::VectorXd& y) {
            ++count;
            const bool at_end = t >= config.t1 - 1e-14 * std::max(1.0, std::fabs(config.t1));
            if (count % config.stride == 0 || at_end) {
                traj.times.push_back(t);
                traj.states.push_back(y);
            }
        },
        [&](double) { return config.t1; });
    traj.accepted = driver.accepted;
    traj.rejected = driver.rejected;
    return traj;
}

Trajectory integrate_grid(const FlowField& field, const ExtendedPoint& initial,
                          const IntegratorConfig& config, int samples) {
    return grid_core(field, to_vector(initial), config, samples, initial.n, initial.qcount);
}

TrajectoryInterpolant::TrajectoryInterpolant(const Trajectory& traj, const FlowField& field) {
    times_ = traj.times;
    states_ = traj.states;
    slopes_.reserve(states_.size());
    for (const auto& s : states_) slopes_.push_back(eval_field(field, s));
}

Eigen::VectorXd TrajectoryInterpolant::at(double t) const {
    if (times_.empty()) throw Error("empty interpolant");
    if (t <= times_.front()) return states_.front();
    if (t >= times_.back()) return states_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double h = times_[k + 1] - times_[k];
    const double s = (t - times_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * states_[k] + (h10 * h) * slopes_[k] + h01 * states_[k + 1] +
           (h11 * h) * slopes_[k + 1];
}

std::vector<double> fd_derivative(const std::vector<double>& values, double h) {
    const std::size_t m = values.size();
    if (m < 5) throw Error("fd_derivative needs at least five samples");
    std::vector<double> d(m);
    auto f = [&](std::size_t k) { return values[k]; };
    d[0] = (-25 * f(0) + 48 * f(1) - 36 * f(2) + 16 * f(3) - 3 * f(4)) / (12 * h);
    d[1] = (-3 * f(0) - 10 * f(1) + 18 * f(2) - 6 * f(3) + f(4)) / (12 * h);
    for (std::size_t k = 2; k + 2 < m; ++k)
        d[k] = (-f(k + 2) + 8 * f(k + 1) - 8 * f(k - 1) + f(k - 2)) / (12 * h);
    d[m - 2] = (3 * f(m - 1) + 10 * f(m - 2) - 18 * f(m - 3) + 6 * f(m - 4) - f(m - 5)) / (12 * h);
    d[m - 1] =
        (25 * f(m - 1) - 48 * f(m - 2) + 36 * f(m - 3) - 16 * f(m - 4) + 3 * f(m - 5)) / (12 * h);
    return d;
}

double max_herglotz_residual(const LagrangianSystem& sys, const Trajectory& traj) {
    if (!traj.isUniform())
        throw Error("herglotz residual along a trajectory needs uniform sampling");
    const std::size_t m = traj.size();
    if (m < 5) throw Error("trajectory too short for finite-difference accelerations");
    const double h = traj.spacing();
    const int n = sys.n();

    // Per-coordinate sample series.
    std::vector<std::vector<double>> qs(n), vs(n);
    std::vector<std::vector<double>> zs(sys.qcount());
    for (int i = 0; i < n; ++i) {
        qs[i].resize(m);
        vs[i].resize(m);
    }
    for (int k = 0; k < sys.qcount(); ++k) zs[k].resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        for (int i = 0; i < n; ++i) {
            qs[i][s] = traj.states[s](i);
            vs[i][s] = traj.states[s](n + i);
        }
        for (int k = 0; k < sys.qcount(); ++k) zs[k][s] = traj.states[s](2 * n + k);
    }
    std::vector<std::vector<double>> dq(n), dv(n), dz(sys.qcount());
    for (int i = 0; i < n; ++i) {
        dq[i] = fd_derivative(qs[i], h);
        dv[i] = fd_derivative(vs[i], h);
    }
    for (int k = 0; k < sys.qcount(); ++k) dz[k] = fd_derivative(zs[k], h);

    double worst = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        ExtendedPoint p = traj.point(s);
        auto d = sys.derivatives(p);
        Eigen::VectorXd acc(n);
        for (int i = 0; i < n; ++i) acc(i) = dv[i][s];
        Eigen::VectorXd r = sys.herglotzResidual(p, acc);

        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(p.coords.data() + n, n);
        const double term_scale = 1.0 + (d->d2L_vq * v).cwiseAbs().maxCoeff() +
                                  (d->W * acc).cwiseAbs().maxCoeff() +
                                  d->dLdq.cwiseAbs().maxCoeff() +
                                  (d->dLdz.sum() * d->dLdv).cwiseAbs().maxCoeff();
        worst = std::max(worst, r.cwiseAbs().maxCoeff() / term_scale);

        // Curve consistency: qdot = v and zdot_i = L.
        for (int i = 0; i < n; ++i) {
            const double scale = 1.0 + std::fabs(p.coords[n + i]);
            worst = std::max(worst, std::fabs(dq[i][s] - p.coords[n + i]) / scale);
        }
        const double lag = d->L;
        for (int k = 0; k < sys.qcount(); ++k)
            worst = std::max(worst, std::fabs(dz[k][s] - lag) / (1.0 + std::fabs(lag)));
    }
    return worst;
}

PontryaginRun integrate_pontryagin(const LagrangianSystem& sys, const Trajectory& extremal,
                                   const PontryaginOptions& opts) {
    if (extremal.size() < 5) throw Error("extremal trajectory too short");
    if (!extremal.isUniform())
        throw Error("pontryagin co-integration expects a uniformly sampled extremal");

    const double residual = max_herglotz_residual(sys, extremal);
    if (residual > opts.extremal_tol) throw NotAnExtremal(residual);

    const int n = sys.n();
    const int q = sys.qcount();
    const double t0 = extremal.times.front();
    const double t1 = extremal.times.back();
    const std::size_t m = extremal.size();

    FlowField forward_field = [&sys, n, q](std::span<const double> y, std::span<double> dy) {
        ExtendedPoint p(n, q, std::vector<double>(y.begin(), y.end()));
        Eigen::VectorXd f = sys.vectorField(p);
        for (int i = 0; i < f.size(); ++i) dy[i] = f(i);
    };
    TrajectoryInterpolant state_at(extremal, forward_field);

    // Terminal data: mu_i(t1) = 1 and p_k(t1) from the stationarity relation.
    ExtendedPoint terminal = extremal.point(m - 1);
    auto dterm = sys.derivatives(terminal);
    Eigen::VectorXd adj0(q + n);
    adj0.head(q).setOnes();
    adj0.tail(n) = -static_cast<double>(q) * dterm->dLdv;

    // Backward pass in s = t1 - t, with s carried as the last component so
    // the right-hand side stays autonomous:
    //   dmu_i/ds = M dL/dz_i(state(t1 - s)),  dp_k/ds = M dL/dq^k(state(t1 - s)).
    FlowField adjoint_field = [&](std::span<const double> y, std::span<double> dy) {
        double msum = 0.0;
        for (int i = 0; i < q; ++i) msum += y[i];
        const double s = y[q + n];
        Eigen::VectorXd state = state_at.at(t1 - s);
        ExtendedPoint p(n, q, std::vector<double>(state.data(), state.data() + state.size()));
        auto d = sys.derivatives(p);
        for (int i = 0; i < q; ++i) dy[i] = msum * d->dLdz(i);
        for (int k = 0; k < n; ++k) dy[q + k] = msum * d->dLdq(k);
        dy[q + n] = 1.0;
    };

    Eigen::VectorXd adj_init(q + n + 1);
    adj_init.head(q + n) = adj0;
    adj_init(q + n) = 0.0;

    IntegratorConfig cfg;
    cfg.method = IntegratorConfig::Method::Rk45Adaptive;
    cfg.t0 = 0.0;
    cfg.t1 = t1 - t0;
    cfg.abs_tol = opts.abs_tol;
    cfg.rel_tol = opts.rel_tol;
    Trajectory backward = grid_core(adjoint_field, adj_init, cfg, static_cast<int>(m), 0, 0);

    PontryaginRun run;
    run.forward = extremal;
    run.mu.resize(m);
    run.p.resize(m);
    run.M.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        // backward sample k corresponds to forward sample m-1-k
        const Eigen::VectorXd& y = backward.states[k];
        const std::size_t fwd = m - 1 - k;
        run.mu[fwd] = y.head(q);
        run.p[fwd] = y.segment(q, n);
        run.M[fwd] = y.head(q).sum();
        if (!(run.M[fwd] > 0.0))
            throw Error("M(t) lost positivity during the backward pass");
    }
    return run;
}

StationarityReport verify_stationarity(const PontryaginRun& run, const LagrangianSystem& sys,
                                       double tol) {
    const std::size_t m = run.forward.size();
    const double h = run.forward.spacing();
    StationarityReport report;
    report.tolerance = tol;

    std::vector<double> mdot = fd_derivative(run.M, h);
    for (std::size_t k = 0; k < m; ++k) {
        ExtendedPoint p = run.forward.point(k);
        auto d = sys.derivatives(p);
        Eigen::VectorXd stat = run.p[k] + run.M[k] * d->dLdv;
        const double stat_scale = 1.0 + run.p[k].cwiseAbs().maxCoeff() +
                                  (run.M[k] * d->dLdv).cwiseAbs().maxCoeff();
        report.stationarity_residual =
            std::max(report.stationarity_residual, stat.cwiseAbs().maxCoeff() / stat_scale);

        const double mlaw = mdot[k] + run.M[k] * d->dLdz.sum();
        const double mlaw_scale = 1.0 + std::fabs(run.M[k] * d->dLdz.sum());
        report.mlaw_residual = std::max(report.mlaw_residual, std::fabs(mlaw) / mlaw_scale);
    }
    report.pass = report.stationarity_residual <= tol && report.mlaw_residual <= tol;
    return report;
}

DecayMetrics decay_metrics(const Trajectory& traj, const LagrangianSystem& sys) {
    const std::size_t m = traj.size();
    if (m < 5) throw Error("trajectory too short for decay metrics");
    if (!traj.isUniform()) throw Error("decay metrics need uniform sampling");
    const double h = traj.spacing();

    std::vector<double> energy(m), logE(m);
    for (std::size_t k = 0; k < m; ++k) {
        energy[k] = sys.energy(traj.point(k));
        if (!(energy[k] > 0.0)) throw NonPositiveEnergy(traj.times[k]);
        logE[k] = std::log(energy[k]);
    }

    // Least-squares line through (t, log E).
    double st = 0, se = 0, stt = 0, ste = 0;
    for (std::size_t k = 0; k < m; ++k) {
        st += traj.times[k];
        se += logE[k];
        stt += traj.times[k] * traj.times[k];
        ste += traj.times[k] * logE[k];
    }
    const double denom = m * stt - st * st;
    DecayMetrics metrics;
    metrics.fitted_rate = (m * ste - st * se) / denom;
    metrics.intercept = (se * stt - st * ste) / denom;

    std::vector<double> dE = fd_derivative(energy, h);
    metrics.law_residuals.resize(m);
    auto energy_field = sys.energyField();
    for (std::size_t k = 0; k < m; ++k) {
        ExtendedPoint p = traj.point(k);
        Eigen::VectorXd grad = energy_field->gradientAt(p);
        double reeb_sum = 0.0;
        for (const auto& r : sys.reebFields(p)) reeb_sum += grad.dot(r);
        const double law = dE[k] + energy[k] * reeb_sum;
        const double scale = 1.0 + std::fabs(energy[k] * reeb_sum);
        metrics.law_residuals[k] = std::fabs(law) / scale;
        metrics.max_law_residual = std::max(metrics.max_law_residual, metrics.law_residuals[k]);
    }
    return metrics;
}

namespace {

void csv_number(std::ostream& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
}

} // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const LagrangianSystem* energy_source) {
    out << "t";
    for (int i = 1; i <= traj.n; ++i) out << ",q" << i;
    for (int i = 1; i <= traj.n; ++i) out << ",v" << i;
    for (int k = 1; k <= traj.qcount; ++k) out << ",z" << k;
    if (energy_source) out << ",E_L";
    out << "\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        csv_number(out, traj.times[s]);
        for (int c = 0; c < traj.states[s].size(); ++c) {
            out << ',';
            csv_number(out, traj.states[s](c));
        }
        if (energy_source) {
            out << ',';
            csv_number(out, energy_source->energy(traj.point(s)));
        }
        out << "\n";
    }
}

void write_pontryagin_csv(std::ostream& out, const PontryaginRun& run,
                          const LagrangianSystem& sys) {
    const Trajectory& traj = run.forward;
    out << "t";
    for (int i = 1; i <= traj.n; ++i) out << ",q" << i;
    for (int i = 1; i <= traj.n; ++i) out << ",v" << i;
    for (int k = 1; k <= traj.qcount; ++k) out << ",z" << k;
    out << ",E_L";
    for (int k = 1; k <= traj.qcount; ++k) out << ",mu" << k;
    for (int i = 1; i <= traj.n; ++i) out << ",p" << i;
    out << ",M\n";
    for (std::size_t s = 0; s < traj.size(); ++s) {
        csv_number(out, traj.times[s]);
        for (int c = 0; c < traj.states[s].size(); ++c) {
            out << ',';
            csv_number(out, traj.states[s](c));
        }
        out << ',';
        csv_number(out, sys.energy(traj.point(s)));
        for (int k = 0; k < traj.qcount; ++k) {
            out << ',';
            csv_number(out, run.mu[s](k));
        }
        for (int i = 0; i < traj.n; ++i) {
            out << ',';
            csv_number(out, run.p[s](i));
        }
        out << ',';
        csv_number(out, run.M[s]);
        out << "\n";
    }
}

} // namespace qcontact
