#ifndef QCONTACT_DYNAMICS_HPP
#define QCONTACT_DYNAMICS_HPP

#include <functional>
#include <iosfwd>

#include "qcontact/lagrangian.hpp"

namespace qcontact {

// Autonomous right-hand side y' = field(y).
using FlowField = std::function<void(std::span<const double>, std::span<double>)>;

struct IntegratorConfig {
    enum class Method { Rk4Fixed, Rk45Adaptive };

    Method method = Method::Rk45Adaptive;
    double t0 = 0.0;
    double t1 = 1.0;
    double step = 1e-2;      // rk4-fixed
    double abs_tol = 1e-10;  // rk45
    double rel_tol = 1e-9;
    double min_step = 1e-13;
    double max_step = 0.0;   // 0 = span-derived
    int stride = 1;          // record every stride-th accepted step

    void validate() const;
};

struct Trajectory {
    int n = 0;
    int qcount = 0;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::string model_id;
    long accepted = 0;
    long rejected = 0;

    std::size_t size() const { return times.size(); }
    ExtendedPoint point(std::size_t k) const;
    bool isUniform(double rel_tol = 1e-9) const;
    double spacing() const;
};

// Integrates the flow, recording every stride-th accepted step plus both
// endpoints.  rk45 is the Dormand-Prince 5(4) pair with PI step control.
Trajectory integrate(const FlowField& field, const ExtendedPoint& initial,
                     const IntegratorConfig& config);

// Integrates while landing exactly on a uniform grid of `samples` times
// covering [t0, t1]; every grid state is a direct integration output.
Trajectory integrate_grid(const FlowField& field, const ExtendedPoint& initial,
                          const IntegratorConfig& config, int samples);

// Cubic Hermite interpolation between trajectory samples, with slopes
// recomputed from the field at the samples.
class TrajectoryInterpolant {
public:
    TrajectoryInterpolant(const Trajectory& traj, const FlowField& field);
    Eigen::VectorXd at(double t) const;

private:
    std::vector<double> times_;
    std::vector<Eigen::VectorXd> states_;
    std::vector<Eigen::VectorXd> slopes_;
};

// Fourth-order finite differences of a uniformly sampled series; one-sided
// stencils at the boundary.  Needs at least five samples.
std::vector<double> fd_derivative(const std::vector<double>& values, double h);

// Max (scale-relative) Herglotz Euler-Lagrange residual along a uniformly
// sampled trajectory, with accelerations and rates taken from the samples
// themselves by finite differences; also covers the qdot = v and zdot = L
// consistency of the curve.
double max_herglotz_residual(const LagrangianSystem& sys, const Trajectory& traj);

struct PontryaginOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    double extremal_tol = 1e-6;
};

struct PontryaginRun {
    Trajectory forward;               // uniform grid
    std::vector<Eigen::VectorXd> mu;  // adjoints mu_i, aligned with forward samples
    std::vector<Eigen::VectorXd> p;   // adjoints p_k
    std::vector<double> M;            // sum_i mu_i
};

// Backward co-integration of the adjoint system
//   pdot_k = -M dL/dq^k,  mudot_i = -M dL/dz_i,
// from the transversality data mu_i(t1) = 1 and the stationarity-implied
// p_k(t1) = -M(t1) dL/dv^k.  The forward state enters through cubic Hermite
// interpolation between samples.
PontryaginRun integrate_pontryagin(const LagrangianSystem& sys, const Trajectory& extremal,
                                   const PontryaginOptions& opts = {});

struct StationarityReport {
    double stationarity_residual = 0.0; // max |p_k + M dL/dv^k| / scale
    double mlaw_residual = 0.0;         // max |Mdot + M sum_i dL/dz_i| / scale
    double tolerance = 1e-6;
    bool pass = false;
};

StationarityReport verify_stationarity(const PontryaginRun& run, const LagrangianSystem& sys,
                                       double tol = 1e-6);

struct DecayMetrics {
    double fitted_rate = 0.0;     // least-squares slope of log E_L vs t
    double intercept = 0.0;
    double max_law_residual = 0.0;
    std::vector<double> law_residuals; // per-sample |dE/dt + E sum R_i(E_L)| / scale
};

DecayMetrics decay_metrics(const Trajectory& traj, const LagrangianSystem& sys);

// CSV formats: header t,q1..qn,v1..vn,z1..zq[,E_L]; the Pontryagin variant
// appends mu1..muq,p1..pn,M.  Full-precision scientific notation.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const LagrangianSystem* energy_source = nullptr);
void write_pontryagin_csv(std::ostream& out, const PontryaginRun& run,
                          const LagrangianSystem& sys);

} // namespace qcontact

#endif // QCONTACT_DYNAMICS_HPP
