#ifndef QCONTACT_SUITES_HPP
#define QCONTACT_SUITES_HPP

#include "qcontact/config.hpp"
#include "qcontact/symmetry.hpp"

namespace qcontact {

// Deterministic sampling of extended-phase-space points.
std::vector<ExtendedPoint> sample_points(int n, int qcount, int count, unsigned seed,
                                         double lo = -2.0, double hi = 2.0);

// Regular points for a Lagrangian system, optionally with all |v_i| bounded
// away from zero (resampled deterministically).
std::vector<ExtendedPoint> sample_regular_points(const LagrangianSystem& sys, int count,
                                                 unsigned seed, double min_abs_v = 0.0);

// Max over samples of |d/dt H + H sum_i R_i(H)| (scale-relative), with d/dt H
// taken by fourth-order finite differences on the sampled values.
double flow_law_residual(const Trajectory& traj, const QContactStructure& s,
                         const ScalarField& h);

struct SuiteOptions {
    double tol = 1e-9;        // structural tolerance (QCONTACT_TOL / --tol)
    unsigned seed = 20260810;
    int structure_points = 20;
    int solver_points = 50;
    int flow_samples = 1601;
    double horizon = 0.0;     // 0 = model default
};

struct RunReport {
    std::string model_id;
    std::string digest;
    std::string suite;
    std::vector<CheckResult> checks;
    bool pass = false;
};

// Suites: "structure", "dynamics", "noether", "pontryagin", "all".  The
// noether and pontryagin suites need a Lagrangian model; "all" runs whatever
// applies to the model kind.  Check names are documented in docs/checks.md.
RunReport run_suite(const Model& model, const std::string& suite, const SuiteOptions& opts = {});

nlohmann::json report_to_json(const RunReport& report);

nlohmann::json symmetry_report_to_json(const SymmetryReport& report);

} // namespace qcontact

#endif // QCONTACT_SUITES_HPP
