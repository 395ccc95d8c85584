#ifndef QCONTACT_MODELS_HPP
#define QCONTACT_MODELS_HPP

#include "qcontact/dynamics.hpp"

namespace qcontact {

struct ModelConfig {
    enum class Kind { Lagrangian, HamiltonianStructure };

    Kind kind = Kind::Lagrangian;
    int n = 1;
    int qcount = 1;
    std::string lagrangian;                        // Lagrangian kind
    std::string hamiltonian;                       // structure kind
    std::vector<std::vector<std::string>> coframe; // q rows of 2n+q component texts
    std::vector<std::vector<std::string>> reeb;
    ParamMap params;
    std::string builtin;                           // set when expanded from the registry
    std::vector<double> initial;                   // default initial state
    double horizon = 10.0;                         // natural verification time span

    std::string id() const;
};

// Built-in models named in the worked examples.  The spec string is either a
// bare name or name(args) with ';' separating argument groups:
//   contact-r3
//   two-contact-r4
//   standard-qcontact(n,q)
//   e1(m; gamma_1,...,gamma_m)          (alias example-e1)
//   free2contact
//   rocket(m,g; gamma_aero,gamma_struct,gamma_thermal)
ModelConfig builtin_model(const std::string& spec);

std::vector<std::string> builtin_names();

// A config materialized into runtime objects.  `system` is set only for
// Lagrangian models; `structure` is the explicit structure or the induced one.
struct Model {
    ModelConfig config;
    std::shared_ptr<const LagrangianSystem> system;
    QContactStructure structure;
    std::shared_ptr<const ScalarField> hamiltonian; // H, or E_L for Lagrangians

    bool isLagrangian() const { return system != nullptr; }
    ExtendedPoint initialState() const;
    FlowField flow() const;
};

Model build_model(const ModelConfig& config);

} // namespace qcontact

#endif // QCONTACT_MODELS_HPP
