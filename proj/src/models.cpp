#include "qcontact/models.hpp"

#include <cmath>
#include <sstream>

namespace qcontact {

namespace {

struct BuiltinSpec {
    std::string name;
    std::vector<std::vector<double>> groups; // ';'-separated groups of ','-separated numbers
};

BuiltinSpec parse_builtin_spec(const std::string& spec) {
    BuiltinSpec out;
    auto open = spec.find('(');
    if (open == std::string::npos) {
        out.name = spec;
        return out;
    }
    if (spec.back() != ')')
        throw ConfigError("malformed builtin spec '" + spec + "': missing ')'");
    out.name = spec.substr(0, open);
    std::string args = spec.substr(open + 1, spec.size() - open - 2);
    std::stringstream groups(args);
    std::string group;
    while (std::getline(groups, group, ';')) {
        std::vector<double> values;
        std::stringstream items(group);
        std::string item;
        while (std::getline(items, item, ',')) {
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("malformed builtin argument '" + item + "' in '" + spec + "'");
            }
        }
        out.groups.push_back(std::move(values));
    }
    return out;
}

ModelConfig make_contact_r3() {
    ModelConfig c;
    c.kind = ModelConfig::Kind::HamiltonianStructure;
    c.n = 1;
    c.qcount = 1;
    c.hamiltonian = "(v1^2 + q1^2)/2";
    c.coframe = {{"-v1", "0", "1"}};
    c.reeb = {{"0", "0", "1"}};
    c.initial = {0.0, 1.0, 0.0};
    c.horizon = 10.0;
    return c;
}

ModelConfig make_two_contact_r4() {
    ModelConfig c;
    c.kind = ModelConfig::Kind::HamiltonianStructure;
    c.n = 1;
    c.qcount = 2;
    c.hamiltonian = "(v1^2 + q1^2)/2";
    c.coframe = {{"-v1", "0", "1", "0"}, {"0", "q1", "0", "1"}};
    c.reeb = {{"0", "0", "1", "0"}, {"0", "0", "0", "1"}};
    c.initial = {0.0, 1.0, 0.0, 0.0};
    c.horizon = 10.0;
    return c;
}

ModelConfig make_standard_qcontact(int n, int q) {
    if (n < 1 || q < 1) throw ConfigError("standard-qcontact needs n >= 1 and q >= 1");
    ModelConfig c;
    c.kind = ModelConfig::Kind::HamiltonianStructure;
    c.n = n;
    c.qcount = q;
    const int dim = 2 * n + q;
    // lambda_i = dz_i + sum_j q_j dv_j
    for (int i = 0; i < q; ++i) {
        std::vector<std::string> comps(dim, "0");
        for (int j = 0; j < n; ++j) comps[n + j] = "q" + std::to_string(j + 1);
        comps[2 * n + i] = "1";
        c.coframe.push_back(std::move(comps));
    }
    for (int i = 0; i < q; ++i) {
        std::vector<std::string> comps(dim, "0");
        comps[2 * n + i] = "1";
        c.reeb.push_back(std::move(comps));
    }
    std::string h = "(";
    for (int j = 0; j < n; ++j) {
        if (j) h += " + ";
        h += "q" + std::to_string(j + 1) + "^2 + v" + std::to_string(j + 1) + "^2";
    }
    h += ")/2";
    c.hamiltonian = h;
    c.initial.assign(dim, 0.0);
    for (int j = 0; j < n; ++j) {
        c.initial[j] = 0.5;
        c.initial[n + j] = 1.0;
    }
    return c;
}

ModelConfig make_e1(int m, const std::vector<double>& gammas) {
    if (m < 1) throw ConfigError("e1 needs at least one contact variable");
    ModelConfig c;
    c.kind = ModelConfig::Kind::Lagrangian;
    c.n = 1;
    c.qcount = m;
    std::string lag = "v1^2/2 - q1^2/2";
    for (int k = 0; k < m; ++k) {
        const std::string name = "gamma" + std::to_string(k + 1);
        lag += " - " + name + "*z" + std::to_string(k + 1);
        c.params[name] = k < static_cast<int>(gammas.size()) ? gammas[k] : 0.1 * (k + 1);
    }
    c.lagrangian = lag;
    c.initial.assign(static_cast<std::size_t>(2 + m), 0.0);
    c.initial[0] = 1.0;
    c.initial[1] = 1.0;
    c.horizon = 10.0;
    return c;
}

ModelConfig make_free2contact() {
    ModelConfig c;
    c.kind = ModelConfig::Kind::Lagrangian;
    c.n = 1;
    c.qcount = 2;
    c.lagrangian = "v1^2/2 - z1 - z2";
    c.initial = {0.0, 1.0, 0.0, 0.0};
    c.horizon = 3.0;
    return c;
}

ModelConfig make_rocket(double m, double g, const std::vector<double>& gammas) {
    ModelConfig c;
    c.kind = ModelConfig::Kind::Lagrangian;
    c.n = 1;
    c.qcount = 3;
    c.lagrangian = "m/2*v1^2 - m*g*q1 - gamma_aero*z1 - gamma_struct*z2 - gamma_thermal*z3";
    c.params["m"] = m;
    c.params["g"] = g;
    c.params["gamma_aero"] = gammas.size() > 0 ? gammas[0] : 1e-2;
    c.params["gamma_struct"] = gammas.size() > 1 ? gammas[1] : 1e-3;
    c.params["gamma_thermal"] = gammas.size() > 2 ? gammas[2] : 1e-4;
    c.initial = {1000.0, 100.0, 0.0, 0.0, 0.0};
    c.horizon = 60.0;
    return c;
}

} // namespace

std::string ModelConfig::id() const {
    if (!builtin.empty()) return builtin;
    return kind == Kind::Lagrangian ? "custom-lagrangian" : "custom-structure";
}

ModelConfig builtin_model(const std::string& spec) {
    BuiltinSpec parsed = parse_builtin_spec(spec);
    auto group = [&](std::size_t g) {
        return g < parsed.groups.size() ? parsed.groups[g] : std::vector<double>{};
    };
    ModelConfig config;
    if (parsed.name == "contact-r3") {
        config = make_contact_r3();
    } else if (parsed.name == "two-contact-r4") {
        config = make_two_contact_r4();
    } else if (parsed.name == "standard-qcontact") {
        auto dims = group(0);
        const int n = dims.size() > 0 ? static_cast<int>(dims[0]) : 1;
        const int q = dims.size() > 1 ? static_cast<int>(dims[1]) : 2;
        config = make_standard_qcontact(n, q);
    } else if (parsed.name == "e1" || parsed.name == "example-e1") {
        auto head = group(0);
        auto gammas = group(1);
        int m = head.empty() ? 2 : static_cast<int>(head[0]);
        if (head.empty() && gammas.empty()) gammas = {0.1, 0.2};
        if (!gammas.empty() && static_cast<int>(gammas.size()) != m)
            throw ConfigError("e1 expects exactly m dissipation coefficients");
        config = make_e1(m, gammas);
    } else if (parsed.name == "free2contact") {
        config = make_free2contact();
    } else if (parsed.name == "rocket") {
        auto head = group(0);
        auto gammas = group(1);
        const double m = head.size() > 0 ? head[0] : 5000.0;
        const double g = head.size() > 1 ? head[1] : 9.81;
        config = make_rocket(m, g, gammas);
    } else {
        throw ConfigError("unknown builtin model '" + parsed.name + "'");
    }
    config.builtin = spec;
    return config;
}

std::vector<std::string> builtin_names() {
    return {"contact-r3", "two-contact-r4", "standard-qcontact(n,q)",
            "e1(m; gamma...)", "free2contact", "rocket(m,g; gammas...)"};
}

ExtendedPoint Model::initialState() const {
    if (config.initial.empty())
        return ExtendedPoint::zero(config.n, config.qcount);
    return ExtendedPoint(config.n, config.qcount, config.initial);
}

FlowField Model::flow() const {
    if (isLagrangian()) {
        auto sys = system;
        return [sys](std::span<const double> y, std::span<double> dy) {
            sys->evalVectorField<double>(y, dy);
        };
    }
    auto structure = std::make_shared<QContactStructure>(this->structure);
    auto h = hamiltonian;
    const int n = config.n;
    const int q = config.qcount;
    return [structure, h, n, q](std::span<const double> y, std::span<double> dy) {
        ExtendedPoint p(n, q, std::vector<double>(y.begin(), y.end()));
        Eigen::VectorXd x = hamiltonian_vector_field(*structure, *h, p);
        for (int i = 0; i < x.size(); ++i) dy[i] = x(i);
    };
}

Model build_model(const ModelConfig& config) {
    Model model;
    model.config = config;
    const int dim = 2 * config.n + config.qcount;

    if (!config.initial.empty()) {
        if (static_cast<int>(config.initial.size()) != dim)
            throw ConfigError("initial state has " + std::to_string(config.initial.size()) +
                              " entries, expected " + std::to_string(dim));
        for (double c : config.initial)
            if (!std::isfinite(c)) throw ConfigError("initial state entries must be finite");
    }

    if (config.kind == ModelConfig::Kind::Lagrangian) {
        if (config.lagrangian.empty())
            throw ConfigError("lagrangian model needs a 'lagrangian' expression");
        try {
            model.system = std::make_shared<LagrangianSystem>(config.n, config.qcount,
                                                              config.lagrangian, config.params);
        } catch (const ParseError& e) {
            throw ConfigError(std::string("failed to parse lagrangian: ") + e.what());
        }
        model.structure = model.system->inducedStructure();
        model.hamiltonian = model.system->energyField();
        return model;
    }

    if (config.hamiltonian.empty())
        throw ConfigError("structure model needs a 'hamiltonian' expression");
    if (static_cast<int>(config.coframe.size()) != config.qcount ||
        static_cast<int>(config.reeb.size()) != config.qcount)
        throw ConfigError("structure model needs exactly qcount coframe and reeb fields");

    auto parse_components = [&](const std::vector<std::string>& texts) {
        if (static_cast<int>(texts.size()) != dim)
            throw ConfigError("field needs " + std::to_string(dim) + " components");
        std::vector<ExprAst> comps;
        for (const auto& text : texts) {
            try {
                comps.push_back(parse_expression(text));
            } catch (const ParseError& e) {
                throw ConfigError("failed to parse component '" + text + "': " + e.what());
            }
        }
        return comps;
    };

    std::vector<CovectorField> coframe;
    std::vector<VectorFieldSpec> reeb;
    for (const auto& texts : config.coframe) coframe.push_back({parse_components(texts)});
    for (const auto& texts : config.reeb) reeb.push_back({parse_components(texts)});
    model.structure = QContactStructure::fromExpressions(config.n, config.qcount, coframe, reeb,
                                                         config.params);
    try {
        model.hamiltonian = std::make_shared<ExprScalarField>(
            parse_expression(config.hamiltonian), config.n, config.qcount, config.params);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("failed to parse hamiltonian: ") + e.what());
    }
    return model;
}

} // namespace qcontact
