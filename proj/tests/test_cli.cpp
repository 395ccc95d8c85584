#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcontact/suites.hpp"

using namespace qcontact;
namespace fs = std::filesystem;

namespace {

#ifndef QCONTACT_CLI_PATH
#error "QCONTACT_CLI_PATH must point at the built CLI binary"
#endif

struct CommandResult {
    int exit_code;
    std::string stdout_text;
    std::string stderr_text;
};

fs::path scratch_dir() {
    fs::path dir = fs::temp_directory_path() / "qcontact-cli-tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

CommandResult run_cli(const std::string& args) {
    const fs::path out = scratch_dir() / "stdout.txt";
    const fs::path err = scratch_dir() / "stderr.txt";
    const std::string command = std::string(QCONTACT_CLI_PATH) + " " + args + " > " +
                                out.string() + " 2> " + err.string();
    const int raw = std::system(command.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.stdout_text = slurp(out);
    result.stderr_text = slurp(err);
    return result;
}

std::vector<std::vector<double>> parse_csv(const std::string& text, std::string* header) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("simulate reproduces the contact oscillator endpoint") {
    auto r = run_cli("simulate --builtin contact-r3 --t0 0 --t1 3.1415926535897931 --tol 1e-10");
    REQUIRE(r.exit_code == 0);
    std::string header;
    auto rows = parse_csv(r.stdout_text, &header);
    CHECK(header == "t,q1,v1,z1");
    REQUIRE(!rows.empty());
    const auto& last = rows.back();
    CHECK(std::fabs(last[1] - 0.0) <= 1e-8);
    CHECK(std::fabs(last[2] + 1.0) <= 1e-8);
    CHECK(std::fabs(last[3] - 0.0) <= 1e-8);
}

TEST_CASE("simulate writes the rocket energy column with the documented decay") {
    auto r = run_cli("simulate --builtin rocket --t1 60");
    REQUIRE(r.exit_code == 0);
    std::string header;
    auto rows = parse_csv(r.stdout_text, &header);
    CHECK(header == "t,q1,v1,z1,z2,z3,E_L");
    const double e0 = rows.front().back();
    const double e1 = rows.back().back();
    CHECK(std::fabs(e1 / e0 - 0.5138) <= 1e-3);
}

TEST_CASE("missing config file exits with the config code and names the path") {
    auto r = run_cli("simulate --config /nonexistent/model.json");
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("/nonexistent/model.json") != std::string::npos);
}

TEST_CASE("malformed and invalid configs exit with the config code") {
    const fs::path bad_json = scratch_dir() / "bad.json";
    std::ofstream(bad_json) << "{ not json";
    CHECK(run_cli("simulate --config " + bad_json.string()).exit_code == 2);

    const fs::path bad_model = scratch_dir() / "bad_model.json";
    std::ofstream(bad_model) << R"({"kind":"lagrangian","n":1,"qcount":1,)"
                             << R"("lagrangian":"v1^2/2 - (q1"})";
    CHECK(run_cli("simulate --config " + bad_model.string()).exit_code == 2);

    // builtin and inline expressions are mutually exclusive
    const fs::path both = scratch_dir() / "both.json";
    std::ofstream(both) << R"({"builtin":"e1","lagrangian":"v1^2/2"})";
    CHECK(run_cli("verify --config " + both.string()).exit_code == 2);
}

TEST_CASE("verify e1 over all suites emits a full passing report") {
    const fs::path report_path = scratch_dir() / "e1_report.json";
    auto r = run_cli("verify --builtin e1 --suite all -o " + report_path.string());
    REQUIRE(r.exit_code == 0);
    auto report = nlohmann::json::parse(slurp(report_path));
    CHECK(report["pass"] == true);
    CHECK(report["model"] == "e1");
    CHECK(report["checks"].size() >= 12);
    for (const auto& check : report["checks"]) {
        CHECK(check.contains("name"));
        CHECK(check.contains("max_residual"));
        CHECK(check.contains("tolerance"));
        CHECK(check["pass"] == true);
    }
}

TEST_CASE("verify structure suite on the R4 example") {
    auto r = run_cli("verify --builtin two-contact-r4 --suite structure");
    CHECK(r.exit_code == 0);
    auto report = nlohmann::json::parse(r.stdout_text);
    bool saw_duality = false, saw_uniformity = false, saw_rank = false;
    for (const auto& check : report["checks"]) {
        const std::string name = check["name"];
        saw_duality |= name == "structure.duality";
        saw_uniformity |= name == "structure.uniformity";
        saw_rank |= name == "structure.nondegeneracy";
    }
    CHECK(saw_duality);
    CHECK(saw_uniformity);
    CHECK(saw_rank);
}

TEST_CASE("verify flags a deliberately broken structure with exit code 1") {
    const fs::path broken = scratch_dir() / "broken.json";
    std::ofstream(broken) << R"({
        "kind": "hamiltonian-structure",
        "n": 1, "qcount": 2,
        "hamiltonian": "(q1^2 + v1^2)/2",
        "coframe": [["-v1","0","1","0"], ["-v1","0","0","2"]],
        "reeb":    [["0","0","1","0"],  ["0","0","0","1"]],
        "initial": [0, 1, 0, 0]
    })";
    auto r = run_cli("verify --config " + broken.string() + " --suite structure");
    CHECK(r.exit_code == 1);
    auto report = nlohmann::json::parse(r.stdout_text);
    CHECK(report["pass"] == false);
    bool duality_failed = false;
    for (const auto& check : report["checks"])
        if (check["name"] == "structure.duality") duality_failed = !check["pass"];
    CHECK(duality_failed);
}

TEST_CASE("pontryagin subcommand writes adjoint CSV matching the closed form") {
    const fs::path csv_path = scratch_dir() / "pmp.csv";
    auto r = run_cli("pontryagin --builtin e1 --t1 10 -o " + csv_path.string());
    REQUIRE(r.exit_code == 0);
    std::string header;
    auto rows = parse_csv(slurp(csv_path), &header);
    CHECK(header == "t,q1,v1,z1,z2,E_L,mu1,mu2,p1,M");
    const double m0 = rows.front().back();
    CHECK(std::fabs(m0 - 2.0 * std::exp(-0.3 * 10.0)) <= 1e-4);
    // transversality row
    CHECK(rows.back()[6] == 1.0);
    CHECK(rows.back()[7] == 1.0);
}

TEST_CASE("pontryagin rejects structure models") {
    CHECK(run_cli("pontryagin --builtin contact-r3").exit_code == 2);
}

TEST_CASE("pontryagin reports a failed extremal precondition with exit code 4") {
    // 21 samples over [0,10] leave the finite-difference accelerations far
    // outside the extremal tolerance
    auto r = run_cli("pontryagin --builtin e1 --samples 21 -o /dev/null");
    CHECK(r.exit_code == 4);
    CHECK(r.stderr_text.find("not an extremal") != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical outputs") {
    const fs::path a = scratch_dir() / "rep_a.json";
    const fs::path b = scratch_dir() / "rep_b.json";
    REQUIRE(run_cli("verify --builtin e1 --suite dynamics -o " + a.string()).exit_code == 0);
    REQUIRE(run_cli("verify --builtin e1 --suite dynamics -o " + b.string()).exit_code == 0);
    CHECK(slurp(a) == slurp(b));

    const fs::path ca = scratch_dir() / "sim_a.csv";
    const fs::path cb = scratch_dir() / "sim_b.csv";
    REQUIRE(run_cli("simulate --builtin e1 --t1 5 -o " + ca.string()).exit_code == 0);
    REQUIRE(run_cli("simulate --builtin e1 --t1 5 -o " + cb.string()).exit_code == 0);
    CHECK(slurp(ca) == slurp(cb));
}

TEST_CASE("parse subcommand prints the tree and the round-trip form") {
    auto r = run_cli("parse \"v1^2/2 - q1^2/2\"");
    REQUIRE(r.exit_code == 0);
    CHECK(r.stdout_text.find("Binary -") != std::string::npos);
    CHECK(r.stdout_text.find("Coord v1") != std::string::npos);
    CHECK(r.stdout_text.find("printed: v1^2/2 - q1^2/2") != std::string::npos);

    CHECK(run_cli("parse \"2q1\"").exit_code == 2);
}

TEST_CASE("parameter overrides reach the model") {
    // doubling every dissipation coefficient doubles the fitted decay rate
    auto r = run_cli("verify --builtin \"e1(2;0.2,0.4)\" --suite dynamics");
    CHECK(r.exit_code == 0);
    auto report = nlohmann::json::parse(r.stdout_text);
    CHECK(report["pass"] == true);

    auto o = run_cli("verify --builtin e1 --param gamma1=0.2 gamma2=0.4 --suite dynamics");
    CHECK(o.exit_code == 0);
}

TEST_CASE("custom lagrangian config file round-trips through verify") {
    const fs::path custom = scratch_dir() / "custom.json";
    std::ofstream(custom) << R"({
        "kind": "lagrangian",
        "n": 1, "qcount": 2,
        "lagrangian": "v1^2/2 - q1^4/4 - k*z1 - k*z2",
        "params": {"k": 0.05},
        "initial": [1.0, 0.5, 0.0, 0.0],
        "horizon": 5.0
    })";
    auto r = run_cli("verify --config " + custom.string() + " --suite dynamics");
    CHECK(r.exit_code == 0);
    auto report = nlohmann::json::parse(r.stdout_text);
    CHECK(report["model"] == "custom-lagrangian");
    CHECK(report["pass"] == true);
}

TEST_CASE("QCONTACT_TOL environment variable overrides the tolerance") {
    // an absurdly tight tolerance makes even the exact checks fail
    const std::string cmd = std::string("QCONTACT_TOL=1e-30 ") + QCONTACT_CLI_PATH +
                            " verify --builtin two-contact-r4 --suite structure > " +
                            (scratch_dir() / "tight.json").string() + " 2> /dev/null";
    const int raw = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(raw) == 1);
    auto report = nlohmann::json::parse(slurp(scratch_dir() / "tight.json"));
    CHECK(report["pass"] == false);
}
