#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(REGNEWTON_CLI) + " " + args + " 2>&1";
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return result;
    std::array<char, 512> buf{};
    while (fgets(buf.data(), static_cast<int>(buf.size()), pipe))
        result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("regnewton_cli_" + name);
}

} // namespace

TEST(Cli, QuadraticSmokeRun) {
    const auto r = run_cli("--problem quadratic --method reg_newton --H 1 --tol 1e-8");
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("status=converged iters="), std::string::npos) << r.output;
    EXPECT_NE(r.output.find(" violations=0"), std::string::npos) << r.output;
}

TEST(Cli, BogusMethodIsUsageError) {
    const auto r = run_cli("--method bogus");
    EXPECT_EQ(r.exit_code, 64);
    EXPECT_NE(r.output.find("unknown method"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("Usage"), std::string::npos) << r.output;
}

TEST(Cli, MissingDatasetIsUsageError) {
    const auto r = run_cli("--problem logistic --dataset missing.txt");
    EXPECT_EQ(r.exit_code, 64);
    EXPECT_NE(r.output.find("not found"), std::string::npos) << r.output;
}

TEST(Cli, UnknownFlagRejected) { EXPECT_EQ(run_cli("--colour blue").exit_code, 64); }

TEST(Cli, MaxItersExitCode) {
    EXPECT_EQ(run_cli("--problem cubic_worstcase --method reg_newton --max-iters 2 --tol 1e-12").exit_code, 2);
}

TEST(Cli, SolverFailureExitCode) {
    const auto r = run_cli("--problem logsumexp --method newton_armijo --n 500 --dim 200 --rho 0.05 --max-iters 50");
    EXPECT_EQ(r.exit_code, 3) << r.output;
    EXPECT_NE(r.output.find("status=line_search_stalled"), std::string::npos) << r.output;
}

TEST(Cli, WritesTraceAndHonorsConfigFile) {
    const auto cfg = temp_path("spec.txt");
    const auto out = temp_path("trace.csv");
    {
        std::ofstream f(cfg);
        f << "problem=least_squares\nmethod=lm\ndim=3\nc=2\n";
    }
    const auto r = run_cli("--config " + cfg.string() + " --check-invariants --out " + out.string());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    std::ifstream trace(out);
    std::string header;
    std::getline(trace, header);
    EXPECT_EQ(header, "k,residual_norm,grad_norm,lambda,step_norm,c_k");
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST(Cli, ExperimentBatch) {
    const auto dir = temp_path("batch");
    std::filesystem::remove_all(dir);
    const auto r = run_cli("--experiment logsumexp_rho --n 40 --dim 6 --max-iters 30 --out-dir " + dir.string());
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
    EXPECT_EQ(run_cli("--experiment nope").exit_code, 64);
    std::filesystem::remove_all(dir);
}
