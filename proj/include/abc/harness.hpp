#pragma once

// Command layer behind the abc_lab executable. Each command takes a resolved
// spec, writes its CSV/JSON outputs under the output directory and returns
// the record that goes into the run manifest.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "abc/state_space.hpp"

namespace abc::harness {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Context {
    std::filesystem::path out = "out";
    std::uint64_t seed = 1;
    int workers = 0;
    MemoryBudget budget{};
    bool force = false;
    bool quiet = false;
    /// Paths written by the current command, in order.
    std::vector<std::string> outputs;
};

struct GapSpec {
    std::vector<int> sizes{3, 6, 9};
    std::vector<double> betas{0.0};
    std::vector<std::string> graphs{"ring"};
    std::string method = "auto";
    bool export_matrix = false;
};

struct ScalingSpec {
    std::vector<int> sizes{6, 9, 12, 15};
    double beta = 0.0;
    std::string graph = "ring";
    std::string method = "auto";
};

struct MinimizerSpec {
    std::vector<double> betas{15.0};
    int grid = 1024;
};

struct HydroSpec {
    double beta = 15.0;
    int grid = 256;
    double horizon = 20.0;
    std::string scheme = "semi-implicit";
    double dt = 0.0;
    std::string init = "perturbed";
    double eps = 1e-3;
    int mode = 1;
    bool threshold = false;
    double threshold_lo = 10.0;
    double threshold_hi = 12.0;
};

struct SampleSpec {
    int sites = 9;
    double beta = 0.0;
    std::string graph = "ring";
    double horizon = 1e4;
    double burn_in = 100.0;
    double interval = 1.0;
    int replicas = 1;
    int batches = 32;
};

struct LlnSpec {
    int sites = 120;
    std::vector<double> betas{5.0, 15.0};
    double horizon = 2e4;
    double burn_in = 2e3;
    double interval = 5.0;
    int replicas = 2;
};

struct InterchangeSpec {
    int sites = 3;
    std::vector<double> betas{0.0};
    std::string oracle = "zero";
    bool allow_eight = false;
};

/// Writes out/<name>, refusing to overwrite an existing file without force.
std::ofstream open_output(Context& ctx, const std::string& name);

nlohmann::json cmd_gap(Context& ctx, const GapSpec& spec);
nlohmann::json cmd_scaling(Context& ctx, const ScalingSpec& spec);
nlohmann::json cmd_minimizer(Context& ctx, const MinimizerSpec& spec);
nlohmann::json cmd_hydro(Context& ctx, const HydroSpec& spec);
nlohmann::json cmd_sample(Context& ctx, const SampleSpec& spec);
nlohmann::json cmd_lln(Context& ctx, const LlnSpec& spec);
nlohmann::json cmd_interchange(Context& ctx, const InterchangeSpec& spec);
/// Quick end-to-end checks; "passed" is false when any check fails.
nlohmann::json cmd_selftest(Context& ctx);

/// Least-squares fit y = slope·x + intercept with RMS residual.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Parses argv, dispatches and returns the process exit code.
int run(int argc, char** argv);

}  // namespace abc::harness
