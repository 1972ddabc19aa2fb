#pragma once

#include "poolcast/fitting.hpp"
#include "poolcast/pit.hpp"
#include "poolcast/sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace poolcast::io {

/// Writes to a temporary sibling and renames it over the target.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Sibling path with the extension replaced: ("out/a.json", "_hist.csv") -> "out/a_hist.csv".
std::filesystem::path sibling(const std::filesystem::path& path, std::string_view suffix);

/// Header `y,mu_1,sd_1,...,mu_k,sd_k` (any column order). Lines whose first
/// non-blank character is `#` and blank lines are skipped. Throws SchemaError
/// naming the offending line and column.
fit::Dataset parse_gaussian_csv(std::string_view text);
fit::Dataset read_gaussian_csv(const std::filesystem::path& path);
/// All components must be Gaussian. Values carry 17 significant digits.
std::string format_gaussian_csv(const fit::Dataset& data);

/// Binary forecasts: header `y,p_1,...,p_k` with y in {0, 1} and p_i the forecast probability of y = 0.
struct BinaryTable {
    std::vector<int> y;
    std::vector<std::vector<double>> p;  // p[i][j]: component i, case j
};
BinaryTable parse_binary_csv(std::string_view text);
std::string format_binary_csv(const BinaryTable& table);

enum class Schema { Gaussian, Binary, Unknown };
/// Inspects the header line only.
Schema detect_schema(std::string_view text);

/// Main file of a simulation: Gaussian or binary schema when the forecasts
/// allow it, otherwise the observations alone (`y`).
std::string format_simulation_csv(const sim::SimulatedData& data);
/// Latent variables, one row per case, with a leading `y` column.
std::string format_latents_csv(const sim::SimulatedData& data);

/// Flat key/value parameter record.
struct ParamRecord {
    PoolSpec spec;
    std::optional<fit::StdErrors> std_errors;
    bool converged = false;
    std::size_t iterations = 0;
    double mean_log_score = 0.0;
};

ParamRecord to_record(const fit::FitResult& fit);
std::string format_params(const ParamRecord& record);
/// Throws SchemaError for missing or ill-typed keys.
ParamRecord parse_params(std::string_view text);

/// Estimates with standard errors as a plain-text table.
std::string format_estimate_table(const ParamRecord& record);

struct EvaluationOutput {
    std::string method;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    fit::EvaluationReport report;
};
std::string format_evaluation_json(const EvaluationOutput& out);

std::string format_histogram_csv(const std::vector<pit::HistogramBin>& bins);
std::string format_reliability_csv(const std::vector<pit::ReliabilityBin>& bins);
/// Minimal static bar chart with a reference line at the uniform height.
std::string histogram_svg(const std::vector<pit::HistogramBin>& bins, std::string_view title);

}  // namespace poolcast::io
