#pragma once

#include "poolcast/fitting.hpp"
#include "poolcast/sim.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace poolcast::study {

/// One reference comparison: |obtained - reference| <= band.
struct Check {
    std::string name;
    double obtained = 0.0;
    double reference = 0.0;
    double band = 0.0;
    bool pass = false;
};

struct ForecasterRow {
    std::string name;
    double train_log_score = 0.0;
    fit::EvaluationReport test;
};

struct StudyReport {
    std::uint64_t seed = 1;
    std::uint64_t test_seed = 0;
    std::size_t J = 500;
    sim::Regression dgp;
    fit::FitResult tlp;
    fit::FitResult slp;
    fit::FitResult blp;
    std::array<ForecasterRow, 6> rows;  // f1, f2, f3, TLP, SLP, BLP
    std::vector<Check> estimate_checks;
    std::vector<Check> dispersion_checks;
    std::vector<Check> score_checks;
    bool ordering_pass = false;
    /// Reference bands assume J = 500; smaller samples widen the uncertainty.
    bool small_sample_warning = false;
    bool all_pass = false;
};

/// Seed of the independent test sample derived from the training seed.
std::uint64_t test_seed_for(std::uint64_t seed) noexcept;

/// Simulate training and test samples of size J from the regression model,
/// fit TLP, SLP and BLP on training data and evaluate everything on test data.
StudyReport run_sim_study(std::uint64_t seed = 1, std::size_t J = 500, const sim::Regression& dgp = {});

/// Deterministic plain-text rendering.
std::string format_report(const StudyReport& report);

}  // namespace poolcast::study
