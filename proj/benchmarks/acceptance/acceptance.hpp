#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spinlets::acceptance {

enum class Status { pass, fail, skipped };

std::string to_string(Status status);

struct CriterionResult {
    int id = 0;
    std::string name;
    Status status = Status::skipped;
    std::string measured;
    std::string tolerance;
    double seconds = 0.0;
};

struct Options {
    /// Fifty replications per scenario instead of ten.
    bool full = false;
    std::uint64_t seed = 1;
    /// Replaces the built-in reference design matrix text (used to inject failures).
    std::optional<std::filesystem::path> golden_design;
    /// Corpus size of the scale check.
    std::size_t scale_points = 50000;
    /// Criteria to execute; the rest are reported as skipped. Empty runs everything.
    std::set<int> only;
    /// Called after each criterion finishes.
    std::function<void(const CriterionResult&)> on_result;
    /// Progress lines for long criteria.
    std::function<void(const std::string&)> on_progress;
};

struct BenchReport {
    bool full = false;
    std::uint64_t seed = 1;
    std::vector<CriterionResult> criteria;  // ordered by id, one per criterion

    std::size_t total() const { return criteria.size(); }
    std::size_t passed() const;
    std::size_t failed() const;
};

inline constexpr int kCriterionCount = 13;

/// The reference h = 3 design matrix text, one space-separated row per leaf.
const std::string& reference_design_text();

BenchReport run_acceptance(const Options& options);

std::string report_to_json(const BenchReport& report);
std::string render_table(const BenchReport& report);

}  // namespace spinlets::acceptance
