#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "acceptance.hpp"

using namespace spinlets::acceptance;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST(Report, SelectedCriteriaPassOnReferenceInput) {
    Options opt;
    opt.only = {1, 2, 7};
    const BenchReport report = run_acceptance(opt);
    ASSERT_EQ(report.total(), static_cast<std::size_t>(kCriterionCount));
    EXPECT_EQ(report.criteria[0].status, Status::pass);
    EXPECT_EQ(report.criteria[1].status, Status::pass);
    EXPECT_EQ(report.criteria[6].status, Status::pass);
    EXPECT_EQ(report.criteria[2].status, Status::skipped);
    EXPECT_EQ(report.passed(), 3u);
    EXPECT_EQ(report.failed(), 0u);
    for (int id = 1; id <= kCriterionCount; ++id) EXPECT_EQ(report.criteria[id - 1].id, id);
}

TEST(Report, CorruptedGoldenDesignFailsOnlyThatCriterion) {
    std::string text = reference_design_text();
    const auto pos = text.find('1');
    ASSERT_NE(pos, std::string::npos);
    text[pos] = '0';
    Options opt;
    opt.only = {1, 2};
    opt.golden_design = temp_file("spinlets_bad_design.txt", text);
    std::vector<int> seen;
    opt.on_result = [&](const CriterionResult& r) { seen.push_back(r.id); };
    const BenchReport report = run_acceptance(opt);
    EXPECT_EQ(report.criteria[0].status, Status::fail);
    EXPECT_EQ(report.criteria[1].status, Status::pass);
    EXPECT_EQ(report.failed(), 1u);
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(kCriterionCount));
    std::filesystem::remove(*opt.golden_design);
}

TEST(Report, JsonAndTableListEveryCriterion) {
    Options opt;
    opt.only = {1};
    const BenchReport report = run_acceptance(opt);
    const auto doc = nlohmann::json::parse(report_to_json(report));
    ASSERT_EQ(doc.at("criteria").size(), static_cast<std::size_t>(kCriterionCount));
    EXPECT_EQ(doc.at("criteria")[0].at("status"), "PASS");
    EXPECT_EQ(doc.at("criteria")[5].at("status"), "SKIP");
    const std::string table = render_table(report);
    for (int id = 1; id <= kCriterionCount; ++id)
        EXPECT_NE(table.find("\n" + std::to_string(id) + " "), std::string::npos) << id;
}
