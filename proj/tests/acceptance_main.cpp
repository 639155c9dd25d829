// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>

#include "acceptance.hpp"

int main(int argc, char** argv) {
    namespace acc = spinlets::acceptance;
    acc::Options options;
    std::string json_path;
    for (int k = 1; k < argc; ++k) {
        const std::string arg = argv[k];
        if (arg == "--full") {
            options.full = true;
        } else if (arg == "--json" && k + 1 < argc) {
            json_path = argv[++k];
        } else if (arg == "--seed" && k + 1 < argc) {
            options.seed = std::strtoull(argv[++k], nullptr, 10);
        } else if (arg == "--golden-design" && k + 1 < argc) {
            options.golden_design = argv[++k];
        } else {
            std::cerr << "usage: " << argv[0] << " [--full] [--seed N] [--json PATH] [--golden-design PATH]\n";
            return 2;
        }
    }
    options.on_result = [](const acc::CriterionResult& r) {
        std::cout << acc::to_string(r.status) << "  criterion " << r.id << " (" << r.name << "): " << r.measured
                  << " [" << r.tolerance << "] in " << r.seconds << " s" << std::endl;
    };
    options.on_progress = [](const std::string& line) { std::cout << "    " << line << std::endl; };

    const acc::BenchReport report = acc::run_acceptance(options);
    if (!json_path.empty()) std::ofstream(json_path) << acc::report_to_json(report);
    std::cout << "\n" << acc::render_table(report);
    return report.failed() == 0 && report.passed() == report.total() ? 0 : 1;
}
