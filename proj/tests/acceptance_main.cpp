// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

#include "fracwalk/acceptance.hpp"
#include "fracwalk/errors.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"fracwalk acceptance suite"};
    fracwalk::AcceptanceOptions opts;
    std::string fault = "none";
    std::string json_path;
    app.add_flag("--quick", opts.quick, "reduced trial counts, widened tolerances");
    app.add_option("--seed", opts.seed, "master seed");
    app.add_option("--only", opts.only, "criterion ids to run");
    app.add_option("--inject_fault", fault, "none | ignore_delta");
    app.add_option("--json", json_path, "also write the JSON report here");
    CLI11_PARSE(app, argc, argv);

    try {
        opts.fault = fracwalk::parse_fault(fault);
        nlohmann::json report = nlohmann::json::array();
        bool all = true;
        for (const auto& r : fracwalk::run_acceptance(opts, [](const fracwalk::CriterionResult& r) {
                 std::cout << fracwalk::format_line(r) << std::endl;
             })) {
            all = all && r.passed;
            report.push_back(fracwalk::to_json(r));
        }
        if (!json_path.empty()) {
            std::FILE* f = std::fopen(json_path.c_str(), "w");
            if (f) {
                const std::string s = report.dump(2);
                std::fwrite(s.data(), 1, s.size(), f);
                std::fclose(f);
            }
        }
        std::cout << (all ? "all criteria passed" : "some criteria FAILED") << std::endl;
        return all ? 0 : 1;
    } catch (const fracwalk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
}
