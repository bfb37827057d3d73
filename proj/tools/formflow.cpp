#include <iostream>

#include "CLI11.hpp"
#include "formflow/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"formflow: skew-symmetric form analysis of differential equations"};
    app.require_subcommand(1);

    std::string spec_path;
    bool timing = false;
    auto* analyze = app.add_subcommand("analyze", "Run the checks of a problem spec and print the report");
    analyze->add_option("spec", spec_path, "Problem spec (JSON)")->required();
    analyze->add_flag("--timing", timing, "Append elapsed wall time to the report");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a problem spec against the schema without running it");
    validate->add_option("spec", validate_path, "Problem spec (JSON)")->required();

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*version) {
            std::cout << "formflow " << formflow::kVersion << "\n";
            return 0;
        }
        if (*validate) {
            const auto spec = formflow::load_spec(validate_path);
            std::cout << "valid " << formflow::to_string(spec.kind) << " spec\n";
            return 0;
        }
        const auto spec = formflow::load_spec(spec_path);
        const auto report = formflow::run(spec);
        std::cout << formflow::render(report, timing);
        return report.exit_status();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
