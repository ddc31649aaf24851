#include "genfil/cli.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

int write_files(const std::string& dir, const genfil::cli::Outcome& outcome, const std::string& report) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::cerr << "error: --out: cannot create '" << dir << "': " << ec.message() << "\n";
        return 2;
    }
    auto write = [&](const std::string& name, const std::string& content) {
        const auto path = std::filesystem::path(dir) / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) {
            std::cerr << "error: --out: cannot write '" << path.string() << "'\n";
            return false;
        }
        return true;
    };
    for (const auto& [name, content] : outcome.files) {
        if (!write(name, content)) return 2;
    }
    return write("report.json", report) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized filtrations and binomial asset pricing"};
    app.require_subcommand(1, 1);

    std::string scenario;
    genfil::cli::Options opt;
    std::optional<double> tolerance;
    std::string path;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "Scenario JSON file")->required();
        sub->add_option("--out", out_dir, "Directory for report.json and exported files");
        sub->add_option("--tolerance", tolerance, "Identity tolerance (overrides tolerances.eq)");
        sub->add_option("--free-q", opt.free_q, "Free transition probability on an invisible node, node=value");
    };
    for (const char* name : {"check", "price", "replicate", "arbitrage"}) {
        add_common(app.add_subcommand(name, std::string("Run the ") + name + " command"));
    }
    auto* experienced = app.add_subcommand("experienced", "Experienced path and tilde summary");
    add_common(experienced);
    experienced->add_option("--path", path, "Path as a bit string")->required();
    auto* exporter = app.add_subcommand("export", "Write lattice.dot, lattice.csv and measures.csv");
    add_common(exporter);
    exporter->add_option("--what", opt.exports, "lattice-dot, lattice-csv or measures-csv (default: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    opt.tolerance = tolerance;
    if (!path.empty()) opt.path = path;
    if (!out_dir.empty()) opt.out_dir = out_dir;

    const auto outcome = genfil::cli::run_command(command, scenario, opt);
    const std::string report = genfil::cli::render(outcome.report);
    std::cout << report;
    if (outcome.code == genfil::cli::ExitCode::input_error) {
        std::cerr << "error: " << outcome.report["results"]["error"]["message"].get<std::string>() << "\n";
        return 2;
    }
    const std::string dir = opt.out_dir.value_or(command == "export" ? "." : "");
    if (!dir.empty()) {
        if (const int rc = write_files(dir, outcome, report); rc != 0) return rc;
    }
    return static_cast<int>(outcome.code);
}
