// polystab command-line front end.
//
// Exit codes: 0 success, 1 certification or assertion failure, 2 usage or config error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "polystab/polystab.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    bool strict = false;
    std::optional<std::uint64_t> seed;
    std::optional<long> n;
};

void add_common(CLI::App* cmd, Args& a) {
    cmd->add_option("--config", a.config, "JSON config (system schema plus tasks and tolerances)")->required();
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_flag("--strict", a.strict, "fail when any mode is uncertified");
    cmd->add_option("--seed", a.seed, "seed for random initial phases");
    cmd->add_option("--n", a.n, "truncation order for generator-based systems")->check(CLI::PositiveNumber);
}

void print_summary(const polystab::TaskResult& r, const std::filesystem::path& out) {
    if (auto it = r.files.find("report.txt"); it != r.files.end())
        std::cout << it->second;
    else
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.task << "\n";
    for (const auto& [name, content] : r.files)
        std::cout << "  wrote " << (out / name).string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral and decay-rate verification for observer error dynamics"};
    app.require_subcommand(1);
    Args args;
    for (const auto& verb : polystab::known_tasks())
        add_common(app.add_subcommand(verb, "run the " + verb + " task"), args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string verb = app.get_subcommands().front()->get_name();

    try {
        polystab::ConfigOverrides ov;
        ov.seed = args.seed;
        ov.n = args.n;
        ov.strict = args.strict;
        if (!args.out.empty())
            ov.output_dir = args.out;
        polystab::Pipeline pipe(polystab::parse_config(polystab::read_json_file(args.config), ov));
        const polystab::TaskResult r = pipe.run(verb);
        polystab::write_outputs(r, pipe.config().output_dir);
        print_summary(r, pipe.config().output_dir);
        return r.pass ? 0 : 1;
    } catch (const polystab::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const polystab::invalid_system& e) {
        std::cerr << "invalid system: " << e.what() << "\n";
        return 2;
    } catch (const polystab::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
