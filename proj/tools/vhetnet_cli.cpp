#include <fstream>
#include <iostream>

#include "vhetnet/cli.hpp"

int main(int argc, char** argv) {
    using namespace vhetnet;
    try {
        harness::CliOutcome cli = harness::parse_cli(argc, argv);
        if (!cli.config) {
            (cli.exit_code == 0 ? std::cout : std::cerr) << cli.message;
            return cli.exit_code;
        }
        harness::ExperimentResult res = harness::run_experiment(*cli.config);
        if (!res.failures.empty()) std::cerr << res.failures.size() << " runs excluded\n";
        std::ifstream summary(cli.config->output_dir / "summary.txt");
        std::cout << summary.rdbuf();
        std::cout << "outputs in " << cli.config->output_dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "vhetnet: " << e.what() << "\n";
        return 1;
    }
}
