// Standalone generator for a demo corpus in the expected CSV schema.
// Handy when the real NetFlow export is not at hand.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "synthflow.hpp"

int main(int argc, char** argv) {
    CLI::App app{"flowgen - synthetic NetFlow CSV corpus generator"};
    std::string out;
    std::size_t rows = 600100;
    std::uint64_t seed = 99;
    app.add_option("--out", out, "output CSV path")->required();
    app.add_option("--rows", rows, "number of flow rows");
    app.add_option("--seed", seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        flowdetect::synth::write_synthetic_csv(out, {rows, seed});
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    std::printf("wrote %zu rows to %s\n", rows, out.c_str());
    return 0;
}
