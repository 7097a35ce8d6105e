#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fixture_recorder.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Records protocol request/response fixtures from the stub backends"};
    std::string stubs_path;
    std::string out_path;
    app.add_option("--stubs", stubs_path, "stub configuration JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_path, "output JSON-lines file")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(stubs_path);
        const auto config = m3kg::stubs::parse_stub_config(nlohmann::json::parse(in));
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        out << m3kg::tools::to_jsonl(m3kg::tools::record_exchanges(config));
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 0;
}
