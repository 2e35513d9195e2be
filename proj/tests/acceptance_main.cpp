// Acceptance suite: runs every verification criterion at its stated budget and
// tolerance, one pass/fail line per criterion. Exit status 0 only when all
// criteria pass.

#include <cstring>
#include <iostream>
#include <string>

#include "macrodim/experiments.hpp"
#include "macrodim/io.hpp"

int main(int argc, char** argv) {
    std::string filter;
    std::string report_path;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--filter") && i + 1 < argc) filter = argv[++i];
        if (!std::strcmp(argv[i], "--report") && i + 1 < argc) report_path = argv[++i];
    }
    const auto report = macrodim::run_verify(macrodim::default_verify_config(), filter);
    std::cout << report.table;
    if (!report_path.empty())
        macrodim::write_file_atomic(report_path, report.canonical.dump(2) + "\n");
    return report.all_pass ? 0 : 1;
}
