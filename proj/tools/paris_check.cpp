// Offline trace checker. Exit status 0 when every check passes, 1 on a
// violation, 2 on unreadable input.

#include <CLI11.hpp>

#include <iostream>

#include "paris/checker.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Check a PaRiS/BPR trace for causal-consistency violations"};
  std::string trace_path;
  std::size_t bound = paris::kDefaultOracleBound;
  std::string format = "text";
  app.add_option("trace", trace_path, "Trace file")->required();
  app.add_option("--oracle-bound", bound, "Run the brute-force oracle on histories with at most N versions (0 = off)");
  app.add_option("--report", format, "Report format")->check(CLI::IsMember({"json", "text"}));
  CLI11_PARSE(app, argc, argv);

  paris::CheckReport report;
  try {
    report = paris::check_all(paris::load_trace(trace_path), bound);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << (format == "json" ? report.to_json() : report.to_text());
  return report.pass() ? 0 : 1;
}
