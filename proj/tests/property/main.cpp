// Standalone runner for the property suites. No input data needed.

#include <cstdint>
#include <cstdio>

#include "CLI11.hpp"
#include "properties.hpp"

int main(int argc, char** argv) {
  CLI::App app{"property suites"};
  std::uint64_t seed = 20240601;
  app.add_option("--seed", seed, "base seed");
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const auto& r : props::run_all(seed)) {
    std::printf("%s  %-36s %zu cases", r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.cases);
    if (!r.passed()) std::printf(", %zu failing; first %s", r.failures, r.first_failure.c_str());
    std::printf("\n");
    failed += !r.passed();
  }
  return failed ? 1 : 0;
}
