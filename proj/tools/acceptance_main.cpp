// Standalone acceptance driver: one PASS/FAIL line per criterion.
#include <cstdlib>
#include <iostream>
#include <string>

#include "vsbbm/acceptance.hpp"
#include "vsbbm/runner.hpp"

int main(int argc, char** argv) {
  const std::string suite = argc > 1 ? argv[1] : "all";
  vsbbm::AcceptanceOptions o;
  o.threads = vsbbm::resolve_threads(std::nullopt);
  if (argc > 2) o.seed = std::strtoull(argv[2], nullptr, 10);
  try {
    const auto results = vsbbm::run_acceptance(suite, o, std::cout);
    for (const auto& r : results) {
      if (!r.pass) return 1;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: vsbbm_acceptance [suite [seed]]\n" << e.what() << '\n';
    return 2;
  }
}
