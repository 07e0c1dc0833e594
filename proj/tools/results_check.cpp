// Validates a results CSV against the summary schema. Exit 0 when clean.
#include <fstream>
#include <iostream>

#include "factorcv/harness.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: results_check <results.csv>\n";
    return 2;
  }
  std::ifstream in(argv[1], std::ios::binary);
  if (!in) {
    std::cerr << "cannot open " << argv[1] << '\n';
    return 2;
  }
  const auto problems = factorcv::check_results_csv(in);
  for (const auto& p : problems) std::cerr << argv[1] << ": " << p << '\n';
  if (problems.empty()) std::cout << argv[1] << ": ok\n";
  return problems.empty() ? 0 : 1;
}
