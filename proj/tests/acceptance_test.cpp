// Acceptance gate: one line per criterion, nonzero exit on any failure.
#include <iostream>

#include "mpglab/acceptance.hpp"

int main() {
  mpg::AcceptanceOptions opt;
  opt.out_dir = "acceptance_out";
  const mpg::AcceptanceReport report =
      mpg::run_acceptance_suite(std::cout, opt);
  return report.all_passed() ? 0 : 1;
}
