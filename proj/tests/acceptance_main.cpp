#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "krylov_td/validation.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  std::string suite = "full";
  bool quiet = false;
  app.add_option("--suite", suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  app.add_flag("--quiet", quiet, "One line per criterion");
  CLI11_PARSE(app, argc, argv);
  const bool ok = krylov_td::run_validation(suite, std::cout, !quiet);
  std::cout << (ok ? "ALL PASS" : "SOME CRITERIA FAILED") << " (suite " << suite << ")\n";
  return ok ? 0 : 1;
}
