#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  const auto result = scalekit::cli::run(std::vector<std::string>(argv + 1, argv + argc));
  std::cout << result.summary;
  std::cerr << result.error;
  return result.exit_code;
}
