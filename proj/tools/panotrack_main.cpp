#include "panotrack/cli.hpp"

int main(int argc, char** argv) {
  return panotrack::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
