#include "rarr/cli.hpp"

int main(int argc, char** argv) {
  return rarr::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
