#include <string>
#include <vector>

#include "s2s/pipeline.hpp"

int main(int argc, char** argv) {
  return s2s::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
