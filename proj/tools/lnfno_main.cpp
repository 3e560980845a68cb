#include "lnf/cli.hpp"

int main(int argc, char** argv) {
  return lnf::cli::run({argv + 1, argv + argc});
}
