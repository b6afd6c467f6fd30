#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "cbm/cli/commands.hpp"

int main(int argc, char **argv)
{
#if defined(__GLIBC__)
  // Batch activations exceed the default mmap threshold; without this every
  // training step maps and unmaps them.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  std::vector<std::string> args(argv + 1, argv + argc);
  return cbm::cli::run_cli(args, std::cout, std::cerr);
}
