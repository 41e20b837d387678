#pragma once

#include <stdexcept>
#include <string>

namespace gdelt {

// Data and configuration problems surface as Error; the CLI maps it to exit 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gdelt
