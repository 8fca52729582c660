#pragma once

#include <stdexcept>
#include <string>

namespace mtgan {

// Exception families map onto the CLI exit codes (2 config, 3 data, 4 numerical).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

}  // namespace mtgan
