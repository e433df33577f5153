#pragma once

#include <stdexcept>
#include <string>

namespace impress {

// A required input file or directory does not exist.
struct MissingInputError : std::runtime_error {
    explicit MissingInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// An input file exists but its contents violate the expected format.
struct DataFormatError : std::runtime_error {
    explicit DataFormatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace impress
