#pragma once

#include <stdexcept>
#include <string>

namespace fedcox {

// Malformed or inconsistent caller input (dimension mismatch, bad config,
// unparseable file). The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A dataset that carries no information for partial-likelihood fitting,
// e.g. it has no observed events.
class DegenerateFit : public std::runtime_error {
public:
    explicit DegenerateFit(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedcox
