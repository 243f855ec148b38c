#include "pdl/kernel/errors.hpp"

#include <utility>

namespace pdl {

InvariantViolation::InvariantViolation(const std::string& what, std::string dump)
    : Error(what), dump_(std::move(dump)) {}

} // namespace pdl
