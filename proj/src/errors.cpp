#include "tmc/errors.hpp"

#include <fmt/format.h>

namespace tmc {

PositionedError::PositionedError(const std::string& what, std::size_t line, std::size_t column)
    : Error(fmt::format("{}:{}: {}", line, column, what)), line_(line), column_(column), detail_(what) {}

UpdateOutOfBounds::UpdateOutOfBounds(const std::string& variable, std::int64_t value, const std::string& what)
    : ModelError(what), variable_(variable), value_(value) {}

StateBudgetExceeded::StateBudgetExceeded(std::size_t budget, std::size_t states_so_far)
    : Error(fmt::format("state budget of {} exceeded ({} states explored so far)", budget, states_so_far)),
      budget_(budget),
      states_so_far_(states_so_far) {}

}  // namespace tmc
