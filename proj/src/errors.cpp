#include "mlpolar/errors.hpp"

namespace mlpolar::detail {

void throw_input(const std::string& what) { throw InputError(what); }

void throw_degenerate(const std::string& what) { throw DegenerateError(what); }

}  // namespace mlpolar::detail
