#include "spinlets/error.hpp"

namespace spinlets {

void throw_argument(const std::string& what) { throw ArgumentError(what); }

}  // namespace spinlets
