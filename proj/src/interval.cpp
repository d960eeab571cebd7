#include "funnelpac/interval.hpp"

#include <ostream>

namespace funnelpac {

std::ostream& operator<<(std::ostream& os, const Interval& x) { return os << '[' << x.lo() << ", " << x.hi() << ']'; }

}  // namespace funnelpac
