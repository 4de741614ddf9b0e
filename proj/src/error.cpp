#include "bat/error.hpp"

namespace bat {

void throw_data(const std::string& what) { throw DataError(what); }
void throw_dimension(const std::string& what) { throw DimensionError(what); }
void throw_numerical(const std::string& what) { throw NumericalError(what); }

}  // namespace bat
