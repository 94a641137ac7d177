#pragma once

#include <stdexcept>
#include <string>

namespace qpk {

/// Mismatched vector/matrix dimensions.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An argument is outside its admissible domain.
class ParameterError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Requested register size exceeds the simulator capacity.
class CapacityError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Qubit or element index out of bounds.
class IndexError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Labels contain a single class where two are required.
class DegenerateLabelsError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Parameter initialization has zero norm; relative deviation undefined.
class DegenerateInitializationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An artifact does not match the configuration that is supposed to own it.
class ProvenanceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qpk
