#ifndef SPARSEADV_ERROR_HPP
#define SPARSEADV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace sparseadv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Requested allocation is empty or beyond the configured memory ceiling.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Argument outside its admissible range (e.g. k > N).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Input has no usable content (e.g. all-zero top-k block).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Query budget exhausted; the attack must stop.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// No sample for some class, or otherwise unusable training input.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Could not reach or keep talking to an external oracle.
class TransportError : public Error {
 public:
  using Error::Error;
};

// External oracle answered, but the answer violates the wire protocol.
class ProtocolError : public TransportError {
 public:
  using TransportError::TransportError;
};

// Malformed input file; message names the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparseadv

#endif  // SPARSEADV_ERROR_HPP
