#ifndef PICA_ERROR_HPP
#define PICA_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pica {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shapes or indices that do not line up (image vs. index, map vs. image, ...).
struct StructuralError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Oracle failures are split by cause so callers can tell a dead endpoint from
// a misbehaving one.
struct OracleError : Error {
    using Error::Error;
};

struct TransportError : OracleError {
    using OracleError::OracleError;
};

struct ProtocolError : OracleError {
    using OracleError::OracleError;
};

struct ShapeMismatchError : OracleError {
    using OracleError::OracleError;
};

class EvaluationError : public Error {
public:
    EvaluationError(std::size_t eval_index, std::size_t generation, const std::string& cause)
        : Error("evaluation #" + std::to_string(eval_index) + " (generation " + std::to_string(generation) +
                ") failed: " + cause),
          eval_index_(eval_index), generation_(generation) {}

    std::size_t eval_index() const noexcept { return eval_index_; }
    std::size_t generation() const noexcept { return generation_; }

private:
    std::size_t eval_index_;
    std::size_t generation_;
};

} // namespace pica

#endif // PICA_ERROR_HPP
