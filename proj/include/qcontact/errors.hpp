#ifndef QCONTACT_ERRORS_HPP
#define QCONTACT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcontact {

// Every failure raised by this library derives from Error, so callers can
// separate library diagnostics from genuine bugs with one catch clause.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- expression language -------------------------------------------------

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg + " (at offset " + std::to_string(position) + ")"), pos(position) {}
    std::size_t pos;
};

class IllegalCharacter : public ParseError {
public:
    IllegalCharacter(char c, std::size_t position)
        : ParseError(std::string("illegal character '") + c + "'", position) {}
};

class SyntaxError : public ParseError {
public:
    SyntaxError(const std::string& expected, std::size_t position)
        : ParseError("syntax error: expected " + expected, position) {}
};

class UnknownFunction : public ParseError {
public:
    UnknownFunction(const std::string& fn, std::size_t position)
        : ParseError("unknown function '" + fn + "'", position), name(fn) {}
    std::string name;
};

class EvalError : public Error {
public:
    using Error::Error;
};

class UnboundParameter : public EvalError {
public:
    explicit UnboundParameter(const std::string& param)
        : EvalError("unbound parameter '" + param + "'"), name(param) {}
    std::string name;
};

class DomainError : public EvalError {
public:
    using EvalError::EvalError;
};

class IndexOutOfRange : public EvalError {
public:
    using EvalError::EvalError;
};

// --- geometry / dynamics --------------------------------------------------

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// The stacked defining system for X_H has no (unique) solution at this point;
// the structure/Hamiltonian pair violates the hypotheses of the theory.
class InconsistentSystem : public Error {
public:
    InconsistentSystem(const std::string& msg, double res)
        : Error(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
    double residual;
};

class SingularLagrangian : public Error {
public:
    SingularLagrangian(const std::string& msg, double determinant)
        : Error(msg + " (det W = " + std::to_string(determinant) + ")"), det(determinant) {}
    double det;
};

class StepSizeUnderflow : public Error {
public:
    explicit StepSizeUnderflow(double t)
        : Error("step size underflow at t = " + std::to_string(t)), time(t) {}
    double time;
};

class NonFiniteState : public Error {
public:
    explicit NonFiniteState(double t)
        : Error("state became non-finite at t = " + std::to_string(t)), time(t) {}
    double time;
};

class NotAnExtremal : public Error {
public:
    explicit NotAnExtremal(double res)
        : Error("trajectory is not an extremal (max Herglotz residual " + std::to_string(res) + ")"),
          residual(res) {}
    double residual;
};

class NonPositiveEnergy : public Error {
public:
    explicit NonPositiveEnergy(double t)
        : Error("energy is not positive at t = " + std::to_string(t) + "; cannot fit decay rate"),
          time(t) {}
    double time;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace qcontact

#endif // QCONTACT_ERRORS_HPP
