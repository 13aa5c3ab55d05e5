#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace scaledreg {

/// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorClass {
    usage,      ///< bad input, bad arguments, violated preconditions
    numerical,  ///< solver could not deliver the requested accuracy
};

/**
 * Base of every exception thrown by the library.
 *
 * `name()` is a short machine-parsable identifier (e.g. "NoConvergence")
 * used on the CLI diagnostic stream.
 */
class Error : public std::runtime_error {
public:
    Error(std::string name, ErrorClass cls, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)), cls_(cls) {}

    const std::string& name() const noexcept { return name_; }
    ErrorClass error_class() const noexcept { return cls_; }

private:
    std::string name_;
    ErrorClass cls_;
};

#define SCALEDREG_DEFINE_ERROR(Name, Class)                                   \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(#Name, ErrorClass::Class, what) {}                        \
    };

SCALEDREG_DEFINE_ERROR(InvalidArgument, usage)
SCALEDREG_DEFINE_ERROR(NegativeArgument, usage)
SCALEDREG_DEFINE_ERROR(NonconvexUpdate, usage)
SCALEDREG_DEFINE_ERROR(NonL1Penalty, usage)
SCALEDREG_DEFINE_ERROR(NonpositiveSigma, usage)
SCALEDREG_DEFINE_ERROR(DegenerateDesign, usage)
SCALEDREG_DEFINE_ERROR(DegenerateOracle, usage)
SCALEDREG_DEFINE_ERROR(SupportTooLarge, usage)
SCALEDREG_DEFINE_ERROR(BudgetExceeded, usage)
SCALEDREG_DEFINE_ERROR(DimensionMismatch, usage)
SCALEDREG_DEFINE_ERROR(SigmaFloorHit, numerical)
SCALEDREG_DEFINE_ERROR(PathExhausted, numerical)
SCALEDREG_DEFINE_ERROR(NotBracketed, numerical)
SCALEDREG_DEFINE_ERROR(NegativeInnerProduct, numerical)

#undef SCALEDREG_DEFINE_ERROR

class ZeroColumn : public Error {
public:
    explicit ZeroColumn(std::size_t column)
        : Error("ZeroColumn", ErrorClass::usage,
                "column " + std::to_string(column) + " has zero norm"),
          column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& detail)
        : Error("ParseError", ErrorClass::usage,
                "row " + std::to_string(row) + ", col " + std::to_string(col) +
                    ": " + detail),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// Thrown by iterative solvers; carries how far they got and the best iterate.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations, double residual,
                  std::vector<double> best = {})
        : Error("NoConvergence", ErrorClass::numerical, what),
          iterations_(iterations), residual_(residual), best_(std::move(best)) {}
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }
    const std::vector<double>& best_iterate() const noexcept { return best_; }

private:
    int iterations_;
    double residual_;
    std::vector<double> best_;
};

} // namespace scaledreg
