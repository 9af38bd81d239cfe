#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swerom {

using Scalar = double;
using Index = Eigen::Index;

template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorT<Scalar>;
using Matrix = MatrixT<Scalar>;
using SparseMatrix = Eigen::SparseMatrix<Scalar>;
using Triplet = Eigen::Triplet<Scalar>;

// The three prognostic variables, in storage order.
enum class Variable : int { U = 0, V = 1, Phi = 2 };
inline constexpr std::array<Variable, 3> kVariables{Variable::U, Variable::V, Variable::Phi};

enum class Direction : int { X = 0, Y = 1 };

// The six nonlinear advection terms. F?1 carry x-derivatives, F?2 y-derivatives.
enum class Term : int { F11 = 0, F12, F21, F22, F31, F32 };
inline constexpr std::array<Term, 6> kTerms{Term::F11, Term::F12, Term::F21,
                                            Term::F22, Term::F31, Term::F32};

inline constexpr int index_of(Variable v) { return static_cast<int>(v); }
inline constexpr int index_of(Term t) { return static_cast<int>(t); }

std::string_view name_of(Variable v);
std::string_view name_of(Term t);
Variable parse_variable(std::string_view s);
Term parse_term(std::string_view s);

// Equation whose right-hand side the term appears in (F1x -> u', ...).
inline constexpr Variable equation_of(Term t) {
  return static_cast<Variable>(index_of(t) / 2);
}
inline constexpr Direction direction_of(Term t) {
  return static_cast<Direction>(index_of(t) % 2);
}

// Error hierarchy. The CLI maps ConfigError to exit code 2 and
// NumericalError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FileFormatError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, double residual, int iterations)
      : NumericalError(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace swerom
