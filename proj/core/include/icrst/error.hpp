#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace icrst {

// Every failure raised by the library derives from Error so callers can catch
// one type at the boundary (the CLI does) and still discriminate when needed.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class IntegrityError : public Error { using Error::Error; };
class DegenerateClassError : public Error { using Error::Error; };
class ManifestError : public Error { using Error::Error; };

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double loss, const std::string& what)
      : Error(what), step_(step), loss_(loss) {}
  std::size_t step() const noexcept { return step_; }
  double loss() const noexcept { return loss_; }

 private:
  std::size_t step_;
  double loss_;
};

}  // namespace icrst
