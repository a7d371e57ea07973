#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dryfric {

/// Thrown when a caller breaks a documented precondition (dimension
/// mismatch, invalid parameter, state off the constraint manifold).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The multiplier system lost unique solvability: the constraint
/// reactions are undefined (infinite, non-existent or non-unique).
class PainleveParadox : public std::runtime_error {
 public:
  PainleveParadox(const std::string& what, std::vector<std::string> contacts,
                  std::map<std::string, double> context = {})
      : std::runtime_error(what),
        contacts_(std::move(contacts)),
        context_(std::move(context)) {}

  const std::vector<std::string>& contacts() const { return contacts_; }
  /// Named scalars describing where it happened (mu, theta, t, det, ...).
  const std::map<std::string, double>& context() const { return context_; }

 private:
  std::vector<std::string> contacts_;
  std::map<std::string, double> context_;
};

class GimbalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration could not continue: constraint drift, singular inertia,
/// runaway event handling.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dryfric
