#pragma once

#include <stdexcept>
#include <string>

namespace bubblered {

struct SingularPoint : std::runtime_error {
  explicit SingularPoint(const std::string& what) : std::runtime_error(what) {}
};

struct CoincidentPoints : std::runtime_error {
  explicit CoincidentPoints(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidParams : std::invalid_argument {
  explicit InvalidParams(const std::string& what) : std::invalid_argument(what) {}
};

struct DegenerateDirection : std::runtime_error {
  explicit DegenerateDirection(const std::string& what) : std::runtime_error(what) {}
};

struct EmptySamples : std::invalid_argument {
  explicit EmptySamples(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidRefinement : std::invalid_argument {
  explicit InvalidRefinement(const std::string& what) : std::invalid_argument(what) {}
};

struct NonFiniteIntegrand : std::runtime_error {
  explicit NonFiniteIntegrand(const std::string& what) : std::runtime_error(what) {}
};

struct DivergentIntegral : std::invalid_argument {
  explicit DivergentIntegral(const std::string& what) : std::invalid_argument(what) {}
};

struct NonConvergent : std::runtime_error {
  explicit NonConvergent(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

struct NotContracting : std::runtime_error {
  explicit NotContracting(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bubblered
