#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace vppreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct input_error : std::runtime_error {
  explicit input_error(const std::string& m) : std::runtime_error(m) {}
};

struct singular_error : std::runtime_error {
  explicit singular_error(const std::string& m) : std::runtime_error(m) {}
};

struct budget_error : std::runtime_error {
  explicit budget_error(const std::string& m) : std::runtime_error(m) {}
};

struct internal_error : std::runtime_error {
  explicit internal_error(const std::string& m) : std::runtime_error(m) {}
};

inline constexpr double kInf = 1e30;

}  // namespace vppreg
