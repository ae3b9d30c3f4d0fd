#pragma once

// Core dense types for the herding toolkit. Everything numeric is templated
// on the scalar so the same code runs in float/double/long double; the rest
// of the library instantiates double.

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace herd {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using Vecd = Vec<double>;

// Interaction strengths: lambda_w pulls toward the market signal (the
// population mean position), lambda_x and lambda_v scale the pairwise
// position and velocity alignment sums.
template <class Scalar>
struct ModelParams {
  Scalar lambda_w = Scalar(1);
  Scalar lambda_x = Scalar(1);
  Scalar lambda_v = Scalar(1);
};

using ModelParamsd = ModelParams<double>;

template <class Scalar>
void validate(const ModelParams<Scalar>& p) {
  auto check = [](Scalar v, const char* name) {
    if (!(std::isfinite(double(v)) && v >= Scalar(0))) {
      throw std::invalid_argument(std::string("ModelParams.") + name +
                                  " must be finite and nonnegative");
    }
  };
  check(p.lambda_w, "lambda_w");
  check(p.lambda_x, "lambda_x");
  check(p.lambda_v, "lambda_v");
}

// Phase-space snapshot of N agents in d dimensions. Row i of each matrix is
// agent i; positions and velocities always share the same shape.
template <class Scalar>
struct ParticleState {
  Scalar t = Scalar(0);
  Mat<Scalar> positions;   // N x d
  Mat<Scalar> velocities;  // N x d

  Eigen::Index size() const { return positions.rows(); }
  Eigen::Index dim() const { return positions.cols(); }
};

using ParticleStated = ParticleState<double>;

template <class Scalar>
void validate(const ParticleState<Scalar>& s) {
  if (s.positions.rows() == 0 || s.positions.cols() == 0) {
    throw std::invalid_argument("ParticleState: needs at least one agent and one dimension");
  }
  if (s.positions.rows() != s.velocities.rows() ||
      s.positions.cols() != s.velocities.cols()) {
    throw std::invalid_argument("ParticleState: positions and velocities shapes differ");
  }
  if (!s.positions.allFinite() || !s.velocities.allFinite() ||
      !std::isfinite(double(s.t))) {
    throw std::invalid_argument("ParticleState: nonfinite entries");
  }
}

}  // namespace herd
