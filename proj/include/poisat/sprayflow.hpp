#pragma once

#include <vector>

#include "poisat/field.hpp"
#include "poisat/linear.hpp"
#include "poisat/submanifold.hpp"

namespace poisat::sprayflow {

using field::BivectorField;
using linear::SkewForm;

struct CotangentState {
  Vector x;
  Vector xi;
};

struct SprayValue {
  Vector dx;
  Vector dxi;
};

// Flat spray (pi#_x(xi), 0).
SprayValue spray_eval(const BivectorField& pi, const CotangentState& s);
// 2n x 2n derivative of the spray in (x, xi).
Matrix spray_jacobian(const BivectorField& pi, const CotangentState& s);

inline constexpr int kMinSteps = 16;

struct FlowOptions {
  int steps = 1024;
  bool variational = true;
  bool trajectory = false;
  bool omega = false;  // Simpson average of (dphi^t)^T J dphi^t; needs even steps
};

struct FlowResult {
  CotangentState end;
  Matrix jac;                             // d phi^{t_end}, 2n x 2n
  std::vector<CotangentState> trajectory; // states at the RK4 nodes
  SkewForm omega;
  bool left_domain = false;
  double condition = 1.0;                 // of jac
};

// Fixed-step RK4 on the state and its variational equation.
FlowResult integrate(const BivectorField& pi, const CotangentState& s, double t_end, const FlowOptions& options);
FlowResult flow(const BivectorField& pi, const CotangentState& s, double t_end, int steps,
                bool keep_trajectory = false);
Vector exp_chi(const BivectorField& pi, const CotangentState& s, int steps);
SkewForm omega_chi(const BivectorField& pi, const CotangentState& s, int steps);

// max over RK4 nodes of |gamma'(t) - pi#_{gamma(t)}(xi(t))| with gamma' from
// fourth-order differences of the node positions.
double cotangent_path_residual(const BivectorField& pi, const CotangentState& s, int steps);
double cotangent_path_residual(const BivectorField& pi, const std::vector<CotangentState>& nodes, double h);

// <v1,xi2> - <v2,xi1> + pi(xi1,xi2) as a matrix on (v, xi).
SkewForm zero_section_omega(const Matrix& pi_at_x);

struct DualPairReport {
  int dim_sigma_x = 0;  // k + n
  int dim_x = 0;
  int dim_p = 0;         // k + rk TXperp
  double property1 = 0.0;  // max |Omega_X(S1, S2)|
  int rank_s2 = 0;
  int expected_rank_s2 = 0;
  int rank_triple = 0;     // rk(S1 cap K cap S2)
  int expected_rank_triple = 0;
  bool passed = false;
};

// Checks at the state (X(u), zeta) of T*M|_X, coordinates (u, zeta).
DualPairReport dual_pair_check(const BivectorField& pi, const submanifold::Chart& chart, const Vector& u,
                               const Vector& zeta, int steps, double tol = 1e-8,
                               double rank_tol = linear::kRankTol);

}  // namespace poisat::sprayflow
