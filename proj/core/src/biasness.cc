// Copyright 2026 The uend Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uend/biasness.h"

#include <algorithm>
#include <cmath>

#include "uend/error.h"

namespace uend {
namespace {

// x log_N x with the 0 log 0 = 0 convention.
double xlogx(double x, double log_base) {
  return x > 0.0 ? x * std::log(x) / log_base : 0.0;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

void check_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw ParameterError("rho must lie in (0, 1], got " + std::to_string(rho));
  }
}

// Diagonal and off-diagonal cell masses of marginal_by, times N.
struct CellMass {
  double diagonal;
  double off_diagonal;
};

CellMass cell_mass(const TheoryParams& p) {
  const double n = p.n_t;
  return {p.rho * (1.0 - p.eps) + p.phi * (1.0 - p.rho),
          ((1.0 - p.phi) * (1.0 - p.rho) + p.rho * p.eps) / (n - 1.0)};
}

}  // namespace

void TheoryParams::validate() const {
  check_rho(rho);
  if (!(phi >= 0.0 && phi <= 1.0)) throw ParameterError("phi must lie in [0, 1]");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
  if (n_t < 3) throw ParameterError("n_t must be >= 3");
}

double nmi_perfect(double rho, int n_t) {
  check_rho(rho);
  if (n_t < 2) throw ParameterError("n_t must be >= 2");
  const double log_n = std::log(static_cast<double>(n_t));
  // 1 + rho log rho + (1-rho) log((1-rho)/(N-1)), all base N.
  const double v = 1.0 + xlogx(rho, log_n) + xlogx(1.0 - rho, log_n) -
                   (1.0 - rho) * std::log(n_t - 1.0) / log_n;
  return clamp_unit(v);
}

JointTBY joint_tby(const TheoryParams& params) {
  params.validate();
  const int n = params.n_t;
  const double nd = n;
  const double rho = params.rho;
  const double phi = params.phi;
  const double eps = params.eps;
  const double aligned_correct = rho * (1.0 - eps);
  const double conflicting_correct = (1.0 - phi) * (1.0 - rho) / (nd - 1.0);
  const double conflicting_biased = phi * (1.0 - rho) / (nd - 1.0);
  const double aligned_wrong = eps * rho * rho / (nd - 2.0 + rho);
  const double all_distinct = eps * rho * (1.0 - rho) / ((nd - 1.0) * (nd - 2.0 + rho));

  JointTBY out;
  out.n_t = n;
  out.p.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int b = 0; b < n; ++b) {
      for (int y = 0; y < n; ++y) {
        double v = 0.0;
        if (t == b && b == y) {
          v = aligned_correct;
        } else if (t != b && y == t) {
          v = conflicting_correct;
        } else if (t != b && y == b) {
          v = conflicting_biased;
        } else if (t == b && y != t) {
          v = aligned_wrong;
        } else {
          v = all_distinct;
        }
        out.p[static_cast<std::size_t>((t * n + b) * n + y)] = v / nd;
      }
    }
  }
  return out;
}

JointBY marginal_by(const TheoryParams& params) {
  params.validate();
  const int n = params.n_t;
  const CellMass mass = cell_mass(params);
  JointBY out;
  out.table = Matrix::Constant(n, n, mass.off_diagonal / n);
  out.table.diagonal().setConstant(mass.diagonal / n);
  return out;
}

double nmi_by(const TheoryParams& params) {
  params.validate();
  const double n = params.n_t;
  const double log_n = std::log(n);
  const CellMass mass = cell_mass(params);
  // With uniform marginals, I(B,Y) / log N over N diagonal cells of mass D/N
  // and N(N-1) off-diagonal cells of mass O/N.
  const double v = xlogx(mass.diagonal, log_n) + (n - 1.0) * xlogx(mass.off_diagonal, log_n) +
                   mass.diagonal + (n - 1.0) * mass.off_diagonal;
  return clamp_unit(v);
}

JointBY empirical_joint(std::span<const int> bias_labels, std::span<const int> predictions,
                        int n_t) {
  if (bias_labels.empty()) throw ParameterError("empty label sequence");
  if (bias_labels.size() != predictions.size()) {
    throw ParameterError("bias and prediction sequences differ in length");
  }
  if (n_t < 2) throw ParameterError("n_t must be >= 2");
  JointBY out;
  out.table = Matrix::Zero(n_t, n_t);
  for (std::size_t i = 0; i < bias_labels.size(); ++i) {
    const int b = bias_labels[i];
    const int y = predictions[i];
    if (b < 0 || b >= n_t || y < 0 || y >= n_t) {
      throw ParameterError("label out of range for n_t = " + std::to_string(n_t));
    }
    out.table(b, y) += 1.0;
  }
  out.table /= static_cast<double>(bias_labels.size());
  return out;
}

BiasnessReport estimate_phi(const JointBY& joint, double rho, double eps) {
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("estimate_phi needs rho in (0, 1)");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("eps must lie in [0, 1]");
  const int n = joint.n_t();
  if (n < 3 || joint.table.cols() != n) throw ParameterError("joint must be square with n_t >= 3");
  if ((joint.table.array() < 0.0).any()) throw ParameterError("joint has negative entries");
  if (std::abs(joint.table.sum() - 1.0) > 1e-9) throw ParameterError("joint does not sum to 1");

  const double nd = n;
  const double one_minus_rho = 1.0 - rho;
  // Ranges of P(b,y) that map onto phi in [0,1]; at eps = 0 they are
  // [rho/N, 1/N] on the diagonal and [0, (1-rho)/(N(N-1))] elsewhere.
  const double diag_lo = rho * (1.0 - eps) / nd;
  const double diag_hi = (rho * (1.0 - eps) + one_minus_rho) / nd;
  const double off_lo = eps * rho / (nd * (nd - 1.0));
  const double off_hi = (one_minus_rho + eps * rho) / (nd * (nd - 1.0));

  BiasnessReport report;
  report.rho = rho;
  report.eps = eps;
  report.phi_cells.resize(n, n);
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < n; ++y) {
      double phi = 0.0;
      if (b == y) {
        const double p = std::clamp(joint.table(b, y), diag_lo, diag_hi);
        phi = p * nd / one_minus_rho - rho * (1.0 - eps) / one_minus_rho;
      } else {
        const double p = std::clamp(joint.table(b, y), off_lo, off_hi);
        phi = 1.0 - p * (nd * nd - nd) / one_minus_rho + eps * rho / one_minus_rho;
      }
      report.phi_cells(b, y) = clamp_unit(phi);
    }
  }
  report.phi_global = report.phi_cells.mean();

  const Vector bias_marginal = joint.table.rowwise().sum();
  const RowVector pred_marginal = joint.table.colwise().sum();
  const double tv_bias = 0.5 * (bias_marginal.array() - 1.0 / nd).abs().sum();
  const double tv_pred = 0.5 * (pred_marginal.array() - 1.0 / nd).abs().sum();
  if (tv_bias > 0.05) {
    report.warnings.push_back("bias marginal deviates from uniform (TV " +
                              std::to_string(tv_bias) + ")");
  }
  if (tv_pred > 0.05) {
    report.warnings.push_back("prediction marginal deviates from uniform (TV " +
                              std::to_string(tv_pred) + ")");
  }

  report.nmi_by = nmi_by({rho, report.phi_global, eps, n});
  report.nmi_perfect = nmi_perfect(rho, n);
  return report;
}

}  // namespace uend
