#pragma once

#include "fedgraph/graph.hpp"
#include "fedgraph/models.hpp"

#include <string_view>
#include <utility>

namespace fedgraph {

enum class EdgeNorm { l1, l2 };

std::string_view to_string(EdgeNorm n) noexcept;
EdgeNorm parse_edge_norm(std::string_view name);

/// phi(v): sum |v_i| for l1, ||v||_2 for l2.
double phi(EdgeNorm norm, const Vector& v);

/// R(D Theta) = sum over edges of phi(theta_plus - theta_minus).
double fused_penalty(const DeviceGraph& g, const Matrix& theta, EdgeNorm norm);

/// Mean of the per-device empirical risks at the rows of `theta`.
double data_fidelity(const FederatedData& data, const Matrix& theta);

/// F(Theta) = |V|^{-1} sum_u M_u(theta_u) + lambda R(D Theta).
double objective(const DeviceGraph& g, const FederatedData& data,
                 const Matrix& theta, double lambda, EdgeNorm norm);

/// argmin_s tau phi(s) + 0.5 ||s - v||^2: soft-thresholding for l1, block
/// shrinkage for l2.
Vector prox_phi(EdgeNorm norm, const Vector& v, double tau);

/// Joint minimizer over (b1, b2) of
///   lambda phi(b1 - b2) + rho/2 (||a - b1||^2 + ||b - b2||^2).
///
/// Writing m = (a + b)/2 and d = a - b, the objective separates into
/// rho ||m - (b1+b2)/2||^2 + lambda phi(s) + rho/4 ||d - s||^2 with
/// s = b1 - b2, so the minimizer is (m + s/2, m - s/2) where
/// s = prox_phi(d, 2 lambda / rho).
std::pair<Vector, Vector> edge_prox(const Vector& a, const Vector& b,
                                    double lambda, double rho, EdgeNorm norm);

}  // namespace fedgraph
