#pragma once

namespace zdpool::tol {

// Row sums, probability ranges and exact-construction identities.
inline constexpr double kStructural = 1e-12;
// Equalities between two analytic routes (determinant vs stationary vector).
inline constexpr double kAnalytic = 1e-8;
// Seeded simulation vs analytic value.
inline constexpr double kMonteCarlo = 0.01;
// Payoff denominators below this are treated as singular.
inline constexpr double kSingular = 1e-14;

}  // namespace zdpool::tol
