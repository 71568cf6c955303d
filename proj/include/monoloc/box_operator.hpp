#pragma once

#include "monoloc/arithmetic.hpp"
#include "monoloc/potential.hpp"
#include "monoloc/signed_log.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace monoloc {

// Finite box restriction H on sites h..h+n-1: symmetric tridiagonal, unit
// off-diagonals, diagonal f(x + j alpha). A site where the wrapped orbit
// coordinate is numerically zero and f(0) = -inf splits the box into
// independent Dirichlet blocks; the singular site itself contributes one
// eigenvalue at -inf.
struct BoxOperator {
    double x = 0;
    std::int64_t h = 0;
    std::int64_t n = 0;
    std::vector<double> diagonal;            // -inf at singular sites
    std::vector<char> singular;              // per-site flag
    std::vector<std::pair<int, int>> blocks; // [lo, hi) runs of regular sites
    int singular_count = 0;

    bool has_singular() const { return singular_count > 0; }
    double scale() const; // max(1, max |finite diagonal| + 2), bisection envelope
};

BoxOperator build_box(double x, const FrequencyModel& freq, const MonotonePotential& pot,
                      std::int64_t h, std::int64_t n);

// number of eigenvalues in [-inf, E), half-open; Sturm sign-change recurrence
// per block plus one count per singular site
int sturm_count(const BoxOperator& box, double E);

struct EigenData {
    std::vector<double> eigenvalues;               // sorted, -inf entries first
    std::vector<std::vector<double>> eigenvectors; // aligned with eigenvalues when requested
};
EigenData eigenvalues(const BoxOperator& box, bool want_vectors = false);

// i-th smallest eigenvalue (0-based, counting -inf entries), bisection to 1e-12 * scale
double eigenvalue_by_index(const BoxOperator& box, int i);

// eigenvalue nearest target plus its index
std::pair<int, double> eigenvalue_near(const BoxOperator& box, double target);

// eigenvector for an eigenvalue approximation: pivoted inverse iteration with
// Rayleigh refinement. Tails follow the decaying solution with relative (not
// absolute) accuracy, which is what the decay profiles need.
std::vector<double> eigenvector(const BoxOperator& box, double lambda_hat,
                                double* lambda_refined = nullptr);

// det(H - E) via the three-term recurrence in a rescaled common frame;
// boxes with singular sites contribute the product of block determinants
// with the singular rows dropped
SignedLog determinant(const BoxOperator& box, double E);

// resolvent entry (H_box - E)^{-1}(i, j), site indices relative to the window
// start. Zero when i and j fall in different Dirichlet blocks or on a singular
// site. Throws std::domain_error when E is an eigenvalue of the relevant block.
SignedLog greens_entry(const BoxOperator& box, double E, int i, int j);

struct GreensChecked {
    SignedLog value;
    double eigenvalue_gap; // |E - nearest eigenvalue of the containing block|
};
GreensChecked greens_entry_checked(const BoxOperator& box, double E, int i, int j);

// (1/n) log || prod of one-step transfer matrices ||, overflow-safe; independent
// growth-rate probe used to cross-check the spectral module
double transfer_lognorm(double x, const FrequencyModel& freq, const MonotonePotential& pot,
                        double E, std::int64_t n);

// pivoted solve of (T - lambda) v = rhs for symmetric tridiagonal T with unit
// off-diagonals; exposed for reuse by the patching module
void tridiag_shifted_solve(const std::vector<double>& diag, double lambda,
                           std::vector<double>& rhs_to_solution);

} // namespace monoloc
