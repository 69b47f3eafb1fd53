#pragma once

#include <functional>
#include <span>
#include <vector>

namespace varescomb::opt {

struct Result {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;
/// Returns f(x) and writes the gradient into `grad`.
using GradObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct NelderMeadOptions {
    double step = 0.5;        // initial simplex edge
    double size_tol = 1e-7;   // stop when the simplex characteristic size falls below this
    int max_iter = 4000;
};

/// Simplex search (GSL nmsimplex2). Non-finite or throwing evaluations are
/// treated as +huge so that callers may map infeasible points to failure.
Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options = {});

/// Best of several Nelder-Mead runs, first-found on ties.
Result nelder_mead_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                              const NelderMeadOptions& options = {});

struct BfgsOptions {
    double step = 0.1;
    double line_tol = 0.1;
    double grad_tol = 1e-7;
    int max_iter = 400;
};

/// Quasi-Newton descent (GSL vector_bfgs2). Returns the best point seen.
Result bfgs(const GradObjective& f, std::vector<double> x0, const BfgsOptions& options = {});

/// Golden-section/Brent minimization of a 1-D function on [lo, hi].
Result minimize_scalar(const std::function<double(double)>& f, double lo, double hi, int bits = 40);

}  // namespace varescomb::opt
