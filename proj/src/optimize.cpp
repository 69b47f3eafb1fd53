#include "varescomb/optimize.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace varescomb::opt {

namespace {

constexpr double kHuge = 1e300;

void silence_gsl() {
    static std::once_flag flag;
    std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

struct NmContext {
    const Objective* f;
    std::vector<double> buffer;
};

double nm_eval(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<NmContext*>(params);
    for (std::size_t i = 0; i < ctx->buffer.size(); ++i) ctx->buffer[i] = gsl_vector_get(v, i);
    double value;
    try {
        value = (*ctx->f)(ctx->buffer);
    } catch (const std::exception&) {
        return kHuge;
    }
    return std::isfinite(value) ? value : kHuge;
}

struct GradContext {
    const GradObjective* f;
    std::vector<double> x;
    std::vector<double> grad;
    std::vector<double> best_x;
    double best = std::numeric_limits<double>::infinity();

    double eval(const gsl_vector* v) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = gsl_vector_get(v, i);
        double value = (*f)(x, grad);
        if (!std::isfinite(value)) return kHuge;
        if (value < best) {
            best = value;
            best_x = x;
        }
        return value;
    }
};

double g_f(const gsl_vector* v, void* params) { return static_cast<GradContext*>(params)->eval(v); }

void g_df(const gsl_vector* v, void* params, gsl_vector* df) {
    auto* ctx = static_cast<GradContext*>(params);
    ctx->eval(v);
    for (std::size_t i = 0; i < ctx->grad.size(); ++i) gsl_vector_set(df, i, ctx->grad[i]);
}

void g_fdf(const gsl_vector* v, void* params, double* f, gsl_vector* df) {
    auto* ctx = static_cast<GradContext*>(params);
    *f = ctx->eval(v);
    for (std::size_t i = 0; i < ctx->grad.size(); ++i) gsl_vector_set(df, i, ctx->grad[i]);
}

}  // namespace

Result nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options) {
    silence_gsl();
    const std::size_t n = x0.size();
    NmContext ctx{&f, std::vector<double>(n)};

    gsl_multimin_function fn{&nm_eval, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);
    gsl_vector_set_all(step, options.step);

    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, step);

    Result res;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && res.iterations < options.max_iter) {
        ++res.iterations;
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), options.size_tol);
    }
    res.converged = status == GSL_SUCCESS;
    res.value = s->fval;
    res.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.x[i] = gsl_vector_get(s->x, i);

    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return res;
}

Result nelder_mead_multistart(const Objective& f, const std::vector<std::vector<double>>& starts,
                              const NelderMeadOptions& options) {
    Result best;
    best.value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        auto r = nelder_mead(f, start, options);
        if (r.value < best.value) best = std::move(r);
    }
    return best;
}

Result bfgs(const GradObjective& f, std::vector<double> x0, const BfgsOptions& options) {
    silence_gsl();
    const std::size_t n = x0.size();
    GradContext ctx{&f, std::vector<double>(n), std::vector<double>(n), x0};

    gsl_multimin_function_fdf fn{&g_f, &g_df, &g_fdf, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, x0[i]);

    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(s, &fn, x, options.step, options.line_tol);

    Result res;
    int status = GSL_CONTINUE;
    while (status == GSL_CONTINUE && res.iterations < options.max_iter) {
        ++res.iterations;
        if (gsl_multimin_fdfminimizer_iterate(s) != GSL_SUCCESS) break;
        status = gsl_multimin_test_gradient(s->gradient, options.grad_tol);
    }
    res.converged = status == GSL_SUCCESS;
    res.x = ctx.best_x;
    res.value = ctx.best;

    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    return res;
}

Result minimize_scalar(const std::function<double(double)>& f, double lo, double hi, int bits) {
    boost::uintmax_t max_iter = 200;
    const auto [x, fx] = boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
    Result res;
    res.x = {x};
    res.value = fx;
    res.iterations = static_cast<int>(max_iter);
    res.converged = max_iter < 200;
    return res;
}

}  // namespace varescomb::opt
