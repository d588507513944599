/* Solves a small classical Boussinesq problem through the C interface. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "travelwave.h"

static const char *CONFIG =
    "[model]\n"
    "kind = \"boussinesq\"\n"
    "family = \"classical\"\n"
    "speed = 1.3\n"
    "[grid]\n"
    "half_length = 32.0\n"
    "points = 256\n"
    "[accel]\n"
    "kind = \"vem\"\n"
    "method = \"mpe\"\n"
    "kappa = 5\n"
    "[stopping]\n"
    "tol = 1e-12\n"
    "max_iters = 200\n";

#define CHECK(call)                                                        \
    do {                                                                   \
        TwStatus s_ = (call);                                              \
        if (s_ != TW_STATUS_OK) {                                          \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,        \
                    tw_last_error());                                      \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    TwExperiment *exp = NULL;
    TwSolution *sol = NULL;
    size_t dim = 0;
    TwSummary summary;
    CHECK(tw_experiment_from_toml(CONFIG, &exp));
    CHECK(tw_experiment_dim(exp, &dim));
    CHECK(tw_experiment_solve(exp, &sol));
    CHECK(tw_solution_summary(sol, &summary));
    if (summary.reason != TW_TERMINATION_CONVERGED || !(summary.final_res < 1e-12)) {
        fprintf(stderr, "did not converge\n");
        return 1;
    }
    double *state = malloc(dim * sizeof(double));
    double residual = 0.0;
    CHECK(tw_solution_state(sol, state, dim));
    CHECK(tw_experiment_residual(exp, state, dim, &residual));
    if (fabs(residual - summary.final_res) > 1e-14) {
        fprintf(stderr, "residual mismatch\n");
        return 1;
    }
    if (tw_experiment_residual(exp, state, dim - 1, &residual) != TW_STATUS_LENGTH_MISMATCH) {
        fprintf(stderr, "length mismatch not reported\n");
        return 1;
    }
    printf("travelwave %s: %zu iterations, residual %.3e\n", tw_version(), summary.iterations,
           summary.final_res);
    free(state);
    tw_solution_free(sol);
    tw_experiment_free(exp);
    return 0;
}
