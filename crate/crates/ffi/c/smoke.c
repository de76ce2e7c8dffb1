/* Solve a small scenario through the C ABI and print the last node. */
#include <stdio.h>

#include "crackdyn.h"

static const char *CONFIG =
    "[domain]\nh = 0.25\ndirichlet = bottom, top\n"
    "[crack]\npath = (0, 0.5), (1, 0.5)\nschedule = linear(0.25, 0.5)\n"
    "[material]\nv_lambda = 0.2\nv_mu = 0.3\n"
    "[data]\nu1_x = sin(pi*y)*x\n"
    "[time]\nT = 0.5\ndt = 0.025\n";

int main(void) {
    CdScenario *sc = NULL;
    CdTrajectory *mono = NULL, *fp = NULL;
    size_t iters = 0;
    double node[4], dist;

    if (cd_scenario_from_config(CONFIG, &sc) != CD_STATUS_OK) {
        fprintf(stderr, "config: %s\n", cd_last_error());
        return 1;
    }
    if (cd_solve_monolithic(sc, 0.0, &mono) != CD_STATUS_OK ||
        cd_solve_fixedpoint(sc, 0.0, 0.0, &fp, &iters) != CD_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", cd_last_error());
        return 1;
    }
    cd_trajectory_node(mono, cd_trajectory_len(mono) - 1, node);
    cd_trajectory_distance(mono, fp, &dist);
    printf("crackdyn %s: t = %g, |u| = %.6e, |Du| = %.6e, |v| = %.6e\n",
           cd_version(), node[0], node[1], node[2], node[3]);
    printf("fixed point: %zu iterations, distance to monolithic %.3e\n", iters, dist);

    if (cd_trajectory_node(mono, 1000, node) != CD_STATUS_ARGUMENT) return 1;
    printf("expected error: %s\n", cd_last_error());

    cd_trajectory_free(fp);
    cd_trajectory_free(mono);
    cd_scenario_free(sc);
    return 0;
}
