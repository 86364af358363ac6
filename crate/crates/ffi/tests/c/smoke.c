#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <math.h>
#include "rp_entropy.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); return 1; } } while (0)

int main(void) {
    RpState *state = NULL;
    CHECK(rp_state_random(4, 7, 1e-6, &state) == RP_STATUS_OK);
    CHECK(rp_state_dim(state) == 4);
    for (int i = 0; i < 3; i++) CHECK(rp_state_add_random_split(state, 2, 2, 11) == RP_STATUS_OK);

    double g[9];
    RpPsd verdict;
    CHECK(rp_gram(state, 2, NAN, 1e-10, g, 9, &verdict) == RP_STATUS_OK);
    CHECK(verdict.passed);

    CHECK(rp_state_add_axis_split(state, 3, 3) == RP_STATUS_INVALID_ARGUMENT);
    char msg[256];
    CHECK(rp_last_error(msg, sizeof msg) > 1);
    CHECK(strstr(msg, "3x3") != NULL);
    rp_state_free(state);

    RpReport *report = NULL;
    CHECK(rp_run("cft", "{\"pairs\": 50, \"grid_points\": 50}", 1, &report) == RP_STATUS_OK);
    CHECK(rp_report_exit_code(report) == 0);
    CHECK(strstr(rp_report_json(report), "\"command\": \"cft\"") != NULL);
    rp_report_free(report);

    printf("ok %s\n", rp_version());
    return 0;
}
