#include <math.h>
#include <stdio.h>
#include "acsplit.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "line %d: %s\n", __LINE__, #cond);   \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    double v = 0.0;
    CHECK(acs_phi(1.0, 2.0, &v) == ACS_STATUS_OK);
    CHECK(fabs(v - 1.05497) < 1e-5);

    AcsOperator *op = NULL;
    CHECK(acs_operator_new(3, &op) == ACS_STATUS_OK);
    double x[3] = {1.0, 0.0, 0.0};
    double y[3];
    CHECK(acs_operator_apply_laplacian(op, x, y, 3) == ACS_STATUS_OK);
    CHECK(y[0] == -32.0 && y[1] == 16.0 && y[2] == 0.0);
    CHECK(acs_operator_apply_laplacian(op, x, y, 2) == ACS_STATUS_MESH_MISMATCH);
    acs_operator_free(op);

    AcsExperiment *exp = NULL;
    CHECK(acs_experiment_from_config("n_interior = 5\nn_replicas = 8\n", &exp) == ACS_STATUS_OK);
    CHECK(acs_experiment_set_scheme(exp, ACS_METHOD_M3, ACS_LINEAR_EXPO) == ACS_STATUS_OK);
    AcsErrorRow row;
    CHECK(acs_strong_error(exp, 0.125, &row) == ACS_STATUS_OK);
    CHECK(row.n_valid == 8 && row.estimate > 0.0 && row.std_error >= 0.0);
    acs_experiment_free(exp);

    CHECK(acs_experiment_from_config("bogus\n", &exp) == ACS_STATUS_CONFIG);
    printf("ok %s: %s\n", acs_version(), acs_last_error_message());
    return 0;
}
