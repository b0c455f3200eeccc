#include <math.h>
#include <stdio.h>
#include "nonlinq.h"

#define CHECK(x) do { if (!(x)) { fprintf(stderr, "failed: %s\n", #x); return 1; } } while (0)

int main(void) {
    NqSystem *sys = NULL;
    CHECK(nq_system_new(0.91, 0.057, 0.5, 0.0, &sys) == NQ_STATUS_OK);
    NqRegimeReport r;
    CHECK(nq_classify_regime(sys, &r) == NQ_STATUS_OK);
    CHECK(r.regime == NQ_REGIME_UNBROKEN);
    CHECK(fabs(r.j_ep - 0.2275) < 1e-12);

    double fpt = 0.0;
    int found = 0;
    CHECK(nq_first_passage_time(sys, 20.0, 1e-3, &fpt, &found) == NQ_STATUS_OK);
    CHECK(found == 1 && fpt > 0.0);

    NqSystem *bad = NULL;
    CHECK(nq_system_new(-1.0, 0.057, 0.5, 0.0, &bad) == NQ_STATUS_INVALID_INPUT);
    CHECK(bad == NULL);
    char msg[256];
    CHECK(nq_last_error_message(msg, sizeof msg) > 0);

    nq_system_free(sys);
    printf("ok\n");
    return 0;
}
