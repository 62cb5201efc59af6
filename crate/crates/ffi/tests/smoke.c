#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "msplace.h"

static char *read_file(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc((size_t)n + 1);
    size_t got = fread(buf, 1, (size_t)n, f);
    buf[got] = '\0';
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc != 2) return 2;
    char *text = read_file(argv[1]);
    if (!text) return 2;

    MsplaceScenario *scenario = NULL;
    if (msplace_scenario_from_json(text, &scenario) != MSPLACE_STATUS_OK) return 3;
    free(text);

    MsplaceResult *result = NULL;
    if (msplace_solve_mm(scenario, &result) != MSPLACE_STATUS_OK) return 4;
    double psi = 0.0;
    msplace_result_psi(result, &psi);

    char *json = NULL;
    msplace_result_assignment_json(result, &json);
    int feasible = 0;
    if (msplace_validate(scenario, json, &feasible) != MSPLACE_STATUS_OK) return 5;
    msplace_string_free(json);
    msplace_result_free(result);

    MsplaceScenario *bad = NULL;
    MsplaceStatus status = msplace_scenario_from_json("{", &bad);
    char *message = msplace_last_error();
    int has_message = message != NULL;
    msplace_string_free(message);

    msplace_scenario_free(scenario);
    printf("psi=%.3f feasible=%d malformed=%d message=%d\n", psi, feasible,
           status == MSPLACE_STATUS_MALFORMED, has_message);
    return fabs(psi - 2000.0 / 3.0) < 1e-6 && feasible == 1 ? 0 : 1;
}
