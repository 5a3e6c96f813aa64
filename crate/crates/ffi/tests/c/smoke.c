#include <math.h>
#include <stdio.h>
#include <string.h>

#include "graphdep.h"

int main(void) {
    size_t edges[] = {1, 2, 1, 3, 2, 3};
    GraphdepGraph *g = NULL;
    GraphdepProfile *c = NULL;
    double chi = 0.0, janson = 0.0;
    char *exact = NULL;

    if (graphdep_graph_new(9, edges, 3, &g) != GRAPHDEP_STATUS_OK) return 10;
    if (graphdep_profile_parse("uniform:1", 9, &c) != GRAPHDEP_STATUS_OK) return 11;
    if (graphdep_fractional_chromatic_number(g, GRAPHDEP_STRATEGY_ENUMERATED_LP, &chi, &exact) != GRAPHDEP_STATUS_OK) return 12;
    if (strcmp(exact, "3/1") != 0) return 13;
    graphdep_string_free(exact);

    if (graphdep_tail_bound(27.0, 3.0, &janson) != GRAPHDEP_STATUS_OK) return 14;
    if (fabs(janson - exp(-2.0 / 3.0)) > 1e-15) return 15;

    if (graphdep_forest_denominator(g, c, &janson) != GRAPHDEP_STATUS_KIND_ERROR) return 16;
    if (graphdep_last_error_message() == NULL) return 17;

    graphdep_profile_free(c);
    graphdep_graph_free(g);
    printf("chi_f = %g\n", chi);
    return 0;
}
