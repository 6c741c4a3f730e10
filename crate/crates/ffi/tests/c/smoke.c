#include "cfi_forge.h"

int smoke(void) {
    size_t edges[] = {0, 1, 1, 2, 0, 2};
    size_t twist[] = {0, 1};
    CfiGraph *g = NULL, *h = NULL;
    int64_t value = 0;
    if (cfi_build_cfi(3, edges, 3, NULL, 0, &g) != CFI_STATUS_OK) return 1;
    if (cfi_build_cfi(3, edges, 3, twist, 1, &h) != CFI_STATUS_OK) return 1;
    if (cfi_solve(CFI_GAME_PEBBLE, g, h, 3, &value) != CFI_STATUS_OK) return 1;
    cfi_graph_free(g);
    cfi_graph_free(h);
    return value == CFI_VALUE_INFINITE;
}
