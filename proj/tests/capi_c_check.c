/*
 * Copyright 2026 The ddmm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
/* Compiles the public header as C and makes a few calls. */
#include "ddmm/ddmm.h"

#include <stdio.h>

int main(void) {
    double lo = 0.0, hi = 0.0;
    ddmm_grid_options options;
    if (ddmm_abi_version() != DDMM_ABI_VERSION) return 1;
    ddmm_grid_options_init(&options);
    if (options.fine_dims[2] != 1000) return 1;
    if (ddmm_ci_exact(0.5, 0.1, 10, &lo, &hi) != DDMM_OK) {
        fprintf(stderr, "%s\n", ddmm_last_error());
        return 1;
    }
    if (!(lo < 0.5 && 0.5 < hi)) return 1;
    if (ddmm_ci_exact(0.5, 0.1, 2, &lo, &hi) == DDMM_OK) return 1;
    printf("ok %s\n", ddmm_status_name(DDMM_OK));
    return 0;
}
