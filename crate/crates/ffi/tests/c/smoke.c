#include <stdio.h>
#include <string.h>

#include "normcase.h"

static const char *SPEC =
    "fact member : boolean\n"
    "act lend\n"
    "  actor librarian\n"
    "  recipient member\n"
    "  conditioned by member\n";

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            const char *e = nc_last_error_message();                  \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, e ? e : "no error");                       \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    NcSpec *spec = NULL;
    NcState *state = NULL;
    NcActStatus status;
    char *json = NULL;

    CHECK(nc_spec_parse(SPEC, &spec) == NC_STATUS_OK);
    CHECK(nc_state_new(spec, NULL, "2024-03-01", &state) == NC_STATUS_OK);
    CHECK(nc_action_status(spec, state, "lend", &status) == NC_STATUS_OK);
    CHECK(status == NC_ACT_STATUS_INDEFINITE);
    CHECK(nc_state_assign(spec, state, "member", "true") == NC_STATUS_OK);
    CHECK(nc_action_status(spec, state, "lend", &status) == NC_STATUS_OK);
    CHECK(status == NC_ACT_STATUS_ALLOWED);
    CHECK(nc_action_status(spec, state, "burn", &status) == NC_STATUS_UNKNOWN_ACT);
    CHECK(nc_last_error_message() != NULL);
    CHECK(nc_execute(spec, state, "lend", NULL, NULL, &json) == NC_STATUS_OK);
    CHECK(json == NULL);
    CHECK(nc_state_to_json(state, &json) == NC_STATUS_OK);
    CHECK(strstr(json, "lend") != NULL);
    nc_string_free(json);

    nc_state_free(state);
    nc_spec_free(spec);
    printf("ok\n");
    return 0;
}
