#include <math.h>
#include <stdio.h>
#include <string.h>

#include "vesselsim.h"

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond);   \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  int8_t left = 0, right = 0;
  CHECK(vs_joint_outcome_ab(2.0, 1.0, VS_TIE_POLICY_ERROR, 0, &left, &right) == VS_STATUS_OK);
  CHECK(left == 1 && right == -1);
  CHECK(vs_joint_outcome_ab(1.0, 1.0, VS_TIE_POLICY_ERROR, 0, &left, &right) == VS_STATUS_DEGENERATE_TIE);
  CHECK(vs_last_error_message() != NULL);

  double value = 0.0;
  VsClassification cls;
  CHECK(vs_bell_statistic(1.0, 1.0, 1.0, -1.0, &value, &cls) == VS_STATUS_OK);
  CHECK(value == 4.0 && cls == VS_CLASSIFICATION_SUPER_QUANTUM);

  VsScenario *scenario = NULL;
  CHECK(vs_scenario_parse("{}", &scenario) == VS_STATUS_CONFIG_ERROR);
  CHECK(vs_scenario_parse("{\"seed\": 5, \"runs_per_pair\": 100}", &scenario) == VS_STATUS_OK);
  char *json = NULL;
  CHECK(vs_run(scenario, "vessel-chsh", 2, &json) == VS_STATUS_OK);
  CHECK(strstr(json, "\"value\": 4.0") != NULL);
  vs_string_free(json);
  vs_scenario_free(scenario);

  double re[11] = {0};
  re[5] = 1.0;
  VsState *state = NULL;
  CHECK(vs_state_new(re, NULL, 11, false, &state) == VS_STATUS_OK);
  size_t rank = 0;
  uint8_t x = 0;
  CHECK(vs_state_schmidt_rank(state, 1e-9, &rank) == VS_STATUS_OK && rank == 1);
  CHECK(vs_state_born_sample(state, 3, &x) == VS_STATUS_OK && x == 5);
  vs_state_free(state);

  printf("ok %s\n", vs_version());
  return 0;
}
