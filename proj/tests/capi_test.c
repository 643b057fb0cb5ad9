/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "pegp/pegp.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static pegp_config* small_config(const char* out_dir) {
  pegp_config* cfg = NULL;
  EXPECT(pegp_config_default(&cfg) == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "out_dir", out_dir) == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "holdout", "2") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "n_sequences", "6") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "frame_size", "12") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "pilot_sequences", "4") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "encoder_hidden", "8") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "decoder_hidden", "8") == PEGP_OK);
  EXPECT(pegp_config_set(cfg, "iterations", "3") == PEGP_OK);
  return cfg;
}

int main(int argc, char** argv) {
  const char* out = argc > 1 ? argv[1] : "capi_out";
  char path[1024];

  EXPECT(strlen(pegp_version()) > 0);
  EXPECT(strcmp(pegp_status_name(PEGP_ERR_IO), "i/o") == 0);
  EXPECT(pegp_exit_code(PEGP_OK) == 0);
  EXPECT(pegp_exit_code(PEGP_ERR_USAGE) == 1);
  EXPECT(pegp_exit_code(PEGP_ERR_NOT_FOUND) == 1);
  EXPECT(pegp_exit_code(PEGP_ERR_IO) == 2);
  EXPECT(pegp_exit_code(PEGP_ERR_NOT_POSITIVE_DEFINITE) == 3);

  /* Argument and config errors. */
  EXPECT(pegp_config_default(NULL) == PEGP_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(pegp_last_error()) > 0);
  pegp_config* cfg = small_config(out);
  EXPECT(pegp_config_set(cfg, "no_such_key", "1") == PEGP_ERR_CONFIG);
  EXPECT(pegp_config_set(cfg, "seed", "-3") == PEGP_ERR_CONFIG);
  EXPECT(pegp_config_set(cfg, "holdout", "99") == PEGP_ERR_CONFIG);
  pegp_config* missing = NULL;
  EXPECT(pegp_config_load("/nonexistent/pegp.cfg", &missing) == PEGP_ERR_NOT_FOUND);
  EXPECT(missing == NULL);

  char small[4];
  size_t needed = 0;
  EXPECT(pegp_config_get(cfg, "kernel", small, sizeof small, &needed) == PEGP_OK);
  EXPECT(needed == strlen("physics"));
  EXPECT(strcmp(small, "phy") == 0);

  snprintf(path, sizeof path, "%s.cfg", out);
  EXPECT(pegp_config_save(cfg, path) == PEGP_OK);
  pegp_config* reloaded = NULL;
  EXPECT(pegp_config_load(path, &reloaded) == PEGP_OK);
  char a[64];
  EXPECT(pegp_config_get(reloaded, "n_sequences", a, sizeof a, NULL) == PEGP_OK);
  EXPECT(strcmp(a, "6") == 0);
  pegp_config_free(reloaded);
  remove(path);

  /* Pipeline. */
  EXPECT(pegp_generate(cfg) == PEGP_OK);
  int64_t done = 0, diverged = 0;
  EXPECT(pegp_train(cfg, NULL, &done, &diverged) == PEGP_OK);
  EXPECT(done == 3);
  EXPECT(diverged == -1);
  EXPECT(pegp_config_set(cfg, "kernel", "se-baseline") == PEGP_OK);
  EXPECT(pegp_train(cfg, NULL, NULL, NULL) == PEGP_OK);

  char physics[1024], se[1024];
  snprintf(physics, sizeof physics, "%s/physics/final.pegp", out);
  snprintf(se, sizeof se, "%s/se-baseline/final.pegp", out);

  double rmse = 0.0;
  EXPECT(pegp_reconstruct(cfg, physics, 5, &rmse) == PEGP_OK);
  EXPECT(isfinite(rmse));
  EXPECT(pegp_reconstruct(cfg, physics, 17, &rmse) == PEGP_ERR_NOT_FOUND);
  EXPECT(pegp_reconstruct(cfg, "/nonexistent.pegp", 1, &rmse) == PEGP_ERR_NOT_FOUND);

  const char* both[2] = {physics, se};
  int pw = -1, sw = -1;
  EXPECT(pegp_extrapolate(cfg, both, 2, 50.0, &pw, &sw) == PEGP_OK);
  EXPECT(pw + sw == 2);
  EXPECT(pegp_extrapolate(cfg, both, 1, 50.0, &pw, &sw) == PEGP_ERR_USAGE);
  EXPECT(pegp_extrapolate(cfg, both, 2, 20.0, &pw, &sw) == PEGP_ERR_INVALID_ARGUMENT);
  EXPECT(pegp_kernel_heatmap(cfg) == PEGP_OK);

  /* Model handle. */
  pegp_model* model = NULL;
  EXPECT(pegp_model_load(physics, &model) == PEGP_OK);
  EXPECT(strcmp(pegp_model_kernel(model), "physics") == 0);
  EXPECT(pegp_model_iteration(model) == 3);
  EXPECT(pegp_model_latent_dim(model) == 2);
  EXPECT(pegp_model_kernel(NULL) == NULL);

  snprintf(path, sizeof path, "%s/data/seq_004.pegv", out);
  double mean[100], sd[100];
  size_t count = 0;
  EXPECT(pegp_model_posterior(model, path, 50.0, mean, sd, 10, &count) == PEGP_ERR_DIMENSION);
  EXPECT(count == 100);
  EXPECT(pegp_model_posterior(model, path, 50.0, mean, sd, 100, &count) == PEGP_OK);
  for (size_t i = 0; i < count; ++i) EXPECT(isfinite(mean[i]) && sd[i] >= 0.0);
  EXPECT(pegp_model_posterior(model, "/nonexistent.pegv", 50.0, mean, sd, 100, &count) != PEGP_OK);
  pegp_model_free(model);
  pegp_model_free(NULL);

  pegp_config_free(cfg);
  pegp_config_free(NULL);
  if (failures) {
    fprintf(stderr, "%d C API check(s) failed\n", failures);
    return 1;
  }
  printf("C API checks passed\n");
  return 0;
}
