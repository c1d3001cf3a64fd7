/* C interface to the mird toolkit. All functions are synchronous; handles
 * are opaque and must be released with the matching free call. Failing calls
 * return a nonzero status and leave a message in mird_last_error(), which is
 * per-thread and valid until the next failing call on that thread. */
#ifndef MIRD_H
#define MIRD_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mird_status {
  MIRD_OK = 0,
  MIRD_ERR_USAGE = 1,  /* bad arguments or configuration */
  MIRD_ERR_RUNTIME = 2 /* I/O, data, or training failure */
} mird_status;

const char* mird_version(void);
const char* mird_last_error(void);

/* Run configuration, built from a config file and optional overrides. */
typedef struct mird_config mird_config;

mird_config* mird_config_new(void);              /* built-in defaults */
mird_config* mird_config_load(const char* path); /* NULL on failure */
void mird_config_free(mird_config* cfg);

/* key is "section.name" (for example "train.alpha"); unknown keys fail. */
mird_status mird_config_set(mird_config* cfg, const char* key,
                            const char* value);

typedef struct mird_metrics {
  double acc;  /* percent; NaN when undefined */
  double f1;   /* percent; NaN when undefined */
  double mae;
  double corr; /* NaN when undefined */
  int accf1_defined;
  int corr_defined;
} mird_metrics;

/* Trains one run and writes manifest, checkpoint, trace, and metrics into
 * out_dir. force overwrites an out_dir whose recorded dataset fingerprints
 * no longer match. out may be NULL. */
mird_status mird_train(const mird_config* cfg, const char* out_dir, int force,
                       mird_metrics* out);

mird_status mird_eval(const char* checkpoint_path, const char* dataset_path,
                      mird_metrics* out);

/* Runs the five-cell ablation grid; jobs > 1 runs cells on that many
 * threads. When table_out is non-NULL it receives the rendered table; free
 * it with mird_string_free. */
mird_status mird_ablate(const mird_config* cfg, const char* out_dir, int jobs,
                        char** table_out);

mird_status mird_mi_trace(const mird_config* cfg, const char* out_dir);

void mird_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* MIRD_H */
