/* tractorlab C API.
 *
 * A run is described by a JSON config ("version": 1) held in an opaque
 * tl_config handle; tl_run executes one command on it and returns an opaque
 * tl_result holding the JSON document and, where the command has one, a CSV
 * table. All strings are UTF-8 and owned by the handle that returned them.
 */
#ifndef TRACTORLAB_H
#define TRACTORLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define TL_API __declspec(dllexport)
#else
#define TL_API __attribute__((visibility("default")))
#endif

typedef enum tl_status {
    TL_OK = 0,
    TL_ERR_INTERNAL = 1,
    TL_ERR_NUMERIC = 2,      /* numerical failure */
    TL_ERR_UNKNOWN_NAME = 3, /* unknown catalog name */
    TL_ERR_SCHEMA = 4        /* invalid config */
} tl_status;

typedef struct tl_config tl_config;
typedef struct tl_result tl_result;

TL_API const char* tl_version(void);

/* parse and validate a config document */
TL_API tl_status tl_config_create(const char* json, tl_config** out);
/* set a dotted path ("circle.t_end", "samples.0"); value is JSON text, or a bare string */
TL_API tl_status tl_config_set(tl_config* cfg, const char* path, const char* value);
/* JSON text at a dotted path, or "" when absent; valid until the next call on cfg */
TL_API const char* tl_config_get(const tl_config* cfg, const char* path);
/* canonical JSON of the current config */
TL_API const char* tl_config_json(const tl_config* cfg);
TL_API void tl_config_free(tl_config* cfg);

/* command: "report" | "circle" | "invariance" | "scan" | "residuals"; threads >= 1 */
TL_API tl_status tl_run(const tl_config* cfg, const char* command, int threads, tl_result** out);
TL_API const char* tl_result_json(const tl_result* res);
/* empty string when the command has no table */
TL_API const char* tl_result_csv(const tl_result* res);
TL_API void tl_result_free(tl_result* res);

/* message of the last failed call on this thread ("" if none) */
TL_API const char* tl_last_error(void);
TL_API const char* tl_status_name(tl_status s);

/* newline-separated catalog names; kind: "geometry" | "embedding" | "ky" */
TL_API const char* tl_catalog(const char* kind);

#ifdef __cplusplus
}
#endif

#endif
