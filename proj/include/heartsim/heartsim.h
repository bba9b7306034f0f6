/*
 * heartsim C API: wearable heart-rate/SpO2 monitor simulation.
 *
 * All objects are opaque handles created and released through this surface.
 * Functions returning hs_status use HS_OK for success; on failure,
 * hs_last_error() returns a thread-local description of what went wrong.
 * Strings returned as const char* are owned by the handle they came from
 * and stay valid until the next call on that handle or its release.
 */
#ifndef HEARTSIM_H
#define HEARTSIM_H

#include <stdint.h>

#ifndef HS_API
#if defined(_WIN32)
#define HS_API __declspec(dllexport)
#else
#define HS_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct hs_scenario hs_scenario;
typedef struct hs_result hs_result;
typedef struct hs_server hs_server;

typedef enum hs_status {
    HS_OK = 0,
    HS_ERR_INVALID_ARG = 1,
    HS_ERR_PARSE = 2,
    HS_ERR_VALIDATION = 3,
    HS_ERR_IO = 4,
    HS_ERR_RUNTIME = 5
} hs_status;

HS_API const char* hs_version(void);
HS_API const char* hs_status_name(hs_status status);
HS_API const char* hs_last_error(void);

/* --- scenarios --------------------------------------------------------- */

HS_API hs_status hs_scenario_load_file(const char* path, hs_scenario** out);
HS_API hs_status hs_scenario_load_string(const char* yaml_text, const char* name,
                                         hs_scenario** out);
HS_API void hs_scenario_free(hs_scenario* scenario);

HS_API const char* hs_scenario_name(const hs_scenario* scenario);
HS_API uint64_t hs_scenario_seed(const hs_scenario* scenario);
HS_API int64_t hs_scenario_duration_ms(const hs_scenario* scenario);

/* --- runs ------------------------------------------------------------- */

/* out_dir NULL runs without writing artifacts. */
HS_API hs_status hs_run(const hs_scenario* scenario, const char* out_dir, hs_result** out);

/* Loads report.json back from a previous run directory. */
HS_API hs_status hs_result_load(const char* run_dir, hs_result** out);
HS_API void hs_result_free(hs_result* result);

HS_API int64_t hs_result_uploads_attempted(const hs_result* result);
HS_API int64_t hs_result_uploads_received(const hs_result* result);
/* Returns 0 and writes the ratio when defined; returns 1 when undefined. */
HS_API int hs_result_success_ratio(const hs_result* result, double* out_ratio);
HS_API int64_t hs_result_alert_count(const hs_result* result);
HS_API int64_t hs_result_sms_sent(const hs_result* result);
HS_API double hs_result_endurance_hours(const hs_result* result);
HS_API double hs_result_kb_per_hour(const hs_result* result);
HS_API double hs_result_mb_per_day(const hs_result* result);
/* -1 when the battery never depleted during the run. */
HS_API int64_t hs_result_depleted_at_ms(const hs_result* result);

HS_API const char* hs_result_report_json(hs_result* result);

/* Comparison against the published reference figures. */
HS_API const char* hs_result_compare_json(hs_result* result);
HS_API const char* hs_result_compare_table(hs_result* result);
HS_API int hs_result_compare_flags(const hs_result* result);

/* --- exports ----------------------------------------------------------- */

/* Re-aggregates run_dir/feed.jsonl into CSV rows
 * `bucket_start_ms,avg_bpm,avg_spo2`. bucket is "minutes", "hours" or
 * "days"; bucket_n is the bucket width in those units. */
HS_API hs_status hs_export_series(const char* run_dir, const char* bucket, int bucket_n,
                                  const char* out_csv_path);

/* --- standalone telemetry service -------------------------------------- */

/* port 0 binds an ephemeral port (see hs_server_port). The service starts
 * with one channel (id 1) writable with the given api key. */
HS_API hs_status hs_server_start(const char* host, int port, const char* api_key,
                                 hs_server** out);
HS_API int hs_server_port(const hs_server* server);
HS_API void hs_server_stop(hs_server* server);

#ifdef __cplusplus
}
#endif

#endif /* HEARTSIM_H */
