// Copyright 2026 The SurgeFlow Authors
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.
#ifndef SURGEFLOW_SURGEFLOW_H
#define SURGEFLOW_SURGEFLOW_H

#include <stddef.h>

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sf_engine sf_engine;

typedef enum sf_status {
	SF_OK = 0,
	SF_INVALID_ARGUMENT = 1,
	SF_NOT_FOUND = 2,
	SF_CONFLICT = 3,
	SF_PRECONDITION_FAILED = 4,
	SF_PAYLOAD_TOO_LARGE = 5,
	SF_IO = 6,
	SF_CORRUPT = 7,
	SF_INTERNAL = 8
} sf_status;

SF_API const char *sf_version(void);
SF_API const char *sf_status_name(sf_status status);

/*
 * Message of the last failed call on this thread. Empty after a successful
 * call. Valid until the next call on the same thread.
 */
SF_API const char *sf_last_error(void);

/* trace, debug, info, warn, error, critical or off. */
SF_API sf_status sf_set_log_level(const char *level);

/*
 * Strings returned through char ** out parameters are NUL terminated and
 * owned by the caller; release them with sf_string_free.
 */
SF_API void sf_string_free(char *s);

/*
 * Opens an engine on a data directory. config_json may be NULL; its keys
 * override SURGEFLOW_DATA_DIR / SURGEFLOW_WORKERS and the defaults:
 * data_dir, workers, host, port, machines_file, requeue_delay_ms,
 * idle_poll_interval_ms, sync_writes, register_wildfire, inspect_only.
 * An inspect_only engine answers queries from the state store and nothing
 * else.
 */
SF_API sf_status sf_engine_open(const char *config_json, sf_engine **out);

/* Reconciles the previous run and starts workers, the job simulator and pollers. */
SF_API sf_status sf_engine_start(sf_engine *engine);

/* Starts the HTTP API. port_out receives the bound port and may be NULL. */
SF_API sf_status sf_engine_serve(sf_engine *engine, int *port_out);

/*
 * Asks a sf_engine_wait caller to return. Only stores a flag, so it may be
 * called from a signal handler.
 */
SF_API void sf_engine_request_stop(sf_engine *engine);

/*
 * Blocks until sf_engine_request_stop is called or timeout_ms elapses
 * (timeout_ms < 0 waits forever). stop_requested may be NULL.
 */
SF_API sf_status sf_engine_wait(sf_engine *engine, int timeout_ms, int *stop_requested);

/* drain != 0 lets in-flight handlers finish; 0 abandons their messages for redelivery. */
SF_API sf_status sf_engine_stop(sf_engine *engine, int drain);

/* Stops (draining) and frees the engine. NULL is ignored. */
SF_API void sf_engine_close(sf_engine *engine);

SF_API sf_status sf_incident_create(
	sf_engine *engine, const char *workflow_kind, const char *label, const char *initial_payload_json,
	char **incident_id_out);
SF_API sf_status sf_incident_cancel(sf_engine *engine, const char *incident_id);
SF_API sf_status sf_incident_complete(sf_engine *engine, const char *incident_id);

/* JSON array of incident records. */
SF_API sf_status sf_incident_list(sf_engine *engine, char **json_out);

/* Incident record, task graph, statistics, stage data, endpoints and jobs. */
SF_API sf_status sf_incident_detail(sf_engine *engine, const char *incident_id, char **json_out);

/* Indented text tree of a task graph document, one line per message. */
SF_API sf_status sf_render_task_graph(const char *graph_json, char **text_out);

/* Per-queue statistics of a workflow kind. */
SF_API sf_status sf_workflow_stats(sf_engine *engine, const char *workflow_kind, char **json_out);

/*
 * Runs one wildfire incident to completion on a started engine. options_json
 * may be NULL; keys: hotspot_source, forecast_kind, label, timeout_ms. The
 * result holds incident_id, forecast_results, elapsed_ms, task_graph_text
 * and detail.
 */
SF_API sf_status sf_demo_wildfire(sf_engine *engine, const char *options_json, char **result_json_out);

/*
 * Routes a management API request in process, as the HTTP listener would.
 * The call succeeds whenever a response was produced; http_status_out holds
 * the response status and json_out its body.
 */
SF_API sf_status sf_engine_request(
	sf_engine *engine, const char *method, const char *path, const char *body, size_t body_len,
	int *http_status_out, char **json_out);

/*
 * Same request sent to a running engine at base_url, e.g.
 * "http://127.0.0.1:8080". Fails with SF_IO when the engine is unreachable.
 */
SF_API sf_status sf_http_request(
	const char *base_url, const char *method, const char *path, const char *body, size_t body_len,
	int *http_status_out, char **json_out);

#ifdef __cplusplus
}
#endif

#endif
