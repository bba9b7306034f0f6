// heartsim command line: scenario runs, reference reports, series export and
// the standalone telemetry service. Talks to the core only through the C API.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "heartsim/heartsim.h"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

int die(const char* what, hs_status status) {
    std::fprintf(stderr, "error: %s: %s (%s)\n", what, hs_last_error(),
                 hs_status_name(status));
    return 1;
}

int cmd_run(const std::string& scenario_path, std::string out_dir, bool quiet) {
    hs_scenario* scenario = nullptr;
    if (const auto st = hs_scenario_load_file(scenario_path.c_str(), &scenario); st != HS_OK)
        return die(scenario_path.c_str(), st);

    if (out_dir.empty())
        out_dir = std::string("runs/") + hs_scenario_name(scenario) + "-" +
                  std::to_string(hs_scenario_seed(scenario));

    hs_result* result = nullptr;
    const auto st = hs_run(scenario, out_dir.c_str(), &result);
    hs_scenario_free(scenario);
    if (st != HS_OK) return die("run", st);

    if (!quiet) {
        std::printf("run complete: %s\n", out_dir.c_str());
        std::printf("  uploads attempted: %lld\n",
                    static_cast<long long>(hs_result_uploads_attempted(result)));
        std::printf("  uploads received:  %lld\n",
                    static_cast<long long>(hs_result_uploads_received(result)));
        double ratio = 0.0;
        if (hs_result_success_ratio(result, &ratio) == 0)
            std::printf("  delivery ratio:    %.4f\n", ratio);
        else
            std::printf("  delivery ratio:    undefined\n");
        std::printf("  alerts:            %lld\n",
                    static_cast<long long>(hs_result_alert_count(result)));
        std::printf("  sms sent:          %lld\n",
                    static_cast<long long>(hs_result_sms_sent(result)));
        const auto depleted = hs_result_depleted_at_ms(result);
        if (depleted >= 0)
            std::printf("  battery depleted:  %lld ms\n", static_cast<long long>(depleted));
        std::printf("  data volume:       %.3f KB/h, %.4f MB/day\n",
                    hs_result_kb_per_hour(result), hs_result_mb_per_day(result));
    }
    hs_result_free(result);
    return 0;
}

int cmd_report(const std::string& run_dir) {
    hs_result* result = nullptr;
    if (const auto st = hs_result_load(run_dir.c_str(), &result); st != HS_OK)
        return die(run_dir.c_str(), st);
    std::fputs(hs_result_compare_table(result), stdout);
    const int flags = hs_result_compare_flags(result);
    hs_result_free(result);
    if (flags > 0) {
        std::printf("%d metric(s) outside tolerance\n", flags);
        return 2;
    }
    return 0;
}

int cmd_export(const std::string& run_dir, const std::string& bucket, int n,
               std::string out_path) {
    if (out_path.empty()) out_path = run_dir + "/series_" + bucket + ".csv";
    if (const auto st = hs_export_series(run_dir.c_str(), bucket.c_str(), n, out_path.c_str());
        st != HS_OK)
        return die("export", st);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

int cmd_serve(const std::string& host, int port, const std::string& api_key) {
    hs_server* server = nullptr;
    if (const auto st = hs_server_start(host.c_str(), port, api_key.c_str(), &server);
        st != HS_OK)
        return die("serve", st);
    std::printf("telemetry service on http://%s:%d (channel 1, api key %s)\n", host.c_str(),
                hs_server_port(server), api_key.c_str());
    std::printf("POST/GET /update, /channels/1/feeds.json, /channels/1/aggregate.json\n");
    std::printf("Ctrl-C to stop.\n");
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) {
        struct timespec ts = {0, 200 * 1000 * 1000};
        nanosleep(&ts, nullptr);
    }
    hs_server_stop(server);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wearable heart monitor simulation"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "run a scenario file");
    run->add_option("scenario", scenario_path, "scenario YAML file")->required();
    run->add_option("--out", out_dir, "run directory (default runs/<name>-<seed>)");
    run->add_flag("--quiet", quiet, "suppress the summary");

    std::string run_dir;
    auto* report = app.add_subcommand("report", "compare a run against the reference figures");
    report->add_option("rundir", run_dir, "run directory")->required();

    std::string export_dir, bucket = "minutes", export_out;
    int bucket_n = 1;
    auto* exp = app.add_subcommand("export", "export aggregated series as CSV");
    exp->add_option("rundir", export_dir, "run directory")->required();
    exp->add_option("--bucket", bucket, "minutes|hours|days")->check(
        CLI::IsMember({"minutes", "hours", "days"}));
    exp->add_option("--n", bucket_n, "bucket width in units");
    exp->add_option("--out", export_out, "output CSV path");

    std::string host = "127.0.0.1", api_key = "0123456789ABCDEF";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "run the telemetry service standalone");
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "port (0 for ephemeral)");
    serve->add_option("--api-key", api_key, "write api key for channel 1");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(scenario_path, out_dir, quiet);
    if (report->parsed()) return cmd_report(run_dir);
    if (exp->parsed()) return cmd_export(export_dir, bucket, bucket_n, export_out);
    if (serve->parsed()) return cmd_serve(host, port, api_key);
    return 1;
}
