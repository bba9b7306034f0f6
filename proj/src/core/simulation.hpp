#pragma once

#include <filesystem>
#include <optional>

#include "core/report.hpp"
#include "core/scenario.hpp"

namespace heartsim::sim {

// Runs one scenario on the simulated clock: sensor -> device -> modem ->
// telemetry, with battery/data accounting. Deterministic given the scenario
// (including its seed).
//
// When out_dir is set, writes into it:
//   effects.jsonl    one JSON object per device effect
//   transcript.txt   device<->modem serial exchange, CRLF line endings
//   feed.jsonl       telemetry snapshot, one entry per line
//   vitals.csv       t_ms,bpm,spo2 for every Good reading
//   report.json      the returned report
//
// Throws std::invalid_argument listing validation errors for an unrunnable
// scenario, std::runtime_error on I/O failure.
RunReport run_scenario(const Scenario& scenario,
                       const std::optional<std::filesystem::path>& out_dir);

}  // namespace heartsim::sim
