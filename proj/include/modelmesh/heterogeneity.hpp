#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelmesh/errors.hpp"

namespace modelmesh {

enum class DeviceClass { high = 0, mid = 1, low = 2 };

std::string to_string(DeviceClass c);
DeviceClass device_class_from_string(const std::string& s);

struct DeviceProfile {
    double compute_rate = 200.0;   // samples / second
    double uplink = 10e6;          // bytes / second
    double downlink = 10e6;        // bytes / second
    DeviceClass class_label = DeviceClass::high;

    bool operator==(const DeviceProfile&) const = default;
};

// high/mid/low: 200/50/10 samples/s, 10/2/0.5 MB/s symmetric links
// (~20x straggler spread between the extremes).
DeviceProfile default_device(DeviceClass c);

enum class TraceState { on, off };

// Two-state Markov availability model, one transition draw per tick.
struct AvailabilityTrace {
    double p_on_to_off = 0.0;
    double p_off_to_on = 1.0;
    double tick_seconds = 60.0;
    TraceState initial_state = TraceState::on;
    uint64_t seed = 0;

    bool operator==(const AvailabilityTrace&) const = default;
};

void validate(const AvailabilityTrace& t);
AvailabilityTrace always_on_trace();

enum class ScenarioKind { U, BH, DH, H };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

// The heterogeneity taxonomy: U uniform, BH behaviour-only, DH device-only,
// H both. U/BH force a single device class; U/DH force always-on traces.
struct Scenario {
    ScenarioKind kind = ScenarioKind::U;
    std::map<DeviceClass, double> device_mix;
    AvailabilityTrace trace_params;  // tick/probabilities; seeds assigned per client

    static Scenario make(ScenarioKind kind);

    bool operator==(const Scenario&) const = default;
};

void validate(const Scenario& s);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

struct ClientProfile {
    uint32_t client_id = 0;
    DeviceProfile device;
    AvailabilityTrace trace;

    bool operator==(const ClientProfile&) const = default;
};

// Deterministic in seed; device classes drawn from the scenario mix, trace
// seeds derived per client (always-on scenarios share the constant trace so
// U profiles are identical across clients).
std::vector<ClientProfile> assign_profiles(uint32_t num_clients, const Scenario& scenario,
                                           uint64_t seed);

// True iff the Markov trace is `on` for every tick overlapping
// [t_start, t_end]. Tick i covers [i*tick, (i+1)*tick); a zero-length window
// checks the single tick containing it. Transition draws are pure in
// (trace.seed, tick index).
bool is_available(const ClientProfile& profile, double t_start, double t_end);

// download + compute + upload, in simulated seconds.
double simulate_client_time(const ClientProfile& profile, uint64_t num_samples, uint32_t epochs,
                            uint64_t model_bytes);

}  // namespace modelmesh
