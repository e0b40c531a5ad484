#include "modelmesh/heterogeneity.hpp"

#include <cmath>

#include "modelmesh/rng.hpp"

namespace modelmesh {

std::string to_string(DeviceClass c) {
    switch (c) {
        case DeviceClass::high: return "high";
        case DeviceClass::mid: return "mid";
        case DeviceClass::low: return "low";
    }
    return "?";
}

DeviceClass device_class_from_string(const std::string& s) {
    if (s == "high") return DeviceClass::high;
    if (s == "mid") return DeviceClass::mid;
    if (s == "low") return DeviceClass::low;
    throw ConfigError("unknown device class '" + s + "'");
}

DeviceProfile default_device(DeviceClass c) {
    switch (c) {
        case DeviceClass::high: return {200.0, 10e6, 10e6, DeviceClass::high};
        case DeviceClass::mid: return {50.0, 2e6, 2e6, DeviceClass::mid};
        case DeviceClass::low: return {10.0, 0.5e6, 0.5e6, DeviceClass::low};
    }
    throw ConfigError("unknown device class");
}

void validate(const AvailabilityTrace& t) {
    if (t.p_on_to_off < 0 || t.p_on_to_off > 1 || t.p_off_to_on < 0 || t.p_off_to_on > 1)
        throw ConfigError("trace transition probabilities must be in [0, 1]");
    if (!(t.tick_seconds > 0)) throw ConfigError("trace tick_seconds must be > 0");
}

AvailabilityTrace always_on_trace() {
    return AvailabilityTrace{0.0, 1.0, 60.0, TraceState::on, 0};
}

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::U: return "U";
        case ScenarioKind::BH: return "BH";
        case ScenarioKind::DH: return "DH";
        case ScenarioKind::H: return "H";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "U") return ScenarioKind::U;
    if (s == "BH") return ScenarioKind::BH;
    if (s == "DH") return ScenarioKind::DH;
    if (s == "H") return ScenarioKind::H;
    throw ConfigError("unknown scenario kind '" + s + "' (expected U, BH, DH or H)");
}

namespace {

bool forces_single_class(ScenarioKind k) {
    return k == ScenarioKind::U || k == ScenarioKind::BH;
}

bool forces_always_on(ScenarioKind k) {
    return k == ScenarioKind::U || k == ScenarioKind::DH;
}

std::map<DeviceClass, double> even_mix() {
    return {{DeviceClass::high, 1.0 / 3}, {DeviceClass::mid, 1.0 / 3}, {DeviceClass::low, 1.0 / 3}};
}

// Markov defaults: 60 s ticks, 2% chance of going offline and 5% of coming
// back per tick (stationary on-fraction ~0.71).
AvailabilityTrace default_markov_trace() {
    return AvailabilityTrace{0.02, 0.05, 60.0, TraceState::on, 0};
}

}  // namespace

Scenario Scenario::make(ScenarioKind kind) {
    Scenario s;
    s.kind = kind;
    s.device_mix = forces_single_class(kind) ? std::map<DeviceClass, double>{{DeviceClass::high, 1.0}}
                                             : even_mix();
    s.trace_params = forces_always_on(kind) ? always_on_trace() : default_markov_trace();
    return s;
}

void validate(const Scenario& s) {
    if (s.device_mix.empty()) throw ConfigError("scenario device_mix is empty");
    double sum = 0.0;
    for (const auto& [cls, p] : s.device_mix) {
        (void)cls;
        if (p < 0) throw ConfigError("device_mix probabilities must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("device_mix must sum to 1");
    if (forces_single_class(s.kind)) {
        size_t positive = 0;
        for (const auto& [cls, p] : s.device_mix) {
            (void)cls;
            if (p > 0) ++positive;
        }
        if (positive != 1)
            throw ConfigError(to_string(s.kind) + " scenario requires a single device class");
    }
    validate(s.trace_params);
    if (forces_always_on(s.kind)) {
        if (s.trace_params.p_on_to_off != 0.0 || s.trace_params.initial_state != TraceState::on)
            throw ConfigError(to_string(s.kind) + " scenario requires always-on traces");
    }
}

void to_json(nlohmann::json& j, const Scenario& s) {
    nlohmann::json mix = nlohmann::json::object();
    for (const auto& [cls, p] : s.device_mix) mix[to_string(cls)] = p;
    j = nlohmann::json{
        {"kind", to_string(s.kind)},
        {"device_mix", mix},
        {"trace",
         {{"p_on_to_off", s.trace_params.p_on_to_off},
          {"p_off_to_on", s.trace_params.p_off_to_on},
          {"tick_seconds", s.trace_params.tick_seconds},
          {"initial_state", s.trace_params.initial_state == TraceState::on ? "on" : "off"}}}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
    const auto kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    s = Scenario::make(kind);
    if (j.contains("device_mix")) {
        s.device_mix.clear();
        for (const auto& [key, value] : j.at("device_mix").items())
            s.device_mix[device_class_from_string(key)] = value.get<double>();
    }
    if (j.contains("trace")) {
        const auto& t = j.at("trace");
        s.trace_params.p_on_to_off = t.value("p_on_to_off", s.trace_params.p_on_to_off);
        s.trace_params.p_off_to_on = t.value("p_off_to_on", s.trace_params.p_off_to_on);
        s.trace_params.tick_seconds = t.value("tick_seconds", s.trace_params.tick_seconds);
        if (t.contains("initial_state")) {
            const auto st = t.at("initial_state").get<std::string>();
            if (st != "on" && st != "off") throw ConfigError("initial_state must be on or off");
            s.trace_params.initial_state = st == "on" ? TraceState::on : TraceState::off;
        }
    }
}

std::vector<ClientProfile> assign_profiles(uint32_t num_clients, const Scenario& scenario,
                                           uint64_t seed) {
    if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
    validate(scenario);

    // Inverse-CDF over the mix in enum order, normalized to kill float dust.
    double total = 0.0;
    for (const auto& [cls, p] : scenario.device_mix) {
        (void)cls;
        total += p;
    }

    const bool always_on = scenario.trace_params.p_on_to_off == 0.0 &&
                           scenario.trace_params.initial_state == TraceState::on;

    std::vector<ClientProfile> profiles;
    profiles.reserve(num_clients);
    for (uint32_t i = 0; i < num_clients; ++i) {
        ClientProfile p;
        p.client_id = i;
        Rng rng(derive_seed(seed, "client", i));
        const double u = rng.next_double() * total;
        double acc = 0.0;
        DeviceClass chosen = scenario.device_mix.rbegin()->first;
        for (const auto& [cls, prob] : scenario.device_mix) {
            acc += prob;
            if (u < acc) {
                chosen = cls;
                break;
            }
        }
        p.device = default_device(chosen);
        if (always_on) {
            p.trace = always_on_trace();
            p.trace.tick_seconds = scenario.trace_params.tick_seconds;
        } else {
            p.trace = scenario.trace_params;
            p.trace.seed = derive_seed(seed, "trace", i);
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

bool is_available(const ClientProfile& profile, double t_start, double t_end) {
    if (t_start > t_end) throw PreconditionError("availability window has t_start > t_end");
    const AvailabilityTrace& t = profile.trace;
    validate(t);
    if (t.p_on_to_off == 0.0 && t.initial_state == TraceState::on) return true;
    if (t.p_off_to_on == 0.0 && t.initial_state == TraceState::off) return false;

    const double tick = t.tick_seconds;
    int64_t first = static_cast<int64_t>(std::floor(t_start / tick));
    first = std::max<int64_t>(first, 0);  // the chain starts at tick 0
    int64_t last = t_end <= t_start ? first
                                    : static_cast<int64_t>(std::ceil(t_end / tick)) - 1;
    last = std::max(last, first);

    // Walk the chain from tick 0; draw i decides the transition into tick i+1.
    TraceState state = t.initial_state;
    for (int64_t i = 0; i <= last; ++i) {
        if (i >= first && state != TraceState::on) return false;
        if (i == last) break;
        const double u = Rng(derive_seed(t.seed, "tick", static_cast<uint64_t>(i))).next_double();
        if (state == TraceState::on)
            state = u < t.p_on_to_off ? TraceState::off : TraceState::on;
        else
            state = u < t.p_off_to_on ? TraceState::on : TraceState::off;
    }
    return true;
}

double simulate_client_time(const ClientProfile& profile, uint64_t num_samples, uint32_t epochs,
                            uint64_t model_bytes) {
    const DeviceProfile& d = profile.device;
    if (!(d.compute_rate > 0) || !(d.uplink > 0) || !(d.downlink > 0))
        throw ConfigError("device rates must be > 0");
    const double bytes = static_cast<double>(model_bytes);
    const double work = static_cast<double>(epochs) * static_cast<double>(num_samples);
    return bytes / d.downlink + work / d.compute_rate + bytes / d.uplink;
}

}  // namespace modelmesh
