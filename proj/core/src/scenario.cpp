#include "qof/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qof::sim {

using nlohmann::json;

namespace {

std::uint64_t ms_to_us(const json& v) {
  return static_cast<std::uint64_t>(std::llround(v.get<double>() * 1000.0));
}

FaultSpec::Behavior behavior_from(const std::string& s) {
  if (s == "crash") return FaultSpec::Behavior::Crash;
  if (s == "mute") return FaultSpec::Behavior::Mute;
  if (s == "equivocate_bcch") return FaultSpec::Behavior::EquivocateBcch;
  if (s == "lie_status") return FaultSpec::Behavior::LieStatus;
  if (s == "frontrun") return FaultSpec::Behavior::Frontrun;
  throw ConfigError("unknown fault behavior: " + s);
}

}  // namespace

const char* FaultSpec::name(Behavior b) {
  switch (b) {
    case Behavior::Crash:
      return "crash";
    case Behavior::Mute:
      return "mute";
    case Behavior::EquivocateBcch:
      return "equivocate_bcch";
    case Behavior::LieStatus:
      return "lie_status";
    case Behavior::Frontrun:
      return "frontrun";
  }
  return "?";
}

void Scenario::validate() const {
  config.validate();
  if (payload_size < 1 || payload_size > kMaxPayloadSize)
    throw ConfigError("payload_size must be in [1, 4096]");
  if (d_min_us > d_max_us) throw ConfigError("delay range requires min <= max");
  std::uint32_t faulty = 0;
  for (const auto& fs : faults) {
    if (fs.party >= config.n) throw ConfigError("fault names unknown party");
    ++faulty;
    if (fs.behavior == FaultSpec::Behavior::Frontrun) {
      for (auto t : fs.direct_targets)
        if (t >= config.n) throw ConfigError("frontrun target out of range");
    }
  }
  if (faulty > config.f)
    throw ConfigError("more faulty parties than the configured f");
  if (n_clients < 1) throw ConfigError("n_clients must be >= 1");
  for (const auto& a : arrivals) {
    if (a.payload.size() > kMaxPayloadSize)
      throw ConfigError("scripted payload exceeds maximum size");
    for (const auto& [p, t] : a.at_us)
      if (p >= config.n) throw ConfigError("scripted arrival names unknown party");
  }
}

bool Scenario::party_correct(std::uint32_t p) const {
  for (const auto& fs : faults)
    if (fs.party == p) return false;
  return true;
}

Scenario Scenario::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }

  Scenario s;
  try {
    s.name = j.value("name", s.name);
    const auto& c = j.at("config");
    s.config.n = c.at("n").get<std::uint32_t>();
    s.config.f = c.at("f").get<std::uint32_t>();
    s.config.kappa = c.value("kappa", 0u);
    s.config.round_trigger = c.value("round_trigger", 1u);
    s.config.batch_cap = c.value("batch_cap", 16u);

    s.seed = j.value("seed", s.seed);
    s.n_clients = j.value("n_clients", s.n_clients);
    s.tx_count = j.value("tx_count", s.tx_count);
    s.payload_size = j.value("payload_size", s.payload_size);

    if (j.contains("delay_ms")) {
      const auto& d = j.at("delay_ms");
      s.d_min_us = ms_to_us(d.at(0));
      s.d_max_us = ms_to_us(d.at(1));
    }
    s.proc_cost_us = j.value("proc_cost_us", s.proc_cost_us);
    if (j.contains("relay_delay_ms")) s.relay_delay_us = ms_to_us(j.at("relay_delay_ms"));
    if (j.contains("inject_window_ms"))
      s.inject_window_us = ms_to_us(j.at("inject_window_ms"));
    if (j.contains("jitter_ms")) s.jitter_us = ms_to_us(j.at("jitter_ms"));
    if (j.contains("duration_ms")) s.duration_us = ms_to_us(j.at("duration_ms"));
    if (j.contains("fetch_retry_ms"))
      s.fetch_retry_us = ms_to_us(j.at("fetch_retry_ms"));

    if (j.contains("rounds_at_ms")) {
      s.trigger.mode = engine::RoundTrigger::Mode::Scheduled;
      for (const auto& t : j.at("rounds_at_ms"))
        s.trigger.scheduled_at_us.push_back(ms_to_us(t));
    }

    if (j.contains("faults")) {
      for (const auto& fj : j.at("faults")) {
        FaultSpec fs;
        fs.party = fj.at("party").get<std::uint32_t>();
        fs.behavior = behavior_from(fj.at("behavior").get<std::string>());
        if (fj.contains("at_ms")) fs.at_us = ms_to_us(fj.at("at_ms"));
        fs.victim_client = fj.value("victim_client", 0u);
        fs.victim_seq = fj.value("victim_seq", std::uint64_t{0});
        fs.attack_count = fj.value("attack_count", 2u);
        if (fj.contains("advance_ms")) fs.advance_us = ms_to_us(fj.at("advance_ms"));
        if (fj.contains("direct_targets"))
          for (const auto& t : fj.at("direct_targets"))
            fs.direct_targets.push_back(t.get<std::uint32_t>());
        if (fj.contains("direct_lead_ms"))
          fs.direct_lead_us = ms_to_us(fj.at("direct_lead_ms"));
        s.faults.push_back(std::move(fs));
      }
    }

    if (j.contains("arrivals")) {
      for (const auto& aj : j.at("arrivals")) {
        ScriptedArrival a;
        a.client = aj.at("client").get<std::uint32_t>();
        a.seq = aj.at("seq").get<std::uint64_t>();
        if (aj.contains("payload_hex"))
          a.payload = hex_decode(aj.at("payload_hex").get<std::string>());
        for (const auto& [party, t] : aj.at("at_ms").items())
          a.at_us[static_cast<std::uint32_t>(std::stoul(party))] = ms_to_us(t);
        s.arrivals.push_back(std::move(a));
      }
    }
    s.baseline = j.value("baseline", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario field error: ") + e.what());
  }

  s.validate();
  return s;
}

Scenario Scenario::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Scenario::to_json_text() const {
  json j;
  j["name"] = name;
  j["config"] = {{"n", config.n},
                 {"f", config.f},
                 {"kappa", config.kappa},
                 {"round_trigger", config.round_trigger},
                 {"batch_cap", config.batch_cap}};
  j["seed"] = seed;
  j["n_clients"] = n_clients;
  j["tx_count"] = tx_count;
  j["payload_size"] = payload_size;
  j["delay_ms"] = {d_min_us / 1000.0, d_max_us / 1000.0};
  j["proc_cost_us"] = proc_cost_us;
  j["relay_delay_ms"] = relay_delay_us / 1000.0;
  j["inject_window_ms"] = inject_window_us / 1000.0;
  j["jitter_ms"] = jitter_us / 1000.0;
  j["duration_ms"] = duration_us / 1000.0;
  j["fetch_retry_ms"] = fetch_retry_us / 1000.0;
  if (trigger.mode == engine::RoundTrigger::Mode::Scheduled) {
    json times = json::array();
    for (auto t : trigger.scheduled_at_us) times.push_back(t / 1000.0);
    j["rounds_at_ms"] = times;
  }
  if (!faults.empty()) {
    json fl = json::array();
    for (const auto& fs : faults) {
      json fj;
      fj["party"] = fs.party;
      fj["behavior"] = FaultSpec::name(fs.behavior);
      if (fs.behavior == FaultSpec::Behavior::Crash) fj["at_ms"] = fs.at_us / 1000.0;
      if (fs.behavior == FaultSpec::Behavior::Frontrun) {
        fj["victim_client"] = fs.victim_client;
        fj["victim_seq"] = fs.victim_seq;
        fj["attack_count"] = fs.attack_count;
        fj["advance_ms"] = fs.advance_us / 1000.0;
        if (!fs.direct_targets.empty()) {
          fj["direct_targets"] = fs.direct_targets;
          fj["direct_lead_ms"] = fs.direct_lead_us / 1000.0;
        }
      }
      fl.push_back(std::move(fj));
    }
    j["faults"] = std::move(fl);
  }
  if (!arrivals.empty()) {
    json al = json::array();
    for (const auto& a : arrivals) {
      json aj;
      aj["client"] = a.client;
      aj["seq"] = a.seq;
      if (!a.payload.empty()) aj["payload_hex"] = hex_encode(a.payload);
      json times;
      for (const auto& [p, t] : a.at_us) times[std::to_string(p)] = t / 1000.0;
      aj["at_ms"] = std::move(times);
      al.push_back(std::move(aj));
    }
    j["arrivals"] = std::move(al);
  }
  if (baseline) j["baseline"] = true;
  return j.dump(2);
}

}  // namespace qof::sim
