#include "qof/harness.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "qof/bcch.hpp"
#include "qof/rng.hpp"
#include "qof/sequencer.hpp"
#include "qof/sim_network.hpp"
#include "qof/vbc.hpp"
#include "qof/wire.hpp"

namespace qof::sim {

namespace {

constexpr std::string_view kBaselineTag = "tx";

struct InjectionPlan {
  // arrival[i] = (party, t_us, tx)
  struct Arrival {
    std::uint32_t party;
    std::uint64_t t_us;
    Transaction tx;
  };
  std::vector<Arrival> arrivals;
  std::set<Digest> injected_ids;
  std::map<Digest, std::uint64_t> first_arrival_us;  // over correct parties
  Digest victim_id{};
  std::vector<Digest> attack_ids;
  // Arrivals the frontrun attacker reacts to are tagged so the simulator
  // can inject the attack transactions first.
  std::map<std::size_t, std::vector<Transaction>> pre_submissions;
};

Transaction make_payload_tx(std::uint32_t client, std::uint64_t seq,
                            std::uint32_t payload_size, Rng& rng) {
  Bytes payload(payload_size);
  for (auto& b : payload) b = static_cast<std::uint8_t>(rng.below(256));
  return Transaction::make(client, seq, std::move(payload));
}

InjectionPlan build_plan(const Scenario& sc) {
  InjectionPlan plan;
  const Config& cfg = sc.config;

  const FaultSpec* frontrun = nullptr;
  for (const auto& fs : sc.faults)
    if (fs.behavior == FaultSpec::Behavior::Frontrun) frontrun = &fs;

  std::vector<std::pair<Transaction, std::map<std::uint32_t, std::uint64_t>>>
      txs;  // tx -> per-party arrival time

  if (!sc.arrivals.empty()) {
    for (const auto& a : sc.arrivals) {
      Transaction tx = Transaction::make(a.client, a.seq, a.payload);
      txs.emplace_back(std::move(tx), a.at_us);
    }
  } else {
    Rng payload_rng(derive_seed(sc.seed, "payload"));
    Rng time_rng(derive_seed(sc.seed, "client"));
    for (std::uint32_t k = 0; k < sc.tx_count; ++k) {
      Transaction tx = make_payload_tx(k % sc.n_clients, k / sc.n_clients,
                                       sc.payload_size, payload_rng);
      std::uint64_t base = time_rng.below(sc.inject_window_us + 1);
      std::map<std::uint32_t, std::uint64_t> at;
      for (std::uint32_t p = 0; p < cfg.n; ++p)
        at[p] = base + time_rng.below(sc.jitter_us + 1);
      txs.emplace_back(std::move(tx), std::move(at));
    }
  }

  // Front-running attacker: sees the victim advance_us early, and may plant
  // its transactions at chosen parties ahead of the victim's arrival there.
  if (frontrun) {
    bool found = false;
    for (auto& [tx, at] : txs) {
      if (tx.client_id != frontrun->victim_client ||
          tx.client_seq != frontrun->victim_seq)
        continue;
      found = true;
      plan.victim_id = tx.id;
      auto attacker_at = at.find(frontrun->party);
      if (attacker_at != at.end()) {
        attacker_at->second = attacker_at->second > frontrun->advance_us
                                  ? attacker_at->second - frontrun->advance_us
                                  : 0;
      }
      for (std::uint32_t a = 0; a < frontrun->attack_count; ++a) {
        Bytes payload = to_bytes("attack");
        payload.push_back(static_cast<std::uint8_t>(a));
        Transaction atk =
            Transaction::make(1000 + frontrun->party, a, std::move(payload));
        plan.attack_ids.push_back(atk.id);
        plan.injected_ids.insert(atk.id);
        for (std::uint32_t target : frontrun->direct_targets) {
          auto it = at.find(target);
          std::uint64_t victim_t = it == at.end() ? 0 : it->second;
          std::uint64_t t = victim_t > frontrun->direct_lead_us
                                ? victim_t - frontrun->direct_lead_us
                                : 0;
          plan.arrivals.push_back({target, t, atk});
        }
      }
    }
    if (!found)
      throw ConfigError("frontrun fault references a missing victim tx");
  }

  for (auto& [tx, at] : txs) {
    plan.injected_ids.insert(tx.id);
    for (const auto& [party, t] : at) {
      plan.arrivals.push_back({party, t, tx});
      if (sc.party_correct(party)) {
        auto it = plan.first_arrival_us.find(tx.id);
        if (it == plan.first_arrival_us.end() || t < it->second)
          plan.first_arrival_us[tx.id] = t;
      }
    }
  }
  // Attack transactions enter the protocol at the attacker; their ground
  // truth arrival for latency purposes is the first correct-party arrival
  // (direct targets) or the victim's first arrival (fallback relays start
  // spreading then).
  if (frontrun) {
    for (const auto& id : plan.attack_ids)
      if (!plan.first_arrival_us.count(id))
        plan.first_arrival_us[id] = plan.first_arrival_us.count(plan.victim_id)
                                        ? plan.first_arrival_us[plan.victim_id]
                                        : 0;
  }

  // Deterministic injection order.
  std::stable_sort(plan.arrivals.begin(), plan.arrivals.end(),
                   [](const auto& a, const auto& b) {
                     if (a.t_us != b.t_us) return a.t_us < b.t_us;
                     if (a.party != b.party) return a.party < b.party;
                     return a.tx.id < b.tx.id;
                   });

  // The attacker reacts to the victim arrival by submitting its own
  // transactions first (sandwich placement on its local channel).
  if (frontrun) {
    for (std::size_t i = 0; i < plan.arrivals.size(); ++i) {
      const auto& a = plan.arrivals[i];
      if (a.party == frontrun->party && a.tx.id == plan.victim_id) {
        std::vector<Transaction> pre;
        for (std::uint32_t k = 0; k < frontrun->attack_count; ++k) {
          Bytes payload = to_bytes("attack");
          payload.push_back(static_cast<std::uint8_t>(k));
          pre.push_back(Transaction::make(1000 + frontrun->party, k,
                                          std::move(payload)));
        }
        plan.pre_submissions[i] = std::move(pre);
      }
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Byzantine outbound filters (wrappers around a correct party).

net::OutboundFilter make_mute_filter() {
  return [](PartyId, const Bytes&) {
    net::FilterResult r;
    r.action = net::FilterAction::Drop;
    return r;
  };
}

// Splits each own-channel SEND: parties in the upper half of the id space
// receive a transaction with a mutated payload, signed MACs intact, and the
// FINAL is withheld from them too, so they can only obtain the instance
// through the certified missing-transaction transfer. The fabricated ids
// are recorded so the no-creation oracle can account for them.
net::OutboundFilter make_equivocate_filter(const Config& cfg, PartyId self,
                                           std::shared_ptr<std::set<Digest>>
                                               fabricated) {
  return [cfg, self, fabricated](PartyId to, const Bytes& body) {
    net::FilterResult r;
    try {
      ByteReader reader(body);
      if (reader.u8() != net::kMuxBcch) return r;
      std::uint8_t kind = reader.u8();
      if (to == self || to.index < cfg.n / 2) return r;

      if (kind == 3 /*FINAL*/) {
        r.action = net::FilterAction::Drop;
        return r;
      }
      if (kind != 1 /*SEND*/) return r;
      std::uint64_t round = reader.u64();
      Transaction tx = Transaction::parse(reader);
      reader.expect_done();

      Bytes alt_payload = tx.payload;
      if (alt_payload.size() < kMaxPayloadSize)
        alt_payload.push_back(0x5a);
      else
        alt_payload[0] ^= 0x5a;
      Transaction alt =
          Transaction::make(tx.client_id, tx.client_seq, std::move(alt_payload));
      fabricated->insert(alt.id);

      ByteWriter w;
      w.u8(1);
      w.u64(round);
      alt.serialize(w);
      r.body = net::mux(net::kMuxBcch, w.data());
      r.rewritten = true;
      return r;
    } catch (const ParseError&) {
      return net::FilterResult{};
    }
  };
}

// Mutates the party's own status vector clocks (random per-entry increments
// and zeroing), then re-signs them with the party's key: the lie verifies,
// the cut computation has to tolerate it.
net::OutboundFilter make_lie_status_filter(const Config& cfg,
                                           const KeyMaterial& keys,
                                           std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [cfg, &keys, rng](PartyId, const Bytes& body) {
    net::FilterResult r;
    try {
      ByteReader reader(body);
      if (reader.u8() != net::kMuxEngine) return r;
      if (reader.u8() != 1 /*STATUS*/) return r;
      std::uint64_t round = reader.u64();
      VectorClock vc = VectorClock::parse(reader, cfg.n);

      for (std::uint32_t j = 0; j < cfg.n; ++j) {
        switch (rng->below(3)) {
          case 0:
            vc[j] += rng->below(5);  // overclaim
            break;
          case 1:
            vc[j] = 0;  // underclaim
            break;
          default:
            break;
        }
      }
      Bytes msg = vbc::status_sign_bytes(round, vc);
      Signature sig = keys.sign(SignDomain::Status, msg);

      ByteWriter w;
      w.u8(1);
      w.u64(round);
      vc.serialize(w);
      w.raw(sig);
      r.body = net::mux(net::kMuxEngine, w.data());
      r.rewritten = true;
      return r;
    } catch (const ParseError&) {
      return net::FilterResult{};
    }
  };
}

// ---------------------------------------------------------------------------

struct QofParty {
  std::unique_ptr<net::AuthLinks> links;
  std::unique_ptr<bcch::Channel> channel;
  std::unique_ptr<vbc::SequencerAbc> abc;
  std::unique_ptr<vbc::Endpoint> consensus;
  std::unique_ptr<engine::RoundEngine> engine;
};

struct BaselineParty {
  std::unique_ptr<net::AuthLinks> links;
  std::unique_ptr<vbc::SequencerAbc> abc;
  std::set<Digest> submitted;
  std::uint64_t delivered_count = 0;
};

Bytes encode_baseline_value(const Transaction& tx) {
  ByteWriter w;
  w.str(kBaselineTag);
  tx.serialize(w);
  return w.take();
}

std::optional<Transaction> decode_baseline_value(const Bytes& v) {
  try {
    ByteReader r(v);
    if (r.str() != kBaselineTag) return std::nullopt;
    Transaction tx = Transaction::parse(r);
    r.expect_done();
    return tx;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

double us_to_ms(std::uint64_t us) { return static_cast<double>(us) / 1000.0; }

}  // namespace

void compute_metrics(const Scenario& sc, const Tracer& trace,
                     const std::vector<bool>& correct,
                     const std::map<Digest, std::uint64_t>& first_arrival,
                     MetricsReport& m) {
  m.scenario = sc.name;
  m.seed = sc.seed;
  m.n = sc.config.n;
  m.f = sc.config.f;
  m.kappa = sc.config.kappa;
  m.payload_size = sc.payload_size;
  m.mean_delay_ms = us_to_ms(sc.mean_delay_us());

  std::map<Digest, std::uint64_t> first_bcch;
  std::uint64_t last_deliver = 0, first_inject = UINT64_MAX;
  std::vector<double> latencies;
  std::vector<double> bcch_phase;
  std::set<Digest> delivered;
  std::uint64_t max_round = 0, batch_count = 0;

  for (const auto& [id, t] : first_arrival)
    first_inject = std::min(first_inject, t);

  for (std::uint32_t p = 0; p < trace.n(); ++p) {
    if (!correct[p]) continue;
    for (const auto& d : trace.party(p).bcch_delivers) {
      auto it = first_bcch.find(d.tx);
      if (it == first_bcch.end() || d.t_us < it->second)
        first_bcch[d.tx] = d.t_us;
    }
  }

  bool counted_batches = false;
  for (std::uint32_t p = 0; p < trace.n(); ++p) {
    if (!correct[p]) continue;
    for (const auto& b : trace.party(p).batches) {
      max_round = std::max(max_round, b.round);
      if (!counted_batches) ++batch_count;
      for (const auto& id : b.txs) {
        delivered.insert(id);
        last_deliver = std::max(last_deliver, b.t_us);
        auto arr = first_arrival.find(id);
        if (arr != first_arrival.end() && b.t_us >= arr->second)
          latencies.push_back(us_to_ms(b.t_us - arr->second));
        auto fb = first_bcch.find(id);
        if (arr != first_arrival.end() && fb != first_bcch.end() &&
            fb->second >= arr->second)
          bcch_phase.push_back(us_to_ms(fb->second - arr->second));
      }
    }
    counted_batches = true;
  }

  std::vector<double> consensus;
  for (std::uint32_t p = 0; p < trace.n(); ++p) {
    if (!correct[p]) continue;
    std::map<std::uint64_t, std::uint64_t> proposed;
    for (const auto& [round, t] : trace.party(p).proposes) proposed[round] = t;
    for (const auto& [round, t] : trace.party(p).decides) {
      auto it = proposed.find(round);
      if (it != proposed.end() && t >= it->second)
        consensus.push_back(us_to_ms(t - it->second));
    }
  }

  auto mean = [](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
  };
  auto percentile = [](std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t idx = static_cast<std::size_t>(q * (xs.size() - 1));
    return xs[idx];
  };

  m.injected = first_arrival.size();
  m.delivered = delivered.size();
  m.rounds = max_round;
  m.batches = batch_count;
  if (last_deliver > first_inject && first_inject != UINT64_MAX) {
    m.span_ms = us_to_ms(last_deliver - first_inject);
    if (m.span_ms > 0)
      m.throughput_tps = static_cast<double>(delivered.size()) * 1000.0 /
                         m.span_ms;
  }
  m.lat_mean_ms = mean(latencies);
  m.lat_median_ms = percentile(latencies, 0.5);
  m.lat_p99_ms = percentile(latencies, 0.99);
  m.bcch_phase_ms = mean(bcch_phase);
  m.consensus_phase_ms = mean(consensus);
}

std::string MetricsReport::csv_header() {
  return "scenario,seed,n,f,kappa,payload,mean_delay_ms,injected,delivered,"
         "rounds,batches,span_ms,throughput_tps,lat_mean_ms,lat_median_ms,"
         "lat_p99_ms,bcch_phase_ms,consensus_phase_ms,dropped_mac,"
         "dropped_replay,discarded_proposals,view_changes,fallback_relays,"
         "missing_requests,wall_ms,quiesced";
}

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  os << scenario << "," << seed << "," << n << "," << f << "," << kappa << ","
     << payload_size << "," << mean_delay_ms << "," << injected << ","
     << delivered << "," << rounds << "," << batches << "," << span_ms << ","
     << throughput_tps << "," << lat_mean_ms << "," << lat_median_ms << ","
     << lat_p99_ms << "," << bcch_phase_ms << "," << consensus_phase_ms << ","
     << dropped_mac << "," << dropped_replay << "," << discarded_proposals
     << "," << view_changes << "," << fallback_relays << ","
     << missing_requests << "," << wall_ms << "," << (quiesced ? 1 : 0);
  return os.str();
}

RunResult run(const Scenario& scenario) {
  scenario.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const Config& cfg = scenario.config;

  RunResult result;
  result.keys = KeyMaterial::generate(cfg.n, derive_seed(scenario.seed, "keys"));
  result.correct.resize(cfg.n, true);
  for (const auto& fs : scenario.faults) result.correct[fs.party] = false;

  InjectionPlan plan = build_plan(scenario);
  result.injected_ids = plan.injected_ids;
  result.first_arrival_us = plan.first_arrival_us;
  result.victim_id = plan.victim_id;
  result.attack_ids = plan.attack_ids;

  SimScheduler sched(cfg.n, scenario.proc_cost_us);
  net::SimNetwork network(sched, cfg.n, scenario.d_min_us, scenario.d_max_us,
                          derive_seed(scenario.seed, "net"));
  VerifyCache verify_cache;
  result.trace = std::make_unique<Tracer>(cfg.n);
  Tracer& trace = *result.trace;

  auto fabricated = std::make_shared<std::set<Digest>>();

  std::vector<QofParty> parties(cfg.n);
  std::vector<BaselineParty> baseline(scenario.baseline ? cfg.n : 0);

  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    KeyView kv{&result.keys[i]};
    PartyId self{i};

    if (scenario.baseline) {
      BaselineParty& bp = baseline[i];
      bp.links = std::make_unique<net::AuthLinks>(self, result.keys[i], network);
      bp.abc = std::make_unique<vbc::SequencerAbc>(
          cfg, self, kv, *bp.links, sched, verify_cache,
          scenario.abc_timeout_base_us());
      bp.abc->admissible = [](const Bytes& v) {
        return decode_baseline_value(v).has_value();
      };
      bp.abc->deliver = [&trace, &sched, &bp, i](const Bytes& v) {
        auto tx = decode_baseline_value(v);
        if (!tx) return;
        trace.batch(sched.now_us(), i, ++bp.delivered_count, 0, {tx->id});
      };
      auto* abc = bp.abc.get();
      bp.links->set_deliver([abc](PartyId from, const Bytes& body) {
        try {
          ByteReader r(body);
          if (r.u8() != net::kMuxAbc) return;
          abc->on_message(from, r);
        } catch (const ParseError&) {
        }
      });
      continue;
    }

    QofParty& qp = parties[i];
    qp.links = std::make_unique<net::AuthLinks>(self, result.keys[i], network);
    qp.channel = std::make_unique<bcch::Channel>(cfg, self, kv, *qp.links,
                                                 verify_cache);
    qp.abc = std::make_unique<vbc::SequencerAbc>(
        cfg, self, kv, *qp.links, sched, verify_cache,
        scenario.abc_timeout_base_us());

    // Decide callback forwards into the engine, which is built below.
    auto* qpp = &qp;
    qp.consensus = std::make_unique<vbc::Endpoint>(
        cfg, self, kv, *qp.abc, verify_cache,
        [qpp](std::uint64_t round, const vbc::ClockMatrix& m) {
          qpp->engine->on_decide(round, m);
        });

    engine::RoundTrigger trigger = scenario.trigger;
    qp.engine = std::make_unique<engine::RoundEngine>(
        cfg, self, kv, sched, *qp.links, *qp.channel, *qp.consensus,
        verify_cache, &trace, trigger, scenario.relay_delay_us,
        scenario.fetch_retry_us);

    qp.channel->set_deliver(
        [qpp](const bcch::BcchMessage& m, const bcch::EchoCertificate& cert) {
          qpp->engine->on_bcch_deliver(m, cert);
        });

    qp.links->set_deliver([qpp](PartyId from, const Bytes& body) {
      try {
        ByteReader r(body);
        switch (r.u8()) {
          case net::kMuxBcch:
            qpp->channel->on_message(from, r);
            break;
          case net::kMuxAbc:
            qpp->abc->on_message(from, r);
            break;
          case net::kMuxEngine:
            qpp->engine->on_message(from, r);
            break;
          default:
            break;
        }
      } catch (const ParseError&) {
        // Malformed bytes from a faulty party: drop.
      }
    });
  }

  // Fault wiring.
  for (const auto& fs : scenario.faults) {
    if (scenario.baseline) break;  // baseline runs are fault-free
    auto& links = *parties[fs.party].links;
    switch (fs.behavior) {
      case FaultSpec::Behavior::Crash:
        sched.post(fs.at_us, kNoParty,
                   [&sched, p = fs.party] { sched.kill_party(p); });
        break;
      case FaultSpec::Behavior::Mute:
        links.set_outbound_filter(make_mute_filter());
        break;
      case FaultSpec::Behavior::EquivocateBcch:
        links.set_outbound_filter(
            make_equivocate_filter(cfg, PartyId{fs.party}, fabricated));
        break;
      case FaultSpec::Behavior::LieStatus:
        links.set_outbound_filter(make_lie_status_filter(
            cfg, result.keys[fs.party],
            derive_seed(scenario.seed, "lie", fs.party)));
        break;
      case FaultSpec::Behavior::Frontrun:
        break;  // handled via the injection plan
    }
  }

  // Client injection.
  for (std::size_t idx = 0; idx < plan.arrivals.size(); ++idx) {
    const auto& a = plan.arrivals[idx];
    std::vector<Transaction> pre;
    if (auto it = plan.pre_submissions.find(idx);
        it != plan.pre_submissions.end())
      pre = it->second;
    if (scenario.baseline) {
      auto* bp = &baseline[a.party];
      Transaction tx = a.tx;
      sched.post(a.t_us, static_cast<std::int32_t>(a.party),
                 [bp, tx = std::move(tx), &trace, &sched, party = a.party] {
                   if (!bp->submitted.insert(tx.id).second) return;
                   trace.of_broadcast(sched.now_us(), party, tx);
                   bp->abc->broadcast(encode_baseline_value(tx));
                 });
    } else {
      auto* qp = &parties[a.party];
      Transaction tx = a.tx;
      sched.post(a.t_us, static_cast<std::int32_t>(a.party),
                 [qp, tx = std::move(tx), pre = std::move(pre)] {
                   for (const auto& atk : pre) qp->engine->on_client_submit(atk);
                   qp->engine->on_client_submit(tx);
                 });
    }
  }

  if (!scenario.baseline)
    for (auto& qp : parties) qp.engine->start();

  result.metrics.quiesced = sched.run(scenario.duration_us);

  compute_metrics(scenario, trace, result.correct, plan.first_arrival_us,
                  result.metrics);
  result.byzantine_ids = *fabricated;

  for (std::uint32_t i = 0; i < cfg.n; ++i) {
    if (scenario.baseline) {
      result.metrics.dropped_mac += baseline[i].links->stats().dropped_mac;
      result.metrics.dropped_replay +=
          baseline[i].links->stats().dropped_replay;
      result.metrics.view_changes += baseline[i].abc->stats().view_changes;
      continue;
    }
    result.metrics.dropped_mac += parties[i].links->stats().dropped_mac;
    result.metrics.dropped_replay += parties[i].links->stats().dropped_replay;
    result.metrics.discarded_proposals += parties[i].consensus->discarded();
    result.metrics.view_changes += parties[i].abc->stats().view_changes;
    result.metrics.fallback_relays += parties[i].engine->stats().fallback_relays;
    result.metrics.missing_requests += parties[i].engine->stats().missing_requests;
  }

  if (!scenario.baseline) {
    for (std::uint32_t i = 0; i < cfg.n; ++i) {
      if (!result.correct[i]) continue;
      result.delivered_log = parties[i].engine->delivered_log();
      break;
    }
  }

  result.trace_digest = trace.trace_digest();
  result.metrics.wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

AttackReport attack_frontrun(const Scenario& scenario) {
  const FaultSpec* frontrun = nullptr;
  for (const auto& fs : scenario.faults)
    if (fs.behavior == FaultSpec::Behavior::Frontrun) frontrun = &fs;
  if (!frontrun)
    throw ConfigError("attack_frontrun requires a frontrun fault");

  AttackReport report;
  report.result = run(scenario);
  const RunResult& r = report.result;
  const Tracer& trace = *r.trace;
  const Config& cfg = scenario.config;

  std::vector<std::uint32_t> correct_parties;
  for (std::uint32_t p = 0; p < cfg.n; ++p)
    if (r.correct[p]) correct_parties.push_back(p);

  for (const auto& attack : r.attack_ids) {
    AttackOutcome o;
    for (std::uint32_t p : correct_parties) {
      const auto& order = trace.party(p).of_broadcast_order;
      std::ptrdiff_t vi = -1, ai = -1;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] == r.victim_id) vi = static_cast<std::ptrdiff_t>(i);
        if (order[i] == attack) ai = static_cast<std::ptrdiff_t>(i);
      }
      if (vi >= 0 && ai >= 0) {
        if (vi < ai) ++o.b_victim_first;
        if (ai < vi) ++o.b_attack_first;
      }
    }
    o.premise_holds = o.b_victim_first >
                      o.b_attack_first + 2 * cfg.f + cfg.kappa;

    for (std::uint32_t p : correct_parties) {
      std::ptrdiff_t victim_batch = -1, attack_batch = -1;
      std::ptrdiff_t idx = 0;
      for (const auto& b : trace.party(p).batches) {
        for (const auto& id : b.txs) {
          if (id == r.victim_id) victim_batch = idx;
          if (id == attack) attack_batch = idx;
        }
        ++idx;
      }
      if (attack_batch >= 0 &&
          (victim_batch < 0 || attack_batch < victim_batch))
        o.attacker_preceded = true;
      if (attack_batch >= 0 && attack_batch == victim_batch)
        o.same_batch = true;
    }
    report.outcomes.push_back(o);
  }

  report.fairness_violations = oracle_fairness(trace, r.correct, cfg);
  return report;
}

}  // namespace qof::sim
