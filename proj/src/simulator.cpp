#include "evnet/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace evnet {

size_t uniform_below(std::mt19937_64& rng, size_t n) {
  if (n <= 1) {
    if (n == 1) rng();  // keep the stream position independent of n
    return 0;
  }
  const uint64_t bound = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= bound);
  return static_cast<size_t>(x % n);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Scenario parse_scenario(const Topology& topo, const std::string& text) {
  Scenario sc;
  sc.phases.emplace_back();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "barrier") {
      if (!sc.phases.back().empty()) sc.phases.emplace_back();
      continue;
    }
    if (kw != "inject")
      throw ParseError("scenario line " + std::to_string(lineno) + ": expected inject or barrier");
    std::string hostname;
    ls >> hostname;
    const Host* h = topo.host_named(hostname);
    if (!h) throw ParseError("scenario line " + std::to_string(lineno) + ": unknown host " + hostname);
    std::string rest;
    std::getline(ls, rest);
    rest = trim(rest);
    if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
      throw ParseError("scenario line " + std::to_string(lineno) + ": expected {field=value,...}");
    Injection inj;
    inj.host = static_cast<uint32_t>(h - topo.hosts.data());
    std::string body = rest.substr(1, rest.size() - 2);
    std::string cur;
    auto flush = [&] {
      cur = trim(cur);
      if (cur.empty()) return;
      auto eq = cur.find('=');
      if (eq == std::string::npos)
        throw ParseError("scenario line " + std::to_string(lineno) + ": bad binding '" + cur + "'");
      auto fid = topo.field_id(trim(cur.substr(0, eq)));
      if (!fid)
        throw ParseError("scenario line " + std::to_string(lineno) + ": undeclared field in '" + cur + "'");
      inj.pkt.set(*fid, topo.resolve_value(trim(cur.substr(eq + 1))));
      cur.clear();
    };
    for (char c : body) {
      if (c == ',')
        flush();
      else
        cur.push_back(c);
    }
    flush();
    sc.phases.back().push_back(std::move(inj));
  }
  if (sc.phases.back().empty()) sc.phases.pop_back();
  return sc;
}

Scenario load_scenario(const Topology& topo, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(topo, ss.str());
}

std::optional<uint64_t> SimStats::max_learn_step() const {
  std::optional<uint64_t> out;
  for (const auto& l : learn)
    if (!out || l.step > *out) out = l.step;
  return out;
}

std::string SimStats::summary(const Topology& topo) const {
  std::ostringstream os;
  os << "steps " << steps << (complete ? " complete" : " incomplete") << "\n";
  os << "delivered " << delivered_count << " dropped " << dropped_count << "\n";
  for (const auto& o : outcomes) {
    os << "inject phase " << o.phase << " #" << o.index << " " << topo.hosts[o.host].name << " -> ";
    if (o.delivered.empty()) {
      os << "dropped";
    } else {
      for (const auto& loc : o.delivered) {
        const Host* h = topo.host_at(loc);
        os << (h ? h->name : loc.str()) << " ";
      }
    }
    os << "\n";
  }
  for (const auto& l : learn)
    os << "learn switch " << l.sw << " event " << l.event << " step " << l.step << "\n";
  return os.str();
}

uint64_t count_incorrect_drops(const SimStats& reference, const SimStats& run) {
  uint64_t n = 0;
  for (const auto& ref : reference.outcomes) {
    if (ref.delivered.empty()) continue;
    for (const auto& got : run.outcomes) {
      if (got.phase == ref.phase && got.index == ref.index) {
        if (got.delivered.empty()) ++n;
        break;
      }
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Simulation engine
// ---------------------------------------------------------------------------

namespace {

struct SimPacket {
  Packet pkt;
  uint32_t version = 0;
  EventMask digest = 0;
  int32_t entry = -1;   // trace index once recorded
  int32_t parent = -1;  // upstream trace index for link-arrived packets
  uint32_t outcome = 0; // index into stats.outcomes
};

struct SwitchSim {
  std::map<PortId, std::deque<SimPacket>> qin, qout;
  EventMask known = 0;
  uint32_t version = 0;  // uncoordinated mode: installed configuration
};

struct PendingPush {
  uint64_t due = 0;
  uint32_t version = 0;
};

enum class RuleKind : uint8_t { In, Switch, Link, Out, CtrlRecv, CtrlSend, Push };

struct RuleDesc {
  RuleKind kind;
  SwitchId sw = 0;
  PortId pt = 0;
  auto operator<=>(const RuleDesc&) const = default;
};

struct Engine {
  const Topology& topo;
  const Nes& nes;
  const Scenario& scenario;
  const SimOptions& opts;

  std::map<uint32_t, Configuration> tables;  // version id -> resolved tables
  std::map<SwitchId, SwitchSim> switches;
  EventMask ctrl_queue = 0;  // Q
  EventMask ctrl_set = 0;    // R (nes) / controller view (uncoordinated)
  std::map<SwitchId, PendingPush> pushes;
  uint64_t step_no = 0;
  std::mt19937_64 rng;

  size_t next_phase = 0, next_inj = 0;  // cursor into scenario
  size_t released_phase = 0;

  NetworkTrace trace;
  std::vector<int32_t> parent_of;  // per trace entry
  SimStats stats;

  Engine(const Topology& t, const Nes& n, const Scenario& s, const SimOptions& o)
      : topo(t), nes(n), scenario(s), opts(o), rng(o.seed) {
    for (EventMask m : nes.family()) {
      Configuration c = nes.config_of(m);
      c.id = static_cast<int>(nes.id_of(m));
      tables.emplace(nes.id_of(m), std::move(c));
    }
    for (const auto& entry : topo.switches) switches[entry.first];  // default state
  }

  bool packets_quiescent() const {
    for (const auto& [sw, st] : switches) {
      for (const auto& [p, q] : st.qin)
        if (!q.empty()) return false;
      for (const auto& [p, q] : st.qout)
        if (!q.empty()) return false;
    }
    return true;
  }

  bool ctrl_quiescent() const {
    if (opts.mode != SimMode::Nes) return true;
    if (ctrl_queue != 0) return false;
    if (opts.ctrl_broadcast) {
      for (const auto& [sw, st] : switches)
        if (ctrl_set & ~st.known) return false;
    }
    return true;
  }

  bool barrier_open() const { return packets_quiescent() && ctrl_quiescent(); }

  uint32_t record_entry(const Packet& pkt, Location loc, int32_t parent) {
    trace.lps.push_back(LocatedPacket{pkt, loc});
    parent_of.push_back(parent);
    return static_cast<uint32_t>(trace.lps.size() - 1);
  }

  void learn(SwitchSim& st, SwitchId sw, EventMask add) {
    EventMask fresh = add & ~st.known;
    if (!fresh) return;
    st.known |= fresh;
    for (uint32_t e = 0; e < nes.events().size(); ++e)
      if (fresh >> e & 1) stats.learn.push_back(LearnRecord{sw, e, step_no});
    if (!nes.is_event_set(st.known)) stats.local_sets_ok = false;
  }

  std::vector<RuleDesc> applicable() const {
    std::vector<RuleDesc> out;
    if (next_phase < scenario.phases.size()) {
      if (next_phase == released_phase || barrier_open())
        out.push_back(RuleDesc{RuleKind::In});
    }
    for (const auto& [sw, st] : switches) {
      for (const auto& [p, q] : st.qin)
        if (!q.empty()) out.push_back(RuleDesc{RuleKind::Switch, sw, p});
      for (const auto& [p, q] : st.qout) {
        if (q.empty()) continue;
        Location at{sw, p};
        if (topo.link_from(at))
          out.push_back(RuleDesc{RuleKind::Link, sw, p});
        else if (topo.is_host_location(at))
          out.push_back(RuleDesc{RuleKind::Out, sw, p});
      }
    }
    if (opts.mode == SimMode::Nes) {
      if (ctrl_queue) out.push_back(RuleDesc{RuleKind::CtrlRecv});
      if (opts.ctrl_broadcast) {
        for (const auto& [sw, st] : switches)
          if (ctrl_set & ~st.known) out.push_back(RuleDesc{RuleKind::CtrlSend, sw});
      }
    } else {
      for (const auto& [sw, push] : pushes)
        if (step_no >= push.due) out.push_back(RuleDesc{RuleKind::Push, sw});
    }
    return out;
  }

  void do_in() {
    if (next_phase != released_phase) released_phase = next_phase;
    const Injection& inj = scenario.phases[next_phase][next_inj];
    const Host& host = topo.hosts[inj.host];
    SwitchSim& st = switches.at(host.loc.sw);

    SimPacket sp;
    sp.pkt = inj.pkt;
    if (opts.mode == SimMode::Nes) {
      sp.version = nes.id_of(st.known);
      sp.digest = st.known;
    } else {
      sp.version = st.version;
    }
    sp.entry = static_cast<int32_t>(record_entry(sp.pkt, host.loc, -1));

    InjectionOutcome oc;
    oc.phase = static_cast<uint32_t>(next_phase);
    oc.index = static_cast<uint32_t>(next_inj);
    oc.host = inj.host;
    oc.root_entry = static_cast<uint32_t>(sp.entry);
    sp.outcome = static_cast<uint32_t>(stats.outcomes.size());
    stats.outcomes.push_back(std::move(oc));

    st.qin[host.loc.pt].push_back(std::move(sp));
    if (++next_inj >= scenario.phases[next_phase].size()) {
      next_inj = 0;
      ++next_phase;
    }
  }

  void do_switch(SwitchId sw, PortId pt) {
    SwitchSim& st = switches.at(sw);
    SimPacket sp = std::move(st.qin.at(pt).front());
    st.qin.at(pt).pop_front();
    Location here{sw, pt};
    if (sp.entry < 0) sp.entry = static_cast<int32_t>(record_entry(sp.pkt, here, sp.parent));

    uint32_t lookup_version = sp.version;
    if (opts.mode == SimMode::Nes) {
      learn(st, sw, sp.digest);
      EventMask enabled = nes.is_event_set(st.known) ? nes.enabled_events(st.known) : 0;
      LocatedPacket lp{sp.pkt, here};
      for (uint32_t e = 0; e < nes.events().size(); ++e) {
        if (!(enabled >> e & 1)) continue;
        if (!matches(lp, nes.events()[e])) continue;
        EventMask bit = EventMask{1} << e;
        learn(st, sw, bit);
        sp.digest |= bit;
        ctrl_queue |= bit & ~ctrl_set;
        break;  // one detection per arrival; lowest event id wins
      }
      sp.digest |= st.known;
    } else {
      detect_uncoordinated(LocatedPacket{sp.pkt, here});
      lookup_version = st.version;
    }

    auto tit = tables.find(lookup_version);
    if (tit == tables.end()) return;  // no such configuration: drop
    const Configuration& cfg = tit->second;
    auto sit = cfg.tables.find(sw);
    if (sit == cfg.tables.end()) return;
    const Rule* hit = nullptr;
    for (const auto& r : sit->second) {
      if (r.in_port.admits(pt) && r.match.satisfied_by(sp.pkt)) {
        hit = &r;
        break;
      }
    }
    if (!hit) return;  // drop

    for (const auto& a : hit->actions) {
      SimPacket child = sp;
      for (auto [f, v] : a.writes) child.pkt.set(f, v);
      Location out{sw, a.out_port};
      if (topo.link_from(out)) {
        child.parent = sp.entry;
        child.entry = -1;
        st.qout[a.out_port].push_back(std::move(child));
      } else if (topo.is_host_location(out)) {
        child.parent = sp.entry;
        child.entry = static_cast<int32_t>(record_entry(child.pkt, out, sp.entry));
        st.qout[a.out_port].push_back(std::move(child));
      }
      // outputs to linkless fabric ports are dropped
    }
  }

  void do_link(SwitchId sw, PortId pt) {
    SwitchSim& st = switches.at(sw);
    SimPacket sp = std::move(st.qout.at(pt).front());
    st.qout.at(pt).pop_front();
    Location dst = *topo.link_from(Location{sw, pt});
    switches.at(dst.sw).qin[dst.pt].push_back(std::move(sp));
  }

  void do_out(SwitchId sw, PortId pt) {
    SwitchSim& st = switches.at(sw);
    SimPacket sp = std::move(st.qout.at(pt).front());
    st.qout.at(pt).pop_front();
    stats.outcomes[sp.outcome].delivered.push_back(Location{sw, pt});
    ++stats.delivered_count;
  }

  void do_ctrl_recv() {
    for (uint32_t e = 0; e < nes.events().size(); ++e) {
      EventMask bit = EventMask{1} << e;
      if (ctrl_queue & bit) {
        ctrl_queue &= ~bit;
        ctrl_set |= bit;
        return;
      }
    }
  }

  void do_ctrl_send(SwitchId sw) { learn(switches.at(sw), sw, ctrl_set); }

  void do_push(SwitchId sw) {
    switches.at(sw).version = pushes.at(sw).version;
    pushes.erase(sw);
  }

  void detect_uncoordinated(const LocatedPacket& lp) {
    EventMask enabled = nes.is_event_set(ctrl_set) ? nes.enabled_events(ctrl_set) : 0;
    for (uint32_t e = 0; e < nes.events().size(); ++e) {
      if (!(enabled >> e & 1)) continue;
      if (!matches(lp, nes.events()[e])) continue;
      ctrl_set |= EventMask{1} << e;
      uint32_t ver = nes.id_of(ctrl_set);
      for (const auto& [sw, st] : switches) pushes[sw] = PendingPush{step_no + opts.delay_steps, ver};
      return;
    }
  }

  SimResult run() {
    while (step_no < opts.max_steps) {
      auto rules = applicable();
      if (rules.empty()) break;
      std::sort(rules.begin(), rules.end());
      RuleDesc pick = rules[uniform_below(rng, rules.size())];
      ++step_no;
      switch (pick.kind) {
        case RuleKind::In: do_in(); break;
        case RuleKind::Switch: do_switch(pick.sw, pick.pt); break;
        case RuleKind::Link: do_link(pick.sw, pick.pt); break;
        case RuleKind::Out: do_out(pick.sw, pick.pt); break;
        case RuleKind::CtrlRecv: do_ctrl_recv(); break;
        case RuleKind::CtrlSend: do_ctrl_send(pick.sw); break;
        case RuleKind::Push: do_push(pick.sw); break;
      }
      if (opts.mode == SimMode::Nes && !nes.consistent(ctrl_queue | ctrl_set))
        stats.global_consistency_ok = false;
    }
    stats.steps = step_no;
    stats.complete = applicable().empty();
    for (auto& o : stats.outcomes) {
      if (o.delivered.empty()) ++stats.dropped_count;
      std::sort(o.delivered.begin(), o.delivered.end());
    }
    finish_trees();
    return SimResult{std::move(trace), std::move(stats)};
  }

  void finish_trees() {
    const uint32_t n = static_cast<uint32_t>(trace.lps.size());
    std::vector<std::vector<uint32_t>> children(n);
    std::vector<bool> has_child(n, false);
    for (uint32_t i = 0; i < n; ++i) {
      if (parent_of[i] >= 0) {
        children[parent_of[i]].push_back(i);
        has_child[parent_of[i]] = true;
      }
    }
    for (uint32_t leaf = 0; leaf < n; ++leaf) {
      if (has_child[leaf]) continue;
      std::vector<uint32_t> path;
      int32_t cur = static_cast<int32_t>(leaf);
      while (cur >= 0) {
        path.push_back(static_cast<uint32_t>(cur));
        cur = parent_of[cur];
      }
      std::reverse(path.begin(), path.end());
      trace.trees.push_back(std::move(path));
    }
    std::sort(trace.trees.begin(), trace.trees.end());
  }
};

}  // namespace

SimResult simulate(const Topology& topo, const Nes& nes, const Scenario& scenario,
                   const SimOptions& opts) {
  if (opts.mode == SimMode::Nes) {
    auto loc = nes.locally_determined();
    if (!loc.ok)
      throw SemanticError("structure is not locally determined; events " +
                          mask_str(loc.witness, nes.events(), topo) +
                          " conflict across switches and cannot be implemented");
  }
  Engine engine(topo, nes, scenario, opts);
  return engine.run();
}

}  // namespace evnet
