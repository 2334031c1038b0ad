#pragma once

// Human-readable scenario files. Line-based, sectioned, versioned:
//
//   scenario v1
//   name <name>
//
//   [nodes]
//   node name=<n> kind=<kind> plane=<plane> at=<x>,<y>
//   node name=<n> kind=<kind> plane=<plane> path=<t>:<x>,<y>;<t>:<x>,<y>
//
//   [coverage]
//   dead_zone center=<x>,<y> radius=<r>
//   dab_region id=<region> center=<x>,<y> radius=<r>
//   g5_station node=<n> range=<r>
//   rfid_reader node=<n> range=<r>
//
//   [channels]
//   g5_range=<m> rfid_range=<m> latency_cellular=<ms> latency_g5=<ms>
//       latency_dab=<ms> latency_rfid=<ms>            (one line, all optional)
//
//   [pseudonyms]
//   policy=<single_identity|per_service|time_rotation|per_service_and_time>
//       [period=<ms>] pool=<n>
//
//   [services]
//   service id=<id> provider=<n> class=<class> purpose=<tag> fields=<f,f,...>
//
//   [script]
//   at=<ms> dispatch sender=<n> service=<id> to=<address> payload=<k>:<v>,...
//       [fault=tamper|wrong_purpose]
//   at=<ms> subject_request subject=<n> service=<id> kind=<review|correct|delete|export>
//       [record=<i> field=<f> value=<v>]
//   at=<ms> setting subject=<n> service=<id> name=<k> value=<v>
//   at=<ms> transfer subject=<n> from=<id> to=<id>
//   at=<ms> mediate subject=<n> kind=<review|delete>
//   at=<ms> revoke node=<n> scope=<pseudonym|enrollment> [service=<id>]
//   at=<ms> rfid_auth tag=<n> reader=<n> service=<id>
//
// Addresses use the same syntax as traces: unicast:<n>, geo:<x>,<y>,<r>,
// region:<id>, proximity:<n> (node names instead of ids). '#' starts a
// comment. Values are percent-escaped; list items additionally escape
// ':' ',' and ';'.

#include <string>
#include <vector>

#include "hcsim/sim.hpp"

namespace hcsim {

namespace detail {

inline std::string escape_item(std::string_view s) {
  std::string base = escape_token(s);
  std::string out;
  out.reserve(base.size());
  for (const char c : base) {
    if (c == ':') {
      out += "%3a";
    } else if (c == ',') {
      out += "%2c";
    } else if (c == ';') {
      out += "%3b";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

inline std::string serialize_scenario(const Scenario& s) {
  std::string out = "scenario v" + std::to_string(s.version) + "\n";
  out += "name " + escape_token(s.name) + "\n";

  out += "\n[nodes]\n";
  for (const auto& n : s.nodes) {
    out += "node name=" + escape_token(n.name) + " kind=" + std::string(node_kind_name(n.kind)) +
           " plane=" + std::string(plane_name(n.plane));
    const auto& wp = n.trajectory.waypoints();
    if (wp.size() == 1) {
      out += " at=" + format_double(wp[0].second.x) + "," + format_double(wp[0].second.y);
    } else {
      out += " path=";
      for (std::size_t i = 0; i < wp.size(); ++i) {
        if (i) out += ";";
        out += std::to_string(wp[i].first.ms) + ":" + format_double(wp[i].second.x) + "," +
               format_double(wp[i].second.y);
      }
    }
    out += "\n";
  }

  if (!s.dead_zones.empty() || !s.dab_regions.empty() || !s.stations.empty() ||
      !s.readers.empty()) {
    out += "\n[coverage]\n";
    for (const auto& z : s.dead_zones) {
      out += "dead_zone center=" + format_double(z.center.x) + "," + format_double(z.center.y) +
             " radius=" + format_double(z.radius_m) + "\n";
    }
    for (const auto& [id, r] : s.dab_regions) {
      out += "dab_region id=" + escape_token(id) + " center=" + format_double(r.center.x) + "," +
             format_double(r.center.y) + " radius=" + format_double(r.radius_m) + "\n";
    }
    for (const auto& st : s.stations) {
      out += "g5_station node=" + escape_token(st.node) + " range=" + format_double(st.range_m) +
             "\n";
    }
    for (const auto& rd : s.readers) {
      out += "rfid_reader node=" + escape_token(rd.node) + " range=" + format_double(rd.range_m) +
             "\n";
    }
  }

  out += "\n[channels]\n";
  out += "g5_range=" + format_double(s.channels.g5_range_m) +
         " rfid_range=" + format_double(s.channels.rfid_range_m) +
         " latency_cellular=" + std::to_string(s.channels.cellular_latency_ms) +
         " latency_g5=" + std::to_string(s.channels.g5_latency_ms) +
         " latency_dab=" + std::to_string(s.channels.dab_latency_ms) +
         " latency_rfid=" + std::to_string(s.channels.rfid_latency_ms) + "\n";

  out += "\n[pseudonyms]\n";
  switch (s.pseudonym_policy.strategy) {
    case PseudonymPolicy::Strategy::SingleIdentity: out += "policy=single_identity"; break;
    case PseudonymPolicy::Strategy::PerService: out += "policy=per_service"; break;
    case PseudonymPolicy::Strategy::TimeRotation:
      out += "policy=time_rotation period=" + std::to_string(s.pseudonym_policy.period_ms);
      break;
    case PseudonymPolicy::Strategy::PerServiceAndTime:
      out += "policy=per_service_and_time period=" + std::to_string(s.pseudonym_policy.period_ms);
      break;
  }
  out += " pool=" + std::to_string(s.pseudonym_policy.pool_size) + "\n";

  if (!s.services.empty()) {
    out += "\n[services]\n";
    for (const auto& svc : s.services) {
      out += "service id=" + escape_token(svc.id) + " provider=" + escape_token(svc.provider) +
             " class=" + std::string(message_class_name(svc.message_class)) +
             " purpose=" + escape_token(svc.purpose.value) + " fields=";
      bool first = true;
      for (const auto& f : svc.fields) {
        if (!first) out += ",";
        out += detail::escape_item(f);
        first = false;
      }
      out += "\n";
    }
  }

  out += "\n[script]\n";
  for (const auto& a : s.actions) {
    out += "at=" + std::to_string(a.at.ms) + " ";
    if (const auto* d = std::get_if<DispatchAction>(&a.body)) {
      out += "dispatch sender=" + escape_token(d->sender) + " service=" + escape_token(d->service);
      out += " to=";
      switch (d->to.mode) {
        case AddressMode::Unicast: out += "unicast:" + detail::escape_item(d->to.node); break;
        case AddressMode::GeoBroadcast:
          out += "geo:" + format_double(d->to.center.x) + "," + format_double(d->to.center.y) +
                 "," + format_double(d->to.radius_m);
          break;
        case AddressMode::RegionalBroadcast:
          out += "region:" + detail::escape_item(d->to.region);
          break;
        case AddressMode::Proximity: out += "proximity:" + detail::escape_item(d->to.node); break;
      }
      if (!d->payload.empty()) {
        out += " payload=";
        bool first = true;
        for (const auto& [k, v] : d->payload) {
          if (!first) out += ",";
          out += detail::escape_item(k) + ":" + detail::escape_item(v);
          first = false;
        }
      }
      if (d->faults.tamper_in_transit) out += " fault=tamper";
      if (d->faults.wrong_purpose) out += " fault=wrong_purpose";
    } else if (const auto* sr = std::get_if<SubjectRequestAction>(&a.body)) {
      out += "subject_request subject=" + escape_token(sr->subject) +
             " service=" + escape_token(sr->service) + " kind=" + sr->kind;
      if (sr->kind == "correct") {
        out += " record=" + std::to_string(sr->record_index) + " field=" +
               escape_token(sr->field) + " value=" + escape_token(sr->value);
      }
    } else if (const auto* ss = std::get_if<SetSettingAction>(&a.body)) {
      out += "setting subject=" + escape_token(ss->subject) +
             " service=" + escape_token(ss->service) + " name=" + escape_token(ss->name) +
             " value=" + escape_token(ss->value);
    } else if (const auto* tr = std::get_if<TransferAction>(&a.body)) {
      out += "transfer subject=" + escape_token(tr->subject) + " from=" + escape_token(tr->from) +
             " to=" + escape_token(tr->to);
    } else if (const auto* m = std::get_if<MediateAction>(&a.body)) {
      out += "mediate subject=" + escape_token(m->subject) + " kind=" + m->kind;
    } else if (const auto* rv = std::get_if<RevokeAction>(&a.body)) {
      out += "revoke node=" + escape_token(rv->node) + " scope=" + rv->scope;
      if (rv->scope == "pseudonym") out += " service=" + escape_token(rv->service);
    } else if (const auto* ra = std::get_if<RfidAuthAction>(&a.body)) {
      out += "rfid_auth tag=" + escape_token(ra->tag) + " reader=" + escape_token(ra->reader) +
             " service=" + escape_token(ra->service);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

inline Result<Scenario> parse_scenario(std::string_view text) {
  Scenario scenario;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string section;
  bool have_version = false;

  const auto fail = [&line_no](const std::string& why) {
    return make_error(Errc::scenario_invalid, "line " + std::to_string(line_no) + ": " + why);
  };

  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) continue;

    if (!have_version) {
      if (line == "scenario v1") {
        have_version = true;
        scenario.version = 1;
        continue;
      }
      return fail("expected version tag 'scenario v1'");
    }
    if (line.front() == '[') {
      if (line.back() != ']') return fail("malformed section header");
      section = std::string(line.substr(1, line.size() - 2));
      continue;
    }

    // first word + k=v tokens
    std::vector<std::string_view> tokens;
    std::size_t tp = 0;
    while (tp < line.size()) {
      auto sp = line.find(' ', tp);
      if (sp == std::string_view::npos) sp = line.size();
      if (sp > tp) tokens.push_back(line.substr(tp, sp - tp));
      tp = sp + 1;
    }
    if (tokens.empty()) continue;
    const std::string_view head = tokens[0];
    const auto kv = [&tokens](std::string_view key) -> std::optional<std::string_view> {
      const std::string prefix = std::string(key) + "=";
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i].starts_with(prefix)) return tokens[i].substr(prefix.size());
      }
      return std::nullopt;
    };
    const auto kv_string = [&](std::string_view key) -> std::optional<std::string> {
      const auto raw = kv(key);
      if (!raw) return std::nullopt;
      return unescape_token(*raw);
    };

    if (head == "name") {
      if (tokens.size() < 2) return fail("name needs a value");
      const auto n = unescape_token(tokens[1]);
      if (!n) return fail("bad name escape");
      scenario.name = *n;
      continue;
    }

    const auto parse_xy = [&](std::string_view v) -> std::optional<GeoPosition> {
      const auto parts = detail::split(v, ',');
      if (parts.size() != 2) return std::nullopt;
      const auto x = parse_double(parts[0]);
      const auto y = parse_double(parts[1]);
      if (!x || !y) return std::nullopt;
      return GeoPosition{*x, *y};
    };

    if (section == "nodes") {
      if (head != "node") return fail("expected 'node'");
      NodeDecl decl;
      const auto name = kv_string("name");
      const auto kind = kv("kind");
      const auto plane = kv("plane");
      if (!name || !kind || !plane) return fail("node needs name/kind/plane");
      decl.name = *name;
      const auto k = node_kind_from_name(*kind);
      const auto p = plane_from_name(*plane);
      if (!k || !p) return fail("unknown kind or plane");
      decl.kind = *k;
      decl.plane = *p;
      if (const auto at = kv("at")) {
        const auto xy = parse_xy(*at);
        if (!xy) return fail("bad at=<x>,<y>");
        decl.trajectory = Trajectory::fixed(*xy);
      } else if (const auto path = kv("path")) {
        for (const auto wp : detail::split(*path, ';')) {
          const auto colon = wp.find(':');
          if (colon == std::string_view::npos) return fail("bad path waypoint");
          const auto t = parse_i64(wp.substr(0, colon));
          const auto xy = parse_xy(wp.substr(colon + 1));
          if (!t || !xy) return fail("bad path waypoint");
          decl.trajectory.add_waypoint(SimTime{*t}, *xy);
        }
      } else {
        return fail("node needs at= or path=");
      }
      scenario.nodes.push_back(std::move(decl));
    } else if (section == "coverage") {
      if (head == "dead_zone") {
        const auto center = kv("center");
        const auto radius = kv("radius");
        if (!center || !radius) return fail("dead_zone needs center/radius");
        const auto xy = parse_xy(*center);
        const auto r = parse_double(*radius);
        if (!xy || !r) return fail("bad dead_zone");
        scenario.dead_zones.push_back(CircularRegion{*xy, *r});
      } else if (head == "dab_region") {
        const auto id = kv_string("id");
        const auto center = kv("center");
        const auto radius = kv("radius");
        if (!id || !center || !radius) return fail("dab_region needs id/center/radius");
        const auto xy = parse_xy(*center);
        const auto r = parse_double(*radius);
        if (!xy || !r) return fail("bad dab_region");
        scenario.dab_regions[*id] = CircularRegion{*xy, *r};
      } else if (head == "g5_station") {
        const auto node = kv_string("node");
        const auto range = kv("range");
        if (!node || !range) return fail("g5_station needs node/range");
        const auto r = parse_double(*range);
        if (!r) return fail("bad station range");
        scenario.stations.push_back({*node, *r});
      } else if (head == "rfid_reader") {
        const auto node = kv_string("node");
        const auto range = kv("range");
        if (!node || !range) return fail("rfid_reader needs node/range");
        const auto r = parse_double(*range);
        if (!r) return fail("bad reader range");
        scenario.readers.push_back({*node, *r});
      } else {
        return fail("unknown coverage entry");
      }
    } else if (section == "channels") {
      const auto set_double = [&](std::string_view key, double& into) -> Result<void> {
        if (const auto v = kv(key)) {
          const auto d = parse_double(*v);
          if (!d) return fail("bad " + std::string(key));
          into = *d;
        }
        return {};
      };
      const auto set_ms = [&](std::string_view key, std::int64_t& into) -> Result<void> {
        if (const auto v = kv(key)) {
          const auto d = parse_i64(*v);
          if (!d) return fail("bad " + std::string(key));
          into = *d;
        }
        return {};
      };
      // the head token itself may be a k=v pair on this line
      tokens.insert(tokens.begin() + 1, head);
      if (const auto r = set_double("g5_range", scenario.channels.g5_range_m); !r.ok())
        return r.error();
      if (const auto r = set_double("rfid_range", scenario.channels.rfid_range_m); !r.ok())
        return r.error();
      if (const auto r = set_ms("latency_cellular", scenario.channels.cellular_latency_ms);
          !r.ok())
        return r.error();
      if (const auto r = set_ms("latency_g5", scenario.channels.g5_latency_ms); !r.ok())
        return r.error();
      if (const auto r = set_ms("latency_dab", scenario.channels.dab_latency_ms); !r.ok())
        return r.error();
      if (const auto r = set_ms("latency_rfid", scenario.channels.rfid_latency_ms); !r.ok())
        return r.error();
    } else if (section == "pseudonyms") {
      tokens.insert(tokens.begin() + 1, head);
      const auto policy = kv("policy");
      if (!policy) return fail("pseudonyms line needs policy=");
      auto& p = scenario.pseudonym_policy;
      if (*policy == "single_identity") {
        p.strategy = PseudonymPolicy::Strategy::SingleIdentity;
      } else if (*policy == "per_service") {
        p.strategy = PseudonymPolicy::Strategy::PerService;
      } else if (*policy == "time_rotation") {
        p.strategy = PseudonymPolicy::Strategy::TimeRotation;
      } else if (*policy == "per_service_and_time") {
        p.strategy = PseudonymPolicy::Strategy::PerServiceAndTime;
      } else {
        return fail("unknown policy");
      }
      if (const auto period = kv("period")) {
        const auto v = parse_i64(*period);
        if (!v) return fail("bad period");
        p.period_ms = *v;
      }
      if (const auto pool = kv("pool")) {
        const auto v = parse_u64(*pool);
        if (!v) return fail("bad pool");
        p.pool_size = *v;
      }
    } else if (section == "services") {
      if (head != "service") return fail("expected 'service'");
      ServiceDecl decl;
      const auto id = kv_string("id");
      const auto provider = kv_string("provider");
      const auto cls = kv("class");
      const auto purpose = kv_string("purpose");
      const auto fields = kv("fields");
      if (!id || !provider || !cls || !purpose || !fields) {
        return fail("service needs id/provider/class/purpose/fields");
      }
      decl.id = *id;
      decl.provider = *provider;
      const auto c = message_class_from_name(*cls);
      if (!c) return fail("unknown message class");
      decl.message_class = *c;
      decl.purpose = PurposeTag{*purpose};
      for (const auto f : detail::split(*fields, ',')) {
        const auto unescaped = unescape_token(f);
        if (!unescaped || unescaped->empty()) return fail("bad field list");
        decl.fields.insert(*unescaped);
      }
      scenario.services.push_back(std::move(decl));
    } else if (section == "script") {
      tokens.insert(tokens.begin() + 1, head);  // head is at=<ms>
      const auto at = kv("at");
      if (!at) return fail("script line needs at=");
      const auto t = parse_i64(*at);
      if (!t) return fail("bad at=");
      if (tokens.size() < 3) return fail("script line needs an action");
      const std::string_view action = tokens[2];
      ScenarioAction sa;
      sa.at = SimTime{*t};

      if (action == "dispatch") {
        DispatchAction d;
        const auto sender = kv_string("sender");
        const auto service = kv_string("service");
        const auto to = kv("to");
        if (!sender || !service || !to) return fail("dispatch needs sender/service/to");
        d.sender = *sender;
        d.service = *service;
        const auto colon = to->find(':');
        if (colon == std::string_view::npos) return fail("bad to= address");
        const auto mode = to->substr(0, colon);
        const auto rest = to->substr(colon + 1);
        if (mode == "unicast") {
          const auto n = unescape_token(rest);
          if (!n) return fail("bad unicast target");
          d.to = AddressDecl::unicast(*n);
        } else if (mode == "geo") {
          const auto parts = detail::split(rest, ',');
          if (parts.size() != 3) return fail("geo needs x,y,radius");
          const auto x = parse_double(parts[0]);
          const auto y = parse_double(parts[1]);
          const auto r = parse_double(parts[2]);
          if (!x || !y || !r) return fail("bad geo address");
          d.to = AddressDecl::geo({*x, *y}, *r);
        } else if (mode == "region") {
          const auto rg = unescape_token(rest);
          if (!rg) return fail("bad region");
          d.to = AddressDecl::regional(*rg);
        } else if (mode == "proximity") {
          const auto n = unescape_token(rest);
          if (!n) return fail("bad proximity reader");
          d.to = AddressDecl::proximity(*n);
        } else {
          return fail("unknown address mode");
        }
        if (const auto payload = kv("payload")) {
          for (const auto pair : detail::split(*payload, ',')) {
            const auto pc = pair.find(':');
            if (pc == std::string_view::npos) return fail("bad payload pair");
            const auto k = unescape_token(pair.substr(0, pc));
            const auto v = unescape_token(pair.substr(pc + 1));
            if (!k || !v) return fail("bad payload escape");
            d.payload[*k] = *v;
          }
        }
        if (const auto fault = kv("fault")) {
          if (*fault == "tamper") {
            d.faults.tamper_in_transit = true;
          } else if (*fault == "wrong_purpose") {
            d.faults.wrong_purpose = true;
          } else {
            return fail("unknown fault");
          }
        }
        sa.body = std::move(d);
      } else if (action == "subject_request") {
        SubjectRequestAction r;
        const auto subject = kv_string("subject");
        const auto service = kv_string("service");
        const auto kind = kv_string("kind");
        if (!subject || !service || !kind) return fail("subject_request needs subject/service/kind");
        r.subject = *subject;
        r.service = *service;
        r.kind = *kind;
        if (const auto record = kv("record")) {
          const auto v = parse_u64(*record);
          if (!v) return fail("bad record index");
          r.record_index = *v;
        }
        if (const auto field = kv_string("field")) r.field = *field;
        if (const auto value = kv_string("value")) r.value = *value;
        sa.body = std::move(r);
      } else if (action == "setting") {
        SetSettingAction r;
        const auto subject = kv_string("subject");
        const auto service = kv_string("service");
        const auto name = kv_string("name");
        const auto value = kv_string("value");
        if (!subject || !service || !name || !value) {
          return fail("setting needs subject/service/name/value");
        }
        r.subject = *subject;
        r.service = *service;
        r.name = *name;
        r.value = *value;
        sa.body = std::move(r);
      } else if (action == "transfer") {
        TransferAction r;
        const auto subject = kv_string("subject");
        const auto from = kv_string("from");
        const auto to = kv_string("to");
        if (!subject || !from || !to) return fail("transfer needs subject/from/to");
        r.subject = *subject;
        r.from = *from;
        r.to = *to;
        sa.body = std::move(r);
      } else if (action == "mediate") {
        MediateAction r;
        const auto subject = kv_string("subject");
        const auto kind = kv_string("kind");
        if (!subject || !kind) return fail("mediate needs subject/kind");
        r.subject = *subject;
        r.kind = *kind;
        sa.body = std::move(r);
      } else if (action == "revoke") {
        RevokeAction r;
        const auto node = kv_string("node");
        const auto scope = kv_string("scope");
        if (!node || !scope) return fail("revoke needs node/scope");
        r.node = *node;
        r.scope = *scope;
        if (const auto service = kv_string("service")) r.service = *service;
        sa.body = std::move(r);
      } else if (action == "rfid_auth") {
        RfidAuthAction r;
        const auto tag = kv_string("tag");
        const auto reader = kv_string("reader");
        const auto service = kv_string("service");
        if (!tag || !reader || !service) return fail("rfid_auth needs tag/reader/service");
        r.tag = *tag;
        r.reader = *reader;
        r.service = *service;
        sa.body = std::move(r);
      } else {
        return fail("unknown action '" + std::string(action) + "'");
      }
      scenario.actions.push_back(std::move(sa));
    } else if (section.empty()) {
      return fail("content before any section");
    } else {
      return fail("unknown section [" + section + "]");
    }
  }
  if (!have_version) return make_error(Errc::scenario_invalid, "empty scenario file");
  return scenario;
}

}  // namespace hcsim
