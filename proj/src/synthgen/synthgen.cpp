#include "autoprov/synthgen/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>

#include "autoprov/core/hash.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/rng.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/enrich/normalize.hpp"

namespace autoprov::synthgen {

namespace {

constexpr std::int64_t kBaseMillis = 1709287200000;  // 2024-03-01T10:00:00Z

// One semantic interaction before rendering.
struct Event {
  std::string proc;
  std::string op;
  std::string obj;
};

struct Rendered {
  std::string line;
  ProvenanceRecord oracle;
};

struct Format {
  std::string name;
  std::vector<Event> benign;        // interaction script, drawn uniformly
  std::string log_regex;            // named groups feeding the stub responses
  std::string p1, p2, p3, p4;       // stub response templates
  std::vector<std::pair<std::string, std::string>> p5;  // field -> response
  std::function<Rendered(const Event&, Rng&, std::int64_t)> render;
};

struct Civil {
  int y, mo, d, h, mi, s, ms;
};

Civil civil(std::int64_t millis) {
  std::int64_t secs = millis / 1000;
  int ms = static_cast<int>(millis % 1000);
  std::int64_t days = secs / 86400, rem = secs % 86400;
  // Inverse of the days-from-civil algorithm.
  days += 719468;
  std::int64_t era = days / 146097;
  std::int64_t doe = days - era * 146097;
  std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = yoe + era * 400;
  std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  std::int64_t mp = (5 * doy + 2) / 153;
  std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
  std::int64_t m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) ++y;
  return {static_cast<int>(y), static_cast<int>(m), static_cast<int>(d), static_cast<int>(rem / 3600),
          static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60), ms};
}

std::string fmt(const char* f, auto... args) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string iso_ms(std::int64_t t) {
  auto c = civil(t);
  return fmt("%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", c.y, c.mo, c.d, c.h, c.mi, c.s, c.ms);
}

std::string iso_s(std::int64_t t) {
  auto c = civil(t);
  return fmt("%04d-%02d-%02dT%02d:%02d:%02dZ", c.y, c.mo, c.d, c.h, c.mi, c.s);
}

std::string space_ms(std::int64_t t) {
  auto c = civil(t);
  return fmt("%04d-%02d-%02d %02d:%02d:%02d.%03d", c.y, c.mo, c.d, c.h, c.mi, c.s, c.ms);
}

std::string clf_time(std::int64_t t) {
  static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  auto c = civil(t);
  return fmt("%02d/%s/%04d:%02d:%02d:%02d +0000", c.d, months[c.mo - 1], c.y, c.h, c.mi, c.s);
}

std::uint64_t h(std::string_view s) { return fnv1a64(s); }

std::string uuid_of(std::string_view s) {
  auto a = hex64(h(s)), b = hex64(h(std::string(s) + "#"));
  std::string u = a + b;
  std::transform(u.begin(), u.end(), u.begin(), ::toupper);
  return u.substr(0, 8) + "-" + u.substr(8, 4) + "-" + u.substr(12, 4) + "-" + u.substr(16, 4) + "-" + u.substr(20, 12);
}

// A stable per-entity pid from a small pool.
std::string pid_of(std::string_view proc, Rng& rng) {
  return std::to_string(1000 + (h(proc) % 30000) + 7 * rng.below(3));
}

// Names carrying a "{n}" placeholder vary per line.
std::string instantiate(const std::string& name, Rng& rng) {
  auto p = name.find("{n}");
  if (p == std::string::npos) return name;
  return name.substr(0, p) + std::to_string(1 + rng.below(4)) + name.substr(p + 3);
}

ProvenanceRecord record(std::string sid, std::optional<std::string> stype, std::optional<std::string> sname,
                        std::string did, std::optional<std::string> dtype, std::optional<std::string> dname,
                        std::string itype, const std::string& time) {
  ProvenanceRecord r;
  r.sid = std::move(sid);
  r.stype = std::move(stype);
  r.sname = std::move(sname);
  r.did = std::move(did);
  r.dtype = std::move(dtype);
  r.dname = std::move(dname);
  r.itype = std::move(itype);
  r.time = parse_timestamp(time);
  return r;
}

const std::string kP1Named = R"~(Process "@{sname}" (@{sid}) performed {@{itype}} on "@{dname}" (@{did}).)~";
const std::string kP3Named =
    "[RELATED ENTITIES and IP ADDRESSES]\n(@{sid}, @{did})  A: [@{itype}]\n\n[ENTITY NAMES]\n"
    "\"@{sid}\" = \"@{sname}\"\n\"@{did}\" = \"@{dname}\"";
const std::string kP4 = "(@{sid}, @{did})  A: [@{itype}] {D=->} (timestamp=@{time})";

std::vector<Event> linux_file_script() {
  return {{"/usr/bin/bash", "read", "/etc/passwd"},
          {"/usr/bin/bash", "read", "/home/alice/.bash_history"},
          {"/usr/bin/bash", "write", "/home/alice/.bash_history"},
          {"/usr/bin/bash", "read", "/usr/lib/libc.so.6"},
          {"/usr/bin/python3", "read", "/usr/lib/libc.so.6"},
          {"/usr/bin/python3", "read", "/home/alice/notes{n}.txt"},
          {"/usr/bin/python3", "write", "/tmp/session{n}.tmp"},
          {"/usr/sbin/sshd", "read", "/etc/passwd"},
          {"/usr/sbin/sshd", "read", "/etc/shadow"},
          {"/usr/sbin/sshd", "write", "/var/log/auth.log"},
          {"/usr/sbin/cron", "read", "/etc/crontab"},
          {"/usr/sbin/cron", "write", "/var/log/syslog"},
          {"/usr/bin/vim", "read", "/home/alice/notes{n}.txt"},
          {"/usr/bin/vim", "write", "/home/alice/notes{n}.txt"},
          {"/usr/lib/firefox/firefox", "read", "/etc/hosts"},
          {"/usr/lib/firefox/firefox", "write", "/tmp/session{n}.tmp"},
          {"/usr/sbin/rsyslogd", "write", "/var/log/syslog"},
          {"/usr/sbin/rsyslogd", "read", "/etc/hosts"}};
}

Format auditd() {
  Format f;
  f.name = "auditd";
  f.benign = linux_file_script();
  f.log_regex =
      R"~(^type=SYSCALL msg=audit\((?<time>[0-9]+\.[0-9]+):[0-9]+\): .* pid=(?<sid>[0-9]+) subj_type=(?<stype>[a-z]+) exe="(?<sname>[^"]+)" obj_type=(?<dtype>[a-z]+) inode=(?<did>[0-9]+) name="(?<dname>[^"]+)" op=(?<itype>[a-z]+)$)~";
  f.p1 = kP1Named;
  f.p2 = "\"@{sid}\" = \"@{stype}\"\n\"@{did}\" = \"@{dtype}\"";
  f.p3 = kP3Named;
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: ` pid=([0-9]+) `)~"},
          {"Stype", R"~(Regex: ` subj_type=([a-z]+) `)~"},
          {"Sname", R"~(Regex: ` exe="([^"]+)"`)~"},
          {"Did", R"~(Regex: ` inode=([0-9]+) `)~"},
          {"Dtype", R"~(Regex: ` obj_type=([a-z]+) `)~"},
          {"Dname", R"~(Regex: ` name="([^"]+)"`)~"},
          {"Itype", R"~(Regex: ` op=([a-z]+)$`)~"},
          {"time", R"~(Regex: `^type=SYSCALL msg=audit\(([0-9]+\.[0-9]+):`)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto time = std::to_string(t / 1000) + "." + fmt("%03d", static_cast<int>(t % 1000));
    auto pid = pid_of(e.proc, rng);
    auto inode = std::to_string(100000 + h(e.obj) % 900000);
    int syscall = e.op == "read" ? 0 : e.op == "write" ? 1 : 59;
    auto line = "type=SYSCALL msg=audit(" + time + ":" + std::to_string(1000 + rng.below(90000)) +
                "): arch=c000003e syscall=" + std::to_string(syscall) + " success=yes exit=0 pid=" + pid +
                " subj_type=process exe=\"" + e.proc + "\" obj_type=file inode=" + inode + " name=\"" + e.obj +
                "\" op=" + e.op;
    return Rendered{line, record(pid, "process", e.proc, inode, "file", e.obj, e.op, time)};
  };
  return f;
}

std::vector<Event> windows_file_script() {
  const std::string word = R"~(C:\Program Files\Microsoft Office\root\Office16\WINWORD.EXE)~";
  const std::string docs = R"~(C:\Users\bob\Documents\report{n}.docx)~";
  return {{word, "ReadData", docs},
          {word, "WriteData", docs},
          {R"~(C:\Windows\explorer.exe)~", "ReadData", docs},
          {R"(C:\Windows\explorer.exe)", "ReadData", R"(C:\Users\bob\Downloads\setup{n}.exe)"},
          {R"(C:\Windows\System32\svchost.exe)", "ReadData", R"(C:\Windows\System32\drivers\etc\hosts)"},
          {R"(C:\Windows\System32\svchost.exe)", "ReadData", R"(C:\Windows\System32\config\SOFTWARE)"},
          {R"(C:\Windows\System32\svchost.exe)", "WriteData", R"(C:\Windows\System32\config\SOFTWARE)"},
          {R"(C:\Program Files\Mozilla Firefox\firefox.exe)", "WriteData", R"(C:\Users\bob\Downloads\setup{n}.exe)"},
          {R"(C:\Program Files\Mozilla Firefox\firefox.exe)", "ReadData", R"(C:\Windows\System32\drivers\etc\hosts)"},
          {R"~(C:\Program Files\Google\Chrome\Application\chrome.exe)~", "WriteData",
           R"~(C:\Users\bob\AppData\Local\Temp\chrome{n}.tmp)~"},
          {R"~(C:\Windows\System32\OneDrive.exe)~", "ReadData", docs}};
}

Format win4663() {
  Format f;
  f.name = "win4663";
  f.benign = windows_file_script();
  f.log_regex =
      R"~(^EventID=4663 TimeCreated=(?<time>[0-9T:.Z-]+) Computer=\S+ ProcessId=(?<sid>0x[0-9a-f]+) ProcessName="(?<sname>[^"]+)" SubjectType=(?<stok>[A-Za-z]+) ObjectType=(?<dtok>[A-Za-z]+) HandleId=(?<did>0x[0-9a-f]+) ObjectName="(?<dname>[^"]+)" Accesses=(?<itype>[A-Za-z]+)$)~";
  f.p1 = kP1Named;
  f.p2 = "\"@{sid}\" = \"process\"\n\"@{did}\" = \"file\"";
  f.p3 = kP3Named;
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: ` ProcessId=(0x[0-9a-f]+) `)~"},
          {"Stype", "Regex: ` SubjectType=([A-Za-z]+) `\nToken: @{stok}"},
          {"Sname", R"~(Regex: ` ProcessName="([^"]+)"`)~"},
          {"Did", R"~(Regex: ` HandleId=(0x[0-9a-f]+) `)~"},
          {"Dtype", "Regex: ` ObjectType=([A-Za-z]+) `\nToken: @{dtok}"},
          {"Dname", R"~(Regex: ` ObjectName="([^"]+)"`)~"},
          {"Itype", R"~(Regex: ` Accesses=([A-Za-z]+)$`)~"},
          {"time", R"~(Regex: `^EventID=4663 TimeCreated=([0-9T:.Z-]+) `)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto time = iso_ms(t);
    auto pid = fmt("0x%llx", static_cast<unsigned long long>(0x100 + h(e.proc) % 0x3000));
    auto handle = fmt("0x%llx", static_cast<unsigned long long>(0x40 + 4 * rng.below(0x200)));
    auto line = "EventID=4663 TimeCreated=" + time + " Computer=WS-" + std::to_string(1 + h(e.proc) % 3) +
                " ProcessId=" + pid + " ProcessName=\"" + e.proc + "\" SubjectType=Process ObjectType=File HandleId=" +
                handle + " ObjectName=\"" + e.obj + "\" Accesses=" + e.op;
    return Rendered{line, record(pid, "process", e.proc, handle, "file", e.obj, e.op, time)};
  };
  return f;
}

Format cdm() {
  Format f;
  f.name = "cdm";
  for (auto e : linux_file_script()) {
    e.op = e.op == "read" ? "EVENT_READ" : "EVENT_WRITE";
    f.benign.push_back(e);
  }
  f.benign.push_back({"/usr/bin/bash", "EVENT_EXECUTE", "/usr/bin/python3"});
  f.benign.push_back({"/usr/sbin/cron", "EVENT_EXECUTE", "/usr/bin/bash"});
  f.log_regex =
      R"~(^\{"datum":\{"com\.bbn\.tc\.schema\.avro\.cdm18\.Event":\{"uuid":"[0-9A-F-]+","type":"(?<itype>[A-Z_]+)","timestampNanos":(?<time>[0-9]+),"subject":\{"uuid":"(?<sid>[0-9A-F-]+)","type":"(?<stype>[A-Z_]+)","path":"(?<sname>[^"]+)"\},"predicateObject":\{"uuid":"(?<did>[0-9A-F-]+)","type":"(?<dtype>[A-Z_]+)","path":"(?<dname>[^"]+)"\}\}\}\}$)~";
  f.p1 = kP1Named;
  f.p2 = "\"@{sid}\" = \"@{stype}\"\n\"@{did}\" = \"@{dtype}\"";
  f.p3 = kP3Named;
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: `"subject":\{"uuid":"([0-9A-F-]+)"`)~"},
          {"Stype", R"~(Regex: `"subject":\{"uuid":"[0-9A-F-]+","type":"([A-Z_]+)"`)~"},
          {"Sname", R"~(Regex: `"subject":\{"uuid":"[0-9A-F-]+","type":"[A-Z_]+","path":"([^"]+)"`)~"},
          {"Did", R"~(Regex: `"predicateObject":\{"uuid":"([0-9A-F-]+)"`)~"},
          {"Dtype", R"~(Regex: `"predicateObject":\{"uuid":"[0-9A-F-]+","type":"([A-Z_]+)"`)~"},
          {"Dname", R"~(Regex: `"predicateObject":\{"uuid":"[0-9A-F-]+","type":"[A-Z_]+","path":"([^"]+)"`)~"},
          {"Itype", R"~(Regex: `\.Event":\{"uuid":"[0-9A-F-]+","type":"([A-Z_]+)"`)~"},
          {"time", R"~(Regex: `"timestampNanos":([0-9]+),`)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto nanos = std::to_string(t) + fmt("%06d", static_cast<int>(rng.below(1000000)));
    auto su = uuid_of(e.proc), ou = uuid_of(e.obj);
    auto otype = e.op == "EVENT_EXECUTE" ? "FILE_OBJECT_BLOCK" : "FILE_OBJECT_FILE";
    auto line = R"~({"datum":{"com.bbn.tc.schema.avro.cdm18.Event":{"uuid":")~" +
                uuid_of(nanos + e.proc) + R"(","type":")" + e.op + R"(","timestampNanos":)" + nanos +
                R"(,"subject":{"uuid":")" + su + R"(","type":"SUBJECT_PROCESS","path":")" + e.proc +
                R"("},"predicateObject":{"uuid":")" + ou + R"(","type":")" + otype + R"(","path":")" + e.obj +
                R"~("}}}})~";
    return Rendered{line, record(su, "SUBJECT_PROCESS", e.proc, ou, std::string(otype), e.obj, e.op, nanos)};
  };
  return f;
}

Format sysmon_dns() {
  Format f;
  f.name = "sysmon_dns";
  const std::string ff = R"~(C:\Program Files\Mozilla Firefox\firefox.exe)~";
  const std::string chrome = R"~(C:\Program Files\Google\Chrome\Application\chrome.exe)~";
  const std::string svc = R"~(C:\Windows\System32\svchost.exe)~";
  f.benign = {{ff, "DnsQuery", "www.example.com"},        {ff, "DnsQuery", "www.wikipedia.org"},
              {chrome, "DnsQuery", "www.example.com"},    {chrome, "DnsQuery", "cdn.office.net"},
              {svc, "DnsQuery", "update.microsoft.com"},  {svc, "DnsQuery", "login.live.com"},
              {R"~(C:\Windows\System32\OneDrive.exe)~", "DnsQuery", "login.live.com"}};
  f.log_regex =
      R"~(^<Event><System><EventID>22</EventID><Task>(?<itype>[A-Za-z]+)</Task><TimeCreated SystemTime="(?<time>[0-9: .-]+)"/>.*<Data Name="ProcessId">(?<sid>[0-9]+)</Data><Data Name="Image">(?<sname>[^<]+)</Data><Data Name="QueryName">(?<did>[^<]+)</Data>)~";
  f.p1 = R"~(Process "@{sname}" (@{sid}) issued a {@{itype}} for "@{did}" (@{did}).)~";
  f.p2 = "\"@{sid}\" = \"NONE\"\n\"@{did}\" = \"NONE\"";
  f.p3 = "[RELATED ENTITIES and IP ADDRESSES]\n(@{sid}, @{did})  A: [@{itype}]\n\n[ENTITY NAMES]\n"
         "\"@{sid}\" = \"@{sname}\"\n\"@{did}\" = \"@{did}\"";
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: `<Data Name="ProcessId">([0-9]+)</Data>`)~"},
          {"Sname", R"~(Regex: `<Data Name="Image">([^<]+)</Data>`)~"},
          {"Did", R"~(Regex: `<Data Name="QueryName">([^<]+)</Data>`)~"},
          {"Dname", R"~(Regex: `<Data Name="QueryName">([^<]+)</Data>`)~"},
          {"Itype", R"~(Regex: `<Task>([A-Za-z]+)</Task>`)~"},
          {"time", R"~(Regex: `SystemTime="([0-9: .-]+)"`)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto time = space_ms(t);
    auto pid = pid_of(e.proc, rng);
    auto line = "<Event><System><EventID>22</EventID><Task>" + e.op + "</Task><TimeCreated SystemTime=\"" + time +
                "\"/><Computer>WS-" + std::to_string(1 + h(e.proc) % 3) +
                "</Computer></System><EventData><Data Name=\"ProcessId\">" + pid + "</Data><Data Name=\"Image\">" +
                e.proc + "</Data><Data Name=\"QueryName\">" + e.obj +
                "</Data><Data Name=\"QueryStatus\">0</Data></EventData></Event>";
    return Rendered{line, record(pid, std::nullopt, e.proc, e.obj, std::nullopt, e.obj, e.op, time)};
  };
  return f;
}

Format clf() {
  Format f;
  f.name = "clf";
  for (int c = 0; c < 6; ++c) {
    auto ip = "192.168.1." + std::to_string(10 + 5 * c);
    f.benign.push_back({ip, "GET", "/index.html"});
    f.benign.push_back({ip, "GET", "/static/app.js"});
    f.benign.push_back({ip, "GET", "/images/logo.png"});
    if (c % 2 == 0) f.benign.push_back({ip, "POST", "/login"});
    if (c % 3 == 0) f.benign.push_back({ip, "POST", "/api/v2/orders"});
  }
  f.log_regex =
      R"~(^(?<sid>[0-9.]+) - - \[(?<time>[^\]]+)\] "(?<itype>[A-Z]+) (?<did>[^ "]+) HTTP/1\.1" [0-9]+ [0-9]+$)~";
  f.p1 = R"~(Client (@{sid}) sent an HTTP {@{itype}} request for "@{did}" (@{did}).)~";
  f.p2 = "\"@{sid}\" = \"NONE\"\n\"@{did}\" = \"NONE\"";
  f.p3 = "[RELATED ENTITIES and IP ADDRESSES]\n(@{sid}, @{did})  A: [@{itype}]\n\n[ENTITY NAMES]\n"
         "\"@{sid}\" = NONE\n\"@{did}\" = \"@{did}\"";
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: `^([0-9]+\.[0-9]+\.[0-9]+\.[0-9]+) - - \[`)~"},
          {"Did", R"~(Regex: `"[A-Z]+ ([^ "]+) HTTP/1\.1"`)~"},
          {"Dname", R"~(Regex: `"[A-Z]+ ([^ "]+) HTTP/1\.1"`)~"},
          {"Itype", R"~(Regex: `"([A-Z]+) [^ "]+ HTTP/1\.1"`)~"},
          {"time", R"~(Regex: ` - - \[([0-9]{2}/[A-Za-z]{3}/[0-9]{4}:[0-9:]{8} [+-][0-9]{4})\] `)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto time = clf_time(t);
    auto status = e.op == "POST" ? "302" : "200";
    auto line = e.proc + " - - [" + time + "] \"" + e.op + " " + e.obj + " HTTP/1.1\" " + status + " " +
                std::to_string(200 + rng.below(9000));
    return Rendered{line, record(e.proc, std::nullopt, std::nullopt, e.obj, std::nullopt, e.obj, e.op, time)};
  };
  return f;
}

Format netflow() {
  Format f;
  f.name = "netflow";
  const std::vector<std::string> remote = {"93.184.216.34:443", "151.101.1.69:443", "10.0.0.53:53",
                                           "10.0.0.25:25"};
  for (int c = 0; c < 6; ++c)
    for (const auto& r : remote) f.benign.push_back({"10.0.0." + std::to_string(2 + 3 * c), "connect", r});
  f.log_regex =
      R"~(^flow,(?<time>[0-9T:Z-]+),(?<sid>[0-9.]+:[0-9]+),(?<did>[0-9.]+:[0-9]+),[A-Z]+,[0-9]+,(?<itype>[a-z]+)$)~";
  f.p1 = R"~(Endpoint (@{sid}) opened a {@{itype}} flow to endpoint (@{did}).)~";
  f.p2 = "\"@{sid}\" = \"NONE\"\n\"@{did}\" = \"NONE\"";
  f.p3 = "[RELATED ENTITIES and IP ADDRESSES]\n(@{sid}, @{did})  A: [@{itype}]\n\n[ENTITY NAMES]\n"
         "\"@{sid}\" = NONE\n\"@{did}\" = NONE";
  f.p4 = kP4;
  f.p5 = {{"Sid", R"~(Regex: `^flow,[^,]+,([0-9.]+:[0-9]+),`)~"},
          {"Did", R"~(Regex: `^flow,[^,]+,[^,]+,([0-9.]+:[0-9]+),`)~"},
          {"Itype", R"~(Regex: `,([a-z]+)$`)~"},
          {"time", R"~(Regex: `^flow,([0-9T:Z-]+),`)~"}};
  f.render = [](const Event& e, Rng& rng, std::int64_t t) {
    auto time = iso_s(t);
    auto src = e.proc + ":" + std::to_string(49152 + 16 * (h(e.proc) % 64) + rng.below(4));
    auto proto = e.obj.ends_with(":53") ? "UDP" : "TCP";
    auto line = "flow," + time + "," + src + "," + e.obj + "," + proto + "," + std::to_string(60 + rng.below(20000)) +
                "," + e.op;
    return Rendered{line, record(src, std::nullopt, std::nullopt, e.obj, std::nullopt, std::nullopt, e.op, time)};
  };
  return f;
}

const std::map<std::string, Format>& formats() {
  static const std::map<std::string, Format> all = [] {
    std::map<std::string, Format> m;
    for (auto f : {auditd(), win4663(), cdm(), sysmon_dns(), clf(), netflow()}) m.emplace(f.name, f);
    return m;
  }();
  return all;
}

struct Attack {
  std::string id;
  std::string format;
  std::vector<std::pair<Event, int>> steps;  // event, repetitions
  std::map<std::string, std::string> labels;  // attack entity -> label
};

const std::map<std::string, Attack>& attacks() {
  static const std::map<std::string, Attack> all = {
      {"dropper_chain",
       {"dropper_chain",
        "auditd",
        {{{"/tmp/.x/dropper", "read", "/etc/passwd"}, 1},
         {{"/tmp/.x/dropper", "write", "/tmp/.x/payload.so"}, 2},
         {{"/tmp/.x/loader", "read", "/tmp/.x/payload.so"}, 1},
         {{"/tmp/.x/loader", "read", "/etc/shadow"}, 3},
         {{"/tmp/.x/loader", "write", "/tmp/.x/keys.log"}, 2},
         {{"/tmp/.x/loader", "write", "/tmp/.x/stolen.db"}, 4}},
        {{"/tmp/.x/dropper", "malware dropper"},
         {"/tmp/.x/payload.so", "malicious payload library"},
         {"/tmp/.x/loader", "malicious loader"},
         {"/tmp/.x/keys.log", "keystroke capture file"},
         {"/tmp/.x/stolen.db", "staged exfiltration archive"}}}},
      {"stealth_miner",
       {"stealth_miner",
        "win4663",
        {{{R"(C:\ProgramData\msupd\msupd.exe)", "ReadData", R"(C:\Users\bob\Documents\report2.docx)"}, 1},
         {{R"(C:\ProgramData\msupd\msupd.exe)", "WriteData", R"(C:\Windows\System32\drivers\etc\hosts)"}, 1}},
        {{R"~(C:\ProgramData\msupd\msupd.exe)~", "cryptocurrency miner"}}}}};
  return all;
}

const std::map<std::string, std::string>& benign_labels() {
  static const std::map<std::string, std::string> labels = {
      {"/usr/bin/bash", "command shell"},
      {"/usr/bin/python3", "script interpreter"},
      {"/usr/sbin/sshd", "remote login service"},
      {"/usr/sbin/cron", "job scheduler"},
      {"/usr/bin/vim", "text editor"},
      {"/usr/lib/firefox/firefox", "web browser"},
      {"/usr/sbin/rsyslogd", "logging daemon"},
      {"/etc/passwd", "account database"},
      {"/etc/shadow", "password hash database"},
      {"/etc/hosts", "host name configuration"},
      {"/etc/crontab", "scheduled job table"},
      {"/home/alice/.bash_history", "shell history file"},
      {"/home/alice/notes{n}.txt", "user document"},
      {"/tmp/session{n}.tmp", "temporary file"},
      {"/usr/lib/libc.so.6", "shared system library"},
      {"/var/log/auth.log", "authentication log"},
      {"/var/log/syslog", "system log"},
      {R"~(C:\Program Files\Microsoft Office\root\Office16\WINWORD.EXE)~", "document editor"},
      {R"~(C:\Users\bob\Documents\report{n}.docx)~", "user document"},
      {R"~(C:\Windows\explorer.exe)~", "file manager"},
      {R"~(C:\Users\bob\Downloads\setup{n}.exe)~", "downloaded installer"},
      {R"~(C:\Windows\System32\svchost.exe)~", "service host"},
      {R"~(C:\Windows\System32\drivers\etc\hosts)~", "host name configuration"},
      {R"~(C:\Windows\System32\config\SOFTWARE)~", "registry hive"},
      {R"~(C:\Program Files\Mozilla Firefox\firefox.exe)~", "web browser"},
      {R"~(C:\Program Files\Google\Chrome\Application\chrome.exe)~", "web browser"},
      {R"~(C:\Users\bob\AppData\Local\Temp\chrome{n}.tmp)~", "temporary file"},
      {R"~(C:\Windows\System32\OneDrive.exe)~", "cloud sync client"},
      {"www.example.com", "website"},
      {"www.wikipedia.org", "website"},
      {"cdn.office.net", "content delivery network"},
      {"update.microsoft.com", "software update server"},
      {"login.live.com", "authentication service"},
      {"/index.html", "web page"},
      {"/static/app.js", "web script"},
      {"/images/logo.png", "web image"},
      {"/login", "login endpoint"},
      {"/api/v2/orders", "web API endpoint"}};
  return labels;
}

// Every concrete spelling of a name with a "{n}" placeholder.
std::vector<std::string> spellings(const std::string& name) {
  auto p = name.find("{n}");
  if (p == std::string::npos) return {name};
  std::vector<std::string> out;
  for (int i = 1; i <= 4; ++i) out.push_back(name.substr(0, p) + std::to_string(i) + name.substr(p + 3));
  return out;
}

std::string regex_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::string_view(R"~(\^$.|?*+()[]{}/)~").find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

nlohmann::json build_stub(const std::vector<std::string>& format_list, const std::map<std::string, std::string>& labels,
                          const std::set<std::string>& unfamiliar) {
  auto rules = nlohmann::json::array();
  for (const auto& name : format_list) {
    const auto& f = formats().at(name);
    auto on_log = [&](const char* tmpl, const std::string& response) {
      rules.push_back({{"template", tmpl}, {"binding_regex", {{"log", f.log_regex}}}, {"response", response}});
    };
    on_log("P1", f.p1);
    on_log("P2", f.p2);
    on_log("P3", f.p3);
    on_log("P4", f.p4);
    for (const auto& [field, response] : f.p5)
      rules.push_back({{"template", "P5"},
                       {"binding_regex", {{"log", f.log_regex}}},
                       {"equals", {{"field", field}}},
                       {"response", response}});
  }
  rules.push_back({{"template", "P5"}, {"response", "No Regex"}});
  for (const auto& [name, label] : labels)
    rules.push_back({{"template", "P6"}, {"equals", {{"entity", name}}}, {"response", name + " | Type: " + label}});
  rules.push_back({{"template", "P6"},
                   {"binding_regex", {{"entity", R"~(^192\.168\.[0-9.]+(:[0-9]+)?$)~"}}},
                   {"response", "host | Type: internal workstation"}});
  rules.push_back({{"template", "P6"},
                   {"binding_regex", {{"entity", R"~(^10\.[0-9.]+(:[0-9]+)?$)~"}}},
                   {"response", "host | Type: internal host"}});
  rules.push_back({{"template", "P6"},
                   {"binding_regex", {{"entity", R"~(^[0-9.]+:(443|80)$)~"}}},
                   {"response", "host | Type: remote web server"}});
  rules.push_back({{"template", "P6"}, {"response", "unknown | Type: NO LABEL"}});

  std::vector<std::string> odd;
  for (const auto& u : unfamiliar) odd.push_back(regex_escape(u));
  if (!odd.empty())
    rules.push_back({{"template", "P7"},
                     {"binding_regex", {{"entity", "^(" + text::join(odd, "|") + ")$"}}},
                     {"response", "NO"}});
  rules.push_back({{"template", "P7"}, {"binding_regex", {{"entity", R"~(^[0-9.]+(:[0-9]+)?$)~"}}}, {"response", "NO"}});
  rules.push_back({{"template", "P7"}, {"response", "YES"}});

  rules.push_back(
      {{"template", "P8"},
       {"response",
        "Summary: A process started from a hidden temporary directory read local account data, wrote a library "
        "that a second process loaded, and that process read credential stores and wrote captured data into files "
        "in the same hidden directory.\n\n"
        "Stage: Execution\nReasoning: The loader process ran code from the payload library written by the dropper.\n\n"
        "Stage: Credential Access\nReasoning: The loader read the password hash database.\n\n"
        "Stage: Collection\nReasoning: Captured keystrokes and staged data were written to local files."}});
  rules.push_back(
      {{"template", "P9"}, {"regex", "APT tactic: (Execution|Credential Access)\\b"}, {"response", "YES"}});
  rules.push_back({{"template", "P9"}, {"response", "NO"}});
  return {{"rules", rules}};
}

GeneratedLine make_line(const Format& f, const Event& e, Rng& rng, std::int64_t t, const std::string& prefix,
                        std::size_t index, std::optional<std::string> attack) {
  auto r = f.render(e, rng, t);
  GeneratedLine g;
  g.log.log_id = prefix + "-" + fmt("%06zu", index + 1);
  g.log.raw_text = r.line;
  g.log.arrival_seq = static_cast<std::int64_t>(index);
  g.log.source_tag = prefix;
  g.format = f.name;
  g.oracle = std::move(r.oracle);
  g.oracle.source_log_id = g.log.log_id;
  g.attack_id = std::move(attack);
  return g;
}

struct Pending {
  const Format* format;
  Event event;
  std::optional<std::string> attack;
};

std::vector<GeneratedLine> render_stream(std::vector<Pending> items, Rng& rng, const std::string& prefix,
                                         std::int64_t start_ms) {
  std::vector<GeneratedLine> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::int64_t t = start_ms + static_cast<std::int64_t>(i) * 1000 + static_cast<std::int64_t>(rng.below(900));
    out.push_back(make_line(*items[i].format, items[i].event, rng, t, prefix, i, items[i].attack));
  }
  return out;
}

std::vector<Pending> benign_items(const std::vector<std::string>& names, std::size_t per_format, Rng& rng) {
  std::vector<Pending> items;
  for (const auto& n : names) {
    const auto& f = formats().at(n);
    for (std::size_t i = 0; i < per_format; ++i) {
      auto e = f.benign[rng.below(f.benign.size())];
      e.proc = instantiate(e.proc, rng);
      e.obj = instantiate(e.obj, rng);
      items.push_back({&f, e, std::nullopt});
    }
  }
  rng.shuffle(items);
  return items;
}

}  // namespace

const std::vector<std::string>& format_names() {
  static const std::vector<std::string> names = {"auditd", "win4663", "cdm", "sysmon_dns", "clf", "netflow"};
  return names;
}

const std::vector<std::string>& attack_names() {
  static const std::vector<std::string> names = {"dropper_chain", "stealth_miner"};
  return names;
}

void to_json(nlohmann::json& j, const CorpusSpec& s) {
  j = {{"formats", s.formats},
       {"lines_per_format", s.lines_per_format},
       {"train_lines_per_format", s.train_lines_per_format},
       {"attacks", s.attacks},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, CorpusSpec& s) {
  s.formats = j.at("formats").get<std::vector<std::string>>();
  s.lines_per_format = j.value("lines_per_format", std::size_t{100});
  s.train_lines_per_format = j.value("train_lines_per_format", std::size_t{0});
  s.attacks = j.value("attacks", std::vector<std::string>{});
  s.seed = j.at("seed").get<std::uint64_t>();
}

void validate(const CorpusSpec& s) {
  if (s.formats.size() < 2) throw Error("corpus spec needs at least two formats");
  std::set<std::string> seen;
  for (const auto& f : s.formats) {
    if (!formats().count(f)) throw Error("unknown format: " + f);
    if (!seen.insert(f).second) throw Error("duplicate format: " + f);
  }
  for (const auto& a : s.attacks) {
    auto it = attacks().find(a);
    if (it == attacks().end()) throw Error("unknown attack: " + a);
    if (!seen.count(it->second.format))
      throw Error("attack " + a + " needs format " + it->second.format);
  }
  if (s.lines_per_format == 0) throw Error("lines_per_format must be positive");
}

Corpus generate(const CorpusSpec& spec) {
  validate(spec);
  Corpus c;
  Rng rng(mix_seed(spec.seed, 0x5eed));
  c.train = render_stream(benign_items(spec.formats, spec.train_lines_per_format, rng), rng, "train", kBaseMillis);

  auto items = benign_items(spec.formats, spec.lines_per_format, rng);
  for (const auto& name : spec.attacks) {
    const auto& a = attacks().at(name);
    std::vector<Pending> steps;
    for (const auto& [e, reps] : a.steps)
      for (int i = 0; i < reps; ++i) steps.push_back({&formats().at(a.format), e, a.id});
    // Keep the attack's own order; splice at increasing random positions.
    std::vector<std::size_t> at;
    for (std::size_t i = 0; i < steps.size(); ++i) at.push_back(rng.below(items.size() + 1));
    std::sort(at.begin(), at.end());
    for (std::size_t i = steps.size(); i-- > 0;) items.insert(items.begin() + static_cast<std::ptrdiff_t>(at[i]), steps[i]);
  }
  std::int64_t test_start = kBaseMillis + static_cast<std::int64_t>(c.train.size() + 10) * 1000;
  c.test = render_stream(std::move(items), rng, "test", test_start);

  std::set<std::string> unfamiliar;
  for (const auto& [name, label] : benign_labels())
    for (const auto& s : spellings(name)) c.entity_labels[enrich::normalize_entity_name(s)] = label;
  for (const auto& name : spec.attacks)
    for (const auto& [entity, label] : attacks().at(name).labels) {
      auto key = enrich::normalize_entity_name(entity);
      c.entity_labels[key] = label;
      c.attack_nodes[key] = name;
      unfamiliar.insert(entity);
    }
  c.stub_script = build_stub(spec.formats, c.entity_labels, unfamiliar);
  return c;
}

std::vector<LogRecord> logs_of(const std::vector<GeneratedLine>& lines) {
  std::vector<LogRecord> out;
  for (const auto& l : lines) out.push_back(l.log);
  return out;
}

std::vector<ProvenanceRecord> oracle_records(const std::vector<GeneratedLine>& lines) {
  std::vector<ProvenanceRecord> out;
  for (const auto& l : lines) out.push_back(l.oracle);
  return out;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  auto write_stream = [&](const std::string& name, const std::vector<GeneratedLine>& lines) {
    std::string log;
    std::vector<nlohmann::json> truth;
    for (const auto& l : lines) {
      log += l.log.raw_text + "\n";
      truth.push_back({{"log_id", l.log.log_id},
                       {"format", l.format},
                       {"record", l.oracle},
                       {"attack", l.attack_id ? nlohmann::json(*l.attack_id) : nlohmann::json()}});
    }
    write_text_atomic(dir / (name + ".log"), log);
    write_jsonl(dir / ("truth_" + name + ".jsonl"), truth);
  };
  write_stream("train", corpus.train);
  write_stream("test", corpus.test);
  std::vector<nlohmann::json> entities, attack_rows;
  for (const auto& [k, l] : corpus.entity_labels) entities.push_back({{"name", k}, {"label", l}});
  for (const auto& [k, a] : corpus.attack_nodes) attack_rows.push_back({{"node_key", k}, {"attack", a}});
  write_jsonl(dir / "entities.jsonl", entities);
  write_jsonl(dir / "attacks.jsonl", attack_rows);
  write_text_atomic(dir / "stub_script.json", corpus.stub_script.dump(2) + "\n");
}

}  // namespace autoprov::synthgen
