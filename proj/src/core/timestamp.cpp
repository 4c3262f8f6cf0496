#include "autoprov/core/timestamp.hpp"

#include <array>
#include <cctype>

#include "autoprov/core/text.hpp"

namespace autoprov {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}
  bool done() const { return i_ == s_.size(); }
  bool peek(char c) const { return i_ < s_.size() && s_[i_] == c; }
  bool eat(char c) {
    if (!peek(c)) return false;
    ++i_;
    return true;
  }
  // Exactly n digits.
  bool digits(std::size_t n, std::int64_t& out) {
    if (i_ + n > s_.size()) return false;
    std::int64_t v = 0;
    for (std::size_t k = 0; k < n; ++k) {
      char c = s_[i_ + k];
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    i_ += n;
    out = v;
    return true;
  }
  // Fraction digits after '.', scaled to microseconds (extra digits truncated).
  bool fraction_micros(std::int64_t& out) {
    std::size_t n = 0;
    std::int64_t v = 0;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
      if (n < 6) v = v * 10 + (s_[i_] - '0');
      ++n;
      ++i_;
    }
    if (n == 0) return false;
    for (std::size_t k = n; k < 6; ++k) v *= 10;
    out = v;
    return true;
  }
  std::string_view rest() const { return s_.substr(i_); }
  void skip(std::size_t n) { i_ += n; }

 private:
  std::string_view s_;
  std::size_t i_ = 0;
};

bool valid_civil(std::int64_t mo, std::int64_t d, std::int64_t h, std::int64_t mi,
                 std::int64_t se) {
  return mo >= 1 && mo <= 12 && d >= 1 && d <= 31 && h < 24 && mi < 60 && se < 61;
}

std::int64_t to_micros(std::int64_t y, std::int64_t mo, std::int64_t d, std::int64_t h,
                       std::int64_t mi, std::int64_t se, std::int64_t frac) {
  const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return ((days * 24 + h) * 60 + mi) * 60 * 1'000'000 + se * 1'000'000 + frac;
}

// Parses "YYYY-MM-DD<sep>HH:MM:SS[.f]" and returns micros without zone.
std::optional<std::int64_t> date_time(Cursor& c, char sep) {
  std::int64_t y, mo, d, h, mi, se, frac = 0;
  if (!c.digits(4, y) || !c.eat('-') || !c.digits(2, mo) || !c.eat('-') || !c.digits(2, d))
    return std::nullopt;
  if (!c.eat(sep)) return std::nullopt;
  if (!c.digits(2, h) || !c.eat(':') || !c.digits(2, mi) || !c.eat(':') || !c.digits(2, se))
    return std::nullopt;
  if (c.eat('.') && !c.fraction_micros(frac)) return std::nullopt;
  if (!valid_civil(mo, d, h, mi, se)) return std::nullopt;
  return to_micros(y, mo, d, h, mi, se, frac);
}

// "+hh:mm", "+hhmm", "-hh..." -> offset in micros (to subtract from local).
std::optional<std::int64_t> zone_offset(Cursor& c) {
  int sign = 0;
  if (c.eat('+'))
    sign = 1;
  else if (c.eat('-'))
    sign = -1;
  else
    return std::nullopt;
  std::int64_t hh, mm;
  if (!c.digits(2, hh)) return std::nullopt;
  c.eat(':');
  if (!c.digits(2, mm)) return std::nullopt;
  return sign * (hh * 60 + mm) * 60 * 1'000'000;
}

std::optional<std::int64_t> parse_iso(std::string_view s) {
  Cursor c(s);
  auto t = date_time(c, 'T');
  if (!t) return std::nullopt;
  if (c.eat('Z')) return c.done() ? t : std::nullopt;
  if (c.done()) return t;
  auto off = zone_offset(c);
  if (!off || !c.done()) return std::nullopt;
  return *t - *off;
}

std::optional<std::int64_t> parse_space(std::string_view s) {
  Cursor c(s);
  auto t = date_time(c, ' ');
  if (!t) return std::nullopt;
  c.eat('Z');
  return c.done() ? t : std::nullopt;
}

std::optional<std::int64_t> parse_clf(std::string_view s) {
  bool bracket = !s.empty() && s.front() == '[';
  if (bracket) {
    if (s.back() != ']') return std::nullopt;
    s = s.substr(1, s.size() - 2);
  }
  static constexpr std::array<std::string_view, 12> months = {
      "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  Cursor c(s);
  std::int64_t d, y, h, mi, se;
  if (!c.digits(2, d) || !c.eat('/')) return std::nullopt;
  auto rest = c.rest();
  std::int64_t mo = 0;
  for (std::size_t k = 0; k < months.size(); ++k)
    if (rest.substr(0, 3) == months[k]) mo = static_cast<std::int64_t>(k) + 1;
  if (mo == 0) return std::nullopt;
  c.skip(3);
  if (!c.eat('/') || !c.digits(4, y) || !c.eat(':') || !c.digits(2, h) || !c.eat(':') ||
      !c.digits(2, mi) || !c.eat(':') || !c.digits(2, se))
    return std::nullopt;
  if (!valid_civil(mo, d, h, mi, se)) return std::nullopt;
  std::int64_t t = to_micros(y, mo, d, h, mi, se, 0);
  if (c.eat(' ')) {
    auto off = zone_offset(c);
    if (!off) return std::nullopt;
    t -= *off;
  }
  return c.done() ? std::optional(t) : std::nullopt;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  return true;
}

std::optional<std::int64_t> parse_unix_fixed(std::string_view s, std::size_t width,
                                             std::int64_t num, std::int64_t den) {
  if (s.size() != width || !all_digits(s)) return std::nullopt;
  std::int64_t v = 0;
  for (char ch : s) v = v * 10 + (ch - '0');
  return v / den * num;
}

std::optional<std::int64_t> parse_unix_seconds(std::string_view s) {
  auto dot = s.find('.');
  auto whole = s.substr(0, dot);
  if (whole.size() > 11 || !all_digits(whole)) return std::nullopt;
  std::int64_t v = 0;
  for (char ch : whole) v = v * 10 + (ch - '0');
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    Cursor c(s.substr(dot + 1));
    if (!c.fraction_micros(frac) || !c.done()) return std::nullopt;
  }
  return v * 1'000'000 + frac;
}

std::optional<std::int64_t> parse_with(TimeFormat f, std::string_view s) {
  switch (f) {
    case TimeFormat::Iso8601: return parse_iso(s);
    case TimeFormat::SpaceDateTime: return parse_space(s);
    case TimeFormat::CommonLog: return parse_clf(s);
    case TimeFormat::UnixNanos: return parse_unix_fixed(s, 19, 1, 1000);
    case TimeFormat::UnixMillis: return parse_unix_fixed(s, 13, 1000, 1);
    case TimeFormat::UnixSeconds: return parse_unix_seconds(s);
  }
  return std::nullopt;
}

}  // namespace

const std::vector<TimeFormat>& default_time_formats() {
  static const std::vector<TimeFormat> formats = {
      TimeFormat::Iso8601,   TimeFormat::SpaceDateTime, TimeFormat::CommonLog,
      TimeFormat::UnixNanos, TimeFormat::UnixMillis,    TimeFormat::UnixSeconds};
  return formats;
}

Timestamp parse_timestamp(std::string_view raw, std::span<const TimeFormat> formats) {
  Timestamp t{std::string(raw), std::nullopt};
  const auto s = text::trim(raw);
  for (auto f : formats) {
    if (auto v = parse_with(f, s)) {
      t.epoch_micros = v;
      break;
    }
  }
  return t;
}

void to_json(nlohmann::json& j, const Timestamp& t) {
  j = nlohmann::json{{"raw", t.raw}};
  j["epoch_micros"] = t.epoch_micros ? nlohmann::json(*t.epoch_micros) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, Timestamp& t) {
  t.raw = j.at("raw").get<std::string>();
  const auto& e = j.at("epoch_micros");
  t.epoch_micros = e.is_null() ? std::nullopt : std::optional(e.get<std::int64_t>());
}

}  // namespace autoprov
