#pragma once

// Number formatting and the sectioned key = value text format shared by
// experiment configs, config.echo and dataset sidecars. The accepted syntax
// is a TOML subset:
//
//   # comment
//   key = 12
//   [section]
//   name = "text"
//   levels = [0.1, 0.05]
//   flag = true

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace adareg::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text with 17 significant digits; parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return std::nullopt;
  }
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct RawValue {
  enum class Kind { kScalar, kString, kArray };
  Kind kind = Kind::kScalar;
  std::string text;
  std::vector<std::string> items;
  int line = 0;
};

/// Flat view of a document: "section.key" (or "key" at top level) -> value.
class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::string_view text, std::string_view origin = "<config>") {
    KeyValueDocument doc;
    std::string section;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string_view body = trim(strip_comment(line));
      if (body.empty()) continue;
      auto fail = [&](const std::string& what) {
        throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
      };
      if (body.front() == '[') {
        if (body.back() != ']') fail("unterminated section header");
        section = std::string(trim(body.substr(1, body.size() - 2)));
        if (section.empty()) fail("empty section name");
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) fail("expected key = value");
      const std::string key(trim(body.substr(0, eq)));
      if (key.empty()) fail("empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.values_.count(full)) fail("duplicate key '" + full + "'");
      RawValue v = parse_value(trim(body.substr(eq + 1)), fail);
      v.line = line_no;
      doc.values_.emplace(full, std::move(v));
      doc.order_.push_back(full);
    }
    return doc;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const RawValue* find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }
  const std::vector<std::string>& keys() const { return order_; }

 private:
  static std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
  }

  template <typename Fail>
  static RawValue parse_value(std::string_view s, Fail&& fail) {
    RawValue v;
    if (s.empty()) fail("missing value");
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') fail("unterminated string");
      v.kind = RawValue::Kind::kString;
      v.text = std::string(s.substr(1, s.size() - 2));
      return v;
    }
    if (s.front() == '[') {
      if (s.back() != ']') fail("unterminated array");
      v.kind = RawValue::Kind::kArray;
      std::string_view inner = trim(s.substr(1, s.size() - 2));
      while (!inner.empty()) {
        const auto comma = inner.find(',');
        std::string_view item = trim(inner.substr(0, comma));
        if (item.size() >= 2 && item.front() == '"' && item.back() == '"')
          item = item.substr(1, item.size() - 2);
        if (item.empty()) fail("empty array element");
        v.items.emplace_back(item);
        if (comma == std::string_view::npos) break;
        inner = trim(inner.substr(comma + 1));
      }
      return v;
    }
    v.kind = RawValue::Kind::kScalar;
    v.text = std::string(s);
    return v;
  }

  std::map<std::string, RawValue> values_;
  std::vector<std::string> order_;
};

/// Typed accessors that name the offending key on failure.
class ConfigReader {
 public:
  explicit ConfigReader(const KeyValueDocument& doc) : doc_(doc) {}

  std::optional<std::string> string(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    if (v->kind == RawValue::Kind::kArray) bad(key, *v, "expected a string");
    return v->text;
  }

  std::optional<double> number(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    const auto x = v->kind == RawValue::Kind::kScalar ? parse_double(v->text) : std::nullopt;
    if (!x) bad(key, *v, "expected a number");
    return x;
  }

  std::optional<std::uint64_t> integer(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    const auto x = v->kind == RawValue::Kind::kScalar ? parse_u64(v->text) : std::nullopt;
    if (!x) bad(key, *v, "expected a non-negative integer");
    return x;
  }

  std::optional<bool> boolean(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    if (v->kind == RawValue::Kind::kScalar && v->text == "true") return true;
    if (v->kind == RawValue::Kind::kScalar && v->text == "false") return false;
    bad(key, *v, "expected true or false");
    return std::nullopt;
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    if (v->kind != RawValue::Kind::kArray) bad(key, *v, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& item : v->items) {
      const auto x = parse_double(item);
      if (!x) bad(key, *v, "array element '" + item + "' is not a number");
      out.push_back(*x);
    }
    return out;
  }

  std::optional<std::vector<std::uint64_t>> integers(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    if (v->kind != RawValue::Kind::kArray) bad(key, *v, "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& item : v->items) {
      const auto x = parse_u64(item);
      if (!x) bad(key, *v, "array element '" + item + "' is not a non-negative integer");
      out.push_back(*x);
    }
    return out;
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const RawValue* v = take(key);
    if (!v) return std::nullopt;
    if (v->kind != RawValue::Kind::kArray) bad(key, *v, "expected an array of strings");
    return v->items;
  }

  const RawValue* raw(const std::string& key) { return take(key); }

  /// Every key must have been read at least once.
  void reject_unknown() const {
    for (const auto& k : doc_.keys())
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "'");
  }

 private:
  const RawValue* take(const std::string& key) {
    used_[key] = true;
    return doc_.find(key);
  }

  [[noreturn]] static void bad(const std::string& key, const RawValue& v, const std::string& what) {
    throw ConfigError("line " + std::to_string(v.line) + ": key '" + key + "': " + what);
  }

  const KeyValueDocument& doc_;
  std::map<std::string, bool> used_;
};

inline std::string quote(std::string_view s) { return "\"" + std::string(s) + "\""; }

template <typename T, typename Fmt>
std::string format_array(const std::vector<T>& xs, Fmt&& fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += fmt(xs[i]);
  }
  return out + "]";
}

}  // namespace adareg::harness
