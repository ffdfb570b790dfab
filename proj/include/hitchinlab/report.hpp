#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace hitchinlab {

inline constexpr const char* kLibraryVersion = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1";

// Fixed-width decimal rendering: 17 significant digits round-trip any double.
inline std::string format_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("format_double: non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Insertion-ordered JSON document. Reports must serialize byte-identically
// for a fixed config and seed, so key order is the build order and floats
// always print with 17 significant digits.
class Json {
 public:
  Json() : value_(nullptr) {}

  static Json null() { return Json(); }
  static Json of(bool v) { Json j; j.value_ = v; return j; }
  static Json of(long long v) { Json j; j.value_ = v; return j; }
  static Json of(int v) { return of(static_cast<long long>(v)); }
  static Json of(double v) { Json j; j.value_ = v; return j; }
  static Json of(std::string v) { Json j; j.value_ = std::move(v); return j; }
  static Json of(const char* v) { return of(std::string(v)); }
  static Json array() { Json j; j.value_ = Items{}; return j; }
  static Json object() { Json j; j.value_ = Fields{}; return j; }

  Json& push(Json v) {
    std::get<Items>(value_).push_back(std::move(v));
    return *this;
  }
  Json& set(const std::string& key, Json v) {
    std::get<Fields>(value_).emplace_back(key, std::move(v));
    return *this;
  }

  template <typename It>
  static Json number_array(It begin, It end) {
    Json j = array();
    for (It p = begin; p != end; ++p) j.push(of(static_cast<double>(*p)));
    return j;
  }

  std::string dump() const {
    std::string out;
    write(out, 0);
    out.push_back('\n');
    return out;
  }

 private:
  struct Items;
  struct Fields;
  using Value = std::variant<std::nullptr_t, bool, long long, double, std::string, Items, Fields>;
  struct Items : std::vector<Json> {};
  struct Fields : std::vector<std::pair<std::string, Json>> {};

  Value value_;

  bool scalar() const {
    return !std::holds_alternative<Items>(value_) && !std::holds_alternative<Fields>(value_);
  }

  static void write_string(std::string& out, const std::string& s) {
    out.push_back('"');
    for (unsigned char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (c < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
          } else {
            out.push_back(static_cast<char>(c));
          }
      }
    }
    out.push_back('"');
  }

  void write(std::string& out, int depth) const {
    const std::string pad(2 * static_cast<size_t>(depth), ' ');
    const std::string inner(2 * static_cast<size_t>(depth + 1), ' ');
    if (std::holds_alternative<std::nullptr_t>(value_)) {
      out += "null";
    } else if (const bool* b = std::get_if<bool>(&value_)) {
      out += *b ? "true" : "false";
    } else if (const long long* i = std::get_if<long long>(&value_)) {
      out += std::to_string(*i);
    } else if (const double* d = std::get_if<double>(&value_)) {
      out += format_double(*d);
    } else if (const std::string* s = std::get_if<std::string>(&value_)) {
      write_string(out, *s);
    } else if (const Items* items = std::get_if<Items>(&value_)) {
      if (items->empty()) {
        out += "[]";
        return;
      }
      bool flat = true;
      for (const Json& v : *items) flat = flat && v.scalar();
      out.push_back('[');
      for (size_t k = 0; k < items->size(); ++k) {
        if (flat) {
          if (k) out += ", ";
        } else {
          out += k ? ",\n" : "\n";
          out += inner;
        }
        (*items)[k].write(out, depth + 1);
      }
      if (!flat) {
        out.push_back('\n');
        out += pad;
      }
      out.push_back(']');
    } else {
      const Fields& fields = std::get<Fields>(value_);
      if (fields.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      for (size_t k = 0; k < fields.size(); ++k) {
        out += k ? ",\n" : "\n";
        out += inner;
        write_string(out, fields[k].first);
        out += ": ";
        fields[k].second.write(out, depth + 1);
      }
      out.push_back('\n');
      out += pad;
      out.push_back('}');
    }
  }
};

// Numeric-only CSV: header row, LF endings, no quoting.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string dump() const {
    std::string out;
    for (size_t k = 0; k < columns.size(); ++k) {
      if (k) out.push_back(',');
      out += columns[k];
    }
    out.push_back('\n');
    for (const auto& row : rows) {
      if (row.size() != columns.size())
        throw std::invalid_argument("CsvTable: row width does not match header");
      for (size_t k = 0; k < row.size(); ++k) {
        if (k) out.push_back(',');
        out += format_double(row[k]);
      }
      out.push_back('\n');
    }
    return out;
  }
};

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("write_text_file: short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return body;
}

// FNV-1a, 64 bit; reports embed the hash of the raw config bytes.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string fnv1a64_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// Index-addressed worker pool: results land in their slot, so the output is
// identical for every worker count.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, int jobs, Fn&& fn) {
  std::vector<T> results(count);
  if (count == 0) return results;
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) results[k] = fn(k);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = next.fetch_add(1); k < count; k = next.fetch_add(1))
          results[k] = fn(k);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// --jobs wins; otherwise HITCHINLAB_JOBS; otherwise single-threaded.
inline int resolve_jobs(int cli_jobs) {
  if (cli_jobs > 0) return cli_jobs;
  if (const char* env = std::getenv("HITCHINLAB_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

}  // namespace hitchinlab
