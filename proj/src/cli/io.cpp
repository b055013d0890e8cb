#include <openssl/evp.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ibmlab/cli.hpp"
#include "internal.hpp"
#include "json.hpp"

namespace ibmlab::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string to_hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (unsigned i = 0; i < n; ++i) {
    s.push_back(digits[d[i] >> 4]);
    s.push_back(digits[d[i] & 15]);
  }
  return s;
}

struct DigestCtx {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) throw Error("sha256: digest init failed");
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  void update(const void* p, std::size_t n) {
    if (EVP_DigestUpdate(ctx, p, n) != 1) throw Error("sha256: digest update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    if (EVP_DigestFinal_ex(ctx, md, &len) != 1) throw Error("sha256: digest final failed");
    return to_hex(md, len);
  }
};

}  // namespace

std::string sha256_hex(const std::string& data) {
  DigestCtx d;
  d.update(data.data(), data.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  DigestCtx d;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error("csv: no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(p, &end);
      if (end == p) throw Error(path.string() + ":" + std::to_string(lineno) + ": not a number");
      row.push_back(v);
      if (*end == ',') {
        p = end + 1;
      } else {
        break;
      }
    }
    if (row.size() != t.header.size())
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                  " columns");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "ibmlab";
  j["version"] = version;
  j["subcommand"] = config.subcommand;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.to_key_values()) cfg[k] = v;
  j["config"] = cfg;
  j["config_hash"] = config_hash;
  j["complete"] = complete;
  if (!error.empty()) j["error"] = error;
  j["wall_time_s"] = wall_time;
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : verdicts)
    j["verdicts"].push_back({{"name", v.name}, {"statistic", v.statistic}, {"threshold", v.threshold}, {"pass", v.pass}});
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return j.dump(2) + "\n";
}

namespace detail {

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : path_(path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw Error("cannot write " + path.string() + ": " + std::strerror(errno));
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) std::fputc(',', f_);
    std::fputs(header[i].c_str(), f_);
  }
  std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) std::fputc(',', f_);
    std::fputs(format_double(values[i]).c_str(), f_);
  }
  std::fputc('\n', f_);
}

void CsvWriter::close() {
  if (f_ && std::fclose(f_) != 0) {
    f_ = nullptr;
    throw Error("error closing " + path_.string());
  }
  f_ = nullptr;
}

}  // namespace detail

}  // namespace ibmlab::cli
