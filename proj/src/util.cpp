#include "stargen/util.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <unistd.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace stargen {

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string format_rfc3339(Timestamp t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw std::invalid_argument("truncated timestamp");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      throw std::invalid_argument("bad digit in timestamp");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void expect_char(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) throw std::invalid_argument("malformed timestamp");
}

}  // namespace

Timestamp parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  int y = parse_digits(s, 0, 4);
  expect_char(s, 4, '-');
  int mo = parse_digits(s, 5, 2);
  expect_char(s, 7, '-');
  int d = parse_digits(s, 8, 2);
  if (s.size() < 11 || (s[10] != 'T' && s[10] != 't'))
    throw std::invalid_argument("malformed timestamp");
  int h = parse_digits(s, 11, 2);
  expect_char(s, 13, ':');
  int mi = parse_digits(s, 14, 2);
  expect_char(s, 16, ':');
  int se = parse_digits(s, 17, 2);
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start) throw std::invalid_argument("empty fraction");
  }
  int offset_minutes = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int sign = s[pos] == '+' ? 1 : -1;
    int oh = parse_digits(s, pos + 1, 2);
    expect_char(s, pos + 3, ':');
    int om = parse_digits(s, pos + 4, 2);
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    throw std::invalid_argument("missing timezone");
  }
  if (pos != s.size()) throw std::invalid_argument("trailing characters in timestamp");

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw std::invalid_argument("invalid date");
  sys_seconds t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
  return t - minutes{offset_minutes};
}

Timestamp utc_now() {
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "cannot create " + tmp.string());
  std::size_t off = 0;
  while (off < contents.size()) {
    ssize_t n = ::write(fd, contents.data() + off, contents.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      std::filesystem::remove(tmp);
      throw std::system_error(err, std::generic_category(), "write failed: " + tmp.string());
    }
    off += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

std::string format_percent(std::uint64_t successes, std::uint64_t total) {
  // tenths of a percent, half-up: floor((1000*s/t) + 1/2)
  std::uint64_t tenths = (successes * 2000 + total) / (2 * total);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

}  // namespace stargen
